import pytest

from exceptions import ContractViolationError
from harness.reporting import read_csv
from models import EpisodeReport, RoundRecord
from utils.plotting import emit_utility_plot, series_from_report


def _report(utilities, disturbed=(), planner="sgcm", model="obedient"):
    report = EpisodeReport(planner, 0, "s0", case="case01", follower_model=model)
    for index, u in enumerate(utilities, start=1):
        report.append(
            RoundRecord(
                round_index=index,
                state_before=f"s{index - 1}",
                leader_intent="noop",
                leader_executed="noop",
                follower_recommended="noop",
                follower_chosen="noop",
                follower_executed="noop",
                leader_success=True,
                follower_success=True,
                utility_leader=u,
                utility_follower=u,
                state_after=f"s{index}",
                dist_to_goal=0,
                disturbed=index in disturbed,
            )
        )
    return report


def test_series_from_report_and_json():
    report = _report([40.0, 44.5, 50.0], disturbed=(2,), model="random_at_rounds")
    series = series_from_report(report)
    assert series.label == "case01 sgcm (random_at_rounds)"
    assert series.rounds == [1, 2, 3]
    assert series.utilities == [40.0, 44.5, 50.0]
    assert series.disturbed == [2]
    assert series_from_report(report.to_dict()) == series


def test_plot_writes_svg_and_data(tmp_path):
    path = emit_utility_plot(
        [_report([40.0, 44.5, 50.0], disturbed=(2,)), _report([38.0, 38.0], planner="greedy", model="greedy")],
        tmp_path / "plots" / "utility.svg",
    )
    assert path.exists()
    assert path.read_text(encoding="utf-8").lstrip().startswith("<?xml")

    rows = read_csv(tmp_path / "plots" / "utility.csv")
    assert len(rows) == 5
    assert [r["series"] for r in rows] == ["case01 sgcm"] * 3 + ["case01 greedy"] * 2
    assert [r["disturbed"] for r in rows[:3]] == ["false", "true", "false"]


def test_plot_is_deterministic(tmp_path):
    reports = [_report([40.0, 44.5, 50.0], disturbed=(2,))]
    first = emit_utility_plot(reports, tmp_path / "a.svg").read_bytes()
    second = emit_utility_plot(reports, tmp_path / "b.svg").read_bytes()
    assert first == second


def test_plot_needs_reports(tmp_path):
    with pytest.raises(ContractViolationError):
        emit_utility_plot([], tmp_path / "empty.svg")

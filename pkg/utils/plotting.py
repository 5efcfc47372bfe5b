"""
Stage-wise utility plots.

Each report becomes one polyline of per-round utility; rounds in which the
follower deviated from the recommendation are marked. The plot is written as
SVG with the underlying data next to it as CSV.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from constants import PLOT_CSV_COLUMNS  # noqa: E402
from exceptions import ContractViolationError  # noqa: E402
from harness.reporting import write_csv  # noqa: E402
from models import EpisodeReport  # noqa: E402

logger = logging.getLogger(__name__)

# Fixed ids and no timestamp keep the SVG byte-stable across runs
matplotlib.rcParams["svg.hashsalt"] = "stackelguide"


@dataclass
class UtilitySeries:
    label: str
    rounds: List[int]
    utilities: List[float]
    disturbed: List[int]


def series_from_report(report: Union[EpisodeReport, dict]) -> UtilitySeries:
    """Extract the plotted series from a report object or its loaded JSON."""
    if isinstance(report, EpisodeReport):
        data = report.to_dict()
    else:
        data = report
    rounds = data.get("rounds", [])
    label = f"{data.get('case') or 'episode'} {data.get('planner', '')}".strip()
    model = data.get("follower_model")
    if model and model not in ("obedient", "greedy"):
        label = f"{label} ({model})"
    return UtilitySeries(
        label=label,
        rounds=[r["round"] for r in rounds],
        utilities=[float(r["u_B"]) for r in rounds],
        disturbed=[r["round"] for r in rounds if r.get("disturbed")],
    )


def emit_utility_plot(reports: Sequence[Union[EpisodeReport, dict]], path: Union[str, Path]) -> Path:
    """
    Plot stage-wise utility against round for every report.

    Args:
        reports: EpisodeReports or their loaded JSON documents
        path: Target SVG path; the data goes to the same path with a .csv suffix

    Returns:
        Path of the written SVG
    """
    if not reports:
        raise ContractViolationError("emit_utility_plot needs at least one report")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    series = [series_from_report(r) for r in reports]

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    try:
        for s in series:
            (line,) = ax.plot(s.rounds, s.utilities, marker="o", label=s.label)
            marked = [(r, u) for r, u in zip(s.rounds, s.utilities) if r in s.disturbed]
            if marked:
                ax.scatter(
                    [r for r, _ in marked],
                    [u for _, u in marked],
                    marker="x",
                    s=80,
                    color=line.get_color(),
                    zorder=3,
                    label=f"{s.label} disturbance",
                )
        ax.set_xlabel("round")
        ax.set_ylabel("stage utility")
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best", fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)

    rows = []
    for s in series:
        for r, u in zip(s.rounds, s.utilities):
            rows.append({"series": s.label, "round": r, "utility": u, "disturbed": r in s.disturbed})
    write_csv(path.with_suffix(".csv"), PLOT_CSV_COLUMNS, rows)
    logger.info(f"Wrote utility plot {path} with {len(series)} series")
    return path

"""
JSON and CSV artifacts of experiments.

All files are UTF-8, CSV uses ',' separators, '\\n' line endings and '.'
decimals, and nothing time- or host-dependent is written, so reruns with the
same seed produce byte-identical files.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

from constants import CSV_DECIMAL_PLACES, ROUND_CSV_COLUMNS
from models import EpisodeReport
from utils.helpers import format_real

logger = logging.getLogger(__name__)


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_real(value, CSV_DECIMAL_PLACES)
    return str(value)


def write_csv(path: Union[str, Path], columns: Sequence[str], rows: Iterable[Dict[str, Any]]) -> Path:
    """Write dict rows under a fixed header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(column)) for column in columns])
    return path


def read_csv(path: Union[str, Path]) -> List[Dict[str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def round_rows(report: EpisodeReport) -> List[Dict[str, Any]]:
    """Per-round CSV rows; state columns describe the state after the round."""
    rows = []
    for record in report.rounds:
        rows.append({
            "round": record.round_index,
            "state_hash": record.state_after.digest(),
            "leader_intent": record.leader_intent,
            "leader_exec": record.leader_executed,
            "follower_rec": record.follower_recommended,
            "follower_exec": record.follower_executed,
            "u_A": float(record.utility_leader),
            "u_B": float(record.utility_follower),
            "dist_to_goal": record.dist_to_goal,
        })
    return rows


def write_report_json(report: EpisodeReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def write_rounds_csv(report: EpisodeReport, path: Union[str, Path]) -> Path:
    return write_csv(path, ROUND_CSV_COLUMNS, round_rows(report))


def write_episode(report: EpisodeReport, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write ``<case>_<planner>.json`` and ``<case>_<planner>.csv`` into ``out_dir``."""
    stem = f"{report.case or 'episode'}_{report.planner}"
    out_dir = Path(out_dir)
    paths = {
        "json": write_report_json(report, out_dir / f"{stem}.json"),
        "csv": write_rounds_csv(report, out_dir / f"{stem}.csv"),
    }
    logger.info(f"Wrote {paths['json']} and {paths['csv']}")
    return paths


def load_report_json(path: Union[str, Path]) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))

"""Deterministic CSV emission and run manifests.

CSV dialect: comma separator, ``.`` decimal point, LF line endings, one
header row, reals printed with 9 significant digits.  Every data file starts
with a comment line carrying the configuration digest so outputs can be
audited back to the exact resolved configuration.  Timestamps live only in
the manifest, keeping the data files byte-identical across reruns.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from alab.analysis import AlphaBiasCurve, ClassOccurrenceSummary
from alab.loop import AcquisitionRecord
from alab.pseudolabel import SweepPoint
from alab.strategies import MeasureKind

__all__ = [
    "RunManifest",
    "config_digest",
    "format_real",
    "write_acquisition_csv",
    "write_aggregate_csv",
    "write_alpha_csv",
    "write_bias_csv",
    "write_bounds_csv",
    "write_gpla_results_csv",
    "write_sweep_csv",
]

MIM_COLUMNS = (
    (MeasureKind.MARGIN, "mim_margin"),
    (MeasureKind.ENTROPY, "mim_entropy"),
    (MeasureKind.LEAST_CONFIDENT, "mim_lc"),
    (MeasureKind.LEAST_SQUARES, "mim_ls"),
)


def config_digest(resolved: dict) -> str:
    """SHA-256 over the canonical JSON form (stable under key reordering)."""
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def format_real(value) -> str:
    if value is None:
        return ""
    value = float(value)
    if math.isnan(value):
        return "nan"
    return format(value, ".9g")


def _write_rows(path: Path, digest: str, header: list[str], rows, extra_comments=()):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as f:
        f.write(f"# config_digest={digest}\n")
        for comment in extra_comments:
            f.write(f"# {comment}\n")
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(row) + "\n")


def write_acquisition_csv(path, records: list[AcquisitionRecord], digest: str,
                          num_classes: int = 10):
    header = [
        "step", "labeled_count", "subset_index",
        "test_accuracy", "train_accuracy", "test_loss", "train_loss",
    ]
    header += [name for _, name in MIM_COLUMNS]
    header += [f"class_hist_{c}" for c in range(num_classes)]

    def rows():
        for r in records:
            row = [
                str(r.step), str(r.labeled_count), str(r.subset_index),
                format_real(r.test_accuracy), format_real(r.train_accuracy),
                format_real(r.test_loss), format_real(r.train_loss),
            ]
            for measure, _ in MIM_COLUMNS:
                row.append(format_real(r.mim[measure]) if measure in r.mim else "")
            hist = list(r.selected_class_histogram)
            hist += [0] * (num_classes - len(hist))
            row += [str(int(c)) for c in hist[:num_classes]]
            yield row

    _write_rows(Path(path), digest, header, rows())


def write_aggregate_csv(path, aggregate: dict, digest: str, runs: int):
    keys = list(aggregate.keys())
    length = len(aggregate["labeled_count"])

    def rows():
        for i in range(length):
            yield [
                str(int(aggregate[k][i])) if k in ("step", "labeled_count")
                else format_real(aggregate[k][i])
                for k in keys
            ]

    _write_rows(
        Path(path), digest, keys, rows(),
        extra_comments=(f"runs={runs}", "std: population (ddof=0)"),
    )


def write_sweep_csv(path, sweep: list[SweepPoint], digest: str):
    header = ["threshold", "accuracy_after", "error_fraction", "all_added", "iterations"]

    def rows():
        for point in sweep:
            yield [
                format_real(point.threshold),
                format_real(point.accuracy_after),
                format_real(point.error_fraction),
                "1" if point.all_added else "0",
                str(point.iterations),
            ]

    _write_rows(Path(path), digest, header, rows())


def write_gpla_results_csv(path, rows_in: list[dict], digest: str):
    header = [
        "seed", "labeled_budget", "threshold", "accuracy_before", "accuracy_after",
        "error_fraction", "iterations", "pseudo_labeled",
    ]

    def rows():
        for r in rows_in:
            yield [
                str(r["seed"]), str(r["labeled_budget"]), format_real(r["threshold"]),
                format_real(r["accuracy_before"]), format_real(r["accuracy_after"]),
                format_real(r["error_fraction"]), str(r["iterations"]),
                str(r["pseudo_labeled"]),
            ]

    _write_rows(Path(path), digest, header, rows())


def write_bias_csv(path, summary: ClassOccurrenceSummary, digest: str):
    num_classes = summary.counts.shape[1]
    header = ["repeat"] + [f"count_{c}" for c in range(num_classes)]

    def rows():
        for repeat in range(summary.repeats):
            yield [str(repeat)] + [str(int(c)) for c in summary.counts[repeat]]

    _write_rows(
        Path(path), digest, header, rows(),
        extra_comments=(
            f"strategy={summary.strategy.value}",
            f"images_per_repeat={summary.images_per_repeat}",
        ),
    )


def write_alpha_csv(path, curve: AlphaBiasCurve, digest: str):
    measures = list(curve.mean_scores.keys())
    header = ["alpha"]
    for m in measures:
        header += [f"mean_{m.value}", f"std_{m.value}"]

    def rows():
        for i, alpha in enumerate(curve.alphas):
            row = [format_real(alpha)]
            for m in measures:
                row += [
                    format_real(curve.mean_scores[m][i]),
                    format_real(curve.std_scores[m][i]),
                ]
            yield row

    _write_rows(
        Path(path), digest, header, rows(), extra_comments=(f"runs={curve.runs}",)
    )


def write_bounds_csv(path, rows_in: list[dict], digest: str):
    header = ["seed", "labeled_count", "lower", "upper", "test_accuracy"]

    def rows():
        for r in rows_in:
            yield [
                str(r["seed"]), str(r["labeled_count"]), format_real(r["lower"]),
                format_real(r["upper"]), format_real(r["test_accuracy"]),
            ]

    _write_rows(Path(path), digest, header, rows())


@dataclass
class RunManifest:
    """Provenance record for one CLI invocation."""

    config_digest: str
    seeds: list[int]
    artifact_version: str
    started: str
    finished: str = ""
    outputs: list[str] = field(default_factory=list)
    backend: str = ""

    def write(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as f:
            json.dump(self.__dict__, f, indent=2, sort_keys=True)
            f.write("\n")

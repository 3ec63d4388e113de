"""Run reports: learning-curve CSVs, results tables, and their rendered
figures. CSVs are the machine-readable record (bit-stable across reruns);
the PNGs next to them are for eyeballs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


@dataclass(frozen=True)
class LearningCurve:
    """Per-epoch (epoch, train_loss, val_loss) rows; epochs are 1-based."""

    rows: tuple[tuple[int, float, float], ...]

    @property
    def best_epoch(self) -> int:
        """Epoch with minimum validation loss; ties go to the earliest."""
        return min(self.rows, key=lambda r: (r[2], r[0]))[0]

    def val_loss(self, epoch: int) -> float:
        for e, _, v in self.rows:
            if e == epoch:
                return v
        raise KeyError(epoch)


@dataclass(frozen=True)
class ExperimentReport:
    """(method, wer, cer) per training regime, in protocol order."""

    rows: tuple[tuple[str, float, float], ...]


def write_curve_csv(curve: LearningCurve, path) -> None:
    lines = ["epoch,train_loss,val_loss"]
    for epoch, train, val in curve.rows:
        lines.append(f"{epoch},{float(train)!r},{float(val)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_curve_csv(path) -> LearningCurve:
    lines = Path(path).read_text(encoding="utf-8").strip().split("\n")
    if lines[0] != "epoch,train_loss,val_loss":
        raise ValueError(f"{path}: unexpected header {lines[0]!r}")
    rows = []
    for line in lines[1:]:
        e, t, v = line.split(",")
        rows.append((int(e), float(t), float(v)))
    return LearningCurve(tuple(rows))


def write_results_csv(report: ExperimentReport, path) -> None:
    lines = ["method,wer,cer"]
    for method, wer, cer in report.rows:
        lines.append(f"{method},{wer:.4f},{cer:.4f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def plot_curve(curve: LearningCurve, path, title: str = "") -> None:
    epochs = [r[0] for r in curve.rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, [r[1] for r in curve.rows], label="train loss")
    ax.plot(epochs, [r[2] for r in curve.rows], label="validation loss")
    best = curve.best_epoch
    ax.axvline(best, color="gray", linestyle=":", label=f"best epoch {best}")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean CTC loss")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_curve_comparison(curves: dict[str, LearningCurve], path,
                          title: str = "") -> None:
    """Validation curves of several regimes on one axis, best epochs marked."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name, curve in curves.items():
        epochs = [r[0] for r in curve.rows]
        vals = [r[2] for r in curve.rows]
        line, = ax.plot(epochs, vals, label=name)
        best = curve.best_epoch
        ax.plot([best], [curve.val_loss(best)], "o", color=line.get_color(),
                markersize=4)
    ax.set_xlabel("epoch")
    ax.set_ylabel("validation loss")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_results(report: ExperimentReport, path, title: str = "") -> None:
    methods = [r[0] for r in report.rows]
    x = range(len(methods))
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.38
    ax.bar([i - width / 2 for i in x], [r[1] for r in report.rows], width, label="WER")
    ax.bar([i + width / 2 for i in x], [r[2] for r in report.rows], width, label="CER")
    ax.set_xticks(list(x))
    ax.set_xticklabels(methods, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("error rate")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

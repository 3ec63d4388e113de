from __future__ import annotations

import pytest

from asrkit.report import (
    ExperimentReport,
    LearningCurve,
    plot_curve,
    plot_curve_comparison,
    plot_results,
    read_curve_csv,
    write_curve_csv,
    write_results_csv,
)

CURVE = LearningCurve(((1, 2.0, 2.2), (2, 1.4, 1.5), (3, 1.1, 1.7)))


def test_best_epoch_is_argmin_val():
    assert CURVE.best_epoch == 2


def test_best_epoch_tie_goes_to_earliest():
    curve = LearningCurve(((1, 2.0, 1.5), (2, 1.4, 1.5), (3, 1.2, 1.6)))
    assert curve.best_epoch == 1


def test_curve_csv_roundtrip(tmp_path):
    path = tmp_path / "curve.csv"
    write_curve_csv(CURVE, path)
    text = path.read_text(encoding="utf-8")
    assert text.startswith("epoch,train_loss,val_loss\n")
    assert read_curve_csv(path) == CURVE


def test_curve_csv_is_byte_stable(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_curve_csv(CURVE, a)
    write_curve_csv(CURVE, b)
    assert a.read_bytes() == b.read_bytes()


def test_results_csv_format(tmp_path):
    report = ExperimentReport((("Reference", 0.5, 0.25), ("0 Frozen Layers", 1.0, 0.125)))
    path = tmp_path / "results.csv"
    write_results_csv(report, path)
    lines = path.read_text(encoding="utf-8").strip().split("\n")
    assert lines[0] == "method,wer,cer"
    assert lines[1] == "Reference,0.5000,0.2500"
    assert lines[2] == "0 Frozen Layers,1.0000,0.1250"


def test_figures_render(tmp_path):
    plot_curve(CURVE, tmp_path / "curve.png", title="x")
    plot_curve_comparison({"a": CURVE, "b": CURVE}, tmp_path / "cmp.png")
    plot_results(ExperimentReport((("Reference", 0.5, 0.25),)), tmp_path / "res.png")
    for name in ("curve.png", "cmp.png", "res.png"):
        data = (tmp_path / name).read_bytes()
        assert data[:8] == b"\x89PNG\r\n\x1a\n"
        assert len(data) > 1000


def test_val_loss_lookup():
    assert CURVE.val_loss(2) == 1.5
    with pytest.raises(KeyError):
        CURVE.val_loss(9)

"""Figure rendering writes valid PNG files."""

import numpy as np

from relightkit import bench, metrics, report
from relightkit.mlic import LightDirection


def _report(rng):
    rep = metrics.QualityReport()
    gt = rng.uniform(0, 1, (16, 16, 3))
    for i in range(4):
        pred = np.clip(gt + rng.normal(0, 0.05, gt.shape), 0, 1)
        rep.add(LightDirection(0.2 * i - 0.3, 0.1, 0.8), pred, gt)
    return rep


def test_quality_figure(tmp_path, rng):
    path = report.save_quality_figure(
        {"method-a": _report(rng), "method-b": _report(rng)}, tmp_path / "q.png"
    )
    assert path.stat().st_size > 1000
    assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_subsample_figure(tmp_path):
    rows = [
        bench.SubsampleRow(1 / 64, 28.0, 0.9, 29.0, 0.91, 5.0, 4.0),
        bench.SubsampleRow(1 / 4, 31.0, 0.93, 30.5, 0.92, 20.0, 15.0),
        bench.SubsampleRow(1.0, 33.0, 0.95, 32.0, 0.94, 80.0, 60.0),
    ]
    path = report.save_subsample_figure(rows, tmp_path / "s.png")
    assert path.stat().st_size > 1000


def test_throughput_figure(tmp_path):
    rows = [
        bench.ThroughputRow("neuralrti-n50", 10_000, 2e6, 3200, 103, 0.005),
        bench.ThroughputRow("neuralrti-n50", 1_000_000, 1.8e6, 3200, 103, 0.5),
        bench.ThroughputRow("disk-neuralrti-n20", 10_000, 9e6, 680, 43, 0.001),
        bench.ThroughputRow("disk-neuralrti-n20", 1_000_000, 8e6, 680, 43, 0.12),
    ]
    path = report.save_throughput_figure(rows, tmp_path / "t.png")
    assert path.stat().st_size > 1000


def test_relight_strip(tmp_path, rng):
    images = [rng.uniform(0, 1, (12, 12, 3)) for _ in range(3)]
    path = report.save_relight_strip(
        images, ["a", "b", "c"], tmp_path / "strip.png", title="compare"
    )
    assert path.stat().st_size > 1000

import threading

import numpy as np

from dslm.engine import LevelInfo
from dslm.plotting import plot_ari_sweep, plot_cluster_sizes, plot_round_moves


def is_png(path):
    return path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_cluster_sizes(tmp_path):
    plot_cluster_sizes(np.array([1, 3, 50, 50, 7]), tmp_path / "a.png", title="five")
    plot_cluster_sizes(np.array([1]), tmp_path / "b.png")
    plot_cluster_sizes(np.array([], dtype=int), tmp_path / "c.png")
    assert all(is_png(tmp_path / f) for f in ("a.png", "b.png", "c.png"))


def test_round_moves(tmp_path):
    levels = [LevelInfo(0, 100, 800, [90, 20, 0], 10), LevelInfo(1, 10, 40, [0], 10)]
    plot_round_moves(levels, tmp_path / "m.png")
    plot_round_moves([LevelInfo(0, 3, 0, [], 3)], tmp_path / "empty.png")
    assert is_png(tmp_path / "m.png") and is_png(tmp_path / "empty.png")


def test_ari_sweep(tmp_path):
    rows = [{"mu": mu, "algorithm": a, "ari": 1 - mu * (i + 1) / 3}
            for mu in (0.1, 0.5) for i, a in enumerate(("x", "y")) for _ in range(2)]
    plot_ari_sweep(rows, tmp_path / "s.png")
    assert is_png(tmp_path / "s.png")


def test_plots_from_threads(tmp_path):
    errors = []

    def body(i):
        try:
            plot_cluster_sizes(np.arange(1, 20), tmp_path / f"t{i}.png")
        except Exception as exc:  # noqa: BLE001
            errors.append(exc)

    threads = [threading.Thread(target=body, args=(i,)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors and all(is_png(tmp_path / f"t{i}.png") for i in range(4))

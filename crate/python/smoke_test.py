#!/usr/bin/env python3
"""Smoke test for the irsmec_py extension module.

Builds the cdylib if needed, loads it from the cargo target directory and
exercises the main surfaces: configuration, slot-by-slot simulation, the
Lyapunov helpers and a miniature training run.

Run from the repository root:

    python3 python/smoke_test.py
"""

import math
import pathlib
import shutil
import subprocess
import sys
import tempfile


def load_module():
    root = pathlib.Path(__file__).resolve().parent.parent
    lib = root / "target" / "release" / "libirsmec_py.so"
    if not lib.exists():
        print("building irsmec-py ...")
        subprocess.run(
            ["cargo", "build", "--release", "-p", "irsmec-py"],
            cwd=root,
            check=True,
        )
    staging = pathlib.Path(tempfile.mkdtemp(prefix="irsmec_py_"))
    shutil.copy(lib, staging / "irsmec_py.so")
    sys.path.insert(0, str(staging))
    import irsmec_py

    return irsmec_py


def main():
    m = load_module()

    # Configuration: defaults and TOML overrides.
    cfg = m.Config()
    assert cfg.k == 4 and cfg.m == 16, repr(cfg)
    assert cfg.slots_per_episode == 300 and cfg.episodes == 150

    small = m.Config.from_toml(
        """
        [system]
        M = 4
        T = 50
        [train]
        E = 2
        hidden = 12
        L_ac = 3
        L_cr = 3
        B_batch = 8
        M_buf = 128
        """
    )
    assert small.m == 4 and small.slots_per_episode == 50

    # Lyapunov helpers against known values.
    assert m.lyapunov_value([3.0, 4.0]) == 12.5
    assert m.lyapunov_drift([0.0, 0.0], [3.0, 4.0]) == 12.5
    assert m.dinkelbach_check([(2.0, 1.0), (3.0, 2.0)])
    assert m.drift_bound_constant(cfg) > 0.0

    # Slot-by-slot simulation with a fixed hand policy.
    env = m.Env(small, seed=7)
    k, mm = small.k, small.m
    ratio = 0.0
    for t in range(small.slots_per_episode):
        out = env.step(
            [True] * k,
            [True] * k,
            [0.2] * k,
            [0.25e9] * k,
            0.8e9,
            [0.0] * mm,
        )
        assert out["energy"] > 0.0 and math.isfinite(out["throughput"])
        locals_, edge = env.queues()
        assert all(q >= 0.0 for q in locals_) and edge >= 0.0
        ratio = out["ratio"]
    assert math.isfinite(ratio) and ratio > 0.0
    print(f"hand policy: energy efficiency {ratio:.3e} bits/J after {t + 1} slots")

    # Determinism: same seed, same trajectory.
    env.reset()
    replay = None
    for _ in range(5):
        replay = env.step([True] * k, [False] * k, [0.5] * k, [0.0] * k, 0.0, [0.0] * mm)
    env.reset()
    again = None
    for _ in range(5):
        again = env.step([True] * k, [False] * k, [0.5] * k, [0.0] * k, 0.0, [0.0] * mm)
    assert replay["ratio"] == again["ratio"]

    # Invalid actions are rejected.
    try:
        env.step([True] * k, [True] * k, [2.0] * k, [0.0] * k, 0.0, [0.0] * mm)
    except ValueError as err:
        assert "power" in str(err)
    else:
        raise AssertionError("out-of-range power must be rejected")

    # Miniature training run end to end.
    summary = m.train_run(small, algorithm="lmiddpg", seed=1)
    assert summary["episodes"] == small.episodes
    assert math.isfinite(summary["final_ratio"])
    print(f"mini training: final energy efficiency {summary['final_ratio']:.3e} bits/J")

    print("smoke test passed")


if __name__ == "__main__":
    main()

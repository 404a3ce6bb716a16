"""Regenerate the pinned sweep tables in this directory.

Run from the repository root after the oracle-equivalence tests pass:

    python tests/data/regenerate.py

The pinned values are compared bitwise-insensitively (1e-9) by the
acceptance suite; regenerate only when the underlying numerics are
intentionally changed, and rerun the oracle tests first.
"""
import pathlib
import sys

from cvpbt.cli import main

HERE = pathlib.Path(__file__).parent
GRID = "0.15:0.75:5"


def emit(name, *argv):
    out = HERE / name
    code = main(list(argv) + ["--format", "json", "--out", str(out)])
    if code != 0:
        raise SystemExit(f"generation failed for {name} (exit {code})")
    print(f"wrote {out}")


def run():
    for ports in (2, 3):
        emit(
            f"fidelity_bell2_ports{ports}.json",
            "fidelity-sweep", "--input", "bell2", "--ports", str(ports),
            "--lambda-x-range", GRID, "--lambda-y-range", GRID,
        )
        emit(
            f"fidelity_bell3_ports{ports}.json",
            "fidelity-sweep", "--input", "bell3", "--ports", str(ports),
            "--lambda-x-range", GRID, "--lambda-y-range", GRID,
        )
        emit(
            f"fidelity_tmsv_ports{ports}.json",
            "fidelity-sweep", "--input", "tmsv", "--ports", str(ports),
            "--lambda-in", str(1 / 3), "--cutoff", "12",
            "--lambda-x-range", GRID, "--lambda-y-range", GRID,
        )
    emit(
        "sim_bound_sweep.json",
        "bounds", "--kind", "sim",
        "--lambda-x", str(2**-0.25), "--lambda-y", str(2**-0.25),
        "--delta-range", "0:0.28:8",
    )


if __name__ == "__main__":
    run()

"""Lossless CSV for trajectories: header ``t,w1x,w1y,w1z,...,H``, LF newlines.

Reals are written with ``repr``, the shortest string that parses back to
the same double, so read-then-write reproduces a file byte for byte.
"""

from __future__ import annotations

import io
import sys

import numpy as np


def fmt(x) -> str:
    return repr(float(x))


def state_columns(n: int) -> list[str]:
    return [f"w{i}{c}" for i in range(1, n + 1) for c in "xyz"]


def format_rows(header, rows) -> str:
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt(v) for v in row) + "\n")
    return out.getvalue()


def trajectory_table(times, states, extra: dict | None = None):
    """Header and rows for a trajectory; ``extra`` maps column name to values."""
    states = np.asarray(states)
    n = states.shape[1]
    header = ["t"] + state_columns(n) + list(extra or {})
    cols = [np.asarray(times)[:, None], states.reshape(len(states), -1)]
    cols += [np.asarray(v, dtype=float)[:, None] for v in (extra or {}).values()]
    return header, np.hstack(cols)


def write_text(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", newline="\n", encoding="utf-8") as f:
        f.write(text)


def write_table(path, header, rows):
    write_text(path, format_rows(header, rows))


def parse_table(text: str) -> tuple[list[str], np.ndarray]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    header = lines[0].split(",")
    rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return header, rows.reshape(len(lines) - 1, len(header))


def read_table(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8", newline="") as f:
        return parse_table(f.read())

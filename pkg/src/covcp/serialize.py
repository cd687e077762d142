"""CSV ingestion and JSON/CSV/text output.

JSON is written with a fixed key order and Python's shortest round-trip float
repr, so parsing a file and dumping it again reproduces the same bytes.
Non-finite thresholds (the keep-everything ablation) are written as null.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .core import DataValidationError
from .detect import DetectionResult, UCurve
from .reduction import DVector, SelectionSet
from .simgen import ReplicationReport


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_csv(path: str | Path, delimiter: str = ",") -> np.ndarray:
    """n x p float matrix from a delimited file; a non-numeric first row is a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter)]
    return parse_rows(rows)


def parse_rows(rows: list[list[str]]) -> np.ndarray:
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise DataValidationError("input contains no data rows")
    offset = 1
    if not all(_is_number(cell.strip()) for cell in rows[0]):
        rows = rows[1:]
        offset = 2
    if not rows:
        raise DataValidationError("input contains a header but no data rows")
    p = len(rows[0])
    out = np.empty((len(rows), p))
    for i, row in enumerate(rows):
        if len(row) != p:
            raise DataValidationError(
                f"row {i + offset}: expected {p} columns, found {len(row)}"
            )
        for a, cell in enumerate(row):
            try:
                out[i, a] = float(cell.strip())
            except ValueError:
                raise DataValidationError(
                    f"row {i + offset}, column {a + 1}: cannot parse {cell!r} as a number"
                ) from None
    return out


def write_matrix_csv(path: str | Path, x: np.ndarray, header: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow([f"x{a + 1}" for a in range(x.shape[1])])
        w.writerows([[repr(float(v)) for v in row] for row in x])


def result_to_dict(res: DetectionResult, include_curve: bool = True) -> dict:
    out = {
        "n": res.n,
        "p": res.p,
        "tau": _num(res.tau),
        "tau_rule": res.tau_rule,
        "tau_meta": dict(res.meta),
        "m": res.m,
        "selected": [list(ab) for ab in res.selection.pairs()],
        "k_hat": res.k_hat,
        "r_hat": res.r_hat,
        "status": res.status,
    }
    if include_curve and res.curve is not None:
        out["u_curve"] = res.curve.values.tolist()
    return out


def dvector_to_dict(D: DVector, selection: SelectionSet | None = None) -> dict:
    out = {"p": D.p}
    if selection is not None:
        out["tau"] = _num(selection.tau)
        out["m"] = selection.m
        out["selected"] = [list(ab) for ab in selection.pairs()]
    out["entries"] = [[a, b, v] for a, b, v in D.entries()]
    return out


def dvector_to_csv(D: DVector, selection: SelectionSet | None = None) -> str:
    chosen = set() if selection is None else set(selection.indices.tolist())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["a", "b", "D", "selected"])
    for ell, (a, b, v) in enumerate(D.entries()):
        w.writerow([a, b, repr(v), int(ell in chosen)])
    return buf.getvalue()


def curve_to_csv(curve: UCurve) -> str:
    lines = ["k,u"] + [f"{k},{v!r}" for k, v in zip(curve.ks.tolist(), curve.values.tolist())]
    return "\n".join(lines) + "\n"


def report_to_dict(rep: ReplicationReport, include_estimates: bool = False) -> dict:
    out = {
        "scenario": rep.scenario,
        "K": rep.K,
        "r0": rep.r0,
        "mean": _num(rep.mean),
        "std": _num(rep.std),
        "mse": _num(rep.mse),
        "n_no_detection": rep.n_no_detection,
    }
    if include_estimates:
        out["estimates"] = list(rep.estimates)
    return out


def estimates_to_csv(rep: ReplicationReport) -> str:
    return "replicate,r_hat\n" + "".join(f"{i},{r!r}\n" for i, r in enumerate(rep.estimates))


def _cell(x: float) -> str:
    return "   -  " if x is None or not math.isfinite(x) else f"{x:.4f}"


def format_table(title: str, dims: list[int], grid: dict[tuple[str, int], ReplicationReport]) -> str:
    """Aligned text table: two cases side by side, one column per dimension."""
    cases = []
    for case, _ in grid:
        if case not in cases:
            cases.append(case)
    width = 8
    lines = [title]
    for left in range(0, len(cases), 2):
        pair = cases[left:left + 2]
        block_w = width * len(dims)
        head = " " * 6 + "|" + "||".join(f"case {c}".center(block_w) for c in pair)
        rule = "-" * len(head)
        lines += [rule, head, rule]
        p_row = "p".ljust(6) + "|" + "||".join("".join(str(p).rjust(width) for p in dims) for _ in pair)
        lines += [p_row, rule]
        for label, attr in (("mean", "mean"), ("std", "std"), ("MSE", "mse")):
            cells = []
            for c in pair:
                cells.append("".join(_cell(getattr(grid[(c, p)], attr)).rjust(width) for p in dims))
            lines.append(label.ljust(6) + "|" + "||".join(cells))
        missing = sum(grid[(c, p)].n_no_detection for c in pair for p in dims)
        if missing:
            lines.append(f"  ({missing} replicate(s) with no selected components excluded)")
        lines.append(rule)
    return "\n".join(lines) + "\n"

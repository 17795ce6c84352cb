"""Dispersion-point tables on disk.

Two layouts are accepted:

* points: ``mu0_H_mT,f_GHz,branch[,hwhm_MHz]`` with one observation per row;
* dispersion: ``mu0_H_mT,f_lower_GHz,f_upper_GHz[,...]`` as written by the
  simulator, expanded to two tagged points per row.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..exceptions import DomainError

__all__ = ["PointTable", "read_points", "write_points", "POINTS_HEADER"]

POINTS_HEADER = ("mu0_H_mT", "f_GHz", "branch", "hwhm_MHz")
_BRANCHES = {"lower", "upper", "auto", ""}


@dataclass
class PointTable:
    mu0_H: np.ndarray  # T
    f: np.ndarray  # Hz
    branch: list  # "lower" / "upper" / None
    hwhm: np.ndarray  # Hz, NaN where absent

    def __len__(self):
        return self.mu0_H.size

    @property
    def has_widths(self):
        return bool(np.any(np.isfinite(self.hwhm)))


def _num(cell, path, lineno, what):
    try:
        x = float(cell)
    except ValueError:
        raise DomainError(f"{path}:{lineno}: {what} {cell!r} is not a number") from None
    return x


def read_points(path):
    """Parse a points or dispersion CSV.  Errors name the offending line."""
    text = Path(path).read_text()
    rows = [r for r in csv.reader(io.StringIO(text))]
    rows_idx = [(i, r) for i, r in enumerate(rows, start=1) if r and any(c.strip() for c in r)]
    if not rows_idx:
        raise DomainError(f"{path}:1: empty input")
    hline, header = rows_idx[0]
    header = [c.strip() for c in header]
    body = rows_idx[1:]
    if not body:
        raise DomainError(f"{path}:{hline + 1}: no data rows")
    h, f, br, w = [], [], [], []
    if header[:2] == ["mu0_H_mT", "f_GHz"]:
        has_branch = len(header) > 2 and header[2] == "branch"
        has_w = "hwhm_MHz" in header
        iw = header.index("hwhm_MHz") if has_w else None
        for lineno, row in body:
            if len(row) != len(header):
                raise DomainError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            h.append(_num(row[0], path, lineno, "field") * 1e-3)
            f.append(_num(row[1], path, lineno, "frequency") * 1e9)
            tag = row[2].strip().lower() if has_branch else ""
            if tag not in _BRANCHES:
                raise DomainError(f"{path}:{lineno}: unknown branch {row[2]!r}")
            br.append(tag if tag in ("lower", "upper") else None)
            cell = row[iw].strip() if has_w else ""
            w.append(_num(cell, path, lineno, "hwhm") * 1e6 if cell else math.nan)
    elif header[:3] == ["mu0_H_mT", "f_lower_GHz", "f_upper_GHz"]:
        for lineno, row in body:
            if len(row) != len(header):
                raise DomainError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            hv = _num(row[0], path, lineno, "field") * 1e-3
            for tag, cell in (("lower", row[1]), ("upper", row[2])):
                # blank cells and the zero-frequency lower branch at zero field are not observations
                if not cell.strip() or _num(cell, path, lineno, "frequency") <= 0:
                    continue
                h.append(hv)
                f.append(_num(cell, path, lineno, "frequency") * 1e9)
                br.append(tag)
                w.append(math.nan)
    else:
        raise DomainError(
            f"{path}:{hline}: header must start with 'mu0_H_mT,f_GHz' or "
            "'mu0_H_mT,f_lower_GHz,f_upper_GHz'"
        )
    return PointTable(np.array(h), np.array(f), br, np.array(w))


def write_points(path, table):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(POINTS_HEADER)
    for h, f, b, w in zip(table.mu0_H, table.f, table.branch, table.hwhm):
        hw = "" if math.isnan(w) else repr(float(w) / 1e6)
        wr.writerow([repr(float(h) * 1e3), repr(float(f) / 1e9), b or "auto", hw])
    Path(path).write_text(buf.getvalue())

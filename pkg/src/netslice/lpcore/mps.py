"""Fixed-format MPS export and the external-solver adapter contract."""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .model import LPModel, LPSolution, Relation, Status


@dataclass(frozen=True)
class MPSExport:
    text: str
    # mangled 8-char name -> original name
    columns: dict[str, str]
    rows: dict[str, str]

    def mangling_table(self) -> str:
        lines = ["kind\tmps\toriginal"]
        lines += [f"col\t{k}\t{v}" for k, v in self.columns.items()]
        lines += [f"row\t{k}\t{v}" for k, v in self.rows.items()]
        return "\n".join(lines) + "\n"


def _num(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e11:
        return str(int(v))
    for digits in range(12, 4, -1):
        s = format(v, f".{digits}g")
        if len(s) <= 12:
            return s
    return format(v, ".5g")


def _line(code: str, name: str, f3: str = "", f4: str = "", f5: str = "", f6: str = "") -> str:
    # fields start at columns 2, 5, 15, 25, 40, 50
    out = f" {code:<2} {name:<8}  {f3:<8}  {f4:<12}"
    if f5:
        out += f"   {f5:<8}  {f6:<12}"
    return out.rstrip()


def export_mps(model: LPModel, name: str = "NSLP") -> MPSExport:
    cols = [f"C{j:07d}" for j in range(model.num_cols)]
    rows = [f"R{i:07d}" for i in range(model.num_rows)]
    out = [f"NAME          {name[:8]}", "ROWS", " N  COST"]
    for i, rel in enumerate(model.relation):
        out.append(f" {rel.value}  {rows[i]}")

    out.append("COLUMNS")
    csc = model.matrix.tocsc()
    for j in range(model.num_cols):
        entries: list[tuple[str, float]] = []
        if model.cost[j]:
            entries.append(("COST", model.cost[j]))
        lo, hi = csc.indptr[j], csc.indptr[j + 1]
        entries += [(rows[i], v) for i, v in zip(csc.indices[lo:hi], csc.data[lo:hi]) if v]
        if not entries:
            # keep the column declared
            entries.append(("COST", 0.0))
        for p in range(0, len(entries), 2):
            pair = entries[p:p + 2]
            if len(pair) == 2:
                out.append(_line("", cols[j], pair[0][0], _num(pair[0][1]),
                                 pair[1][0], _num(pair[1][1])))
            else:
                out.append(_line("", cols[j], pair[0][0], _num(pair[0][1])))

    out.append("RHS")
    nz = [(rows[i], v) for i, v in enumerate(model.rhs) if v]
    for p in range(0, len(nz), 2):
        pair = nz[p:p + 2]
        if len(pair) == 2:
            out.append(_line("", "RHS", pair[0][0], _num(pair[0][1]), pair[1][0], _num(pair[1][1])))
        else:
            out.append(_line("", "RHS", pair[0][0], _num(pair[0][1])))

    out.append("BOUNDS")
    for j in range(model.num_cols):
        lo, hi = model.lower[j], model.upper[j]
        if lo == hi:
            out.append(_line("FX", "BND", cols[j], _num(lo)))
            continue
        if np.isneginf(lo) and np.isposinf(hi):
            out.append(_line("FR", "BND", cols[j]))
            continue
        if np.isneginf(lo):
            out.append(_line("MI", "BND", cols[j]))
        elif lo != 0:
            out.append(_line("LO", "BND", cols[j], _num(lo)))
        if np.isfinite(hi):
            out.append(_line("UP", "BND", cols[j], _num(hi)))
    out.append("ENDATA")
    return MPSExport("\n".join(out) + "\n",
                     dict(zip(cols, model.names)), dict(zip(rows, model.row_names)))


class ExternalSolver(Protocol):
    """Consumes MPS text; returns a status and column values keyed by mangled name."""

    def __call__(self, mps_text: str) -> tuple[Status, dict[str, float]]: ...


def solve_external(model: LPModel, solver: ExternalSolver | Callable) -> LPSolution:
    exp = export_mps(model)
    status, values = solver(exp.text)
    if status is not Status.OPTIMAL:
        return LPSolution(status, backend="external")
    x = np.array([values.get(c, 0.0) for c in exp.columns])
    return LPSolution(status, x, float(model.cost @ x), backend="external")


def highspy_solver(mps_text: str) -> tuple[Status, dict[str, float]]:
    """External-solver adapter backed by the optional ``highspy`` package."""
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    fd, path = tempfile.mkstemp(suffix=".mps")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(mps_text)
        h.readModel(path)
    finally:
        os.unlink(path)
    h.run()
    ms = h.getModelStatus()
    if ms == highspy.HighsModelStatus.kInfeasible:
        return Status.INFEASIBLE, {}
    if ms == highspy.HighsModelStatus.kUnbounded:
        return Status.UNBOUNDED, {}
    if ms != highspy.HighsModelStatus.kOptimal:
        raise RuntimeError(f"external solver ended with {h.modelStatusToString(ms)}")
    lp = h.getLp()
    names = list(lp.col_names_)
    return Status.OPTIMAL, dict(zip(names, h.getSolution().col_value))

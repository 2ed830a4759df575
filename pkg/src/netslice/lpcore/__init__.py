"""Linear programs: representation, solvers and MPS export."""
from __future__ import annotations

from .model import (FEAS_TOL, INF, OPT_TOL, LPBuilder, LPError, LPModel, LPSolution,
                    ModelError, NumericalFailure, Relation, Status)
from .mps import MPSExport, export_mps, highspy_solver, solve_external
from .simplex import Basis, solve_simplex

BACKENDS = ("simplex", "highs")


def solve_lp(model: LPModel, backend: str = "simplex", warm_start: Basis | None = None) -> LPSolution:
    """Solve ``model``.

    Optimal results are re-checked against the model: a point whose scaled
    constraint violation exceeds ``FEAS_TOL`` raises :class:`NumericalFailure`
    rather than being reported.
    """
    if backend == "simplex":
        sol = solve_simplex(model, warm_start)
        if sol.optimal and model.violation(sol.values) > FEAS_TOL and warm_start is not None:
            sol = solve_simplex(model)
    elif backend == "highs":
        from .highs import solve_highs

        sol = solve_highs(model)
    else:
        raise ValueError(f"unknown LP backend {backend!r}")
    if sol.optimal:
        viol = model.violation(sol.values)
        if viol > FEAS_TOL:
            raise NumericalFailure(f"{backend}: constraint violation {viol:.3g} after solve")
    return sol


__all__ = [
    "BACKENDS", "Basis", "FEAS_TOL", "INF", "LPBuilder", "LPError", "LPModel", "LPSolution",
    "MPSExport", "ModelError", "NumericalFailure", "OPT_TOL", "Relation", "Status",
    "export_mps", "highspy_solver", "solve_external", "solve_lp", "solve_simplex",
]

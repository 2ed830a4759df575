"""HiGHS backend through ``scipy.optimize.linprog``."""
from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .model import LPModel, LPSolution, NumericalFailure, Relation, Status


def solve_highs(model: LPModel) -> LPSolution:
    rel = np.array([r.value for r in model.relation])
    mat = model.matrix
    le, ge, eq = rel == "L", rel == "G", rel == "E"
    a_ub = None
    b_ub = None
    if le.any() or ge.any():
        sign = np.where(ge, -1.0, 1.0)[le | ge]
        a_ub = mat[le | ge].multiply(sign[:, None]).tocsr()
        b_ub = model.rhs[le | ge] * sign
    a_eq = mat[eq] if eq.any() else None
    b_eq = model.rhs[eq] if eq.any() else None
    bounds = np.column_stack([model.lower, model.upper])
    res = linprog(model.cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=bounds, method="highs-ds",
                  options={"primal_feasibility_tolerance": 1e-9,
                           "dual_feasibility_tolerance": 1e-9})
    nit = int(getattr(res, "nit", 0) or 0)
    if res.status == 2:
        return LPSolution(Status.INFEASIBLE, iterations=nit, backend="highs")
    if res.status == 3:
        return LPSolution(Status.UNBOUNDED, iterations=nit, backend="highs")
    if res.status != 0:
        raise NumericalFailure(f"HiGHS: {res.message}")

    pi = np.zeros(model.num_rows)
    if a_ub is not None:
        sign = np.where(ge, -1.0, 1.0)[le | ge]
        pi[le | ge] = res.ineqlin.marginals * sign
    if a_eq is not None:
        pi[eq] = res.eqlin.marginals
    d = model.cost - mat.T @ pi
    bound = float(pi @ model.rhs)
    for j in np.nonzero(np.abs(d) > 1e-12)[0]:
        edge = model.lower[j] if d[j] > 0 else model.upper[j]
        if np.isfinite(edge):
            bound += d[j] * edge
        elif abs(d[j]) > 1e-9:
            bound = -np.inf
            break
    return LPSolution(Status.OPTIMAL, np.asarray(res.x, float), float(res.fun), duals=pi,
                      dual_bound=bound, iterations=nit, backend="highs")

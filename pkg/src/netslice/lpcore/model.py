from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np
import scipy.sparse as sp

INF = np.inf
FEAS_TOL = 1e-7
OPT_TOL = 1e-7


class Relation(str, enum.Enum):
    LE = "L"
    EQ = "E"
    GE = "G"


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class LPError(Exception):
    pass


class ModelError(LPError):
    pass


class NumericalFailure(LPError):
    """The solver could not reach the requested tolerances."""


@dataclass(frozen=True, eq=False)
class LPModel:
    """Minimisation LP over bounded columns: ``min c.x  s.t.  A x (rel) rhs, lo <= x <= hi``.

    Instances are treated as immutable; the ``with_*`` helpers return copies
    that share the constraint matrix.
    """

    names: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray
    cost: np.ndarray
    matrix: sp.csr_matrix
    relation: tuple[Relation, ...]
    rhs: np.ndarray
    row_names: tuple[str, ...]

    def __post_init__(self) -> None:
        n = len(self.names)
        m = len(self.relation)
        if self.lower.shape != (n,) or self.upper.shape != (n,) or self.cost.shape != (n,):
            raise ModelError("bound/cost vectors do not match the column count")
        if self.matrix.shape != (m, n) or self.rhs.shape != (m,):
            raise ModelError("constraint data does not match the row count")
        bad = np.nonzero(self.lower > self.upper)[0]
        if bad.size:
            raise ModelError(f"lower > upper for column {self.names[bad[0]]}")
        if np.isnan(self.lower).any() or np.isnan(self.upper).any():
            raise ModelError("NaN bound")
        if np.isposinf(self.lower).any() or np.isneginf(self.upper).any():
            raise ModelError("empty column domain")
        if not (np.isfinite(self.cost).all() and np.isfinite(self.rhs).all()
                and np.isfinite(self.matrix.data).all()):
            raise ModelError("non-finite cost, rhs or coefficient")

    @property
    def num_cols(self) -> int:
        return len(self.names)

    @property
    def num_rows(self) -> int:
        return len(self.relation)

    def with_bounds(self, lower: np.ndarray, upper: np.ndarray) -> "LPModel":
        return replace(self, lower=np.asarray(lower, float), upper=np.asarray(upper, float))

    def with_cost(self, cost: np.ndarray) -> "LPModel":
        return replace(self, cost=np.asarray(cost, float))

    def column(self, name: str) -> int:
        return self.names.index(name)

    def violation(self, x: np.ndarray) -> float:
        """Largest bound or row violation of ``x``; rows scaled to unit max coefficient."""
        worst = float(max(0.0, np.max(self.lower - x, initial=0.0), np.max(x - self.upper, initial=0.0)))
        if self.num_rows:
            act = self.matrix @ x
            scale = np.maximum(abs(self.matrix).max(axis=1).toarray().ravel(), 1e-300)
            scale[scale == 1e-300] = 1.0
            rel = np.array([r.value for r in self.relation])
            gap = act - self.rhs
            viol = np.where(rel == "L", np.maximum(gap, 0),
                            np.where(rel == "G", np.maximum(-gap, 0), np.abs(gap)))
            worst = max(worst, float(np.max(viol / scale)))
        return worst


class LPBuilder:
    """Incremental assembly of an :class:`LPModel`."""

    def __init__(self) -> None:
        self._names: list[str] = []
        self._index: dict[str, int] = {}
        self._lo: list[float] = []
        self._hi: list[float] = []
        self._cost: list[float] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._rel: list[Relation] = []
        self._rhs: list[float] = []
        self._row_names: list[str] = []

    def add_var(self, name: str, lower: float = 0.0, upper: float = INF, cost: float = 0.0) -> int:
        if name in self._index:
            raise ModelError(f"duplicate column {name}")
        self._index[name] = len(self._names)
        self._names.append(name)
        self._lo.append(lower)
        self._hi.append(upper)
        self._cost.append(cost)
        return self._index[name]

    def add_row(self, coeffs: Mapping[int, float], relation: Relation | str, rhs: float,
                name: str | None = None) -> int:
        row = len(self._rel)
        n = len(self._names)
        for col, val in coeffs.items():
            if not 0 <= col < n:
                raise ModelError(f"row {name or row} references undeclared column {col}")
            if val:
                self._rows.append(row)
                self._cols.append(col)
                self._vals.append(float(val))
        self._rel.append(Relation(relation))
        self._rhs.append(float(rhs))
        self._row_names.append(name or f"r{row}")
        return row

    def set_cost(self, col: int, value: float) -> None:
        self._cost[col] = value

    def build(self) -> LPModel:
        m, n = len(self._rel), len(self._names)
        mat = sp.coo_matrix((self._vals, (self._rows, self._cols)), shape=(m, n)).tocsr()
        mat.sum_duplicates()
        return LPModel(tuple(self._names), np.array(self._lo, float), np.array(self._hi, float),
                       np.array(self._cost, float), mat, tuple(self._rel),
                       np.array(self._rhs, float), tuple(self._row_names))


@dataclass
class LPSolution:
    status: Status
    values: np.ndarray | None = None
    objective: float | None = None
    # row duals (Optimal) or a Farkas-type ray from phase one (Infeasible)
    duals: np.ndarray | None = None
    dual_bound: float | None = None
    iterations: int = 0
    backend: str = "simplex"
    basis: object = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def value_map(self, model: LPModel) -> dict[str, float]:
        return dict(zip(model.names, self.values.tolist()))

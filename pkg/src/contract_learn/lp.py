"""Small dense linear-program façade used by the inference and design layers.

The behavioral contract (deterministic optimum, explicit infeasible and
unbounded statuses, no silent wrong answers) is what downstream code relies
on; the solve itself is delegated to HiGHS via scipy.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

__all__ = ["LpStatus", "LinearProgram", "LpSolution", "solve_lp"]


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    FAILED = "failed"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """min objective @ x  s.t.  A_eq x = b_eq, A_ub x <= b_ub, bounds on x.

    Bounds are per-variable (lo, hi) pairs; hi may be ``inf``.
    """

    objective: np.ndarray
    eq_matrix: np.ndarray | None = None
    eq_rhs: np.ndarray | None = None
    ub_matrix: np.ndarray | None = None
    ub_rhs: np.ndarray | None = None
    bounds: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.objective, dtype=float))
        object.__setattr__(self, "objective", c)
        n = c.size
        for name in ("eq", "ub"):
            mat = getattr(self, f"{name}_matrix")
            rhs = getattr(self, f"{name}_rhs")
            if (mat is None) != (rhs is None):
                raise ValueError(f"{name} constraints need both a matrix and a rhs")
            if mat is not None:
                mat = np.atleast_2d(np.asarray(mat, dtype=float))
                rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
                if mat.shape != (rhs.size, n):
                    raise ValueError(
                        f"{name} constraint shapes disagree: matrix {mat.shape}, "
                        f"rhs {rhs.size}, variables {n}"
                    )
                object.__setattr__(self, f"{name}_matrix", mat)
                object.__setattr__(self, f"{name}_rhs", rhs)
        if self.bounds is not None:
            if len(self.bounds) != n:
                raise ValueError(
                    f"bounds must list all {n} variables, got {len(self.bounds)}"
                )
            for j, (lo, hi) in enumerate(self.bounds):
                if lo > hi:
                    raise ValueError(f"bound {j} is empty: [{lo}, {hi}]")

    @property
    def n_vars(self) -> int:
        return self.objective.size


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    objective_value: float = float("nan")

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def solve_lp(program: LinearProgram) -> LpSolution:
    """Solve a dense LP; deterministic for a fixed input.

    The reported objective value is recomputed as objective @ x so it matches
    the returned point exactly.
    """
    bounds = program.bounds if program.bounds is not None else [(0.0, None)] * program.n_vars
    bounds = [(lo, None if hi is not None and np.isinf(hi) else hi) for lo, hi in bounds]
    res = linprog(
        program.objective,
        A_ub=program.ub_matrix,
        b_ub=program.ub_rhs,
        A_eq=program.eq_matrix,
        b_eq=program.eq_rhs,
        bounds=bounds,
        method="highs",
    )
    if res.status == 0:
        x = np.asarray(res.x, dtype=float)
        return LpSolution(LpStatus.OPTIMAL, x, float(program.objective @ x))
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE)
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED)
    return LpSolution(LpStatus.FAILED)

"""Residuals of the functional equations that govern extreme stability.

Four pointwise identities are checked on grids, always in the sup norm:

involution
    ``1 - Q(1 - s) = Q^{-1}(s)``, the condition under which N-max and N-min
    stability coincide.
self_inverse
    ``Q(1 - Q(1 - s)) = s``, the same condition without an inversion.
inverse_closure
    ``Q_u^{-1} = Q_lam`` for some member of the same family.
semigroup
    ``Q_u(Q_v(s)) = Q_{uv}(s)``, closure of the family under compounding.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from ._numerics import golden_section
from .pgf_core import DEFAULT_INVERSION_TOL, PgfSpec, invert_pgf

IDENTITY_THRESHOLD = 1e-9
VIOLATION_THRESHOLD = 1e-3
DEFAULT_LAMBDA_BOX = (1e-2, 1e2)

Member = Callable[[float], PgfSpec]


def default_s_grid(n: int = 99) -> np.ndarray:
    """``n`` equispaced interior points of (0, 1); 99 gives 0.01, ..., 0.99."""
    return np.arange(1, n + 1) / (n + 1)


class Equation(str, Enum):
    INVOLUTION = "involution"
    INVERSE_CLOSURE = "inverse_closure"
    SEMIGROUP = "semigroup"
    SELF_INVERSE = "self_inverse"


@dataclass(frozen=True)
class ResidualReport:
    equation: Equation
    grid: list
    residuals: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals))

    @property
    def argmax(self):
        return self.grid[int(np.argmax(self.residuals))]

    def residual_at(self, point) -> float:
        """Residual at the grid point closest to ``point``."""
        pts = np.atleast_2d(np.asarray(self.grid, dtype=float).reshape(len(self.grid), -1))
        target = np.atleast_1d(np.asarray(point, dtype=float))
        return float(self.residuals[int(np.argmin(np.abs(pts - target).sum(axis=1)))])

    def passes(self, threshold: float = IDENTITY_THRESHOLD) -> bool:
        return self.max_residual <= threshold

    def to_dict(self) -> dict:
        argmax = self.argmax
        return {
            "equation": self.equation.value,
            "max_residual": self.max_residual,
            "argmax": list(argmax) if isinstance(argmax, tuple) else [argmax],
            "grid": [list(g) if isinstance(g, tuple) else g for g in self.grid],
            "residuals": [float(r) for r in self.residuals],
            **({"meta": self.meta} if self.meta else {}),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        first = self.grid[0]
        cols = ["u", "v", "s"] if isinstance(first, tuple) and len(first) == 3 else ["s"]
        w.writerow(cols + ["residual"])
        for g, r in zip(self.grid, self.residuals):
            row = list(g) if isinstance(g, tuple) else [g]
            w.writerow([repr(float(x)) for x in row] + [repr(float(r))])
        return buf.getvalue()


def _grid(s_grid) -> np.ndarray:
    s = default_s_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or s.size == 0 or np.any(s <= 0) or np.any(s >= 1):
        raise ValueError("s grid must be a nonempty list of points strictly inside (0, 1)")
    return s


def involution_residual(spec: PgfSpec, s_grid=None,
                        tol: float = DEFAULT_INVERSION_TOL) -> ResidualReport:
    """``|1 - Q(1 - s) - Q^{-1}(s)|`` on the grid."""
    s = _grid(s_grid)
    lhs = 1.0 - np.asarray(spec(1.0 - s), dtype=float)
    rhs = np.asarray(invert_pgf(spec, s, tol=tol), dtype=float)
    return ResidualReport(Equation.INVOLUTION, s.tolist(), np.abs(lhs - rhs),
                          {"spec": spec.to_dict()})


def self_inverse_residual(spec: PgfSpec, s_grid=None) -> ResidualReport:
    """``|Q(1 - Q(1 - s)) - s|`` on the grid; needs no inversion."""
    s = _grid(s_grid)
    inner = 1.0 - np.asarray(spec(1.0 - s), dtype=float)
    return ResidualReport(Equation.SELF_INVERSE, s.tolist(),
                          np.abs(np.asarray(spec(inner), dtype=float) - s),
                          {"spec": spec.to_dict()})


def inverse_closure_residual(member: Member, u: float, lam: float, s_grid=None,
                             form: str = "inverse") -> ResidualReport:
    """Distance between ``Q_u^{-1}`` and the candidate member ``Q_lam``.

    ``form="inverse"`` measures ``|Q_u^{-1}(s) - Q_lam(s)|``;
    ``form="roundtrip"`` measures ``|Q_u(Q_lam(s)) - s|``, which vanishes for
    the same ``lam`` but never calls the inverse.
    """
    s = _grid(s_grid)
    q_u, q_lam = member(u), member(lam)
    if form == "inverse":
        res = np.abs(np.asarray(invert_pgf(q_u, s), dtype=float) - q_lam(s))
    elif form == "roundtrip":
        res = np.abs(np.asarray(q_u(q_lam(s)), dtype=float) - s)
    else:
        raise ValueError(f"unknown form {form!r}")
    return ResidualReport(Equation.INVERSE_CLOSURE, s.tolist(), res,
                          {"u": u, "lambda": lam, "form": form})


def inverse_closure_fit(member: Member, u: float, s_grid=None,
                        lam_box: tuple[float, float] = DEFAULT_LAMBDA_BOX,
                        xtol: float = 1e-13):
    """Find the member ``Q_lam`` closest to ``Q_u^{-1}`` in the sup norm.

    Golden-section search over ``log(lam)`` on ``lam_box``. Returns
    ``(lam_best, report)``; ``report.meta["converged"]`` flags whether the
    search bracket closed.
    """
    s = _grid(s_grid)
    target = np.asarray(invert_pgf(member(u), s), dtype=float)

    def objective(log_lam):
        return float(np.max(np.abs(target - member(math.exp(log_lam))(s))))

    lo, hi = math.log(lam_box[0]), math.log(lam_box[1])
    x, _, converged = golden_section(objective, lo, hi, xtol=xtol)
    lam = math.exp(x)
    report = inverse_closure_residual(member, u, lam, s)
    report.meta["converged"] = converged
    return lam, report


def semigroup_residual(member: Member, uv_grid: Iterable[Sequence[float]],
                       s_grid=None) -> ResidualReport:
    """``|Q_u(Q_v(s)) - Q_{uv}(s)|`` over every ``(u, v)`` pair and grid point."""
    s = _grid(s_grid)
    points, res = [], []
    for u, v in uv_grid:
        u, v = float(u), float(v)
        lhs = member(u)(member(v)(s))
        rhs = member(u * v)(s)
        points.extend((u, v, float(x)) for x in s)
        res.append(np.abs(np.asarray(lhs, dtype=float) - rhs))
    if not points:
        raise ValueError("uv grid is empty")
    return ResidualReport(Equation.SEMIGROUP, points, np.concatenate(res))

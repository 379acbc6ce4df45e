"""N-max / N-min stability of a distribution function.

``F`` is N-max stable when ``Q(F(x)) = F(a + b x)`` and N-min stable when
``Q(S(a + b x)) = S(x)`` for some ``a`` and ``b > 0``, where ``S = 1 - F``.
The fitter recovers ``(a, b)`` by quantile matching and least squares and
then measures the sup-norm cdf residual on a finer grid.

Orientation of the min-side map: the affine map sits inside the
*transformed* survival, exactly as written above. With ``H`` the N-min law
(survival ``Q(S)``), min stability reads ``F(x) = H(a + b x)``; the report's
``orientation`` field records this.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._numerics import golden_section
from .distributions import (
    AffineMap,
    Distribution,
    HarrisMaxExtended,
    HarrisMinExtended,
    PgfMaxTransform,
    PgfMinTransform,
)
from .errors import DegenerateFitError, DomainError, PreconditionError
from .functional_checks import IDENTITY_THRESHOLD, self_inverse_residual
from .pgf_core import PgfSpec

PASS_THRESHOLD = 1e-6
FAIL_THRESHOLD = 1e-2
FIT_LEVELS = np.round(np.arange(1, 20) * 0.05, 10)
VERIFY_LEVELS = np.linspace(0.01, 0.99, 201)

MAX_ORIENTATION = "Q(F(x)) = F(a + b x)"
MIN_ORIENTATION = "Q(S(a + b x)) = S(x)"


@dataclass
class StabilityReport:
    kind: str  # "NMax" or "NMin"
    fitted: AffineMap | None
    max_residual: float
    grid: list
    threshold: float = PASS_THRESHOLD
    orientation: str = ""
    message: str = ""
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.fitted is not None and self.max_residual <= self.threshold)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "a": None if self.fitted is None else self.fitted.a,
            "b": None if self.fitted is None else self.fitted.b,
            "max_residual": self.max_residual,
            "passed": self.passed,
            "threshold": self.threshold,
            "orientation": self.orientation,
            "message": self.message,
            "grid": [float(x) for x in self.grid],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def nmax_transform(Q: PgfSpec, F: Distribution) -> PgfMaxTransform:
    """Law of ``max(X_1, ..., X_N)``."""
    return PgfMaxTransform(Q, F)


def nmin_transform(Q: PgfSpec, F: Distribution) -> PgfMinTransform:
    """Law of ``min(X_1, ..., X_N)``."""
    return PgfMinTransform(Q, F)


def _quantile_grid(dist: Distribution, levels) -> np.ndarray:
    return np.asarray(dist.quantile(np.asarray(levels, dtype=float)), dtype=float)


def fit_affine(F: Distribution, G: Distribution, x_grid=None, verify_grid=None):
    """Fit ``G(x) = F(a + b x)``.

    Parameters
    ----------
    F, G : Distribution
        ``G`` is matched against affine reparameterisations of ``F``.
    x_grid : array_like, optional
        Fit points, default the quantiles of ``G`` at 0.05, 0.10, ..., 0.95.
        Each is mapped to ``y = F^{-1}(G(x))`` and ``y = a + b x`` is solved by
        least squares.
    verify_grid : array_like, optional
        Points for the residual ``max |G(x) - F(a + b x)|``, default 201
        quantiles of ``G`` spanning levels 0.01 to 0.99.

    Returns
    -------
    (AffineMap, float)

    Raises
    ------
    DegenerateFitError
        If the grid has (numerically) no spread or the fitted scale is not positive.
    """
    x = _quantile_grid(G, FIT_LEVELS) if x_grid is None else np.asarray(x_grid, dtype=float)
    if x.size < 3:
        raise DomainError("affine fit needs at least 3 grid points")
    levels = np.clip(np.asarray(G.cdf(x), dtype=float), 0.0, 1.0)
    y = np.asarray(F.quantile(levels), dtype=float)
    ok = np.isfinite(y) & np.isfinite(x)
    x, y = x[ok], y[ok]
    if x.size < 3 or np.var(x) < 1e-12:
        raise DegenerateFitError("fit grid has no spread")
    xm, ym = x.mean(), y.mean()
    b = float(np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2))
    a = float(ym - b * xm)
    if not b > 0:
        raise DegenerateFitError(f"fitted scale b = {b:.3g} is not positive")
    affine = AffineMap(a, b)
    xv = _quantile_grid(G, VERIFY_LEVELS) if verify_grid is None else np.asarray(verify_grid, dtype=float)
    resid = float(np.max(np.abs(np.asarray(G.cdf(xv)) - np.asarray(F.cdf(affine(xv))))))
    return affine, resid


def _stability(kind, F_arg, G_arg, threshold, orientation, x_grid):
    grid = _quantile_grid(G_arg, FIT_LEVELS) if x_grid is None else np.asarray(x_grid, dtype=float)
    try:
        affine, resid = fit_affine(F_arg, G_arg, grid)
    except DegenerateFitError as exc:
        return StabilityReport(kind, None, math.inf, grid.tolist(), threshold,
                               orientation, f"fit failed: {exc}")
    return StabilityReport(kind, affine, resid, grid.tolist(), threshold, orientation)


def check_max_stability(Q: PgfSpec, F: Distribution, threshold: float = PASS_THRESHOLD,
                        x_grid=None) -> StabilityReport:
    """Is ``Q(F(x)) = F(a + b x)`` for some affine map?"""
    return _stability("NMax", F, nmax_transform(Q, F), threshold, MAX_ORIENTATION, x_grid)


def check_min_stability(Q: PgfSpec, F: Distribution, threshold: float = PASS_THRESHOLD,
                        x_grid=None) -> StabilityReport:
    """Is ``Q(S(a + b x)) = S(x)`` for some affine map?

    Fitted as ``F(x) = H(a + b x)`` with ``H`` the N-min law of ``F``.
    """
    return _stability("NMin", nmin_transform(Q, F), F, threshold, MIN_ORIENTATION, x_grid)


def transport_residual(Q: PgfSpec, F: Distribution, affine: AffineMap, x_grid=None) -> float:
    """Min-side residual ``max |Q(S(a + b x)) - S(x)|`` at a given (max-side) map."""
    x = _quantile_grid(F, VERIFY_LEVELS) if x_grid is None else np.asarray(x_grid, dtype=float)
    lhs = np.asarray(Q(np.asarray(F.sf(affine(x)), dtype=float)), dtype=float)
    return float(np.max(np.abs(lhs - np.asarray(F.sf(x)))))


def max_min_equivalence(Q: PgfSpec, F: Distribution, threshold: float = PASS_THRESHOLD,
                          s_grid=None) -> bool:
    """Max- and min-stability checks agree for a ``Q`` solving the involution.

    Raises
    ------
    PreconditionError
        If ``Q`` fails ``Q(1 - Q(1 - s)) = s`` on the grid (residual above 1e-9).
    """
    rep = self_inverse_residual(Q, s_grid)
    if not rep.passes(IDENTITY_THRESHOLD):
        raise PreconditionError(
            f"{Q!r} does not satisfy the involution equation "
            f"(max residual {rep.max_residual:.3e} at s={rep.argmax})")
    return (check_max_stability(Q, F, threshold).passed
            == check_min_stability(Q, F, threshold).passed)


def _step_kind(kind: str) -> str:
    k = str(kind).strip().lower()
    if k not in ("max", "min"):
        raise DomainError(f"step kind must be 'max' or 'min', got {kind!r}")
    return k


def compose_extremes(F: Distribution, steps: Sequence[tuple[str, PgfSpec]]) -> Distribution:
    """Apply N-max / N-min transforms in order, first step innermost."""
    if not steps:
        raise DomainError("compose_extremes needs at least one step")
    out = F
    for kind, Q in steps:
        out = nmax_transform(Q, out) if _step_kind(kind) == "max" else nmin_transform(Q, out)
    return out


def mo_structure_fit(G: Distribution, F: Distribution, x_grid=None,
                     lam_box=(1e-2, 1e2), xtol: float = 1e-13):
    """Best ``lam`` with ``S_G ~ lam S / (1 - (1 - lam) S)`` in the sup norm.

    Golden-section search on ``log(lam)``. Returns ``(lam, residual, converged)``.
    """
    x = _quantile_grid(F, VERIFY_LEVELS) if x_grid is None else np.asarray(x_grid, dtype=float)
    s = np.asarray(F.sf(x), dtype=float)
    target = np.asarray(G.sf(x), dtype=float)

    def objective(log_lam):
        lam = math.exp(log_lam)
        return float(np.max(np.abs(target - lam * s / (1.0 - (1.0 - lam) * s))))

    xbest, fbest, converged = golden_section(objective, math.log(lam_box[0]),
                                             math.log(lam_box[1]), xtol=xtol)
    return math.exp(xbest), fbest, converged


def proposition_check(kind: str, base: Distribution, u: float, j: int, v: float,
                      x_grid=None) -> float:
    """Parameter-update closure of the Harris-extended families.

    For ``kind="min"``: the N-min of ``HarrisMinExtended(base, u, j)`` under
    ``Harris(v, j)`` against ``HarrisMinExtended(base, u v, j)``; ``"max"``
    is symmetric. Returns the sup-norm distance of survivals (resp. cdfs).
    """
    k = _step_kind(kind)
    Qv = PgfSpec.harris(v, j)
    x = _quantile_grid(base, VERIFY_LEVELS) if x_grid is None else np.asarray(x_grid, dtype=float)
    if k == "min":
        lhs = nmin_transform(Qv, HarrisMinExtended(base, u, j)).sf(x)
        rhs = HarrisMinExtended(base, u * v, j).sf(x) if u * v > 1 else \
            nmin_transform(PgfSpec.harris(u * v, j), base).sf(x)
    else:
        lhs = nmax_transform(Qv, HarrisMaxExtended(base, u, j)).cdf(x)
        rhs = HarrisMaxExtended(base, u * v, j).cdf(x) if u * v > 1 else \
            nmax_transform(PgfSpec.harris(u * v, j), base).cdf(x)
    return float(np.max(np.abs(np.asarray(lhs) - np.asarray(rhs))))

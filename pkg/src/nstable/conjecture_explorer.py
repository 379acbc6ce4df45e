"""Search parametric PGF families for joint solutions of two functional equations.

The objective for a family member is

    R_involution + R_semigroup + validity_penalty

where ``R_involution`` is the sup residual of ``Q(1 - Q(1 - s)) = s`` for the
member itself, ``R_semigroup`` the sup residual of ``Q_u(Q_v(s)) = Q_{uv}(s)``
over a small ``(u, v)`` grid with the member's shape parameters held fixed,
and the penalty is the negative coefficient mass of the member's power
series. Every built-in family contains the geometric law on a known locus;
the explorer reports how far the minimisers land from that locus.

Results are numerical evidence about the searched family only, never a proof.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .errors import DomainError
from .functional_checks import self_inverse_residual, semigroup_residual
from .pgf_core import COEF_EPS, PgfSpec, validate_pgf

DEFAULT_UV_GRID = ((0.5, 0.5), (0.5, 2.0), (2.0, 2.0), (1.5, 3.0))
DEFAULT_STARTS = 20
DEFAULT_MAX_ITER = 400
DEFAULT_FATOL = 1e-10
DEFAULT_XATOL = 1e-8
PENALTY_WEIGHT = 1.0
PENALTY_HORIZON = 64

EVIDENCE_LABEL = (
    "NUMERICAL EVIDENCE, NOT A PROOF. Within the {family} family only, minimisers of the "
    "joint involution + semigroup residual were compared with the geometric locus. "
    "Agreement supports the conjecture that the geometric law is the only PGF family "
    "satisfying both equations; a finite search over one family cannot establish it."
)


def chebyshev_grid(n: int = 33) -> np.ndarray:
    """Chebyshev nodes of the first kind mapped into (0, 1)."""
    i = np.arange(1, n + 1)
    return np.sort(0.5 * (1.0 - np.cos((2 * i - 1) * np.pi / (2 * n))))


# -- families ---------------------------------------------------------------

def _harris_member(params, u=None):
    uu, k = params
    return PgfSpec.harris(uu if u is None else u, k, explorer=True)


def _mixture_member(params, u=None):
    alpha, uu = params
    uu = uu if u is None else u
    # compounding index uu: Geometric(1/uu) and Shaked(uu) both compound multiplicatively in it
    return PgfSpec.mixture(alpha, PgfSpec.geometric(1.0 / uu), PgfSpec.shaked(uu, explorer=True))


def _mobius_member(params, u=None):
    p, c1, c2 = params
    return PgfSpec.mobius_perturbed(p if u is None else u, c1, c2)


_BUILTINS = {
    "HarrisContinuous": (("u", "k"), ((1.5, 4.0), (1.0, 3.0)), _harris_member, {"k": 1.0}),
    "GeoShakedMixture": (("alpha", "u"), ((0.0, 1.0), (1.5, 4.0)), _mixture_member, {"alpha": 1.0}),
    "MobiusPerturbed": (("p", "c1", "c2"), ((0.25, 0.75), (-0.5, 0.5), (-0.5, 0.5)),
                        _mobius_member, {"c1": 0.0, "c2": 0.0}),
}

FAMILY_ALIASES = {
    "harris-continuous": "HarrisContinuous",
    "geo-shaked-mixture": "GeoShakedMixture",
    "mixture": "GeoShakedMixture",
    "mobius-perturbed": "MobiusPerturbed",
}


@dataclass(frozen=True)
class FamilyHandle:
    """A built-in exploration family restricted to a parameter box.

    ``locus`` maps the shape parameters that must take fixed values for the
    member to be geometric; all other parameters are free along the locus.
    """

    name: str
    param_names: tuple[str, ...]
    box: tuple[tuple[float, float], ...]
    locus: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in _BUILTINS:
            raise DomainError(f"unknown family {self.name!r}")
        if len(self.box) != len(self.param_names):
            raise DomainError("box needs one interval per parameter")
        for (lo, hi), nm in zip(self.box, self.param_names):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise DomainError(f"bad interval for {nm}: [{lo}, {hi}]")

    @classmethod
    def builtin(cls, name: str, **intervals) -> FamilyHandle:
        name = FAMILY_ALIASES.get(name, name)
        if name not in _BUILTINS:
            raise DomainError(f"unknown family {name!r}; choose from {sorted(_BUILTINS)}")
        names, box, _, locus = _BUILTINS[name]
        return cls(name, names, box, dict(locus)).with_box(**intervals)

    def with_box(self, **intervals) -> FamilyHandle:
        box = list(self.box)
        for key, iv in intervals.items():
            if key not in self.param_names:
                raise DomainError(f"{self.name} has no parameter {key!r}")
            if isinstance(iv, (int, float)):
                iv = (iv, iv)
            lo, hi = (float(x) for x in iv)
            box[self.param_names.index(key)] = (lo, hi)
        return replace(self, box=tuple(box))

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.box])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[1] for b in self.box])

    def member(self, params, u: float | None = None) -> PgfSpec:
        """The family member at ``params``; ``u`` overrides the compounding index."""
        return _BUILTINS[self.name][2](tuple(float(x) for x in params), u)

    def compounding(self, params):
        """``u -> member`` with the shape parameters of ``params`` held fixed."""
        return lambda u: self.member(params, u)

    def in_box(self, params, slack: float = 1e-12) -> bool:
        x = np.asarray(params, dtype=float)
        return bool(np.all(x >= self.lower - slack) and np.all(x <= self.upper + slack))

    def locus_distance(self, params) -> float:
        """Largest box-normalised deviation of a locus parameter from its geometric value."""
        dist = 0.0
        for key, target in self.locus.items():
            i = self.param_names.index(key)
            lo, hi = self.box[i]
            width = hi - lo
            dev = abs(float(params[i]) - target)
            dist = max(dist, dev / width if width > 0 else (0.0 if dev == 0 else math.inf))
        return dist

    def to_dict(self) -> dict:
        return {"name": self.name, "params": list(self.param_names),
                "box": {n: list(b) for n, b in zip(self.param_names, self.box)},
                "locus": self.locus}


# -- objective --------------------------------------------------------------

class ResidualBreakdown(NamedTuple):
    involution: float
    semigroup: float
    validity_penalty: float

    @property
    def total(self) -> float:
        return self.involution + self.semigroup + PENALTY_WEIGHT * self.validity_penalty


def joint_residual(family: FamilyHandle, params, s_grid=None,
                   uv_grid: Sequence[tuple[float, float]] = DEFAULT_UV_GRID):
    """Return ``(total, ResidualBreakdown)`` for the member at ``params``."""
    if not family.in_box(params):
        raise DomainError(f"params {list(params)} outside the box of {family.name}")
    s = chebyshev_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    spec = family.member(params)
    r_inv = self_inverse_residual(spec, s).max_residual
    r_semi = semigroup_residual(family.compounding(params), uv_grid, s).max_residual
    validity = validate_pgf(spec, n_max=PENALTY_HORIZON, tol=COEF_EPS)
    parts = ResidualBreakdown(float(r_inv), float(r_semi), validity.negative_mass)
    return parts.total, parts


# -- search -----------------------------------------------------------------

@dataclass
class StartResult:
    start: list
    params: list
    residual: float
    converged: bool
    n_iter: int
    message: str


@dataclass
class ExploreResult:
    family: FamilyHandle
    best_params: list
    joint_residual: float
    residual_breakdown: ResidualBreakdown
    trace: list  # (start index, params, residual)
    starts: list
    converged: bool
    locus_distance: float
    recheck_residual: float
    seed: int
    label: str = ""

    @property
    def best(self) -> dict:
        return dict(zip(self.family.param_names, self.best_params))

    def to_dict(self) -> dict:
        return {
            "family": self.family.to_dict(),
            "best_params": dict(zip(self.family.param_names, self.best_params)),
            "joint_residual": self.joint_residual,
            "residual_breakdown": self.residual_breakdown._asdict(),
            "locus_distance": self.locus_distance,
            "recheck_residual_dense_grid": self.recheck_residual,
            "converged": self.converged,
            "n_converged_starts": sum(s.converged for s in self.starts),
            "seed": self.seed,
            "label": self.label,
            "starts": [s.__dict__ for s in self.starts],
            "trace": [{"start": i, "params": p, "residual": r} for i, p, r in self.trace],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["start", *self.family.param_names, "residual"])
        for i, p, r in self.trace:
            w.writerow([i, *(repr(float(x)) for x in p), repr(float(r))])
        return buf.getvalue()


def _starts(family: FamilyHandle, n: int, seed: int) -> np.ndarray:
    lo, hi = family.lower, family.upper
    unit = qmc.LatinHypercube(d=len(lo), seed=seed).random(n)
    return lo + unit * (hi - lo)


def explore(family: FamilyHandle, n_starts: int = DEFAULT_STARTS, seed: int = 0,
            max_iter: int = DEFAULT_MAX_ITER, fatol: float = DEFAULT_FATOL,
            xatol: float = DEFAULT_XATOL, s_grid=None,
            uv_grid: Sequence[tuple[float, float]] = DEFAULT_UV_GRID) -> ExploreResult:
    """Multi-start bounded Nelder-Mead minimisation of :func:`joint_residual`.

    Starts are a seeded Latin hypercube over the box. The reported best is
    taken over converged starts (all starts if none converged), ties broken
    by lexicographic parameter order.
    """
    if n_starts < 1:
        raise DomainError("need at least one start")
    s = chebyshev_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    cache: dict = {}

    def fun(x):
        x = np.clip(np.asarray(x, dtype=float), family.lower, family.upper)
        key = tuple(x)
        if key not in cache:
            cache[key] = joint_residual(family, x, s, uv_grid)[0]
        return cache[key]

    trace, starts = [], []
    for i, x0 in enumerate(_starts(family, n_starts, seed)):
        cache.clear()
        xs = []

        def record(z, xs=xs):
            xs.append(np.array(z, dtype=float))

        x_best, f_best, ok, nit, msg = _minimize_traced(fun, x0, family, max_iter, fatol,
                                                        xatol, record)
        starts.append(StartResult(x0.tolist(), x_best.tolist(), f_best, ok, nit, msg))
        trace.append((i, x0.tolist(), fun(x0)))
        trace.extend((i, x.tolist(), fun(x)) for x in xs)

    pool = [st for st in starts if st.converged] or starts
    best = min(pool, key=lambda st: (st.residual, st.params))
    total, parts = joint_residual(family, best.params, s, uv_grid)
    dense = chebyshev_grid(2 * s.size)
    recheck, _ = joint_residual(family, best.params, dense, uv_grid)
    return ExploreResult(
        family=family, best_params=best.params, joint_residual=total,
        residual_breakdown=parts, trace=trace, starts=starts,
        converged=any(st.converged for st in starts),
        locus_distance=family.locus_distance(best.params), recheck_residual=recheck,
        seed=seed, label=EVIDENCE_LABEL.format(family=family.name))


def _minimize_traced(fun, x0, family, max_iter, fatol, xatol, record):
    lo, hi = family.lower, family.upper
    free = hi != lo
    if not free.any():
        return np.array(x0, dtype=float), fun(x0), True, 0, "all parameters fixed"
    base = np.array(lo, dtype=float)

    def embed(z):
        x = base.copy()
        x[free] = z
        return x

    # A collapsed simplex can stall on a ridge; restart from the point it
    # reached until a restart stops improving or the iteration budget is spent.
    z = np.asarray(x0, dtype=float)[free]
    f_prev, used = math.inf, 0
    while True:
        res = minimize(lambda y: fun(embed(y)), z, method="Nelder-Mead",
                       bounds=list(zip(lo[free], hi[free])),
                       callback=lambda y: record(embed(y)),
                       options={"maxiter": max_iter - used, "fatol": fatol, "xatol": xatol})
        used += int(res.nit)
        z = res.x
        if not res.success or used >= max_iter or f_prev - res.fun <= fatol:
            break
        f_prev = float(res.fun)
    return embed(res.x), float(res.fun), bool(res.success), used, str(res.message)


def restricted_minimum(family: FamilyHandle, component: str = "involution",
                       n_starts: int = 8, seed: int = 0, s_grid=None,
                       uv_grid=DEFAULT_UV_GRID):
    """Minimum of one residual component over the family's box.

    Used to show separation: e.g. the involution residual of HarrisContinuous
    restricted to ``k >= 1.5`` stays away from zero. Returns ``(value, params)``.
    """
    idx = ResidualBreakdown._fields.index(component)
    s = chebyshev_grid() if s_grid is None else np.asarray(s_grid, dtype=float)

    def fun(x):
        x = np.clip(np.asarray(x, dtype=float), family.lower, family.upper)
        return joint_residual(family, x, s, uv_grid)[1][idx]

    best = (math.inf, None)
    for x0 in _starts(family, n_starts, seed):
        x, f, *_ = _minimize_traced(fun, x0, family, DEFAULT_MAX_ITER, DEFAULT_FATOL,
                                    DEFAULT_XATOL, lambda z: None)
        if f < best[0]:
            best = (f, x.tolist())
    return best

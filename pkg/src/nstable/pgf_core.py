"""Probability generating functions of positive-integer counts.

A :class:`PgfSpec` is an immutable description of one family member
``Q(s) = E[s**N]`` with ``N`` taking values in ``{1, 2, ...}``. Specs are
callable on real or complex arrays; :func:`eval_pgf` is the checked entry
point for real arguments in ``[0, 1]``.

Families
--------
Geometric(p)
    ``p s / (1 - (1 - p) s)``. Proper for ``0 < p <= 1``; ``p > 1`` is the
    formal member that represents the inverse of ``Geometric(1/p)``.
Harris(u, j)
    ``s / (u - (u - 1) s**j) ** (1/j)``. Proper for ``u >= 1`` and integer
    ``j >= 1``; ``0 < u < 1`` is formal.
Shaked(m)
    ``1 - (1 - s**m) ** (1/m)``, integer ``m >= 1``.
Mixture(alpha; A, B)
    ``alpha A(s) + (1 - alpha) B(s)``.
MobiusPerturbed(p, c1, c2)
    ``Geometric(p)(s) + (1 - p) s (1 - s) (c1 + c2 s)``; exploration only.
Composite(Q1, ..., Qn)
    ``Q1(Q2(...Qn(s)))``: children read left to right as a composition
    chain, so the last child is applied first.

Real-valued ``j`` (Harris) and ``m`` (Shaked) are accepted only with
``explorer=True``; those members are formal and must be checked with
:func:`validate_pgf` before being treated as laws.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from ._numerics import bisect_increasing
from .errors import CoefficientPrecisionWarning, DomainError

DEFAULT_INVERSION_TOL = 1e-12
DEFAULT_RADIUS = 0.9
COEF_EPS = 1e-7

__all__ = [
    "Family", "PgfSpec", "PgfFamily", "PmfEstimate", "PgfValidity",
    "eval_pgf", "invert_pgf", "compose_pgf", "extract_coefficients",
    "validate_pgf", "geometric_family", "harris_family", "shaked_family",
    "COEF_EPS",
]


class Family(str, Enum):
    GEOMETRIC = "Geometric"
    HARRIS = "Harris"
    SHAKED = "Shaked"
    MIXTURE = "Mixture"
    MOBIUS_PERTURBED = "MobiusPerturbed"
    COMPOSITE = "Composite"


_ARITY = {
    Family.GEOMETRIC: (1, 0),
    Family.HARRIS: (2, 0),
    Family.SHAKED: (1, 0),
    Family.MIXTURE: (1, 2),
    Family.MOBIUS_PERTURBED: (3, 0),
}


def _is_int(x: float) -> bool:
    return float(x).is_integer()


@dataclass(frozen=True)
class PgfSpec:
    family: Family
    params: tuple[float, ...] = ()
    children: tuple["PgfSpec", ...] = ()
    explorer: bool = False

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        object.__setattr__(self, "children", tuple(self.children))
        self._check_domain()

    # -- construction -------------------------------------------------------

    @classmethod
    def geometric(cls, p: float) -> PgfSpec:
        return cls(Family.GEOMETRIC, (p,))

    @classmethod
    def harris(cls, u: float, j: float, explorer: bool = False) -> PgfSpec:
        return cls(Family.HARRIS, (u, j), explorer=explorer)

    @classmethod
    def shaked(cls, m: float, explorer: bool = False) -> PgfSpec:
        return cls(Family.SHAKED, (m,), explorer=explorer)

    @classmethod
    def mixture(cls, alpha: float, first: PgfSpec, second: PgfSpec) -> PgfSpec:
        return cls(Family.MIXTURE, (alpha,), (first, second),
                   explorer=first.explorer or second.explorer)

    @classmethod
    def mobius_perturbed(cls, p: float, c1: float, c2: float) -> PgfSpec:
        return cls(Family.MOBIUS_PERTURBED, (p, c1, c2), explorer=True)

    @classmethod
    def composite(cls, *children: PgfSpec) -> PgfSpec:
        return cls(Family.COMPOSITE, (), children,
                   explorer=any(c.explorer for c in children))

    def _check_domain(self):
        fam, prm = self.family, self.params
        if fam is Family.COMPOSITE:
            if prm or not self.children:
                raise DomainError("Composite takes no params and at least one child")
            return
        n_params, n_children = _ARITY[fam]
        if len(prm) != n_params or len(self.children) != n_children:
            raise DomainError(
                f"{fam.value} takes {n_params} params and {n_children} children, "
                f"got {len(prm)} and {len(self.children)}")
        if not all(math.isfinite(p) for p in prm):
            raise DomainError(f"{fam.value} params must be finite, got {prm}")
        if fam is Family.GEOMETRIC:
            if prm[0] <= 0:
                raise DomainError(f"Geometric needs p > 0, got {prm[0]}")
        elif fam is Family.HARRIS:
            u, j = prm
            if u <= 0:
                raise DomainError(f"Harris needs u > 0, got {u}")
            if self.explorer:
                if j <= 0:
                    raise DomainError(f"Harris shape must be > 0, got {j}")
            elif not (_is_int(j) and j >= 1):
                raise DomainError(f"Harris needs integer j >= 1 (or explorer mode), got {j}")
        elif fam is Family.SHAKED:
            m = prm[0]
            if self.explorer:
                if m <= 0:
                    raise DomainError(f"Shaked shape must be > 0, got {m}")
            elif not (_is_int(m) and m >= 1):
                raise DomainError(f"Shaked needs integer m >= 1 (or explorer mode), got {m}")
        elif fam is Family.MIXTURE:
            if not 0.0 <= prm[0] <= 1.0:
                raise DomainError(f"Mixture weight must lie in [0, 1], got {prm[0]}")
        elif fam is Family.MOBIUS_PERTURBED:
            p, c1, c2 = prm
            if p <= 0:
                raise DomainError(f"MobiusPerturbed needs p > 0, got {p}")
            if abs(c1) > 0.5 or abs(c2) > 0.5:
                raise DomainError(f"perturbation coefficients must satisfy |c| <= 0.5, got {c1}, {c2}")

    @property
    def formal(self) -> bool:
        """True when the closed form exists but need not be a proper PGF."""
        fam, prm = self.family, self.params
        if fam is Family.GEOMETRIC:
            return prm[0] > 1
        if fam is Family.HARRIS:
            return prm[0] < 1 or not _is_int(prm[1])
        if fam is Family.SHAKED:
            return not (_is_int(prm[0]) and prm[0] >= 1)
        if fam is Family.MOBIUS_PERTURBED:
            return True
        return any(c.formal for c in self.children)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, s):
        """Evaluate the closed form; accepts real or complex arrays, unchecked."""
        s = np.asarray(s)
        fam, prm = self.family, self.params
        with np.errstate(divide="ignore", invalid="ignore"):
            if fam is Family.GEOMETRIC:
                p = prm[0]
                return p * s / (1.0 - (1.0 - p) * s)
            if fam is Family.HARRIS:
                u, j = prm
                j = int(j) if _is_int(j) else j
                return s / (u - (u - 1.0) * s ** j) ** (1.0 / j)
            if fam is Family.SHAKED:
                m = prm[0]
                m = int(m) if _is_int(m) else m
                if np.iscomplexobj(s):
                    return -np.expm1(np.log1p(-(s ** m)) / m)
                # 1 - s**m without cancellation near s = 1 (s - 1 is exact there)
                tail = -np.expm1(m * np.log1p(s - 1.0))
                return -np.expm1(np.log(tail) / m)
            if fam is Family.MIXTURE:
                a = prm[0]
                first, second = self.children
                return a * first(s) + (1.0 - a) * second(s)
            if fam is Family.MOBIUS_PERTURBED:
                p, c1, c2 = prm
                geo = p * s / (1.0 - (1.0 - p) * s)
                return geo + (1.0 - p) * s * (1.0 - s) * (c1 + c2 * s)
            out = s
            for child in reversed(self.children):
                out = child(out)
            return out

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        d = {"family": self.family.value, "params": list(self.params),
             "children": [c.to_dict() for c in self.children]}
        if self.explorer:
            d["explorer"] = True
        return d

    @classmethod
    def from_dict(cls, d: dict) -> PgfSpec:
        if not isinstance(d, dict) or "family" not in d:
            raise DomainError(f"PGF spec must be an object with a 'family' field, got {d!r}")
        try:
            family = Family(d["family"])
        except ValueError:
            raise DomainError(f"unknown PGF family {d['family']!r}") from None
        children = tuple(cls.from_dict(c) for c in d.get("children", []))
        explorer = bool(d.get("explorer", False)) or any(c.explorer for c in children)
        params = d.get("params", [])
        if not isinstance(params, list):
            raise DomainError("'params' must be a list of numbers")
        return cls(family, tuple(params), children, explorer=explorer)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> PgfSpec:
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        inner = ", ".join(f"{p:g}" for p in self.params)
        if self.children:
            inner = ", ".join(filter(None, [inner] + [repr(c) for c in self.children]))
        return f"{self.family.value}({inner})"


@dataclass(frozen=True)
class PgfFamily:
    """A one-parameter family ``u -> Q_u`` used by the functional checks."""

    name: str
    build: Callable[[float], PgfSpec]

    def __call__(self, u: float) -> PgfSpec:
        return self.build(u)


def geometric_family() -> PgfFamily:
    return PgfFamily("Geometric", PgfSpec.geometric)


def harris_family(j: float, explorer: bool = False) -> PgfFamily:
    return PgfFamily(f"Harris(j={j:g})", lambda u: PgfSpec.harris(u, j, explorer=explorer))


def shaked_family(explorer: bool = True) -> PgfFamily:
    return PgfFamily("Shaked", lambda m: PgfSpec.shaked(m, explorer=explorer))


def _as_unit_interval(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return arr


def _scalar_or_array(arr: np.ndarray):
    return float(arr) if np.ndim(arr) == 0 else arr


def eval_pgf(spec: PgfSpec, s):
    """Evaluate ``Q(s)`` for real ``s`` in ``[0, 1]`` (scalar or array)."""
    s = _as_unit_interval(s, "s")
    return _scalar_or_array(np.asarray(spec(s), dtype=float))


def _closed_inverse(spec: PgfSpec) -> Callable | None:
    fam, prm = spec.family, spec.params
    if fam is Family.GEOMETRIC:
        return PgfSpec.geometric(1.0 / prm[0])
    if fam is Family.HARRIS:
        return PgfSpec.harris(1.0 / prm[0], prm[1], explorer=spec.explorer)
    if fam is Family.SHAKED:
        m = prm[0]

        def shaked_inverse(t):
            t = np.asarray(t)
            with np.errstate(divide="ignore"):
                return (-np.expm1(m * np.log1p(-t))) ** (1.0 / m)
        return shaked_inverse
    if fam is Family.MOBIUS_PERTURBED and prm[1] == 0.0 and prm[2] == 0.0:
        return PgfSpec.geometric(1.0 / prm[0])
    if fam is Family.COMPOSITE:
        inverses = [_closed_inverse(c) for c in spec.children]
        if any(inv is None for inv in inverses):
            return None

        def composite_inverse(t):
            for inv in inverses:
                t = inv(t)
            return t
        return composite_inverse
    return None


def invert_pgf(spec: PgfSpec, t, tol: float = DEFAULT_INVERSION_TOL, method: str = "auto"):
    """Solve ``Q(s) = t`` on ``[0, 1]``.

    ``method="auto"`` uses the closed-form inverse when the family has one
    (Geometric, Harris, Shaked and compositions of those) and bisection
    otherwise; ``method="bisect"`` forces bisection.

    Raises
    ------
    ConvergenceError
        If bisection cannot reach ``|Q(s) - t| <= tol``, which signals a
        non-monotone or otherwise invalid spec.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    t = _as_unit_interval(t, "t")
    inverse = _closed_inverse(spec) if method == "auto" else None
    if method not in ("auto", "bisect"):
        raise DomainError(f"unknown inversion method {method!r}")
    if inverse is not None:
        s = np.asarray(inverse(t), dtype=float)
    else:
        s = bisect_increasing(lambda x: np.asarray(spec(x), dtype=float), t, 0.0, 1.0,
                              tol=tol, ftol=tol)
    return _scalar_or_array(np.clip(s, 0.0, 1.0))


def compose_pgf(outer: PgfSpec, inner: PgfSpec) -> PgfSpec:
    """PGF of the compound ``outer(inner(s))``.

    Two geometric laws, or two Harris laws with the same shape, compose back
    into their own family; anything else becomes a Composite.
    """
    if outer.family is Family.GEOMETRIC and inner.family is Family.GEOMETRIC:
        return PgfSpec.geometric(outer.params[0] * inner.params[0])
    if (outer.family is Family.HARRIS and inner.family is Family.HARRIS
            and outer.params[1] == inner.params[1]):
        return PgfSpec.harris(outer.params[0] * inner.params[0], outer.params[1],
                              explorer=outer.explorer or inner.explorer)
    return PgfSpec.composite(outer, inner)


@dataclass(frozen=True)
class PmfEstimate:
    """Coefficients ``P(N = n)`` for ``n = 1..n_max`` plus unaccounted mass."""

    pmf: np.ndarray
    tail_mass: float
    radius: float
    n_points: int
    p0: float = 0.0

    @property
    def n_max(self) -> int:
        return len(self.pmf)


def _default_points(n_max: int) -> int:
    return 1 << math.ceil(math.log2(8 * n_max))


def extract_coefficients(spec: PgfSpec, n_max: int, radius: float = DEFAULT_RADIUS,
                         n_points: int | None = None, warn: bool = True) -> PmfEstimate:
    """Power-series coefficients of ``Q`` by trapezoidal contour quadrature.

    Evaluates ``Q`` at ``n_points`` equispaced points on the circle
    ``|s| = radius``; the trapezoidal rule for the Cauchy coefficient
    integral is exactly a discrete Fourier transform of those samples.
    Aliasing error is of order ``P(N = n + n_points) * radius**n_points`` and
    roundoff is amplified by ``radius**-n``.
    """
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    if not 0.0 < radius < 1.0:
        raise DomainError("radius must lie in (0, 1)")
    if n_points is None:
        n_points = _default_points(n_max)
    if n_points < 4 * n_max:
        raise DomainError("n_points must be at least 4 * n_max")
    z = radius * np.exp(2j * np.pi * np.arange(n_points) / n_points)
    values = np.asarray(spec(z), dtype=complex)
    coefs = np.fft.fft(values)[: n_max + 1].real / n_points
    coefs /= radius ** np.arange(n_max + 1)
    pmf = coefs[1:]
    if warn and pmf.min() < -COEF_EPS:
        n = int(np.argmin(pmf)) + 1
        warnings.warn(f"coefficient of s^{n} is {pmf.min():.3e} for {spec!r}",
                      CoefficientPrecisionWarning, stacklevel=2)
    return PmfEstimate(pmf=pmf, tail_mass=float(1.0 - pmf.sum() - coefs[0]),
                       radius=radius, n_points=n_points, p0=float(coefs[0]))


@dataclass(frozen=True)
class PgfValidity:
    q0: float
    q1: float
    zero_ok: bool
    one_ok: bool
    monotone: bool
    nonnegative: bool
    min_coefficient: float
    negative_mass: float
    tail_mass: float

    @property
    def valid(self) -> bool:
        return self.zero_ok and self.one_ok and self.monotone and self.nonnegative

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["valid"] = self.valid
        return d


def validate_pgf(spec: PgfSpec, n_max: int = 64, tol: float = COEF_EPS,
                 grid_points: int = 201, radius: float = DEFAULT_RADIUS) -> PgfValidity:
    """Numerical evidence that ``spec`` is a proper PGF on ``{1, 2, ...}``.

    Never raises for an invalid spec; invalidity is reported. ``negative_mass``
    sums the magnitudes of coefficients below ``-tol``.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    grid = np.linspace(0.0, 1.0, grid_points)
    vals = np.asarray(spec(grid), dtype=float)
    est = extract_coefficients(spec, n_max, radius=radius, warn=False)
    neg = est.pmf[est.pmf < -tol]
    return PgfValidity(
        q0=float(vals[0]), q1=float(vals[-1]),
        zero_ok=bool(abs(vals[0]) <= tol), one_ok=bool(abs(vals[-1] - 1.0) <= tol),
        monotone=bool(np.all(np.isfinite(vals)) and np.all(np.diff(vals) > 0)),
        nonnegative=bool(neg.size == 0),
        min_coefficient=float(est.pmf.min()),
        negative_mass=float(np.abs(neg).sum()),
        tail_mass=est.tail_mass,
    )


"""Distribution functions on the real line and their PGF transforms.

Every distribution exposes ``cdf``, ``sf`` (survival), ``quantile`` and
``sample``, all vectorised over numpy arrays. The transforms are

``PgfMaxTransform(Q, F)``
    law of ``max(X_1, ..., X_N)``: cdf ``Q(F(x))``.
``PgfMinTransform(Q, F)``
    law of ``min(X_1, ..., X_N)``: survival ``Q(1 - F(x))``.

The Marshall-Olkin and Harris-extended families are special cases of these
with a geometric or Harris ``Q``.
"""
from __future__ import annotations

import csv
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._numerics import bisect_increasing
from .errors import DomainError
from .pgf_core import PgfSpec, invert_pgf

RNG_ALGORITHM = "numpy.random.PCG64"
DEFAULT_QUANTILE_TOL = 1e-12

__all__ = [
    "AffineMap", "Distribution", "ParetoIII", "Exponential", "Uniform01",
    "PgfMaxTransform", "PgfMinTransform", "MOExtended", "HarrisMinExtended",
    "HarrisMaxExtended", "Empirical", "cdf", "survival", "quantile", "sample",
    "dist_from_dict", "make_rng", "RNG_ALGORITHM",
]


def make_rng(seed) -> np.random.Generator:
    """Seeded generator; accepts an int, a SeedSequence or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class AffineMap:
    """``x -> a + b x`` with ``b > 0``."""

    a: float
    b: float

    def __post_init__(self):
        if not self.b > 0:
            raise DomainError(f"affine scale must be positive, got {self.b}")

    def __call__(self, x):
        return self.a + self.b * np.asarray(x, dtype=float)

    def inverse(self) -> AffineMap:
        return AffineMap(-self.a / self.b, 1.0 / self.b)


def _out(arr):
    arr = np.asarray(arr, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


class Distribution(ABC):
    """A continuous (or empirical) law given by its distribution function."""

    kind: str = ""

    @abstractmethod
    def cdf(self, x): ...

    def sf(self, x):
        return _out(1.0 - np.asarray(self.cdf(x), dtype=float))

    def quantile(self, q, tol: float = DEFAULT_QUANTILE_TOL):
        """Generic quantile: bisection on the cdf after bracket doubling."""
        q = _check_levels(q)
        lo = np.zeros_like(q)
        hi = np.ones_like(q)
        for _ in range(1100):
            low = np.asarray(self.cdf(lo)) > q
            high = np.asarray(self.cdf(hi)) < q
            if not (low.any() or high.any()):
                break
            width = hi - lo
            lo = np.where(low, lo - 2.0 * width, lo)
            hi = np.where(high, hi + 2.0 * width, hi)
        return _out(bisect_increasing(lambda x: np.asarray(self.cdf(x), dtype=float),
                                      q, lo, hi, tol=tol))

    def sample(self, n: int, seed=0) -> np.ndarray:
        """Inverse-transform sample of size ``n``; deterministic given the seed."""
        if n < 1:
            raise DomainError("sample size must be >= 1")
        u = make_rng(seed).random(n)
        return np.asarray(self.quantile(u), dtype=float)

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": list(self._params())}

    def _params(self) -> tuple:
        return ()

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def __eq__(self, other):
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(json.dumps(self.to_dict(), sort_keys=True))

    def __repr__(self):
        return f"{type(self).__name__}({', '.join(f'{v:g}' for v in self._params())})"


def _check_levels(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if np.any(~np.isfinite(q)) or np.any(q < 0) or np.any(q > 1):
        raise DomainError("quantile levels must lie in [0, 1]")
    return q


class ParetoIII(Distribution):
    """Log-logistic law on ``[0, inf)`` with survival ``1 / (1 + x**alpha)``."""

    kind = "ParetoIII"

    def __init__(self, alpha: float):
        if not alpha > 0:
            raise DomainError(f"ParetoIII needs alpha > 0, got {alpha}")
        self.alpha = float(alpha)

    def _params(self):
        return (self.alpha,)

    def sf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return _out(1.0 / (1.0 + x ** self.alpha))

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        xa = x ** self.alpha
        with np.errstate(invalid="ignore"):
            return _out(np.where(np.isinf(xa), 1.0, xa / (1.0 + xa)))

    def quantile(self, q, tol=DEFAULT_QUANTILE_TOL):
        q = _check_levels(q)
        with np.errstate(divide="ignore"):
            return _out((q / (1.0 - q)) ** (1.0 / self.alpha))


class Exponential(Distribution):
    kind = "Exponential"

    def __init__(self, rate: float = 1.0):
        if not rate > 0:
            raise DomainError(f"Exponential needs rate > 0, got {rate}")
        self.rate = float(rate)

    def _params(self):
        return (self.rate,)

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return _out(-np.expm1(-self.rate * x))

    def sf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return _out(np.exp(-self.rate * x))

    def quantile(self, q, tol=DEFAULT_QUANTILE_TOL):
        q = _check_levels(q)
        with np.errstate(divide="ignore"):
            return _out(-np.log1p(-q) / self.rate)


class Uniform01(Distribution):
    kind = "Uniform01"

    def cdf(self, x):
        return _out(np.clip(np.asarray(x, dtype=float), 0.0, 1.0))

    def quantile(self, q, tol=DEFAULT_QUANTILE_TOL):
        return _out(_check_levels(q))


class PgfMaxTransform(Distribution):
    """Law of the maximum of ``N`` iid draws from ``base``, ``N ~ pgf``."""

    kind = "PgfMaxTransform"

    def __init__(self, pgf: PgfSpec, base: Distribution):
        self.pgf = pgf
        self.base = base

    def cdf(self, x):
        return _out(self.pgf(np.asarray(self.base.cdf(x), dtype=float)))

    def quantile(self, q, tol=DEFAULT_QUANTILE_TOL):
        q = _check_levels(q)
        return self.base.quantile(invert_pgf(self.pgf, q, tol=tol), tol=tol)

    def to_dict(self):
        return {"kind": self.kind, "pgf": self.pgf.to_dict(), "base": self.base.to_dict()}

    def __repr__(self):
        return f"{type(self).__name__}({self.pgf!r}, {self.base!r})"


class PgfMinTransform(Distribution):
    """Law of the minimum of ``N`` iid draws from ``base``, ``N ~ pgf``."""

    kind = "PgfMinTransform"

    def __init__(self, pgf: PgfSpec, base: Distribution):
        self.pgf = pgf
        self.base = base

    def sf(self, x):
        return _out(self.pgf(np.asarray(self.base.sf(x), dtype=float)))

    def cdf(self, x):
        return _out(1.0 - np.asarray(self.sf(x), dtype=float))

    def quantile(self, q, tol=DEFAULT_QUANTILE_TOL):
        q = _check_levels(q)
        level = 1.0 - np.asarray(invert_pgf(self.pgf, 1.0 - q, tol=tol), dtype=float)
        return self.base.quantile(level, tol=tol)

    def to_dict(self):
        return {"kind": self.kind, "pgf": self.pgf.to_dict(), "base": self.base.to_dict()}

    def __repr__(self):
        return f"{type(self).__name__}({self.pgf!r}, {self.base!r})"


class MOExtended(PgfMinTransform):
    """Marshall-Olkin extension: survival ``a S / (1 - (1 - a) S)``.

    This is the geometric min-transform with parameter ``a`` (a formal
    geometric member when ``a > 1``).
    """

    kind = "MOExtended"

    def __init__(self, base: Distribution, a: float):
        if not a > 0:
            raise DomainError(f"Marshall-Olkin parameter must be > 0, got {a}")
        self.a = float(a)
        super().__init__(PgfSpec.geometric(a), base)

    def to_dict(self):
        return {"kind": self.kind, "params": [self.a], "base": self.base.to_dict()}

    def __repr__(self):
        return f"MOExtended({self.base!r}, a={self.a:g})"


def _harris_args(u, j):
    if not u > 1:
        raise DomainError(f"Harris-extended families need u > 1, got {u}")
    if not (float(j).is_integer() and j >= 1):
        raise DomainError(f"Harris-extended families need integer j >= 1, got {j}")
    return float(u), int(j)


class HarrisMinExtended(PgfMinTransform):
    """Survival ``S / (u - (u - 1) S**j) ** (1/j)`` with ``S`` the base survival."""

    kind = "HarrisMinExtended"

    def __init__(self, base: Distribution, u: float, j: int):
        self.u, self.j = _harris_args(u, j)
        super().__init__(PgfSpec.harris(self.u, self.j), base)

    def to_dict(self):
        return {"kind": self.kind, "params": [self.u, self.j], "base": self.base.to_dict()}

    def __repr__(self):
        return f"HarrisMinExtended({self.base!r}, u={self.u:g}, j={self.j})"


class HarrisMaxExtended(PgfMaxTransform):
    """Cdf ``F / (u - (u - 1) F**j) ** (1/j)`` with ``F`` the base cdf."""

    kind = "HarrisMaxExtended"

    def __init__(self, base: Distribution, u: float, j: int):
        self.u, self.j = _harris_args(u, j)
        super().__init__(PgfSpec.harris(self.u, self.j), base)

    def to_dict(self):
        return {"kind": self.kind, "params": [self.u, self.j], "base": self.base.to_dict()}

    def __repr__(self):
        return f"HarrisMaxExtended({self.base!r}, u={self.u:g}, j={self.j})"


class Empirical(Distribution):
    """Right-continuous step distribution of a finite sample."""

    kind = "Empirical"

    def __init__(self, samples):
        x = np.sort(np.asarray(samples, dtype=float).ravel())
        if x.size == 0 or np.any(np.isnan(x)):
            raise DomainError("empirical distribution needs a nonempty sample without NaN")
        self.samples = x
        self.source: str | None = None

    @property
    def n(self) -> int:
        return self.samples.size

    def cdf(self, x):
        idx = np.searchsorted(self.samples, np.asarray(x, dtype=float), side="right")
        return _out(idx / self.n)

    def quantile(self, q, tol=DEFAULT_QUANTILE_TOL):
        q = _check_levels(q)
        idx = np.clip(np.ceil(q * self.n).astype(int) - 1, 0, self.n - 1)
        return _out(self.samples[idx])

    @classmethod
    def from_csv(cls, path) -> Empirical:
        values, first = [], True
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or not row[0].strip():
                    continue
                try:
                    values.append(float(row[0]))
                except ValueError:
                    if not first:
                        raise DomainError(f"non-numeric sample {row[0]!r} in {path}") from None
                first = False
        emp = cls(values)
        emp.source = str(path)
        return emp

    def to_csv(self, path, header: str = "x"):
        with open(path, "w", newline="") as fh:
            fh.write(header + "\n")
            for v in self.samples:
                fh.write(f"{float(v)!r}\n")

    def to_dict(self):
        if self.source is not None:
            return {"kind": self.kind, "path": self.source}
        return {"kind": self.kind, "samples": self.samples.tolist()}

    def __repr__(self):
        return f"Empirical(n={self.n})"


_SIMPLE = {"ParetoIII": ParetoIII, "Exponential": Exponential, "Uniform01": Uniform01}


def dist_from_dict(d: dict, base_dir: str | Path | None = None) -> Distribution:
    """Inverse of ``Distribution.to_dict``."""
    if not isinstance(d, dict) or "kind" not in d:
        raise DomainError(f"distribution spec must be an object with a 'kind' field, got {d!r}")
    kind = d["kind"]
    params = d.get("params", [])
    try:
        if kind in _SIMPLE:
            return _SIMPLE[kind](*params)
        if kind in ("PgfMaxTransform", "PgfMinTransform"):
            cls = PgfMaxTransform if kind == "PgfMaxTransform" else PgfMinTransform
            return cls(PgfSpec.from_dict(d["pgf"]), dist_from_dict(d["base"], base_dir))
        if kind == "MOExtended":
            return MOExtended(dist_from_dict(d["base"], base_dir), *params)
        if kind == "HarrisMinExtended":
            return HarrisMinExtended(dist_from_dict(d["base"], base_dir), *params)
        if kind == "HarrisMaxExtended":
            return HarrisMaxExtended(dist_from_dict(d["base"], base_dir), *params)
        if kind == "Empirical":
            if "samples" in d:
                return Empirical(d["samples"])
            path = Path(d["path"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return Empirical.from_csv(path)
    except (TypeError, KeyError) as exc:
        raise DomainError(f"malformed {kind} spec: {exc}") from None
    raise DomainError(f"unknown distribution kind {kind!r}")


def cdf(dist: Distribution, x):
    return dist.cdf(x)


def survival(dist: Distribution, x):
    return dist.sf(x)


def quantile(dist: Distribution, q, tol: float = DEFAULT_QUANTILE_TOL):
    return dist.quantile(q, tol=tol)


def sample(dist: Distribution, n: int, seed=0) -> np.ndarray:
    return dist.sample(n, seed)

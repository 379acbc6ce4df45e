"""Simulation oracle for N-extremes.

Draws ``N`` from a PGF, then the extreme of ``N`` iid draws from a base law,
without using the analytic transform. Agreement with the transform is
measured by the Kolmogorov-Smirnov distance.

Reproducibility: trials are cut into fixed blocks of ``BLOCK_SIZE``; block
``i`` uses the ``i``-th child of ``SeedSequence(seed)``. The result therefore
does not depend on how many workers process the blocks.
"""
from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import betaln, gammaln
from scipy.stats import kstwobign

from .distributions import RNG_ALGORITHM, Distribution, Empirical, dist_from_dict, make_rng
from .errors import CoefficientPrecisionWarning, DomainError, SamplerTruncationError
from .pgf_core import COEF_EPS, Family, PgfSpec, extract_coefficients

BLOCK_SIZE = 8192
DEFAULT_TRIALS = 100_000
DEFAULT_TRUNCATION = 512
TAIL_MASS_LIMIT = 1e-6
KS_TOLERANCE = 0.012
EXPLICIT_LIMIT = 1000
MAX_EXPLICIT_COUNT = 1_000_000
_MAX_COUNT = 2.0 ** 62


@dataclass(frozen=True)
class SimConfig:
    pgf: PgfSpec
    dist: Distribution
    kind: str = "Max"
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    n_truncation: int = DEFAULT_TRUNCATION
    ks_alpha: float = 0.01
    ks_tolerance: float = KS_TOLERANCE
    reduction: str = "auto"
    explicit_limit: int = EXPLICIT_LIMIT

    def __post_init__(self):
        kind = str(self.kind).capitalize()
        if kind not in ("Max", "Min"):
            raise DomainError(f"kind must be Max or Min, got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if int(self.trials) != self.trials or self.trials < 1:
            raise DomainError(f"trials must be a positive integer, got {self.trials}")
        if self.n_truncation < 1:
            raise DomainError("n_truncation must be >= 1")
        if not 0 < self.ks_alpha < 1:
            raise DomainError("ks_alpha must lie in (0, 1)")
        if self.reduction not in ("auto", "explicit"):
            raise DomainError(f"reduction must be 'auto' or 'explicit', got {self.reduction!r}")

    def to_dict(self) -> dict:
        return {
            "pgf": self.pgf.to_dict(), "dist": self.dist.to_dict(), "kind": self.kind,
            "trials": self.trials, "seed": self.seed, "n_truncation": self.n_truncation,
            "ks_alpha": self.ks_alpha, "ks_tolerance": self.ks_tolerance,
            "reduction": self.reduction, "explicit_limit": self.explicit_limit,
        }

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> SimConfig:
        if not isinstance(d, dict):
            raise DomainError("simulation config must be a JSON object")
        try:
            kw = {k: d[k] for k in ("kind", "trials", "seed", "n_truncation", "ks_alpha",
                                    "ks_tolerance", "reduction", "explicit_limit") if k in d}
            return cls(pgf=PgfSpec.from_dict(d["pgf"]),
                       dist=dist_from_dict(d["dist"], base_dir), **kw)
        except KeyError as exc:
            raise DomainError(f"simulation config is missing {exc}") from None


# -- count samplers ---------------------------------------------------------

def _geometric_counts(rng, p, n):
    if p == 1.0:
        return np.ones(n, dtype=np.int64)
    u = 1.0 - rng.random(n)  # (0, 1]
    return (np.floor(np.log(u) / math.log1p(-p)) + 1).astype(np.int64)


def _harris_counts(rng, u, j, n):
    # s (p / (1 - (1 - p) s**j)) ** (1/j) with p = 1/u: N = 1 + j M, M negative binomial
    if u == 1.0:
        return np.ones(n, dtype=np.int64)
    return 1 + j * rng.negative_binomial(1.0 / j, 1.0 / u, size=n).astype(np.int64)


def _sibuya_sf(k, gamma):
    """``P(K > k) = 1 / (k B(k, 1 - gamma))`` for the Sibuya law."""
    return np.exp(-np.log(k) - betaln(k, 1.0 - gamma))


def _sibuya_counts(rng, gamma, n):
    """Exact inverse-cdf draws of the Sibuya law with PGF ``1 - (1 - z)**gamma``."""
    u = 1.0 - rng.random(n)
    # P(K > k) < k**-gamma / Gamma(1 - gamma) (Gautschi), so this bounds the root
    hi = np.ceil((u * math.exp(gammaln(1.0 - gamma))) ** (-1.0 / gamma))
    hi = np.maximum(hi, 1.0)
    if np.any(hi > _MAX_COUNT):
        raise SamplerTruncationError("Sibuya draw exceeds the representable count range")
    lo = np.ones(n)
    while True:
        active = lo < hi
        if not active.any():
            break
        mid = np.floor(0.5 * (lo + hi))
        below = _sibuya_sf(np.maximum(mid, 1.0), gamma) <= u
        hi = np.where(active & below, mid, hi)
        lo = np.where(active & ~below, mid + 1.0, lo)
    return lo.astype(np.int64)


def _pmf_counts(rng, pgf, n, n_truncation):
    radius = max(0.9, 10.0 ** (-3.0 / n_truncation))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoefficientPrecisionWarning)
        est = extract_coefficients(pgf, n_truncation, radius=radius)
    if est.pmf.min() < -COEF_EPS:
        raise SamplerTruncationError(f"{pgf!r} has negative extracted coefficients; not a PGF")
    if est.tail_mass > TAIL_MASS_LIMIT:
        raise SamplerTruncationError(
            f"tail mass {est.tail_mass:.2e} beyond n={n_truncation} exceeds {TAIL_MASS_LIMIT:g}")
    pmf = np.clip(est.pmf, 0.0, None)
    cum = np.cumsum(pmf / pmf.sum())
    idx = np.searchsorted(cum, rng.random(n), side="right")
    return np.minimum(idx, n_truncation - 1).astype(np.int64) + 1


def _draw_counts(pgf: PgfSpec, rng, n: int, method: str, n_truncation: int) -> np.ndarray:
    fam, prm = pgf.family, pgf.params
    if method not in ("auto", "pmf"):
        raise DomainError(f"unknown count sampling method {method!r}")
    if pgf.formal:
        raise DomainError(f"{pgf!r} is a formal member, not a law; cannot sample")
    if method == "auto":
        if fam is Family.GEOMETRIC:
            return _geometric_counts(rng, prm[0], n)
        if fam is Family.HARRIS:
            return _harris_counts(rng, prm[0], int(prm[1]), n)
        if fam is Family.SHAKED:
            m = int(prm[0])
            if m == 1:
                return np.ones(n, dtype=np.int64)
            # 1 - (1 - s**m)**(1/m) is the Sibuya(1/m) PGF in z = s**m
            return m * _sibuya_counts(rng, 1.0 / m, n)
    return _pmf_counts(rng, pgf, n, n_truncation)


def sample_count(pgf: PgfSpec, seed, n: int, method: str = "auto",
                 n_truncation: int = DEFAULT_TRUNCATION) -> np.ndarray:
    """Draw ``n`` counts with PGF ``pgf``.

    ``method="auto"`` uses an exact sampler for Geometric (inverse cdf),
    Harris (``1 + j * NegativeBinomial(1/j, 1/u)``) and Shaked
    (``m * Sibuya(1/m)``); any other spec, or ``method="pmf"``, falls back to
    inverse-cdf sampling of the contour-extracted pmf truncated at
    ``n_truncation``.

    Raises
    ------
    SamplerTruncationError
        If the truncated pmf leaves more than 1e-6 of mass unaccounted for.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    return _draw_counts(pgf, make_rng(seed), n, method, n_truncation)


# -- extremes ---------------------------------------------------------------

def _block_extremes(config: SimConfig, seed_seq: np.random.SeedSequence, n: int) -> np.ndarray:
    rng = make_rng(seed_seq)
    counts = _draw_counts(config.pgf, rng, n, "auto", config.n_truncation)
    take_max = config.kind == "Max"
    if config.reduction == "explicit":
        if counts.max() > MAX_EXPLICIT_COUNT:
            raise SamplerTruncationError(
                f"count {counts.max()} exceeds the explicit-draw cap {MAX_EXPLICIT_COUNT}")
        small = np.ones(n, dtype=bool)
    else:
        small = counts <= config.explicit_limit
    out = np.empty(n)
    if small.any():
        c = counts[small]
        draws = np.asarray(config.dist.quantile(rng.random(int(c.sum()))), dtype=float)
        starts = np.concatenate(([0], np.cumsum(c)[:-1]))
        reduce = np.maximum if take_max else np.minimum
        out[small] = reduce.reduceat(draws, starts)
    if not small.all():
        # the max of N iid uniforms is U**(1/N); its min is 1 - U**(1/N)
        c = counts[~small].astype(float)
        log_u = np.log(1.0 - rng.random(c.size)) / c
        level = np.exp(log_u) if take_max else -np.expm1(log_u)
        out[~small] = config.dist.quantile(level)
    return out


def simulate_extreme(config: SimConfig, workers: int = 1) -> Empirical:
    """Empirical law of the N-max (or N-min) over ``config.trials`` trials.

    Trials with ``N <= config.explicit_limit`` take the extreme of ``N``
    explicit draws; larger ``N`` use the exact order-statistic identity above,
    which keeps heavy-tailed counts (such as Shaked's) tractable. Set
    ``reduction="explicit"`` to draw every value, with the count capped at
    ``MAX_EXPLICIT_COUNT``.
    """
    n_blocks = math.ceil(config.trials / BLOCK_SIZE)
    children = np.random.SeedSequence(config.seed).spawn(n_blocks)
    sizes = [min(BLOCK_SIZE, config.trials - i * BLOCK_SIZE) for i in range(n_blocks)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _block_extremes(config, *a), zip(children, sizes)))
    else:
        parts = [_block_extremes(config, ss, n) for ss, n in zip(children, sizes)]
    return Empirical(np.concatenate(parts))


def ks_distance(empirical: Empirical, theoretical: Distribution) -> float:
    """Two-sided sup distance between a step cdf and a continuous cdf."""
    if not isinstance(empirical, Empirical):
        raise DomainError("ks_distance needs an Empirical distribution as first argument")
    x = empirical.samples
    n = x.size
    F = np.asarray(theoretical.cdf(x), dtype=float)
    # at ties take the upper step on the right and the lower step on the left
    right = np.searchsorted(x, x, side="right") / n
    left = np.searchsorted(x, x, side="left") / n
    return float(max(np.max(right - F), np.max(F - left), 0.0))


def ks_critical_value(n: int, alpha: float) -> float:
    """Asymptotic ``1 - alpha`` quantile of the KS statistic, ``c(alpha) / sqrt(n)``."""
    return float(kstwobign.ppf(1.0 - alpha) / math.sqrt(n))


def analytic_transform(config: SimConfig) -> Distribution:
    from .extremes import nmax_transform, nmin_transform
    return (nmax_transform if config.kind == "Max" else nmin_transform)(config.pgf, config.dist)


@dataclass
class SimResult:
    config: SimConfig
    empirical: Empirical
    ks: float
    critical_value: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = self.ks <= self.config.ks_tolerance

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "rng": RNG_ALGORITHM,
            "ks_distance": self.ks,
            "ks_tolerance": self.config.ks_tolerance,
            "ks_critical_value": self.critical_value,
            "passed": self.passed,
            "n": self.empirical.n,
        }

    def write(self, out_dir, stem: str = "extremes") -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = out / f"{stem}.csv", out / f"{stem}.json"
        self.empirical.to_csv(csv_path)
        json_path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return {"samples": str(csv_path), "report": str(json_path)}


def run_simulation(config: SimConfig, workers: int = 1) -> SimResult:
    emp = simulate_extreme(config, workers=workers)
    ks = ks_distance(emp, analytic_transform(config))
    return SimResult(config, emp, ks, ks_critical_value(emp.n, config.ks_alpha))

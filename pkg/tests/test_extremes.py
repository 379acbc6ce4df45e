import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import LEVELS, affine_scan, exp_cdf, geo, pareto_cdf

from nstable import DegenerateFitError, PgfSpec, PreconditionError
from nstable.distributions import (
    AffineMap,
    Exponential,
    HarrisMinExtended,
    ParetoIII,
    PgfMaxTransform,
    Uniform01,
)
from nstable.extremes import (
    check_max_stability,
    check_min_stability,
    compose_extremes,
    fit_affine,
    max_min_equivalence,
    mo_structure_fit,
    nmax_transform,
    nmin_transform,
    proposition_check,
    transport_residual,
)

PARETO_CASES = [(p, a) for p in (0.25, 0.5, 0.75) for a in (1.0, 2.0, 3.0)]


@pytest.mark.parametrize("p,alpha", PARETO_CASES)
def test_geometric_pareto_max_stable(p, alpha):
    rep = check_max_stability(PgfSpec.geometric(p), ParetoIII(alpha))
    assert rep.passed
    assert abs(rep.fitted.a) <= 1e-6
    assert rep.fitted.b == pytest.approx(p ** (1 / alpha), abs=1e-6)
    assert rep.max_residual <= 1e-9


@pytest.mark.parametrize("p,alpha", PARETO_CASES)
def test_geometric_pareto_min_stable(p, alpha):
    # Q(S(b x)) = S(x) with S = 1 / (1 + x^alpha) is solved by b^alpha = p
    rep = check_min_stability(PgfSpec.geometric(p), ParetoIII(alpha))
    assert rep.passed
    assert abs(rep.fitted.a) <= 1e-6
    assert rep.fitted.b == pytest.approx(p ** (1 / alpha), abs=1e-6)
    assert rep.max_residual <= 1e-9


def test_pareto_max_map_by_hand():
    # p F / (1 - (1 - p) F) with F = x^a / (1 + x^a) equals F(p^(1/a) x)
    p, alpha = 0.5, 2.0
    x = np.linspace(0.1, 5, 50)
    F = pareto_cdf(alpha)
    assert np.max(np.abs(geo(p, F(x)) - F(p ** (1 / alpha) * x))) <= 1e-15


@pytest.mark.parametrize("p", [0.25, 0.5, 0.75])
def test_geometric_exponential_fails_max(p):
    rep = check_max_stability(PgfSpec.geometric(p), Exponential(1.0))
    assert not rep.passed
    x = nmax_transform(PgfSpec.geometric(p), Exponential(1.0)).quantile(LEVELS)
    best, _, _ = affine_scan(lambda t: geo(p, exp_cdf(t)), exp_cdf, x, (-3, 3), (0.05, 3))
    assert best >= 0.01
    assert rep.max_residual >= best - 1e-9


@pytest.mark.parametrize("p", [0.25, 0.5, 0.75])
def test_geometric_exponential_fails_min(p):
    rep = check_min_stability(PgfSpec.geometric(p), Exponential(1.0))
    assert not rep.passed
    x = Exponential(1.0).quantile(LEVELS)

    def h_cdf(t):
        return 1.0 - geo(p, 1.0 - exp_cdf(t))
    best, _, _ = affine_scan(exp_cdf, h_cdf, x, (-3, 3), (0.05, 3))
    assert best >= 0.01
    assert rep.max_residual >= best - 1e-9


def test_harris_pareto_fails():
    assert not check_max_stability(PgfSpec.harris(2, 2), ParetoIII(2)).passed
    assert not check_min_stability(PgfSpec.harris(2, 2), ParetoIII(2)).passed


def test_harris_extended_not_min_stable():
    # parameter-update closure does not make the law min-stable under the same pgf
    base = HarrisMinExtended(Uniform01(), 2, 2)
    assert not check_min_stability(PgfSpec.harris(2, 2), base).passed


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 0.9), st.floats(0.5, 4.0))
def test_max_min_agree_on_geometric(p, alpha):
    Q = PgfSpec.geometric(p)
    for F in (ParetoIII(alpha), Exponential(1.0)):
        assert max_min_equivalence(Q, F)


def test_equivalence_precondition():
    with pytest.raises(PreconditionError):
        max_min_equivalence(PgfSpec.harris(2, 2), ParetoIII(2))


@pytest.mark.parametrize("p,alpha", [(0.5, 2.0), (0.25, 1.0)])
def test_transport_of_max_map(p, alpha):
    rep = check_max_stability(PgfSpec.geometric(p), ParetoIII(alpha))
    assert transport_residual(PgfSpec.geometric(p), ParetoIII(alpha), rep.fitted) <= 1e-9
    off = AffineMap(rep.fitted.a, 1.1 * rep.fitted.b)
    assert transport_residual(PgfSpec.geometric(p), ParetoIII(alpha), off) > 1e-3


def test_fit_affine_recovers_known_map():
    F = Exponential(1.0)

    class Shifted(Exponential):
        def cdf(self, x):
            return F.cdf(0.3 + 2.0 * np.asarray(x))

        def quantile(self, q, tol=1e-12):
            return (F.quantile(q) - 0.3) / 2.0

    aff, resid = fit_affine(F, Shifted(1.0))
    assert aff.a == pytest.approx(0.3, abs=1e-10)
    assert aff.b == pytest.approx(2.0, abs=1e-10)
    assert resid <= 1e-12


def test_degenerate_fit():
    with pytest.raises(DegenerateFitError):
        fit_affine(Uniform01(), Uniform01(), x_grid=[0.5, 0.5, 0.5])
    rep = check_max_stability(PgfSpec.geometric(0.5), Uniform01(), x_grid=[0.5] * 5)
    assert not rep.passed and math.isinf(rep.max_residual)


@pytest.mark.parametrize("p", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("F", [Exponential(1.0), ParetoIII(2.0), Uniform01()], ids=repr)
def test_max_then_min_same_geometric_is_identity(p, F):
    G = compose_extremes(F, [("Max", PgfSpec.geometric(p)), ("Min", PgfSpec.geometric(p))])
    x = F.quantile(LEVELS)
    assert np.max(np.abs(G.cdf(x) - F.cdf(x))) <= 1e-10


def test_composition_marshall_olkin_form():
    F = Exponential(1.0)
    steps = [("Max", PgfSpec.geometric(0.5)), ("Min", PgfSpec.geometric(0.25))]
    G = compose_extremes(F, steps)
    # F survival 1/2 -> max step gives cdf 1/3 (survival 2/3) -> min step 1/3
    assert G.sf(math.log(2)) == pytest.approx(1 / 3, abs=1e-14)
    lam, resid, converged = mo_structure_fit(G, F)
    assert converged
    assert lam == pytest.approx(0.5, abs=1e-6)
    assert resid <= 1e-9
    lam_rev, resid_rev, _ = mo_structure_fit(compose_extremes(F, steps[::-1]), F)
    assert abs(lam_rev - lam) <= 1e-4
    assert resid_rev <= 1e-9


def test_mo_fit_of_single_max_step():
    # geometric max with p gives the MO survival form with lambda = 1/p
    F = ParetoIII(2.0)
    lam, resid, _ = mo_structure_fit(nmax_transform(PgfSpec.geometric(0.5), F), F)
    assert lam == pytest.approx(2.0, abs=1e-6)
    assert resid <= 1e-9


def test_compose_rejects_bad_steps():
    with pytest.raises(ValueError):
        compose_extremes(Uniform01(), [("median", PgfSpec.geometric(0.5))])
    with pytest.raises(ValueError):
        compose_extremes(Uniform01(), [])


UVJ = [(u, v, j) for u in (1.5, 2.0, 3.0) for v in (1.5, 2.0, 3.0) for j in (1, 2, 3)]


@pytest.mark.parametrize("kind", ["min", "max"])
@pytest.mark.parametrize("base", [Uniform01(), ParetoIII(2.0)], ids=repr)
def test_parameter_update(kind, base):
    assert max(proposition_check(kind, base, u, v=v, j=j) for u, v, j in UVJ) <= 1e-12


def test_parameter_update_witness():
    # survival 1/2 under Harris(6, 2): 0.5 / sqrt(6 - 5/4)
    lhs = nmin_transform(PgfSpec.harris(3, 2), HarrisMinExtended(Uniform01(), 2, 2)).sf(0.5)
    assert lhs == pytest.approx(0.5 / math.sqrt(4.75), abs=1e-12)
    assert lhs == pytest.approx(0.229416, abs=1e-6)


def test_report_dict():
    d = check_max_stability(PgfSpec.geometric(0.5), ParetoIII(2)).to_dict()
    assert d["kind"] == "NMax" and d["passed"]
    assert set(d) >= {"a", "b", "max_residual", "grid", "orientation"}
    assert isinstance(PgfMaxTransform(PgfSpec.geometric(0.5), Uniform01()).cdf(0.5), float)

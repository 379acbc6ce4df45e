import csv
import io
import json
import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nstable import PgfSpec
from nstable.functional_checks import (
    VIOLATION_THRESHOLD,
    Equation,
    default_s_grid,
    involution_residual,
    inverse_closure_fit,
    inverse_closure_residual,
    self_inverse_residual,
    semigroup_residual,
)
from nstable.pgf_core import geometric_family, harris_family, shaked_family


def test_default_grid():
    s = default_s_grid()
    assert s.size == 99
    assert s[0] == pytest.approx(0.01) and s[-1] == pytest.approx(0.99)


@pytest.mark.parametrize("p", [0.25, 0.5, 0.75])
def test_geometric_solves_involution(p):
    spec = PgfSpec.geometric(p)
    assert involution_residual(spec).max_residual <= 1e-12
    assert self_inverse_residual(spec).max_residual <= 1e-12


@pytest.mark.parametrize("m", [2, 3])
def test_shaked_solves_involution(m):
    spec = PgfSpec.shaked(m)
    assert involution_residual(spec).max_residual <= 1e-10
    assert self_inverse_residual(spec).max_residual <= 1e-10


def test_harris_involution_witness():
    # 1 - Q(1/2) = 1 - 0.5/sqrt(1.75); Q^{-1}(1/2) = sqrt(0.4)
    hand = abs(1 - 0.5 / math.sqrt(1.75) - math.sqrt(0.4))
    rep = involution_residual(PgfSpec.harris(2, 2))
    assert rep.residual_at(0.5) == pytest.approx(hand, abs=1e-12)
    assert 0.009 <= rep.residual_at(0.5) <= 0.012
    assert rep.max_residual >= VIOLATION_THRESHOLD


def test_shaked_semigroup_witness():
    # Q_2(Q_2(0.6)) = 1 - sqrt(0.96); Q_4(0.6) = 1 - (1 - 0.6^4)^(1/4)
    hand = abs(1 - math.sqrt(0.96) - (1 - (1 - 0.6 ** 4) ** 0.25))
    rep = semigroup_residual(shaked_family(), [(2, 2)], [0.6])
    assert rep.max_residual == pytest.approx(hand, abs=1e-12)
    assert 0.012 <= rep.max_residual <= 0.016


@pytest.mark.parametrize("j", [1, 2, 3])
def test_harris_semigroup_and_inverse_closure(j):
    fam = harris_family(j)
    vals = (1.5, 2.0, 3.0)
    assert semigroup_residual(fam, product(vals, vals)).max_residual <= 1e-12
    for u in vals:
        for form in ("inverse", "roundtrip"):
            assert inverse_closure_residual(fam, u, 1 / u, form=form).max_residual <= 1e-12


def test_geometric_semigroup_grid():
    vals = (0.3, 0.5, 0.7)
    assert semigroup_residual(geometric_family(), product(vals, vals)).max_residual <= 1e-12


@pytest.mark.parametrize("p", [0.25, 0.5, 0.75])
def test_inverse_closure_fit_recovers_reciprocal(p):
    lam, rep = inverse_closure_fit(geometric_family(), p)
    assert rep.meta["converged"]
    assert lam == pytest.approx(1 / p, rel=1e-6)
    assert rep.max_residual <= 1e-9


def test_shaked_inverse_closure_violated():
    lam, rep = inverse_closure_fit(shaked_family(), 2)
    assert rep.max_residual >= VIOLATION_THRESHOLD
    # an independent scan over lambda agrees with the search
    scan = [inverse_closure_residual(shaked_family(), 2, l).max_residual
            for l in np.exp(np.linspace(math.log(0.05), math.log(20), 2001))]
    assert min(scan) >= rep.max_residual - 1e-6


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_geometric_identities_hold_everywhere(p, q):
    assert self_inverse_residual(PgfSpec.geometric(p)).max_residual <= 1e-12
    assert semigroup_residual(geometric_family(), [(p, q)]).max_residual <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(1.05, 5.0), st.integers(1, 3))
def test_harris_inverse_is_formal_member(u, j):
    rep = inverse_closure_residual(harris_family(j), u, 1 / u, form="roundtrip")
    assert rep.max_residual <= 1e-12


def test_report_serialisation():
    rep = involution_residual(PgfSpec.harris(2, 2))
    d = json.loads(rep.to_json())
    assert d["equation"] == Equation.INVOLUTION.value
    assert d["max_residual"] == pytest.approx(rep.max_residual)
    assert d["argmax"] == [pytest.approx(rep.argmax)]
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert len(rows) == 1 + len(rep.grid)


def test_bad_grid_rejected():
    with pytest.raises(ValueError):
        involution_residual(PgfSpec.geometric(0.5), [0.0, 0.5])
    with pytest.raises(ValueError):
        semigroup_residual(geometric_family(), [])

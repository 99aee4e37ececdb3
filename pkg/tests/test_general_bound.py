import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edr.general_bound import (
    MUB_CLOSED_FORMS, FeasibleRegion, Variant, i_function, improved_mub_d_coefficient, in_feasible_region,
    infimum_bound, mub_bound, offdiag_upper_bound, psd_offdiag_bound, scan_infimum, symmetric_i,
)
from edr.measurement import BasisPair, ProjectiveBasis
from edr.metrics import joint_errors
from edr.mub import fourier_pair
from edr.operators import random_unitary
from edr.optimizer import random_povm
from edr.qubit import canonical_pair


def i_oracle(e, ep, t, tp, n, d=None):
    """Direct scalar evaluation of the feasibility function, one term at a time."""
    tt = math.sqrt(1 - t * t)
    ttp = math.sqrt(1 - tp * tp)
    if d is None:
        d = math.sqrt((n - 1) * (n - 2)) * tt * ttp
    total = 0.0
    total += (n - 2) * e
    total += 2 * math.sqrt(e)
    total += t * tp * ep
    total += tt * ttp * ep
    total += d * ep
    total += math.sqrt(n - 1) * t * tt * math.sqrt(ep)
    total += math.sqrt(n - 1) * tp * ttp * math.sqrt(ep)
    total -= t * tp
    return total


def diagonal_root_oracle(n, shifted=False):
    """Twice the squared positive root of the diagonal constraint, as a quadratic in sqrt(ε).

    With unbiased overlaps the constraint reads ``A x^2 + B x - 1/N`` with
    ``A = (N-1) + (N-1)(N-2)/N`` and ``B = 2 + 2(N-1)/N``; ``shifted`` lowers ``A``
    by ``1/N``, which reproduces the closed forms.
    """
    a = (n - 1) + (n - 1) * (n - 2) / n - (1 / n if shifted else 0)
    b = 2 + 2 * (n - 1) / n
    c = -1 / n
    x = (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)
    return 2 * x * x


def test_offdiagonal_bound_examples():
    assert psd_offdiag_bound(0.04, 0.04) == pytest.approx(0.04)
    assert psd_offdiag_bound(1, 0.04) == pytest.approx(0.2)
    assert psd_offdiag_bound(0, 0.7) == 0
    assert offdiag_upper_bound(0, 5) == 0
    assert offdiag_upper_bound(0.01, 3) == pytest.approx(0.21)
    assert offdiag_upper_bound(0.04, 2) == pytest.approx(0.4)
    assert improved_mub_d_coefficient(2) == 0
    assert improved_mub_d_coefficient(3) == pytest.approx(2 / 3)
    assert improved_mub_d_coefficient(5) == pytest.approx(12 / 5)
    with pytest.raises(ValueError):
        offdiag_upper_bound(1.5, 3)


def test_i_function_examples():
    assert i_function(0, 0, 0.3, 0.8, 4) == pytest.approx(-0.24)
    assert i_function(0.2, 0.3, 0.0, 0.6, 5) >= 0
    t = 1 / math.sqrt(3)
    assert i_function(0.01, 0.01, t, t, 3) == pytest.approx(i_oracle(0.01, 0.01, t, t, 3), abs=1e-15)
    with pytest.raises(ValueError):
        i_function(-0.1, 0, 0.5, 0.5, 3)
    with pytest.raises(ValueError):
        i_function(0.1, 0, 1.5, 0.5, 3)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.integers(2, 8), st.booleans())
def test_i_function_matches_oracle(e, ep, t, tp, n, improved):
    d = improved_mub_d_coefficient(n) if improved else None
    assert i_function(e, ep, t, tp, n, d) == pytest.approx(i_oracle(e, ep, t, tp, n, d), abs=1e-12)


@settings(max_examples=200)
@given(st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 0.5),
       st.sampled_from(list(Variant)))
def test_feasible_region_is_monotone(e, eb, de, deb, variant):
    region = FeasibleRegion.from_pair(fourier_pair(3), variant)
    if region.contains(e, eb):
        assert region.contains(e + de, eb + deb)


def test_region_examples():
    pair = fourier_pair(3)
    assert in_feasible_region(1, 1, pair)
    assert not in_feasible_region(0, 0, pair)
    c = ProjectiveBasis.computational(3)
    assert in_feasible_region(0, 0, BasisPair(c, c))
    root = mub_bound(3).numeric_root / 2
    region = FeasibleRegion.from_pair(pair, Variant.MUB_IMPROVED)
    assert not region.contains(root * (1 - 1e-6), root * (1 - 1e-6))
    assert region.contains(root * (1 + 1e-6), root * (1 + 1e-6))


def test_improved_variant_falls_back_for_biased_pairs(caplog):
    region = FeasibleRegion.from_pair(canonical_pair(0.3), Variant.MUB_IMPROVED)
    assert region.variant is Variant.GENERIC and region.d_coefficient is None
    assert "not mutually unbiased" in caplog.text


@pytest.mark.parametrize("variant", list(Variant))
def test_region_contains_achievable_points(variant):
    pair = fourier_pair(3)
    region = FeasibleRegion.from_pair(pair, variant)
    for seed in range(200):
        rep = joint_errors(random_povm(3, seed), pair, "calibration")
        assert region.contains(rep.epsilon, rep.epsilon_bar)


def test_mub_closed_forms_and_roots():
    assert mub_bound(3).closed_form == pytest.approx(0.0176105, abs=1e-7)
    assert mub_bound(5).closed_form == pytest.approx(0.0052152, abs=1e-7)
    for n in (3, 5):
        mb = mub_bound(n)
        assert mb.numeric_root == pytest.approx(diagonal_root_oracle(n), abs=1e-11)
        assert mb.closed_form == pytest.approx(diagonal_root_oracle(n, shifted=True), abs=1e-14)
        assert abs(mb.numeric_root - mb.closed_form) <= 0.05 * mb.closed_form
        assert symmetric_i(mb.numeric_root / 2, n) == pytest.approx(0, abs=1e-10)
    assert set(MUB_CLOSED_FORMS) == {3, 5}
    with pytest.raises(ValueError):
        mub_bound(4)


def test_infimum_examples():
    c = ProjectiveBasis.computational(3)
    assert infimum_bound(BasisPair(c, c), resolution=200) == 0.0
    qubit = infimum_bound(canonical_pair(np.pi / 4), resolution=400)
    assert 0 < qubit < 1 - math.sqrt(2) / 2
    sym = scan_infimum(fourier_pair(3), Variant.MUB_IMPROVED, symmetric=True)
    assert sym.certificate == pytest.approx(diagonal_root_oracle(3), abs=1e-9)


def test_scan_brackets_the_infimum():
    scan = scan_infimum(fourier_pair(3), Variant.MUB_IMPROVED, resolution=500)
    root = mub_bound(3).numeric_root
    assert scan.certificate <= root + 1e-12
    assert scan.estimate >= root - 1e-9
    assert root - scan.certificate <= 2 / 500
    e, eb = scan.argmin
    assert FeasibleRegion.from_pair(fourier_pair(3), Variant.MUB_IMPROVED).contains(e, eb)


def test_generic_bound_on_random_pair():
    rng = np.random.default_rng(0)
    pair = BasisPair(ProjectiveBasis.computational(3), ProjectiveBasis.from_columns(random_unitary(3, rng)))
    b = infimum_bound(pair, resolution=400)
    assert b >= 0
    for seed in range(50):
        assert joint_errors(random_povm(3, seed), pair, "calibration").total >= b - 1e-9

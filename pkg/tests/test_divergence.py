import math

import pytest

from probedrive.divergence import GridMismatch, LN2, jsd, kl_to_mixture
from probedrive.model import Belief, normalize


def test_kl_identical_is_zero():
    a = Belief((0.25, 0.25, 0.25, 0.25))
    assert kl_to_mixture(a, a) == pytest.approx(0.0, abs=1e-15)


def test_kl_reference_value():
    # 0.9*ln(1.8) + 0.1*ln(0.2) = 0.368064...
    a = (0.9, 0.1)
    b = (0.1, 0.9)
    expected = 0.9 * math.log(1.8) + 0.1 * math.log(0.2)
    assert kl_to_mixture(a, b) == pytest.approx(expected, abs=1e-15)
    assert kl_to_mixture(a, b) == pytest.approx(0.368064, abs=1e-6)


def test_kl_below_ln2():
    bel_a = normalize([1e-9, 1.0, 3.0, 1e-12])
    bel_b = normalize([2.0, 1e-9, 1.0, 1.0])
    assert kl_to_mixture(bel_a, bel_b) < LN2


def test_jsd_symmetric_case():
    assert jsd((0.9, 0.1), (0.1, 0.9)) == pytest.approx(0.368064, abs=1e-6)


def test_jsd_identical_zero():
    a = Belief((0.3, 0.3, 0.4))
    assert jsd(a, a) == 0.0


def test_jsd_approaches_ln2():
    eps = 1e-9
    a = (1.0 - eps, eps)
    b = (eps, 1.0 - eps)
    assert jsd(a, b) == pytest.approx(math.log(2.0), abs=1e-6)


def test_jsd_grid_mismatch():
    with pytest.raises(GridMismatch):
        jsd((0.5, 0.5), (0.3, 0.3, 0.4))


def test_jsd_accepts_beliefs_and_sequences():
    a = Belief((0.6, 0.4))
    assert jsd(a, (0.6, 0.4)) == 0.0

import numpy as np
import pytest

from percop.charges import (build_kernels, in_P_less, normalize, phi_table,
                            sigma_matrix, zero_charges)
from percop.walk import first_return_law


def test_gauge_and_flip():
    c = normalize([0.3, -0.1], [0.5], [0.2], [0.0])
    assert c.T == 2
    assert np.all(c.wPlus == 0)
    # h = mean(w+ - w-) = 0.1 - 0.5 < 0: orientation flipped
    assert c.flipped
    assert c.h == pytest.approx(0.4)
    c2 = normalize([0.5], [0.3, -0.1], [0.2], [0.0])
    assert not c2.flipped and c2.h == pytest.approx(0.4)
    # both orientations give the same gauged charges
    assert np.allclose(c.wMinus, c2.wMinus)


def test_gauge_sum_recovers_raw_log_weight():
    c = normalize([0.3, -0.1, 0.7], [0.5], [0.2], [0.1])
    N = 7
    raw_all_plus = sum([0.3, -0.1, 0.7][n % 3] for n in range(1, N + 1))
    if c.flipped:
        raw_all_plus = 0.5 * N
    assert c.gauge_sum(N) == pytest.approx(raw_all_plus)


def test_sigma_matrix_antisymmetric():
    c = normalize([0.3, -0.1, 0.7], [0.5, 0.2, 0.0], [0.2], [0.1])
    s = sigma_matrix(c)
    assert np.allclose(s, -s.T)


def test_zero_charges_rows_sum_to_one():
    law = first_return_law(0.3, 2 ** 14)
    for T in (1, 2, 3):
        ks = build_kernels(zero_charges(T), law)
        assert np.allclose(ks.B.sum(axis=1), 1.0, atol=1e-13)


def test_phi_table_shape():
    c = normalize([0.3, -0.1], [0.5], [0.2], [0.0])
    tab = phi_table(c, 10)
    assert tab.shape[-1] == 11


def test_P_less():
    law = first_return_law(0.3, 2 ** 14)
    c = normalize([0, 0], [1, -1], [-2], [0])
    assert in_P_less(c, 0.1)
    c = normalize([0], [0.5], [-2], [0])
    assert not in_P_less(c, 0.1)
    assert law.n_max == 2 ** 14


def test_invalid_input():
    with pytest.raises(ValueError):
        normalize([], [0], [0], [0])
    with pytest.raises(ValueError):
        normalize([np.nan], [0], [0], [0])

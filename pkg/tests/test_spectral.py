import math

import numpy as np
import pytest

from conftest import make_kernels, spec_of
from percop.charges import build_kernels, zero_charges
from percop.spectral import (CRITICAL, DELOCALIZED, LOCALIZED, classify,
                             free_energy, gamma_kernel, log_Zc_from_representation,
                             pf_eigen, spectral_radius)
from percop.partition import partition_table


def test_pf_eigen_simple():
    A = np.array([[2.0, 1.0], [1.0, 2.0]])
    res = pf_eigen(A)
    assert res.Z == pytest.approx(3.0, rel=1e-13)
    assert np.allclose(res.xi, [0.5, 0.5])


def test_classify_thresholds():
    assert classify(1.0 + 1e-8) == LOCALIZED
    assert classify(1.0 - 1e-8) == DELOCALIZED
    assert classify(1.0) == CRITICAL


def test_zero_charges_critical(law):
    for T in (1, 2):
        rep = free_energy(build_kernels(zero_charges(T), law))
        assert rep.regime == CRITICAL
        assert rep.F == 0.0
        assert rep.delta == pytest.approx(1.0, abs=1e-12)


def test_pinning_closed_form(law):
    # T = 1 pinning: delta = e^{w0}
    ks = make_kernels(spec_of([0], [0], [-1.0], [0]))
    rep = free_energy(ks)
    assert rep.delta == pytest.approx(math.exp(-1.0), rel=1e-12)
    assert rep.regime == DELOCALIZED


def test_localized_root(loc_spec):
    ks = make_kernels(loc_spec)
    rep = free_energy(ks)
    assert rep.regime == LOCALIZED
    assert abs(rep.ZatF - 1) <= 1e-12
    assert spectral_radius(ks, rep.F).Z == pytest.approx(1.0, abs=1e-12)
    assert spectral_radius(ks, rep.F + 0.01).Z < 1 < spectral_radius(ks, rep.F - 0.01).Z


def test_gamma_kernel_rows(loc_spec):
    ks = make_kernels(loc_spec)
    k = gamma_kernel(ks, free_energy(ks), n_cut=2 ** 12)
    assert np.allclose(k.row_sums(), 1.0, atol=1e-10)


def test_gamma_kernel_rejects_delocalized(deloc_spec):
    ks = make_kernels(deloc_spec)
    with pytest.raises(ValueError):
        gamma_kernel(ks)


@pytest.mark.parametrize("b", [0.0, 0.05])
def test_representation_identity(b):
    ks = make_kernels(spec_of([0.2, -0.4], [0.1], [0.3, -0.2], [0.1]), 2 ** 12)
    lz = partition_table(ks, 60, free=False).logZc[0]
    rhs = log_Zc_from_representation(ks, b, 60)
    assert np.allclose(rhs[1:], lz[1:], rtol=0, atol=1e-12)


def test_report_dict(loc_spec):
    d = free_energy(make_kernels(loc_spec)).to_dict()
    assert set(d) >= {"delta", "F", "rawF", "regime", "xi"}

import math
import warnings

import numpy as np
import pytest

from conftest import make_kernels, spec_of
from percop.charges import build_kernels, zero_charges
from percop.limits import (BoundaryDependenceWarning, asymptotic_constants,
                           decomposition_check, defective_kernel, gibbs_vectors,
                           limit_kernel, limits_report, renewal_limit,
                           renewal_mass, superposition_check)
from percop.spectral import free_energy


def test_pinning_constants(law):
    ks = make_kernels(spec_of([0], [0], [-1.0], [0]))
    ac = asymptotic_constants(ks)
    e = math.exp(-1)
    assert ac.LambdaC[0, 0] == pytest.approx(law.cK * e / (1 - e) ** 2, rel=1e-6)
    assert ac.LambdaF[0, 0] == pytest.approx(2 * law.cK / (1 - e), rel=1e-6)


def test_defective_rows_and_decomposition(deloc_spec):
    ks = make_kernels(deloc_spec)
    ac = asymptotic_constants(ks)
    gd = gibbs_vectors(ks, ac)
    for eta in range(ks.T):
        for a in ("free", "constrained"):
            k = defective_kernel(ks, ac, eta, a, n_cut=2 ** 12)
            assert k.defective
            assert np.allclose(k.row_sums(), 1.0, atol=1e-10)
            for cyl in ((), (1,), (2, 3), (1, 4, 6)):
                lhs, rhs = decomposition_check(ks, ac, gd, eta, a, cyl)
                assert lhs == pytest.approx(rhs, abs=1e-12)
            assert 0 <= gd.r[(eta, a)] <= 1


def test_superposition(deloc_spec):
    ks = make_kernels(deloc_spec)
    gd = gibbs_vectors(ks, asymptotic_constants(ks))
    for p in (0.1, 0.5, 0.9):
        lhs, rhs, r = superposition_check(ks, gd.vPlus, gd.vMinus, p, (1, 3))
        assert lhs == pytest.approx(rhs, abs=1e-14)


def test_report_warns_in_P_less(deloc_spec):
    ks = make_kernels(deloc_spec)
    with pytest.warns(BoundaryDependenceWarning):
        doc = limits_report(ks)
    assert doc["P_less"] and doc["warnings"]


def test_report_no_warning_outside_P_less():
    ks = make_kernels(spec_of([0], [0.5], [-2], [0]))
    with warnings.catch_warnings():
        warnings.simplefilter("error", BoundaryDependenceWarning)
        doc = limits_report(ks)
    assert not doc["P_less"]
    # h > 0: the minus phase carries no weight
    assert all(rec["r"] == 1.0 for rec in doc["r"])


def test_critical_renewal_mass_decays(law):
    ks = build_kernels(zero_charges(1), law)
    k = limit_kernel(ks, free_energy(ks))
    m = renewal_mass(k, [100, 1000])
    assert m[1] < m[0]
    assert renewal_limit(k)[0] == 0.0


def test_localized_renewal_mass_converges(loc_spec):
    ks = make_kernels(loc_spec)
    k = limit_kernel(ks, free_energy(ks))
    m = renewal_mass(k, [2000])
    assert m[0] == pytest.approx(renewal_limit(k)[0], rel=1e-6)


def test_recurrence_classes(law, loc_spec, deloc_spec):
    # critical: proper kernel, truncated mean grows like sqrt(n_cut)
    ks = build_kernels(zero_charges(1), law)
    rep = free_energy(ks)
    m = [limit_kernel(ks, rep, n_cut=n).mean_holding()[0] for n in (2 ** 10, 2 ** 12)]
    assert m[1] / m[0] == pytest.approx(2.0, rel=0.05)
    # localized: finite mean, exponentially small table tail
    ks = make_kernels(loc_spec)
    k = limit_kernel(ks, free_energy(ks))
    assert max(k.truncation_ledger()["tail_mass"]) < 1e-12
    assert np.isfinite(k.mean_holding()).all()
    # delocalized: positive escape
    ks = make_kernels(deloc_spec)
    k = limit_kernel(ks, free_energy(ks))
    assert k.defective and np.all(k.escape > 0)

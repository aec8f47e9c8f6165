import math

import numpy as np
import pytest

from percop.walk import (ConvergenceWarning, conditioned_step_kernel,
                         first_return_law, return_probability, tail_mass,
                         walk_distribution)


def brute_first_return(p, n):
    """Enumerate first-return probabilities for small n."""
    d = {0: 1.0}
    K = [0.0]
    for t in range(1, n + 1):
        new = {}
        for x, w in d.items():
            for s, q in ((1, p), (-1, p), (0, 1 - 2 * p)):
                y = x + s
                new[y] = new.get(y, 0.0) + w * q
        K.append(new.pop(0, 0.0))
        d = new
    return np.array(K)


@pytest.mark.parametrize("p", [0.1, 0.3, 0.45])
def test_first_return_matches_enumeration(p):
    law = first_return_law(p, 64)
    ref = brute_first_return(p, 20)
    assert np.allclose(law.K[:21], ref, rtol=1e-13, atol=1e-16)
    assert law.K[1] == 1 - 2 * p
    assert law.K[2] == pytest.approx(2 * p * p, rel=1e-15)


def test_tail_mass_consistency(law):
    assert law.Q[0] == 1.0
    assert law.Q[10] == pytest.approx(1 - law.K[:11].sum(), abs=1e-15)
    # continuation is continuous at n_max and decays like ell^{-1/2}
    n = law.n_max
    assert tail_mass(law, n + 1) == pytest.approx(law.Q[n], rel=1e-4)
    ratio = tail_mass(law, 4 * n) / tail_mass(law, n)
    assert ratio == pytest.approx(0.5, rel=1e-3)
    assert np.allclose(tail_mass(law, np.array([5, n + 10])),
                       [law.Q[5], tail_mass(law, n + 10)])
    with pytest.raises(ValueError):
        tail_mass(law, -1)


def test_tail_constant(law):
    assert law.cK_converged
    assert law.cK == pytest.approx(math.sqrt(0.3 / math.pi), rel=1e-8)


def test_short_tables_flag_without_warning(recwarn):
    law = first_return_law(0.3, 64)
    assert not any(issubclass(w.category, ConvergenceWarning) for w in recwarn)
    assert law.K.flags.writeable is False


def test_bad_parameters():
    with pytest.raises(ValueError):
        first_return_law(0.5, 100)
    with pytest.raises(ValueError):
        first_return_law(0.3, 1)


def test_return_probability_matches_walk_dp():
    d = walk_distribution(0.3, 40)
    assert return_probability(0.3, 40) == pytest.approx(d[40], rel=1e-12)
    assert d.sum() == pytest.approx(1.0, abs=1e-14)


def test_conditioned_kernel_rows_and_positivity():
    k = conditioned_step_kernel(0.3)
    for x in range(0, 6):
        assert sum(k.row(x).values()) == pytest.approx(1.0, abs=1e-15)
    path = k.simulate(2000, np.random.default_rng(0))
    assert path.min() >= 0 and np.all(path[1:] > 0)
    # transient: drifts away
    assert path[-1] > 10

import sys
import warnings

import pytest

from percop.charges import build_kernels, normalize
from percop.walk import first_return_law

KEYS = ("omega_plus", "omega_minus", "omega_zero", "omega_zero_tilde")


def make_kernels(spec, n_max=2 ** 16):
    c = normalize(*(spec[k] for k in KEYS))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_kernels(c, first_return_law(spec.get("p", 0.3), n_max),
                             n_max)


def spec_of(wp, wm, w0, w0t, p=0.3):
    return dict(zip(KEYS, (list(wp), list(wm), list(w0), list(w0t)))) | {"p": p}


@pytest.fixture(scope="session")
def law():
    return first_return_law(0.3, 2 ** 16)


@pytest.fixture(scope="session")
def deloc_spec():
    # T = 2, zero-mean +1 charges, strong contact penalty: delta < 1, P<
    return spec_of([0, 0], [1, -1], [-2], [0])


@pytest.fixture(scope="session")
def loc_spec():
    return spec_of([0], [0], [0.5], [0])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])

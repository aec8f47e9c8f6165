"""Self-checks: brute-force equivalence and exact algebraic identities."""

from __future__ import annotations

import itertools

import numpy as np

from .charges import build_kernels, normalize
from .limits import (asymptotic_constants, decomposition_check,
                     defective_kernel, gibbs_vectors, superposition_check)
from .partition import (brute_force_gauged, contact_marginal,
                        endpoint_sign_prob, partition_table)
from .spectral import (DELOCALIZED, free_energy, gamma_kernel,
                       log_Zc_from_representation)
from .walk import first_return_law

KEYS = ("omega_plus", "omega_minus", "omega_zero", "omega_zero_tilde")


def random_spec(rng: np.random.Generator, T: int, p: float,
                low: float = -1.0, high: float = 1.0) -> dict:
    """Random charges whose periods divide ``T`` (the lcm is ``T``)."""
    divisors = [d for d in range(1, T + 1) if T % d == 0]
    spec = {}
    for i, k in enumerate(KEYS):
        d = T if i == 0 else int(rng.choice(divisors))
        spec[k] = [float(x) for x in rng.uniform(low, high, d)]
    spec["p"] = float(p)
    return spec


def kernels_for(spec: dict, n_max: int = 2 ** 16, warn: bool = False):
    c = normalize(*(spec[k] for k in KEYS))
    return build_kernels(c, first_return_law(spec["p"], n_max), n_max,
                         warn=warn)


def brute_force_errors(spec: dict, N: int, ks=None) -> dict:
    """Largest absolute deviations between the DP and full enumeration.

    Keys: ``log_partition`` (log-domain, four normalizers), ``marginal``
    (all single and two-point first-contact sets, both boundaries) and
    ``endpoint`` (endpoint-sign probabilities, both boundaries).  The
    ``*_log`` keys hold the same comparisons for the logarithms.
    """
    if ks is None:
        ks = kernels_for(spec, n_max=max(64, N))
    tab = partition_table(ks, N)
    bf = brute_force_gauged(spec, N)
    raw = bf["raw"]
    c = ks.charges
    errs = {"log_partition": 0.0, "marginal": 0.0, "endpoint": 0.0,
            "marginal_log": 0.0, "endpoint_log": 0.0}
    for name, tabv in (("logZc", tab.logZc), ("logZf", tab.logZf),
                       ("logZplus", tab.logZplus),
                       ("logZminus", tab.logZminus)):
        errs["log_partition"] = max(errs["log_partition"],
                                    abs(tabv[0, N] - bf[name]))
    for a in ("free", "constrained"):
        sets = [(k,) for k in range(1, N + 1)]
        sets += list(itertools.combinations(range(1, N + 1), 2))
        for pts in sets:
            m_dp = contact_marginal(ks, tab, a, pts)
            m_bf = raw.marginal(a, pts)
            errs["marginal"] = max(errs["marginal"], abs(m_dp - m_bf))
            errs["marginal_log"] = max(errs["marginal_log"],
                                       _log_gap(m_dp, m_bf))
        dp = endpoint_sign_prob(ks, tab, a)
        if c.flipped:
            w = raw.weights * (raw.end == 0 if a == "constrained" else 1)
            neg = raw.end < 0 if a == "free" else raw.mid < 0
            ref = float(w[neg].sum() / w.sum())
        else:
            ref = raw.endpoint_sign(a)
        errs["endpoint"] = max(errs["endpoint"], abs(dp - ref))
        errs["endpoint_log"] = max(errs["endpoint_log"], _log_gap(dp, ref))
    return errs


def _log_gap(x, y):
    if x == y:
        return 0.0
    if x <= 0 or y <= 0:
        return float("inf")
    return abs(float(np.log(x) - np.log(y)))


def _check(name, err, tol):
    err = float(err)
    return {"name": name, "passed": bool(err <= tol), "error": err,
            "tol": float(tol)}


def run_suite(seed: int = 0, n_instances: int = 10, n_max: int = 2 ** 14):
    """Run the verification checks.

    Returns
    -------
    list of dict
        One record per check with ``name``, ``passed``, ``error``, ``tol``.
    """
    rng = np.random.default_rng(seed)
    out = []
    worst = {"log_partition": 0.0, "marginal": 0.0, "endpoint": 0.0}
    for i in range(n_instances):
        T = (1, 2, 3)[i % 3]
        p = (0.1, 0.3, 0.45)[(i // 3) % 3]
        spec = random_spec(rng, T, p)
        N = int(rng.integers(6, 11))
        e = brute_force_errors(spec, N)
        for k in worst:
            worst[k] = max(worst[k], e[k])
    out.append(_check("brute force: log partition functions",
                      worst["log_partition"], 1e-10))
    out.append(_check("brute force: contact marginals", worst["marginal"],
                      1e-10))
    out.append(_check("brute force: endpoint signs", worst["endpoint"], 1e-10))

    # zero environment: free partition function is 1
    zspec = {k: [0.0] for k in KEYS} | {"p": 0.3}
    zks = kernels_for(zspec, n_max)
    ztab = partition_table(zks, 200)
    out.append(_check("zero charges: Z^f = 1",
                      np.abs(np.exp(ztab.logZf[0]) - 1).max(), 1e-12))

    kern_err = 0.0
    lam_err = 0.0
    sup_err = 0.0
    dec_err = 0.0
    rep_err = 0.0
    for i in range(n_instances):
        T = (1, 2, 3)[i % 3]
        spec = random_spec(rng, T, 0.3)
        if i % 2:
            spec["omega_zero"] = [x - 3.0 for x in spec["omega_zero"]]
        ks = kernels_for(spec, n_max)
        rep = free_energy(ks)
        if rep.regime == DELOCALIZED:
            ac = asymptotic_constants(ks)
            lam_err = max(lam_err, np.abs(ks.B @ ac.LambdaC - ac.LambdaC
                                          + ac.muC).max() / ac.LambdaC.max(),
                          np.abs(ks.B @ ac.LambdaF - ac.LambdaF
                                 + ac.muF).max() / ac.LambdaF.max())
            gd = gibbs_vectors(ks, ac)
            for eta in range(T):
                for a in ("free", "constrained"):
                    k = defective_kernel(ks, ac, eta, a, n_cut=2 ** 12)
                    kern_err = max(kern_err, np.abs(k.row_sums() - 1).max())
                    for cyl in ((), (1,), (2, 5), (1, 3, 4)):
                        l, r = decomposition_check(ks, ac, gd, eta, a, cyl)
                        dec_err = max(dec_err, abs(l - r))
            for cyl in ((), (1,), (2, 5), (1, 3, 4)):
                l, r, _ = superposition_check(ks, gd.vPlus, gd.vMinus, 0.37,
                                              cyl)
                sup_err = max(sup_err, abs(l - r))
        else:
            k = gamma_kernel(ks, rep, n_cut=2 ** 12)
            kern_err = max(kern_err, np.abs(k.row_sums() - 1).max())
        N = 100
        lz = partition_table(ks, N, free=False).logZc[0]
        for b in (0.0, 0.05):
            rhs = log_Zc_from_representation(ks, b, N)
            rep_err = max(rep_err, np.abs(np.expm1(rhs[1:] - lz[1:])).max())
    out.append(_check("kernel rows sum to 1", kern_err, 1e-10))
    out.append(_check("B Lambda = Lambda - mu", lam_err, 1e-10))
    out.append(_check("mixture identity for q^v", sup_err, 1e-12))
    out.append(_check("decomposition of Gamma^(eta,a)", dec_err, 1e-10))
    out.append(_check("representation identity", rep_err, 1e-10))
    return out


def format_table(checks) -> str:
    width = max(len(c["name"]) for c in checks)
    lines = [f"{'check':<{width}}  result  error      tol"]
    for c in checks:
        res = "PASS" if c["passed"] else "FAIL"
        lines.append(f"{c['name']:<{width}}  {res:<6}  {c['error']:.2e}  "
                     f"{c['tol']:.0e}")
    return "\n".join(lines)


__all__ = ["random_spec", "kernels_for", "brute_force_errors", "run_suite",
           "format_table"]

"""The two-parameter copolymer family and its phase diagram.

For a centered periodic sequence ``omega`` the family is

    omega_plus = omega + h,   omega_minus = -(omega + h),
    omega_zero = -beta,       omega_zero_tilde = 0,

so ``beta`` is a uniform penalty on contacts and ``h`` a uniform field.
Every contact weight carries exactly one factor ``e^{-beta}``, hence
``delta(beta) = e^{-beta} delta(0)`` at fixed ``h``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .charges import CycleCharges, build_kernels, normalize
from .spectral import CLASSIFY_TOL, CRITICAL, LOCALIZED, classify, free_energy
from .walk import first_return_law

CSV_COLUMNS = ["beta", "h", "delta", "F_gauged", "f_raw", "rho_fd", "rho_mc",
               "regime", "rho_fd_left", "rho_fd_right", "near_critical"]


@dataclass
class PhasePoint:
    """One grid point of the phase diagram.

    ``f`` is the free energy of the raw Hamiltonian, ``F_gauged`` the one of
    the gauged model; ``rho_fd`` is the central difference of ``f`` in
    ``h`` (NaN at ``h = 0`` and at the grid edges, where only one side
    exists), ``rho_mc`` an optional Monte Carlo estimate.
    """

    beta: float
    h: float
    delta: float
    F_gauged: float
    f: float
    regime: str
    rho_fd: float = float("nan")
    rho_fd_left: float = float("nan")
    rho_fd_right: float = float("nan")
    rho_mc: float = float("nan")
    near_critical: bool = False

    def row(self) -> dict:
        d = asdict(self)
        d["f_raw"] = d.pop("f")
        return {k: d[k] for k in CSV_COLUMNS}


def _check_centered(omega):
    om = np.asarray(omega, dtype=float).ravel()
    if om.size == 0 or not np.all(np.isfinite(om)):
        raise ValueError("omega must be a nonempty finite sequence")
    if abs(om.sum()) > 1e-12:
        raise ValueError(f"omega must sum to 0 over a period (got {om.sum()!r})")
    return om


def to_charges(omega, h: float, beta: float) -> CycleCharges:
    """Normalized charges of the ``(beta, h)`` family.

    The raw free energy is the gauged one plus ``|h|`` (the mean of the
    ``+1`` charge after the orientation flip needed when ``h < 0``).
    """
    om = _check_centered(omega)
    return normalize(om + h, -(om + h), [-float(beta)], [0.0])


def grid(spec: str) -> np.ndarray:
    """Parse ``"a:b:step"`` into an inclusive grid."""
    try:
        a, b, s = (float(x) for x in spec.split(":"))
    except ValueError:
        raise ValueError(f"grid must look like a:b:step, got {spec!r}") from None
    if s <= 0 or b < a:
        raise ValueError(f"bad grid {spec!r}")
    n = int(math.floor((b - a) / s + 1e-9)) + 1
    return a + s * np.arange(n)


def point(omega, beta: float, h: float, p: float = 0.3,
          n_max: int = 2 ** 16, tol: float = CLASSIFY_TOL) -> PhasePoint:
    """Free energy and regime at one ``(beta, h)``."""
    law = first_return_law(p, n_max)
    c = to_charges(omega, h, beta)
    ks = build_kernels(c, law, n_max, warn=False)
    rep = free_energy(ks, tol=tol)
    near = abs(rep.delta - 1.0) < 1e-6
    return PhasePoint(beta=float(beta), h=float(h), delta=rep.delta,
                      F_gauged=rep.F, f=rep.rawF, regime=rep.regime,
                      near_critical=near)


def delta0(omega, p: float = 0.3, n_max: int = 2 ** 16) -> float:
    """``delta`` at ``beta = 0``, ``h = 0``."""
    return point(omega, 0.0, 0.0, p, n_max).delta


def beta_c(omega, p: float = 0.3, n_max: int = 2 ** 16) -> float:
    """Critical contact penalty on the ``h = 0`` line, ``log delta(0)``."""
    return math.log(delta0(omega, p, n_max))


def beta_c_bisection(omega, p: float = 0.3, n_max: int = 2 ** 16,
                     tol: float = CLASSIFY_TOL, xtol: float = 1e-10) -> float:
    """``beta_c`` located by bisection on the regime classification.

    The regime is recomputed from scratch at each trial ``beta``.  Returns
    the midpoint of the final bracket between a localized ``beta`` and a
    non-localized one.
    """
    law = first_return_law(p, n_max)

    def localized(b):
        ks = build_kernels(to_charges(omega, 0.0, b), law, n_max, warn=False)
        return free_energy(ks, tol=tol).regime == LOCALIZED

    lo, hi = -1.0, 1.0
    while localized(hi):
        lo, hi = hi, 2 * hi
    while not localized(lo):
        hi, lo = lo, 2 * lo
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if localized(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _column(args):
    omega, betas, h, p, n_max, tol = args
    return [point(omega, b, h, p, n_max, tol) for b in betas]


def rho_mc(omega, beta: float, h: float, p: float = 0.3, N: int = 4000,
           n_samples: int = 200, seed: int = 0, n_max: int | None = None) -> float:
    """Monte Carlo order parameter: mean of ``(1/N) sum_n sign(S_n)``.

    Paths are exact samples of the free-boundary measure of length ``N``.
    """
    from .partition import partition_table
    from .sampler import sample_finite

    n_max = max(N, n_max or 0, 16)
    law = first_return_law(p, max(n_max, 2 ** 12))
    ks = build_kernels(to_charges(omega, h, beta), law, n_max, warn=False)
    tab = partition_table(ks, N)
    batch = sample_finite(ks, tab, "free", n_samples=n_samples, seed=seed)
    return float(batch.sign_average().mean())


def scan(omega, beta_grid, h_grid, p: float = 0.3, n_max: int = 2 ** 16,
         workers: int = 1, tol: float = CLASSIFY_TOL, mc: bool = False,
         mc_N: int = 4000, mc_samples: int = 200, seed: int = 0):
    """Evaluate the phase diagram on a grid.

    Returns
    -------
    list of list of PhasePoint
        ``out[i][j]`` is at ``(beta_grid[i], h_grid[j])``.
    """
    om = _check_centered(omega)
    betas = [float(b) for b in beta_grid]
    hs = [float(h) for h in h_grid]
    tasks = [(om, betas, h, p, n_max, tol) for h in hs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            cols = list(ex.map(_column, tasks))
    else:
        cols = [_column(t) for t in tasks]
    out = [[cols[j][i] for j in range(len(hs))] for i in range(len(betas))]
    for row in out:
        _finite_differences(row, hs)
    if mc:
        for i, row in enumerate(out):
            for j, pt in enumerate(row):
                pt.rho_mc = rho_mc(om, pt.beta, pt.h, p, mc_N, mc_samples,
                                   seed + 1000 * i + j)
    return out


def _finite_differences(row, hs):
    n = len(row)
    for j, pt in enumerate(row):
        if j > 0:
            pt.rho_fd_left = (pt.f - row[j - 1].f) / (hs[j] - hs[j - 1])
        if j < n - 1:
            pt.rho_fd_right = (row[j + 1].f - pt.f) / (hs[j + 1] - hs[j])
        if 0 < j < n - 1 and abs(pt.h) > 1e-12:
            pt.rho_fd = (row[j + 1].f - row[j - 1].f) / (hs[j + 1] - hs[j - 1])


def write_csv(points, path) -> None:
    """Write a scan result (nested or flat list of points) as CSV.

    ``path`` is a file name or an open text stream.
    """
    flat = [pt for row in points for pt in row] if points and \
        isinstance(points[0], list) else list(points)
    if hasattr(path, "write"):
        _write_rows(flat, path)
    else:
        with open(path, "w", newline="") as fh:
            _write_rows(flat, fh)


def _write_rows(flat, fh):
    w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for pt in flat:
        rec = pt.row()
        for k, v in rec.items():
            if isinstance(v, float):
                rec[k] = repr(v)
        w.writerow(rec)


__all__ = ["PhasePoint", "to_charges", "grid", "point", "beta_c",
           "beta_c_bisection", "scan", "rho_mc", "write_csv", "delta0",
           "CRITICAL", "classify"]

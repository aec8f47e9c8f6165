"""Perron-Frobenius analysis of the kernel matrices.

``A(b)`` is the Laplace transform of the return kernel, ``Z(b)`` its
spectral radius and ``xi(b)`` the matching right eigenvector, normalized to
sum 1.  ``delta = Z(0)`` selects the regime, and for ``delta > 1`` the free
energy is the root of ``Z(b) = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .charges import KernelSet, a_matrix

CLASSIFY_TOL = 1e-9

LOCALIZED = "localized"
CRITICAL = "critical"
DELOCALIZED = "strictly_delocalized"


@dataclass(frozen=True)
class SpectralResult:
    """Spectral radius and Perron vector of ``A(b)``."""

    b: float
    Z: float
    xi: np.ndarray
    iterations: int = 0


@dataclass(frozen=True)
class FreeEnergyReport:
    """Free energy and regime of an environment.

    ``rawF`` is the free energy of the raw (ungauged) Hamiltonian.
    """

    delta: float
    F: float
    regime: str
    xiAtF: np.ndarray = field(repr=False)
    rawF: float
    ZatF: float = 1.0
    tol: float = CLASSIFY_TOL

    def to_dict(self) -> dict:
        return {"delta": self.delta, "F": self.F, "rawF": self.rawF,
                "regime": self.regime, "xi": [float(x) for x in self.xiAtF]}


def pf_eigen(A, start=None, rtol: float = 1e-13, max_iter: int = 100_000,
             b: float = float("nan")) -> SpectralResult:
    """Perron eigenpair of a positive matrix by power iteration.

    Parameters
    ----------
    A : (T, T) array with positive entries
    start : array, optional
        Positive starting vector; the default is the uniform vector.
    rtol : float
        Stop when successive eigenvalue estimates differ by less than
        ``rtol`` relative and the normalized vector has settled.

    Raises
    ------
    RuntimeError
        If ``max_iter`` iterations do not reach the tolerance.
    """
    A = np.asarray(A, dtype=float)
    T = A.shape[0]
    if A.shape != (T, T):
        raise ValueError("A must be square")
    if np.any(A < 0):
        raise ValueError("A must be nonnegative")
    xi = np.full(T, 1.0 / T) if start is None else np.asarray(start, float)
    if np.any(xi <= 0):
        raise ValueError("start vector must be positive")
    xi = xi / xi.sum()
    Z = float((A @ xi).sum())
    for it in range(1, max_iter + 1):
        y = A @ xi
        Zn = float(y.sum())
        if Zn <= 0:
            raise ValueError("matrix annihilates the positive cone")
        y /= Zn
        done = (abs(Zn - Z) <= rtol * Zn
                and np.max(np.abs(y - xi)) <= 10 * rtol * np.max(y))
        xi, Z = y, Zn
        if done:
            # one more product gives the Rayleigh-type estimate on the
            # settled vector
            Z = float((A @ xi).sum())
            return SpectralResult(b=b, Z=Z, xi=xi, iterations=it)
    raise RuntimeError(f"power iteration did not converge in {max_iter} steps")


def spectral_radius(ks: KernelSet, b: float, start=None) -> SpectralResult:
    """``(Z(b), xi(b))`` for the kernels ``ks``."""
    res = pf_eigen(a_matrix(ks, b), start=start)
    return SpectralResult(b=float(b), Z=res.Z, xi=res.xi,
                          iterations=res.iterations)


def classify(delta: float, tol: float = CLASSIFY_TOL) -> str:
    """Regime from ``delta``: localized above 1, critical at 1, else delocalized."""
    if delta > 1.0 + tol:
        return LOCALIZED
    if delta < 1.0 - tol:
        return DELOCALIZED
    return CRITICAL


def free_energy(ks: KernelSet, walk=None, tol: float = CLASSIFY_TOL,
                ztol: float = 1e-12) -> FreeEnergyReport:
    """Free energy from the root of ``Z(b) = 1``.

    For ``delta <= 1`` the free energy is 0.  Otherwise bisection runs on
    ``[0, b_hi]`` where ``b_hi`` doubles from 1 until ``Z(b_hi) < 1``, and
    stops once ``|Z(F) - 1| < ztol`` (or the bracket cannot shrink).
    """
    r0 = spectral_radius(ks, 0.0)
    delta = r0.Z
    regime = classify(delta, tol)
    mean_gauge = float(np.mean(ks.charges.gauge))
    if regime != LOCALIZED:
        return FreeEnergyReport(delta=delta, F=0.0, regime=regime,
                                xiAtF=r0.xi, rawF=mean_gauge, ZatF=delta,
                                tol=tol)
    lo, hi = 0.0, 1.0
    rhi = spectral_radius(ks, hi)
    while rhi.Z >= 1.0:
        lo, hi = hi, 2.0 * hi
        rhi = spectral_radius(ks, hi)
    best = rhi if abs(rhi.Z - 1) < abs(delta - 1) else r0
    best_b = hi if best is rhi else 0.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        rm = spectral_radius(ks, mid, start=best.xi)
        if abs(rm.Z - 1.0) < abs(best.Z - 1.0):
            best, best_b = rm, mid
        if abs(rm.Z - 1.0) < ztol:
            break
        if rm.Z > 1.0:
            lo = mid
        else:
            hi = mid
    return FreeEnergyReport(delta=delta, F=best_b, regime=regime,
                            xiAtF=best.xi, rawF=best_b + mean_gauge,
                            ZatF=best.Z, tol=tol)


def gamma_kernel(ks: KernelSet, report: FreeEnergyReport | None = None,
                 b: float | None = None, n_cut: int | None = None):
    """Markov renewal kernel built from the Perron pair.

    ``Gamma_alpha(n) = M_alpha(n) e^{-b n} xi_beta / (Z(b) xi_alpha)`` with
    ``beta = (alpha + n) % T``.  With ``report`` given, ``b = F`` and
    ``Z(F) = 1`` (up to the bisection tolerance); the explicit ``1/Z`` keeps
    the rows normalized for any ``b``.

    Raises
    ------
    ValueError
        For a strictly delocalized report; use the limits module instead.
    """
    from .limits import SemiMarkovKernel

    if report is not None:
        if report.regime == DELOCALIZED:
            raise ValueError("strictly delocalized regime: use "
                             "limits.defective_kernel")
        b = report.F
    if b is None:
        raise ValueError("need a report or a tilt b")
    sr = spectral_radius(ks, b)
    Z, xi = sr.Z, sr.xi
    T = ks.T
    if n_cut is None:
        n_cut = ks.n_max
    n_cut = min(n_cut, ks.n_max)
    n = np.arange(n_cut + 1)
    damp = np.exp(-b * n)
    hold = np.empty((T, n_cut + 1))
    tail = np.empty((T, T))
    A = a_matrix(ks, b)
    for alpha in range(T):
        beta = (alpha + n) % T
        hold[alpha] = ks.M[alpha, :n_cut + 1] * damp * xi[beta] / (Z * xi[alpha])
        head = np.bincount(beta, weights=ks.M[alpha, :n_cut + 1] * damp,
                           minlength=T)
        tail[alpha] = np.maximum(A[alpha] - head, 0.0) * xi / (Z * xi[alpha])
    return SemiMarkovKernel(T=T, hold=hold, escape=np.zeros(T),
                            defective=False, tail=tail, b=float(b), Z=Z,
                            xi=xi)


def representation_expectation(kernel, N: int) -> np.ndarray:
    """``E_b[Z(b)^{iota_n}; n in tau]`` from class 0 for ``n = 0..N``.

    Exact DP over the kernel, each contact weighted by ``Z(b)``.
    """
    from . import kernels

    a = np.ascontiguousarray(kernel.hold[:, :N + 1] * kernel.Z)
    if a.shape[1] < N + 1:
        raise ValueError("kernel table shorter than N")
    return kernels.renewal_convolve(a, N, N)[0]


def log_Zc_from_representation(ks: KernelSet, b: float, N: int) -> np.ndarray:
    """Right side of the representation identity, as ``log Z^c_n``, n <= N."""
    kern = gamma_kernel(ks, b=b, n_cut=max(N, 1))
    E = representation_expectation(kern, N)
    n = np.arange(N + 1)
    xi = kern.xi
    with np.errstate(divide="ignore"):
        return b * n + math.log(xi[0]) - np.log(xi[n % ks.T]) + np.log(E)

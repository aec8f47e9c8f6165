"""Periodic charges and their matrix encoding.

Charge arrays are *class indexed*: entry ``k`` of an array of length ``t``
is the charge of every monomer ``n`` with ``n % t == k``.  So ``[0, 1]``
puts charge 1 on the odd monomers.

After :func:`normalize` the four sequences share the period ``T`` (the lcm
of the input periods), the drift ``h`` is nonnegative, and the ``+1`` charge
has been gauged to zero.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .walk import WalkLaw

ZERO_TOL = 1e-12


class TruncationWarning(UserWarning):
    """The truncated tail of an infinite sum is not negligible."""


@dataclass(frozen=True)
class CycleCharges:
    """Normalized periodic environment.

    Attributes
    ----------
    T : int
        Common period.
    wPlus, wMinus, w0, w0tilde : ndarray, shape (T,)
        Gauged charges by class.  ``wPlus`` is identically zero.
    flipped : bool
        True if the orientation was reversed so that ``h >= 0``.
    gauge : ndarray, shape (T,)
        The (post-flip) raw ``+1`` charges that the gauge removed.  The raw
        log partition function is the gauged one plus the sum of these over
        the monomers ``1..N``.
    h : float
        Mean of ``wPlus - wMinus`` over a period (after the flip).
    S : ndarray, shape (T,)
        Class potential with ``Sigma[a, b] = S[b] - S[a]`` and ``S[0] = 0``.
    """

    T: int
    wPlus: np.ndarray
    wMinus: np.ndarray
    w0: np.ndarray
    w0tilde: np.ndarray
    flipped: bool
    gauge: np.ndarray
    h: float
    S: np.ndarray = field(repr=False)

    @property
    def sigma(self) -> np.ndarray:
        return sigma_matrix(self)

    def gauge_sum(self, N: int) -> float:
        """Sum of the removed ``+1`` charges over monomers ``1..N``."""
        full, rest = divmod(int(N), self.T)
        s = full * float(self.gauge.sum())
        if rest:
            s += float(self.gauge[1:rest + 1].sum())
        return s

    @property
    def is_pinning(self) -> bool:
        return abs(self.h) <= ZERO_TOL and np.all(np.abs(self.S) <= ZERO_TOL)


def _expand(arr, T):
    a = np.asarray(arr, dtype=float).ravel()
    return np.tile(a, T // len(a))


def normalize(omega_plus, omega_minus, omega_zero, omega_zero_tilde,
              walk: WalkLaw | None = None) -> CycleCharges:
    """Bring raw periodic charges to the normalized, gauged form.

    Parameters
    ----------
    omega_plus, omega_minus, omega_zero, omega_zero_tilde : array_like
        Class-indexed charge sequences; the periods may differ.
    walk : WalkLaw, optional
        Unused; accepted so the signature matches the other builders.

    Returns
    -------
    CycleCharges
    """
    seqs = []
    for name, arr in (("omega_plus", omega_plus), ("omega_minus", omega_minus),
                      ("omega_zero", omega_zero),
                      ("omega_zero_tilde", omega_zero_tilde)):
        a = np.asarray(arr, dtype=float).ravel()
        if a.size == 0:
            raise ValueError(f"{name} is empty")
        if not np.all(np.isfinite(a)):
            raise ValueError(f"{name} has non-finite values")
        seqs.append(a)
    T = 1
    for a in seqs:
        T = T * len(a) // math.gcd(T, len(a))
    wp, wm, w0, w0t = (_expand(a, T) for a in seqs)
    h_raw = float(np.mean(wp - wm))
    flipped = h_raw < -ZERO_TOL
    if flipped:
        wp, wm = wm, wp
    gauge = wp.copy()
    wm = wm - wp
    w0t = w0t - wp
    wp = np.zeros(T)
    h = abs(h_raw) if abs(h_raw) > ZERO_TOL else 0.0
    # prefix sums of the gauged -1 charge over monomers 1..gamma
    idx = np.arange(1, T) % T
    P = np.concatenate(([0.0], np.cumsum(wm[idx])))
    S = P + np.arange(T) * h
    for a in (wp, wm, w0, w0t, gauge, S):
        a.flags.writeable = False
    return CycleCharges(T=T, wPlus=wp, wMinus=wm, w0=w0, w0tilde=w0t,
                        flipped=flipped, gauge=gauge, h=h, S=S)


def zero_charges(T: int = 1) -> CycleCharges:
    z = np.zeros(T)
    return normalize(z, z, z, z)


def sigma_matrix(c: CycleCharges) -> np.ndarray:
    """``Sigma[a, b] = S[b] - S[a]``, the periodic part of the -1 charge sums."""
    return c.S[None, :] - c.S[:, None]


def phi(c: CycleCharges, alpha: int, ell: int) -> float:
    """Log weight of an excursion of length ``ell`` started in class ``alpha``.

    Relative to the bare walk law.  The excursion ends in class
    ``beta = (alpha + ell) % T``.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    beta = (alpha + ell) % c.T
    if ell == 1:
        return float(c.w0[beta] + c.w0tilde[beta] - c.wPlus[beta])
    e = -ell * c.h + c.S[beta] - c.S[alpha]
    return float(c.w0[beta] + np.logaddexp(0.0, e) - math.log(2.0))


def phi_table(c: CycleCharges, n_max: int) -> np.ndarray:
    """Vectorized :func:`phi` for all classes and ``ell = 1..n_max``.

    Column 0 is ``-inf`` (no excursion of length 0).
    """
    T = c.T
    n = np.arange(n_max + 1)
    out = np.empty((T, n_max + 1))
    for alpha in range(T):
        beta = (alpha + n) % T
        e = -n * c.h + c.S[beta] - c.S[alpha]
        out[alpha] = c.w0[beta] + np.logaddexp(0.0, e) - math.log(2.0)
        if n_max >= 1:
            b1 = (alpha + 1) % T
            out[alpha, 1] = c.w0[b1] + c.w0tilde[b1] - c.wPlus[b1]
        out[alpha, 0] = -np.inf
    return out


def _tail_integral(kappa, x0):
    """``int_{x0}^inf x^{-3/2} e^{-kappa x} dx``."""
    if kappa <= 0.0:
        return 2.0 / math.sqrt(x0)
    kx = kappa * x0
    if kx > 700.0:
        return 0.0
    return (2.0 * math.exp(-kx) / math.sqrt(x0)
            - 2.0 * math.sqrt(math.pi * kappa) * math.erfc(math.sqrt(kx)))


@dataclass(frozen=True)
class KernelSet:
    """Matrix encoding of a normalized environment.

    Attributes
    ----------
    charges : CycleCharges
    law : WalkLaw
    sigma : ndarray (T, T)
    M : ndarray (T, n_max + 1)
        ``M[alpha, n]`` is the weight of an excursion of length ``n`` from
        class ``alpha``; its target class is ``(alpha + n) % T``.
    B : ndarray (T, T)
        ``M`` summed by target class, tail included.
    L, Ltilde : ndarray (T, T)
        Limits of ``n^{3/2} M`` and of the matching free-end weights.
    n_max : int
    tailCorrected : bool
    tail_error : float
        Estimated absolute error of the tail correction in ``B``.
    """

    charges: CycleCharges
    law: WalkLaw = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    B: np.ndarray
    L: np.ndarray = field(repr=False)
    Ltilde: np.ndarray = field(repr=False)
    n_max: int
    tailCorrected: bool = True
    tail_error: float = 0.0

    @property
    def T(self) -> int:
        return self.charges.T

    def tail_matrix(self, b: float = 0.0) -> np.ndarray:
        """Estimate of ``sum_{n > n_max} M_alpha(n) e^{-b n}`` by target class.

        The exact leftover mass ``Q(n_max)`` of the first-return law is split
        among the residues ``n % T`` and damped by ``e^{-b n}`` according to
        the ``n^{-3/2}`` profile, so that at ``b = 0`` and zero charges the
        row sums of ``B`` are exactly 1.
        """
        return _tail_matrix(self.charges, self.law, self.n_max, b)

    def a_matrix(self, b: float) -> np.ndarray:
        """``A(b) = sum_n M(n) e^{-b n}`` by target class, tail included."""
        return a_matrix(self, b)


def _tail_matrix(c, law, n_max, b):
    T = c.T
    Qn = float(law.Q[n_max])
    if Qn <= 0.0:
        return np.zeros((T, T))
    res = np.arange(T)
    n_c = n_max + 1 + (res - n_max - 1) % T
    x0 = n_c - 0.5 * T
    norm = sum(_tail_integral(0.0, x) for x in x0)
    share_b = np.array([_tail_integral(b, x) for x in x0]) * Qn / norm
    share_bh = np.array([_tail_integral(b + c.h, x) for x in x0]) * Qn / norm
    out = np.zeros((T, T))
    for alpha in range(T):
        for r in range(T):
            beta = (alpha + r) % T
            out[alpha, beta] = 0.5 * math.exp(c.w0[beta]) * (
                share_b[r] + math.exp(c.S[beta] - c.S[alpha]) * share_bh[r])
    return out


def a_matrix(ks: KernelSet, b: float) -> np.ndarray:
    """Laplace-transformed kernel matrix ``A(b)``; ``A(0) = B``."""
    if b < 0:
        raise ValueError("b must be nonnegative")
    T = ks.T
    n = np.arange(ks.n_max + 1)
    damp = np.exp(-b * n) if b > 0 else np.ones_like(n, dtype=float)
    A = np.zeros((T, T))
    for alpha in range(T):
        A[alpha] = np.bincount((alpha + n) % T, weights=ks.M[alpha] * damp,
                               minlength=T)
    A += ks.tail_matrix(b)
    return A


def l_matrices(c: CycleCharges, law: WalkLaw):
    """The asymptotic matrices ``(L, Ltilde)``.

    ``Ltilde = cK (1 + e^{Sigma})`` when ``h = 0`` and ``cK`` otherwise;
    ``L[a, b] = exp(w0[b]) Ltilde[a, b] / 2``.
    """
    sig = sigma_matrix(c)
    if c.h <= ZERO_TOL:
        Lt = law.cK * (1.0 + np.exp(sig))
    else:
        Lt = np.full((c.T, c.T), law.cK)
    L = 0.5 * np.exp(c.w0)[None, :] * Lt
    return L, Lt


def build_kernels(c: CycleCharges, law: WalkLaw, n_max: int | None = None,
                  warn: bool = True) -> KernelSet:
    """Assemble ``M``, ``B``, ``L`` and ``Ltilde`` for an environment.

    Parameters
    ----------
    c : CycleCharges
    law : WalkLaw
        Must be tabulated at least up to ``n_max``.
    n_max : int, optional
        Truncation horizon of ``M``; defaults to ``law.n_max``.
    warn : bool
        Emit a :class:`TruncationWarning` when the estimated error of the
        tail correction exceeds 1e-6 of the truncated sum.
    """
    if n_max is None:
        n_max = law.n_max
    if n_max > law.n_max:
        raise ValueError(f"walk law tabulated to {law.n_max} < n_max={n_max}")
    K = law.K[:n_max + 1]
    M = np.exp(phi_table(c, n_max)) * K[None, :]
    M[:, 0] = 0.0
    M.flags.writeable = False
    T = c.T
    n = np.arange(n_max + 1)
    Btr = np.zeros((T, T))
    for alpha in range(T):
        Btr[alpha] = np.bincount((alpha + n) % T, weights=M[alpha],
                                 minlength=T)
    tail = _tail_matrix(c, law, n_max, 0.0)
    B = Btr + tail
    err = float(tail.sum(axis=1).max()) * T / n_max
    if warn and err > 1e-6 * float(Btr.sum(axis=1).min()):
        warnings.warn(f"tail correction of B uncertain at n_max={n_max} "
                      f"(estimated error {err:.2e})", TruncationWarning,
                      stacklevel=2)
    L, Lt = l_matrices(c, law)
    sig = sigma_matrix(c)
    for a in (B, L, Lt, sig):
        a.flags.writeable = False
    return KernelSet(charges=c, law=law, sigma=sig, M=M, B=B, L=L, Ltilde=Lt,
                     n_max=n_max, tailCorrected=True, tail_error=err)


def in_P_less(c: CycleCharges, delta: float, tol: float = 1e-9) -> bool:
    """Membership in the set where the delocalized limit depends on boundaries.

    True iff ``delta < 1`` (beyond ``tol``), ``h = 0`` and ``Sigma`` is not
    identically zero.
    """
    return bool(delta < 1.0 - tol and c.h <= ZERO_TOL
                and np.any(np.abs(sigma_matrix(c)) > ZERO_TOL))


def kernels_from_spec(spec: dict, n_max: int | None = None) -> KernelSet:
    """Build a :class:`KernelSet` from a JSON-style charge specification."""
    from .walk import first_return_law

    p = float(spec["p"])
    nm = int(n_max or spec.get("n_max") or 2 ** 16)
    c = normalize(spec["omega_plus"], spec["omega_minus"], spec["omega_zero"],
                  spec["omega_zero_tilde"])
    return build_kernels(c, first_return_law(p, nm), nm)

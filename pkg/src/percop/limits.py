"""Infinite-volume limits.

Semi-Markov kernels for the three regimes, the constants of the sharp
asymptotics in the strictly delocalized regime, and the two-phase
decomposition of the delocalized limits into the laws built on the vectors
``v+`` and ``v-``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .charges import KernelSet, ZERO_TOL, in_P_less
from .spectral import classify as _classify
from .spectral import (CLASSIFY_TOL, CRITICAL, DELOCALIZED, LOCALIZED,
                       FreeEnergyReport, free_energy, gamma_kernel,
                       pf_eigen)

DEFAULT_N_CUT = 2 ** 14


class BoundaryDependenceWarning(UserWarning):
    """The delocalized limit depends on the boundary condition and on [N]."""


@dataclass(frozen=True)
class SemiMarkovKernel:
    """A possibly defective Markov renewal kernel.

    Attributes
    ----------
    T : int
    hold : ndarray (T, n_cut + 1)
        ``hold[alpha, n]`` is the probability of a next contact after ``n``
        steps, landing in class ``(alpha + n) % T``.  Column 0 is zero.
    escape : ndarray (T,)
        Probability of no further contact.
    defective : bool
    tail : ndarray (T, T)
        Mass of holding times beyond ``n_cut`` by target class.  This is the
        truncation ledger of the table: it is kept, not dropped.
    """

    T: int
    hold: np.ndarray = field(repr=False)
    escape: np.ndarray
    defective: bool
    tail: np.ndarray = field(repr=False)
    b: float = 0.0
    Z: float = 1.0
    xi: np.ndarray | None = field(default=None, repr=False)
    eta: int | None = None
    boundary: str | None = None

    @property
    def n_cut(self) -> int:
        return self.hold.shape[1] - 1

    def row_sums(self) -> np.ndarray:
        """``sum_n hold + tail + escape`` for each class."""
        return self.hold.sum(axis=1) + self.tail.sum(axis=1) + self.escape

    def truncation_ledger(self) -> dict:
        """Per-class mass of holding times beyond ``n_cut``."""
        return {"n_cut": self.n_cut,
                "tail_mass": [float(x) for x in self.tail.sum(axis=1)]}

    def class_matrix(self) -> np.ndarray:
        """Transition matrix of the embedded class chain (without escape)."""
        T = self.T
        n = np.arange(self.n_cut + 1)
        P = np.zeros((T, T))
        for alpha in range(T):
            P[alpha] = np.bincount((alpha + n) % T, weights=self.hold[alpha],
                                   minlength=T)
        return P + self.tail

    def mean_holding(self) -> np.ndarray:
        """``sum_n n hold[alpha, n]`` (the truncated part of the mean)."""
        n = np.arange(self.n_cut + 1)
        return self.hold @ n

    def cylinder(self, points) -> float:
        """Probability of the first contacts being exactly ``points``."""
        prob = 1.0
        prev = 0
        for k in points:
            d = int(k) - prev
            if d < 1 or d > self.n_cut:
                raise ValueError("cylinder gap outside the kernel table")
            prob *= self.hold[prev % self.T, d]
            prev = int(k)
        return prob


@dataclass(frozen=True)
class AsymptoticConstants:
    """``(1 - B)^{-1}`` and the constants of the sharp asymptotics."""

    inv1mB: np.ndarray
    LambdaC: np.ndarray
    LambdaF: np.ndarray
    muC: np.ndarray
    muF: np.ndarray

    def Lambda(self, a: str) -> np.ndarray:
        return self.LambdaC if a == "constrained" else self.LambdaF

    def mu(self, a: str) -> np.ndarray:
        return self.muC if a == "constrained" else self.muF


@dataclass(frozen=True)
class GibbsDecomposition:
    """Vectors ``v+``, ``v-`` and the weights ``r(eta, a)``.

    ``x[(eta, a)]`` and ``y[(eta, a)]`` are the coefficients with
    ``Lambda^a[:, eta] = x v+ + y v-``; ``r = x v+[0] / Lambda^a[0, eta]``.
    """

    vPlus: np.ndarray
    vMinus: np.ndarray
    x: dict
    y: dict
    r: dict
    at_endpoint: dict

    def plus_given_last(self, ks: KernelSet, eta: int, a: str) -> np.ndarray:
        """Probability that the final excursion is positive, by last class.

        For a last contact in class ``gamma`` this is
        ``x / (x + y exp(-S[gamma]))``; averaged over the escape class it
        equals ``r(eta, a)``.
        """
        x, y = self.x[(eta, a)], self.y[(eta, a)]
        return x / (x + y * np.exp(-ks.charges.S))


def classify(report, tol: float | None = None) -> str:
    """Regime of a :class:`FreeEnergyReport` (or of a bare ``delta``)."""
    if isinstance(report, FreeEnergyReport):
        return _classify(report.delta, report.tol if tol is None else tol)
    return _classify(float(report), CLASSIFY_TOL if tol is None else tol)


def _inverse_refined(A: np.ndarray) -> np.ndarray:
    T = A.shape[0]
    eye = np.eye(T)
    X = np.linalg.solve(A, eye)
    for _ in range(2):
        R = eye - A @ X
        X = X + np.linalg.solve(A, R)
    return X


def asymptotic_constants(ks: KernelSet, walk=None,
                         tol: float = CLASSIFY_TOL) -> AsymptoticConstants:
    """``Lambda^c = (1-B)^{-1} L (1-B)^{-1}``, ``Lambda^f = (1-B)^{-1} Ltilde``.

    Raises
    ------
    ValueError
        Unless the spectral radius of ``B`` is below ``1 - tol``.
    """
    delta = pf_eigen(ks.B).Z
    if not delta < 1.0 - tol:
        raise ValueError(f"asymptotic constants need delta < 1, got {delta!r}")
    T = ks.T
    inv = _inverse_refined(np.eye(T) - ks.B)
    LC = inv @ ks.L @ inv
    LF = inv @ ks.Ltilde
    muC = ks.L @ inv
    muF = np.array(ks.Ltilde, copy=True)
    return AsymptoticConstants(inv1mB=inv, LambdaC=LC, LambdaF=LF, muC=muC,
                               muF=muF)


def _tail_by_class(ks: KernelSet, n_cut: int) -> np.ndarray:
    """``B`` minus the part of ``M`` with holding times up to ``n_cut``."""
    T = ks.T
    n = np.arange(n_cut + 1)
    head = np.zeros((T, T))
    for alpha in range(T):
        head[alpha] = np.bincount((alpha + n) % T,
                                  weights=ks.M[alpha, :n_cut + 1], minlength=T)
    return np.maximum(ks.B - head, 0.0)


def defective_kernel(ks: KernelSet, ac: AsymptoticConstants, eta: int,
                     a: str, n_cut: int = DEFAULT_N_CUT) -> SemiMarkovKernel:
    """``Gamma^{eta,a}_alpha(n) = M_alpha(n) Lambda_{alpha+n,eta} / Lambda_{alpha,eta}``.

    The escape weight is ``mu^a_{alpha,eta} / Lambda^a_{alpha,eta}``.
    """
    if a not in ("free", "constrained"):
        raise ValueError("boundary must be 'free' or 'constrained'")
    T = ks.T
    eta = int(eta) % T
    n_cut = min(int(n_cut), ks.n_max)
    Lam = ac.Lambda(a)[:, eta]
    mu = ac.mu(a)[:, eta]
    n = np.arange(n_cut + 1)
    hold = np.empty((T, n_cut + 1))
    for alpha in range(T):
        hold[alpha] = ks.M[alpha, :n_cut + 1] * Lam[(alpha + n) % T] / Lam[alpha]
    tail = _tail_by_class(ks, n_cut) * Lam[None, :] / Lam[:, None]
    escape = mu / Lam
    return SemiMarkovKernel(T=T, hold=hold, escape=escape, defective=True,
                            tail=tail, eta=eta, boundary=a)


def limit_kernel(ks: KernelSet, report: FreeEnergyReport | None = None,
                 eta: int = 0, a: str = "free",
                 n_cut: int = DEFAULT_N_CUT) -> SemiMarkovKernel:
    """The infinite-volume contact kernel for whichever regime applies."""
    if report is None:
        report = free_energy(ks)
    if report.regime == DELOCALIZED:
        return defective_kernel(ks, asymptotic_constants(ks, tol=report.tol),
                                eta, a, n_cut)
    return gamma_kernel(ks, report, n_cut=n_cut)


def gibbs_vectors(ks: KernelSet, ac: AsymptoticConstants) -> GibbsDecomposition:
    """``v+ = (1-B)^{-1} 1``, ``v- = (1-B)^{-1} e^{-S}`` and the weights ``r``."""
    c = ks.charges
    T = c.T
    inv = ac.inv1mB
    vP = inv @ np.ones(T)
    vM = inv @ np.exp(-c.S)
    cK = ks.law.cK
    h0 = c.h <= ZERO_TOL
    w0 = np.exp(c.w0)
    x, y, r, edge = {}, {}, {}, {}
    for eta in range(T):
        xf = cK
        yf = cK * math.exp(c.S[eta]) if h0 else 0.0
        xc = 0.5 * cK * float(w0 @ inv[:, eta])
        yc = 0.5 * cK * float((w0 * np.exp(c.S)) @ inv[:, eta]) if h0 else 0.0
        for a, xx, yy in (("free", xf, yf), ("constrained", xc, yc)):
            Lam0 = ac.Lambda(a)[0, eta]
            x[(eta, a)] = xx
            y[(eta, a)] = yy
            # with no minus phase the ratio is 1 up to rounding; use 1
            rr = xx * vP[0] / Lam0 if yy > 0 else 1.0
            r[(eta, a)] = min(max(rr, 0.0), 1.0)
            edge[(eta, a)] = bool(rr >= 1.0 - 1e-12 or rr <= 1e-12)
    return GibbsDecomposition(vPlus=vP, vMinus=vM, x=x, y=y, r=r,
                              at_endpoint=edge)


def q_law(ks: KernelSet, v, cylinder) -> float:
    """``q^v`` of the cylinder ``{first contacts = cylinder}``.

    ``prod M(k_i - k_{i-1}) v[k_n] / v[0]``; the empty cylinder has
    probability 1.
    """
    v = np.asarray(v, dtype=float)
    T = ks.T
    prob = 1.0
    prev = 0
    for k in cylinder:
        prob *= ks.M[prev % T, int(k) - prev]
        prev = int(k)
    return prob * v[prev % T] / v[0]


def superposition_check(ks: KernelSet, vPlus, vMinus, p: float, cylinder):
    """Both sides of the mixture identity for ``q^{p v+ + (1-p) v-}``.

    Returns
    -------
    (lhs, rhs, r)
    """
    vPlus = np.asarray(vPlus, float)
    vMinus = np.asarray(vMinus, float)
    lhs = q_law(ks, p * vPlus + (1 - p) * vMinus, cylinder)
    r = p * vPlus[0] / (p * vPlus[0] + (1 - p) * vMinus[0])
    rhs = r * q_law(ks, vPlus, cylinder) + (1 - r) * q_law(ks, vMinus, cylinder)
    return lhs, rhs, r


def decomposition_check(ks: KernelSet, ac: AsymptoticConstants,
                        gd: GibbsDecomposition, eta: int, a: str, cylinder):
    """Cylinder probability under ``Gamma^{eta,a}`` against the mixture.

    Returns ``(lhs, rhs)`` where ``rhs = r q^{v+} + (1 - r) q^{v-}``.
    """
    Lam = ac.Lambda(a)[:, eta]
    lhs = q_law(ks, Lam, cylinder)
    r = gd.r[(eta, a)]
    rhs = (r * q_law(ks, gd.vPlus, cylinder)
           + (1 - r) * q_law(ks, gd.vMinus, cylinder))
    return lhs, rhs


def renewal_mass(kernel: SemiMarkovKernel, N_list) -> np.ndarray:
    """``P(N in tau)`` from class 0 for each ``N`` in ``N_list``.

    Exact DP over the kernel table; every ``N`` must be at most ``n_cut``.

    Raises
    ------
    ValueError
        For a defective kernel.
    """
    from . import kernels

    if kernel.defective:
        raise ValueError("renewal mass needs a non-defective kernel")
    N_list = np.atleast_1d(np.asarray(N_list, dtype=np.int64))
    Nmax = int(N_list.max())
    if Nmax > kernel.n_cut:
        raise ValueError("N exceeds the kernel table")
    a = np.ascontiguousarray(kernel.hold[:, :Nmax + 1])
    u = kernels.renewal_convolve(a, Nmax, Nmax)
    return u[0, N_list]


def renewal_limit(kernel: SemiMarkovKernel) -> np.ndarray:
    """Limit of ``P(N in tau)`` along ``N % T == beta``, for each ``beta``.

    ``T pi_beta / sum_alpha pi_alpha m_alpha`` with ``pi`` the stationary law
    of the class chain and ``m`` the mean holding times.  Localized kernels
    have exponential tails, so their mass beyond ``n_cut`` is negligible;
    a tail mass above ``1e-12`` signals the polynomial tail of the critical
    kernel, whose mean is infinite, and the limit is then 0.
    """
    if kernel.tail.sum(axis=1).max() > 1e-12:
        return np.zeros(kernel.T)
    P = kernel.class_matrix()
    w, V = np.linalg.eig(P.T)
    i = int(np.argmin(np.abs(w - 1.0)))
    pi = np.abs(np.real(V[:, i]))
    pi /= pi.sum()
    m = kernel.mean_holding()
    return kernel.T * pi / float(pi @ m)


def limits_report(ks: KernelSet, report: FreeEnergyReport | None = None) -> dict:
    """JSON-ready summary: regime, delta, F and, for delta < 1, Lambda and r."""
    if report is None:
        report = free_energy(ks)
    out = {"regime": report.regime, "delta": report.delta, "F": report.F,
           "rawF": report.rawF, "T": ks.T, "warnings": []}
    if report.regime == DELOCALIZED:
        ac = asymptotic_constants(ks, tol=report.tol)
        gd = gibbs_vectors(ks, ac)
        out["LambdaC"] = ac.LambdaC.tolist()
        out["LambdaF"] = ac.LambdaF.tolist()
        out["muC"] = ac.muC.tolist()
        out["muF"] = ac.muF.tolist()
        out["vPlus"] = gd.vPlus.tolist()
        out["vMinus"] = gd.vMinus.tolist()
        out["r"] = [{"eta": eta, "boundary": a, "r": float(v),
                     "at_endpoint": gd.at_endpoint[(eta, a)]}
                    for (eta, a), v in sorted(gd.r.items())]
        pless = in_P_less(ks.charges, report.delta, report.tol)
        out["P_less"] = pless
        if pless:
            msg = "limit depends on boundary conditions along [N]=eta"
            out["warnings"].append(msg)
            warnings.warn(msg, BoundaryDependenceWarning, stacklevel=2)
    return out


__all__ = ["SemiMarkovKernel", "AsymptoticConstants", "GibbsDecomposition",
           "classify", "asymptotic_constants", "defective_kernel",
           "limit_kernel", "gibbs_vectors", "q_law", "superposition_check",
           "decomposition_check", "renewal_mass", "renewal_limit",
           "limits_report", "LOCALIZED", "CRITICAL", "DELOCALIZED"]

"""Exact finite-volume partition functions.

The constrained partition function obeys a renewal equation over the
contact set, ``Z_alpha(n) = sum_m M_alpha(m) Z_{alpha+m}(n-m)``.  The tables
are computed in a tilted linear domain: with ``b`` the free energy (or 0),
``z_alpha(n) = Z_alpha(n) e^{-b n}`` stays of order one, so no log-sum-exp
is needed and the inner loop is a plain dot product.  Logarithms are taken
only when the tables are read.

Row ``alpha`` of every table is the system whose first monomer is in class
``alpha + 1``, i.e. the environment shifted by any ``j`` in class ``alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .charges import KernelSet, normalize
from .spectral import LOCALIZED, free_energy

FREE = "free"
CONSTRAINED = "constrained"
BOUNDARIES = (FREE, CONSTRAINED)


def _check_boundary(a):
    if a not in BOUNDARIES:
        raise ValueError(f"boundary must be 'free' or 'constrained', got {a!r}")


@dataclass(frozen=True)
class PartitionTable:
    """Tilted partition-function tables up to horizon ``N``.

    ``zc[alpha, n] = Z^c_alpha(n) e^{-b n}``, and likewise for the free and
    sign-restricted tables (``None`` until :func:`free_dp` has run).
    """

    N: int
    b: float
    a: np.ndarray = field(repr=False)
    zc: np.ndarray = field(repr=False)
    zf: np.ndarray | None = field(default=None, repr=False)
    zplus: np.ndarray | None = field(default=None, repr=False)
    zminus: np.ndarray | None = field(default=None, repr=False)
    m_cut: int = 0

    def _log(self, z):
        if z is None:
            raise ValueError("free tables not built; call free_dp first")
        n = np.arange(self.N + 1)
        with np.errstate(divide="ignore"):
            return np.log(z) + self.b * n[None, :]

    @property
    def logZc(self):
        return self._log(self.zc)

    @property
    def logZf(self):
        return self._log(self.zf)

    @property
    def logZplus(self):
        return self._log(self.zplus)

    @property
    def logZminus(self):
        return self._log(self.zminus)

    def tilted(self, boundary: str) -> np.ndarray:
        _check_boundary(boundary)
        z = self.zc if boundary == CONSTRAINED else self.zf
        if z is None:
            raise ValueError("free tables not built; call free_dp first")
        return z

    def log_table(self, boundary: str) -> np.ndarray:
        return self._log(self.tilted(boundary))

    def rows(self, alpha: int = 0) -> list[dict]:
        """Per-``n`` records for the CSV dump."""
        out = []
        lc = self.logZc[alpha]
        lf = self.logZf[alpha] if self.zf is not None else None
        lp = self.logZplus[alpha] if self.zplus is not None else None
        lm = self.logZminus[alpha] if self.zminus is not None else None
        for n in range(self.N + 1):
            rec = {"N": n, "logZc": float(lc[n])}
            if lf is not None:
                rec.update(logZf=float(lf[n]), logZplus=float(lp[n]),
                           logZminus=float(lm[n]))
            out.append(rec)
        return out


def default_tilt(ks: KernelSet) -> float:
    """``F`` in the localized regime and 0 otherwise."""
    rep = free_energy(ks)
    return rep.F if rep.regime == LOCALIZED else 0.0


def constrained_dp(ks: KernelSet, N: int, b: float | None = None,
                   band_tol: float = 1e-18) -> PartitionTable:
    """Constrained partition functions ``Z^c_alpha(n)`` for ``n <= N``.

    Parameters
    ----------
    ks : KernelSet
        Its ``M`` table must reach ``N``.
    N : int
    b : float, optional
        Tilt; defaults to :func:`default_tilt`.
    band_tol : float
        For ``b > 0`` the holding times whose remaining tilted mass is below
        ``band_tol`` times the total are skipped.
    """
    N = int(N)
    if N < 0:
        raise ValueError("N must be nonnegative")
    if N > 10 ** 6:
        raise ValueError("N above 1e6 is not supported")
    if N > ks.n_max:
        raise ValueError(f"kernel table reaches n_max={ks.n_max} < N={N}")
    if b is None:
        b = default_tilt(ks)
    n = np.arange(N + 1)
    a = np.ascontiguousarray(ks.M[:, :N + 1] * np.exp(-b * n)[None, :])
    m_cut = N
    if b > 0 and N > 0:
        rest = np.cumsum(a[:, ::-1], axis=1)[:, ::-1]  # rest[:, m] = sum_{m'>=m}
        total = rest[:, 1].max()
        small = np.all(rest <= band_tol * total, axis=0)
        idx = np.nonzero(small)[0]
        if idx.size:
            m_cut = max(int(idx[0]), 1)
    zc = kernels.renewal_convolve(a, N, m_cut)
    a.flags.writeable = False
    zc.flags.writeable = False
    return PartitionTable(N=N, b=float(b), a=a, zc=zc, m_cut=m_cut)


def free_dp(ks: KernelSet, table: PartitionTable, walk=None) -> PartitionTable:
    """Add the free and sign-restricted tables by conditioning on the last zero.

    ``Z^+_alpha(n) = sum_l Z^c_alpha(n-l) q(l)`` and ``Z^-`` carries the
    additional weight ``exp(-l h + Sigma)`` of a negative final excursion.
    """
    law = ks.law if walk is None else walk
    c = ks.charges
    N, b, T = table.N, table.b, c.T
    ell = np.arange(N + 1)
    q = 0.5 * law.tail_mass(ell)
    wp = np.ascontiguousarray(q * np.exp(-b * ell))
    wm = np.ascontiguousarray(q * np.exp(-(b + c.h) * ell))
    zplus = kernels.causal_convolve(np.ascontiguousarray(table.zc), wp)
    cls = (np.arange(T)[:, None] + ell[None, :]) % T
    Sg = c.S[cls]
    x = np.ascontiguousarray(table.zc * np.exp(-Sg))
    zminus = kernels.causal_convolve(x, wm) * np.exp(Sg)
    zf = table.zc + zplus + zminus
    for z in (zplus, zminus, zf):
        z.flags.writeable = False
    return PartitionTable(N=N, b=b, a=table.a, zc=table.zc, zf=zf,
                          zplus=zplus, zminus=zminus, m_cut=table.m_cut)


def partition_table(ks: KernelSet, N: int, b: float | None = None,
                    free: bool = True) -> PartitionTable:
    """Constrained tables, plus the free ones when ``free`` is true."""
    t = constrained_dp(ks, N, b)
    return free_dp(ks, t) if free else t


def contact_marginal(ks: KernelSet, table: PartitionTable, a: str,
                     points) -> float:
    """Probability that the first contacts are exactly ``points``.

    ``points`` is increasing in ``1..N``; the result is
    ``prod M(k_i - k_{i-1}) Z^a_{k_j}(N - k_j) / Z^a_0(N)``.
    """
    _check_boundary(a)
    pts = [int(k) for k in points]
    N, T = table.N, ks.T
    if not pts:
        return 1.0
    if any(k2 <= k1 for k1, k2 in zip(pts, pts[1:])) or pts[0] < 1 \
            or pts[-1] > N:
        raise ValueError("points must be strictly increasing within 1..N")
    z = table.tilted(a)
    logp = 0.0
    prev = 0
    for k in pts:
        m = ks.M[prev % T, k - prev]
        if m <= 0:
            return 0.0
        logp += math.log(m) - table.b * (k - prev)
        prev = k
    num = z[prev % T, N - prev]
    den = z[0, N]
    if num <= 0:
        return 0.0
    return math.exp(logp + math.log(num) - math.log(den))


def endpoint_sign_prob(ks: KernelSet, table: PartitionTable, a: str,
                       N: int | None = None) -> float:
    """Probability that the path is positive at the probed site.

    Free boundary: ``P(S_N > 0) = Z^+_N / Z^f_N``.  Constrained boundary:
    ``P(S_k > 0)`` at ``k = N // 2``, summing over the last zero ``n < k``
    and the first zero ``m > k`` of the positive excursion that covers ``k``.
    """
    _check_boundary(a)
    if N is None:
        N = table.N
    if N > table.N:
        raise ValueError("table horizon too short")
    if a == FREE:
        if table.zf is None:
            raise ValueError("free tables not built")
        return float(table.zplus[0, N] / table.zf[0, N])
    T, b = ks.T, table.b
    k = N // 2
    if k == 0 or k == N:
        return 0.0
    zc = table.zc
    K = ks.law.K
    w0 = np.exp(ks.charges.w0)
    m = np.arange(k + 1, N + 1)
    right = w0[m % T] * zc[m % T, N - m]
    tot = 0.0
    for n in range(0, k):
        ell = m - n
        tot += zc[0, n] * float(np.dot(0.5 * K[ell] * np.exp(-b * ell), right))
    return float(tot / zc[0, N])


# ---------------------------------------------------------------------------
# brute force
# ---------------------------------------------------------------------------


@dataclass
class BruteForceResult:
    """Exhaustive enumeration of all step sequences of length ``N``.

    Partition functions are for the raw Hamiltonian.  ``gauge_shift`` is the
    sum of the raw ``+1`` charges over ``1..N`` after any orientation flip;
    subtracting it gives the gauged normalizers.
    """

    N: int
    Zc: float
    Zf: float
    Zplus: float
    Zminus: float
    weights: np.ndarray = field(repr=False)
    contacts: np.ndarray = field(repr=False)
    end: np.ndarray = field(repr=False)
    mid: np.ndarray = field(repr=False)

    def _mask(self, a):
        _check_boundary(a)
        return self.end == 0 if a == CONSTRAINED else np.ones_like(self.end, bool)

    def partition(self, a):
        return self.Zc if a == CONSTRAINED else self.Zf

    def marginal(self, a, points) -> float:
        """Probability that the first contacts are exactly ``points``."""
        pts = list(points)
        w = self.weights * self._mask(a)
        kj = pts[-1]
        sel = self.contacts[:, [k - 1 for k in pts]].all(axis=1)
        sel &= self.contacts[:, :kj].sum(axis=1) == len(pts)
        return float(w[sel].sum() / w.sum())

    def endpoint_sign(self, a) -> float:
        """``P(S_N > 0)`` (free) or ``P(S_{N//2} > 0)`` (constrained)."""
        w = self.weights * self._mask(a)
        pos = self.end > 0 if a == FREE else self.mid > 0
        return float(w[pos].sum() / w.sum())


def _charge_at(arr, n):
    a = np.asarray(arr, dtype=float).ravel()
    return a[n % len(a)]


def brute_force(omega_plus, omega_minus, omega_zero, omega_zero_tilde,
                p: float, N: int) -> BruteForceResult:
    """Enumerate the ``3^N`` paths under the raw Hamiltonian.

    A bond ``(S_{n-1}, S_n)`` counts as positive or negative according to
    the side it lies on: ``sign(S_n)`` if ``S_n != 0``, else
    ``sign(S_{n-1})``, and 0 when both ends are at 0.
    """
    N = int(N)
    if N > 14:
        raise ValueError("brute force enumeration is limited to N <= 14")
    if N < 1:
        raise ValueError("N must be >= 1")
    codes = np.arange(3 ** N, dtype=np.int64)
    steps = np.empty((codes.size, N), dtype=np.int8)
    for i in range(N):
        steps[:, i] = (codes // 3 ** i) % 3 - 1
    S = np.cumsum(steps, axis=1, dtype=np.int8)
    prev = np.concatenate([np.zeros((codes.size, 1), np.int8), S[:, :-1]], axis=1)
    sgn = np.where(S != 0, np.sign(S), np.sign(prev)).astype(np.int8)
    H = np.zeros(codes.size)
    for n in range(1, N + 1):
        col = n - 1
        wp = _charge_at(omega_plus, n)
        wm = _charge_at(omega_minus, n)
        w0 = _charge_at(omega_zero, n)
        w0t = _charge_at(omega_zero_tilde, n)
        H += np.where(sgn[:, col] == 1, wp, 0.0)
        H += np.where(sgn[:, col] == -1, wm, 0.0)
        H += np.where(sgn[:, col] == 0, w0t, 0.0)
        H += np.where(S[:, col] == 0, w0, 0.0)
    moves = np.count_nonzero(steps, axis=1)
    logprob = moves * math.log(p) + (N - moves) * math.log(1 - 2 * p)
    w = np.exp(H + logprob)
    end = S[:, -1]
    mid = S[:, N // 2 - 1] if N // 2 >= 1 else np.zeros_like(end)
    return BruteForceResult(
        N=N, Zc=float(w[end == 0].sum()), Zf=float(w.sum()),
        Zplus=float(w[end > 0].sum()), Zminus=float(w[end < 0].sum()),
        weights=w, contacts=(S == 0), end=end, mid=mid)


def brute_force_gauged(spec: dict, N: int):
    """Brute-force values mapped to the gauged, oriented model.

    Returns a dict with ``logZc``, ``logZf``, ``logZplus``, ``logZminus``
    comparable with row 0 of a :class:`PartitionTable`, plus the result
    object itself under ``"raw"``.
    """
    c = normalize(spec["omega_plus"], spec["omega_minus"], spec["omega_zero"],
                  spec["omega_zero_tilde"])
    bf = brute_force(spec["omega_plus"], spec["omega_minus"],
                     spec["omega_zero"], spec["omega_zero_tilde"],
                     spec["p"], N)
    shift = c.gauge_sum(N)
    zp, zm = (bf.Zminus, bf.Zplus) if c.flipped else (bf.Zplus, bf.Zminus)

    def lg(x):
        return math.log(x) - shift if x > 0 else -math.inf

    return {"logZc": lg(bf.Zc), "logZf": lg(bf.Zf), "logZplus": lg(zp),
            "logZminus": lg(zm), "raw": bf, "charges": c}

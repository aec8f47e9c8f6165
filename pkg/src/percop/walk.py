"""The lazy simple random walk underlying the polymer.

Steps are +1 and -1 with probability ``p`` each and 0 with probability
``1 - 2p``.  This module tabulates the first-return law ``K``, its tail
masses, the constant ``cK`` of the ``n^{-3/2}`` decay, and the kernel of the
walk conditioned to stay positive.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels


class ConvergenceWarning(UserWarning):
    """A numerical limit did not settle to the requested accuracy."""


def _check_p(p):
    if not (isinstance(p, (int, float, np.floating)) and 0.0 < p < 0.5):
        raise ValueError(f"walk parameter p must lie in (0, 1/2), got {p!r}")


@dataclass(frozen=True)
class WalkLaw:
    """Tabulated first-return law of the lazy walk.

    Attributes
    ----------
    p : float
        Probability of an up step (and of a down step).
    K : ndarray, shape (n_max + 1,)
        ``K[n]`` is the probability of a first return to 0 at time ``n``;
        ``K[0] = 0``.
    Q : ndarray, shape (n_max + 1,)
        ``Q[l] = sum_{t > l} K(t)``.  Computed as ``1 - cumsum(K)``, which is
        exact up to rounding for ``l <= n_max``.
    cK : float
        Limit of ``K(n) n^{3/2}``.
    cK_converged : bool
        False when the extrapolation levels disagree by more than 1e-3.
        Short tables (``n_max < 1000``, used for exact small-``N`` work) only
        set this flag; longer ones also emit a :class:`ConvergenceWarning`.
    """

    p: float
    K: np.ndarray = field(repr=False)
    Q: np.ndarray = field(repr=False)
    cK: float
    cK_converged: bool = True

    @property
    def n_max(self) -> int:
        return len(self.K) - 1

    def tail_mass(self, ell):
        """``Q(ell) = sum_{t > ell} K(t)``; see :func:`tail_mass`."""
        return tail_mass(self, ell)

    def q(self, ell):
        """One-sided weight ``Q(ell)/2`` of an incomplete excursion."""
        return 0.5 * tail_mass(self, ell)


def _richardson(K, n_max):
    n0 = n_max // 4
    ns = np.array([n0, 2 * n0, 4 * n0])
    a = K[ns] * ns.astype(float) ** 1.5
    r1 = 2.0 * a[1:] - a[:-1]
    r2 = (4.0 * r1[1] - r1[0]) / 3.0
    return r2, r1[1]


def tail_constant(law_or_K, n_max=None):
    """Richardson-extrapolated limit of ``K(n) n^{3/2}``.

    The sequence is sampled at ``n_max/4``, ``n_max/2`` and ``n_max``, and
    two levels of extrapolation remove the ``1/n`` and ``1/n^2`` corrections.
    A :class:`ConvergenceWarning` is issued when the last two levels differ
    by more than 1e-3 in relative terms.

    Returns
    -------
    float
    """
    K = law_or_K.K if isinstance(law_or_K, WalkLaw) else np.asarray(law_or_K)
    if n_max is None:
        n_max = len(K) - 1
    if n_max < 8:
        raise ValueError("n_max too small for extrapolation")
    c2, c1 = _richardson(K, n_max)
    if abs(c2 - c1) > 1e-3 * abs(c2):
        warnings.warn(f"tail constant not converged at n_max={n_max}: "
                      f"levels {c1:.6g} and {c2:.6g}", ConvergenceWarning,
                      stacklevel=2)
    return float(c2)


@lru_cache(maxsize=16)
def first_return_law(p: float, n_max: int = 2 ** 16) -> WalkLaw:
    """Tabulate the first-return law of the lazy walk up to ``n_max``.

    Parameters
    ----------
    p : float
        Hopping probability, ``0 < p < 1/2``.
    n_max : int
        Table length.  At least 2; at least 16 is needed for the tail
        constant, and around 1e4 or more for it to be accurate.

    Returns
    -------
    WalkLaw
    """
    _check_p(p)
    if int(n_max) != n_max or n_max < 2:
        raise ValueError(f"n_max must be an integer >= 2, got {n_max!r}")
    n_max = int(n_max)
    K = kernels.first_return_law(float(p), n_max)
    Q = 1.0 - np.cumsum(K)
    Q[0] = 1.0
    np.maximum(Q, 0.0, out=Q)
    if n_max >= 16:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cK = tail_constant(K, n_max)
        converged = not any(issubclass(w.category, ConvergenceWarning)
                            for w in caught)
        if not converged and n_max >= 1000:
            warnings.warn(str(caught[-1].message), ConvergenceWarning,
                          stacklevel=2)
    else:
        cK = float(K[n_max] * n_max ** 1.5)
        converged = False
    K.flags.writeable = False
    Q.flags.writeable = False
    return WalkLaw(p=float(p), K=K, Q=Q, cK=cK, cK_converged=converged)


def tail_mass(law: WalkLaw, ell):
    """Tail mass ``Q(ell) = sum_{t > ell} K(t)``.

    Inside the table the value is exact.  Beyond ``n_max`` it is continued
    by ``Q(n_max) * sqrt((n_max + 1/2) / (ell + 1/2))``, the
    ``2 cK (ell + 1/2)^{-1/2}`` law anchored at the last exact value.
    Accepts scalars or integer arrays.
    """
    ell_arr = np.asarray(ell)
    if np.any(ell_arr < 0):
        raise ValueError("ell must be nonnegative")
    n_max = law.n_max
    inside = np.minimum(ell_arr, n_max).astype(np.int64)
    out = law.Q[inside].astype(float)
    beyond = ell_arr > n_max
    if np.any(beyond):
        scale = np.sqrt((n_max + 0.5) / (ell_arr + 0.5))
        out = np.where(beyond, law.Q[n_max] * scale, out)
    if out.ndim == 0:
        return float(out)
    return out


def return_probability(p: float, n) -> float:
    """``P(S_n = 0)`` for the lazy walk started at 0, by the step DP.

    The DP is restricted to ``|x| <= 12 sd + 2`` with ``sd = sqrt(2 p n)``;
    the discarded mass is below ``e^{-72}``.  Cost ``O(n^{3/2})``; a closed
    binomial sum in log space would be faster but loses about ``1e-10``
    relative accuracy at ``n = 1e5`` through the ``lgamma`` values.
    """
    _check_p(p)
    n = int(n)
    if n < 0:
        raise ValueError("n must be nonnegative")
    W = int(min(n, math.ceil(12.0 * math.sqrt(2.0 * p * n)) + 2))
    d = np.zeros(2 * W + 1)
    d[W] = 1.0
    new = np.empty_like(d)
    q = 1.0 - 2.0 * p
    for _ in range(n):
        np.multiply(d, q, out=new)
        new[1:] += p * d[:-1]
        new[:-1] += p * d[1:]
        d, new = new, d
    return float(d[W])


def walk_distribution(p: float, n: int) -> np.ndarray:
    """Law of ``S_n`` on ``-n..n`` by the step DP (index ``x + n``)."""
    _check_p(p)
    d = np.zeros(2 * n + 1)
    d[n] = 1.0
    for _ in range(n):
        new = (1 - 2 * p) * d
        new[1:] += p * d[:-1]
        new[:-1] += p * d[1:]
        d = new
    return d


@dataclass(frozen=True)
class ConditionedKernel:
    """Kernel of the lazy walk conditioned to stay positive.

    Obtained from the walk killed at 0 by the harmonic function
    ``h(x) = x / p``: for ``x >= 1``,
    ``p_up(x, y) = p(x, y) 1(y > 0) y / x``, and ``p_up(0, 1) = 1``.
    """

    p: float

    def row(self, x: int) -> dict:
        """Transition probabilities out of ``x`` as ``{y: prob}``."""
        if x < 0:
            raise ValueError("state must be nonnegative")
        if x == 0:
            return {1: 1.0}
        p = self.p
        out = {x + 1: p * (x + 1) / x, x: 1.0 - 2.0 * p}
        if x >= 2:
            out[x - 1] = p * (x - 1) / x
        return out

    def __call__(self, x: int, y: int) -> float:
        return self.row(x).get(y, 0.0)

    def simulate(self, n_steps: int, rng: np.random.Generator,
                 start: int = 0) -> np.ndarray:
        """A trajectory of ``n_steps`` steps started at ``start``."""
        p = self.p
        u = rng.random(n_steps)
        out = np.empty(n_steps + 1, dtype=np.int64)
        x = start
        out[0] = x
        for i in range(n_steps):
            if x == 0:
                x = 1
            else:
                pu = p * (x + 1) / x
                if u[i] < pu:
                    x += 1
                elif u[i] >= pu + 1.0 - 2.0 * p:
                    x -= 1
            out[i + 1] = x
        return out


def conditioned_step_kernel(p: float) -> ConditionedKernel:
    """The walk conditioned to stay positive, as a :class:`ConditionedKernel`."""
    _check_p(p)
    return ConditionedKernel(float(p))

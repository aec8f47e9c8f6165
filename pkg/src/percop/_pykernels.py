"""Pure Python / numpy implementations of the hot loops.

This module is the reference semantics for the compiled extension
``percop._ckernels``.  Both modules expose the same functions and consume
random numbers in exactly the same order, so that a given seed produces the
same paths whichever backend is active.

Random numbers are taken one at a time from ``numpy.random.Generator``
objects via ``Generator.random()``; the compiled kernels call the
``next_double`` slot of the same bit generators, which yields the identical
stream.
"""

import math

import numpy as np

# ---------------------------------------------------------------------------
# walk
# ---------------------------------------------------------------------------


def first_return_law(p, n_max):
    """First-return probabilities of the lazy walk, ``K[0..n_max]``.

    ``K[0]`` is zero.  For ``n >= 2`` the value is ``2 p^2 v_{n-2}(1)`` where
    ``v_j`` is the law at time ``j`` of the walk started at height 1 and
    killed on reaching 0.  Heights that can no longer come back to 1 before
    time ``n_max - 2`` are dropped, which halves the work.
    """
    K = np.zeros(n_max + 1)
    K[1] = 1.0 - 2.0 * p
    stay = 1.0 - 2.0 * p
    v = np.zeros(n_max + 3)
    v[1] = 1.0
    for j in range(n_max - 1):
        K[j + 2] = 2.0 * p * p * v[1]
        H = min(j + 2, n_max - 2 - j)
        if H < 1:
            break
        new = stay * v[1:H + 1] + p * (v[0:H] + v[2:H + 2])
        v[1:H + 1] = new
    return K


# ---------------------------------------------------------------------------
# renewal convolutions
# ---------------------------------------------------------------------------


def renewal_convolve(a, N, m_cut):
    """Solve the forced-class renewal equation.

    ``z[alpha, n] = sum_{m=1}^{min(n, m_cut)} a[alpha, m] z[(alpha+m) % T, n-m]``
    with ``z[:, 0] = 1``.

    Internally the values are kept along diagonals
    ``D[c, j] = z[(c - j) % T, j]`` so that each entry is one dot product
    against a reversed contiguous slice.
    """
    T = a.shape[0]
    z = np.zeros((T, N + 1))
    D = np.zeros((T, N + 1))
    z[:, 0] = 1.0
    D[:, 0] = 1.0
    for n in range(1, N + 1):
        mc = min(n, m_cut)
        for alpha in range(T):
            c = (alpha + n) % T
            z[alpha, n] = np.dot(a[alpha, 1:mc + 1], D[c, n - mc:n][::-1])
        for c in range(T):
            D[c, n] = z[(c - n) % T, n]
    return z


def causal_convolve(x, w):
    """Row-wise ``y[r, n] = sum_{l=1}^{n} x[r, n-l] w[l]``."""
    R, L = x.shape
    ww = np.array(w[:L], dtype=float)
    ww[0] = 0.0
    y = np.empty_like(x)
    for r in range(R):
        y[r] = np.convolve(x[r], ww)[:L]
    return y


# ---------------------------------------------------------------------------
# excursion moduli
# ---------------------------------------------------------------------------


def _lchoose(n, k):
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _pick_weighted(logw, u):
    """Index drawn from unnormalized log weights with one uniform."""
    mx = max(logw)
    tot = 0.0
    for lw in logw:
        tot += math.exp(lw - mx)
    target = u * tot
    acc = 0.0
    for i, lw in enumerate(logw):
        acc += math.exp(lw - mx)
        if target < acc:
            return i
    return len(logw) - 1


def _choose_slots(r, need, gen):
    """Uniform ``need``-subset of ``range(r)``, returned as a boolean list.

    A uniform is drawn only when the slot is not already forced.
    """
    out = [False] * r
    for i in range(r):
        if need == 0:
            break
        if need == r - i or gen.random() * (r - i) < need:
            out[i] = True
            need -= 1
    return out


def _excursion(path, start, length, sigma, p, gen, limit):
    """Write a complete excursion of the given length and sign.

    Heights are written at ``path[start+1 .. start+length]`` but only for
    indices ``<= limit``.  The modulus is drawn exactly: the number of moving
    steps among the ``length-2`` interior slots, their positions, and then a
    uniform Dyck path on the moving steps.
    """
    end = start + length
    if start + 1 <= limit:
        path[start + 1] = sigma
    r = length - 2
    if r > 0:
        lp = math.log(p)
        ls = math.log(1.0 - 2.0 * p)
        base = math.lgamma(r + 1)
        logw = [base - math.lgamma(r - 2 * k + 1) - math.lgamma(k + 1)
                - math.lgamma(k + 2) + 2 * k * lp + (r - 2 * k) * ls
                for k in range(r // 2 + 1)]
        k = _pick_weighted(logw, gen.random())
        moves = _choose_slots(r, 2 * k, gen)
        hrel = 0
        s = 2 * k
        for i in range(r):
            if moves[i]:
                pu = (s - hrel) * (hrel + 2) / (2.0 * s * (hrel + 1))
                if gen.random() < pu:
                    hrel += 1
                else:
                    hrel -= 1
                s -= 1
            idx = start + 2 + i
            if idx <= limit:
                path[idx] = sigma * (1 + hrel)
    if end <= limit:
        path[end] = 0


def _window(s, h):
    """P(-h <= X_s <= h + 1) for the fair +-1 walk ``X`` after ``s`` steps."""
    lo = max(0, (s - h + 1) // 2)
    hi = min(s, (s + h + 1) // 2)
    tot = 0.0
    c = s * math.log(2.0)
    for u in range(lo, hi + 1):
        tot += math.exp(_lchoose(s, u) - c)
    return tot


def _meander(path, start, length, sigma, p, gen):
    """Write a free final excursion that stays away from zero."""
    path[start + 1] = sigma
    r = length - 1
    if r <= 0:
        return
    lp = math.log(p)
    ls = math.log(1.0 - 2.0 * p)
    logw = [_lchoose(r, j) + j * lp + (r - j) * ls + _lchoose(j, j // 2)
            for j in range(r + 1)]
    j = _pick_weighted(logw, gen.random())
    moves = _choose_slots(r, j, gen)
    hrel = 0
    s = j
    for i in range(r):
        if moves[i]:
            pu = 0.5 * _window(s - 1, hrel + 1) / _window(s, hrel)
            if gen.random() < pu:
                hrel += 1
            else:
                hrel -= 1
            s -= 1
        path[start + 2 + i] = sigma * (1 + hrel)


def _uparrow(path, start, stop, sigma, p, gen):
    """Run the walk conditioned to stay positive from 0 at ``start``."""
    x = 0
    for n in range(start + 1, stop + 1):
        if x == 0:
            x = 1
        else:
            u = gen.random()
            pu = p * (x + 1) / x
            if u < pu:
                x += 1
            elif u >= pu + 1.0 - 2.0 * p:
                x -= 1
        path[n] = sigma * x


def _sign(u, length, h, dS):
    """Excursion sign: ``+1`` with probability ``1/(1+exp(-l h + dS))``."""
    e = -length * h + dS
    if e > 0:
        pplus = math.exp(-e) / (1.0 + math.exp(-e))
    else:
        pplus = 1.0 / (1.0 + math.exp(e))
    return 1 if u < pplus else -1


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


def sample_finite(a, za, S, h, p, N, free, n_samples, g_contact, g_sign,
                  g_modulus):
    """Exact sampler for the finite-volume polymer measure.

    Parameters
    ----------
    a : (T, N+1) array
        Tilted return weights ``M_alpha(m) exp(-b m)``.
    za : (T, N+1) array
        Tilted partition functions for the chosen boundary condition.  In
        the free case the weight left over after all contact candidates is
        the weight of stopping with an incomplete excursion.
    S : (T,) array
        Class potentials, ``Sigma_{alpha,beta} = S[beta] - S[alpha]``.
    """
    T = a.shape[0]
    paths = np.zeros((n_samples, N + 1), dtype=np.int64)
    for s in range(n_samples):
        path = paths[s]
        pos = 0
        while pos < N:
            alpha = pos % T
            rem = N - pos
            target = g_contact.random() * za[alpha, rem]
            acc = 0.0
            chosen = -1
            for t in range(pos + 1, N + 1):
                acc += a[alpha, t - pos] * za[t % T, N - t]
                if target < acc:
                    chosen = t
                    break
            if chosen < 0 and not free:
                chosen = N
            if chosen >= 0:
                ell = chosen - pos
                if ell == 1:
                    path[chosen] = 0
                else:
                    sg = _sign(g_sign.random(), ell, h,
                               S[chosen % T] - S[alpha])
                    _excursion(path, pos, ell, sg, p, g_modulus, N)
                pos = chosen
            else:
                sg = _sign(g_sign.random(), rem, h, S[N % T] - S[alpha])
                _meander(path, pos, rem, sg, p, g_modulus)
                pos = N
    return paths


def sample_infinite(cum, tailcum, escape, plus_last, S, h, p, H, n_samples,
                    defective, g_contact, g_sign, g_modulus, g_last,
                    max_steps=10_000_000):
    """Sampler for the infinite-volume contact process up to horizon ``H``.

    Parameters
    ----------
    cum : (T, n_cut+1) array
        Cumulative holding-time law, ``cum[alpha, n] = sum_{m<=n} Gamma_alpha(m)``.
    tailcum : (T, T) array
        Cumulative law of the holding-time mass beyond ``n_cut`` split by
        target class.
    escape : (T,) array
        Escape weight of each class (zero for a proper kernel).
    plus_last : (T,) array
        Probability that the final, infinite excursion is positive given the
        class of the last contact.

    Returns
    -------
    paths, last_sign, n_contacts, censored
    """
    T, ncp1 = cum.shape
    n_cut = ncp1 - 1
    paths = np.zeros((n_samples, H + 1), dtype=np.int64)
    last_sign = np.zeros(n_samples, dtype=np.int64)
    n_contacts = np.zeros(n_samples, dtype=np.int64)
    censored = np.zeros(n_samples, dtype=np.int64)
    for s in range(n_samples):
        path = paths[s]
        pos = 0
        alpha = 0
        steps = 0
        escaped = False
        while True:
            if not defective and pos >= H:
                break
            steps += 1
            if steps > max_steps:
                raise RuntimeError("renewal chain did not terminate")
            u = g_contact.random()
            if u < escape[alpha]:
                escaped = True
                break
            u -= escape[alpha]
            row = cum[alpha]
            cut = False
            if u < row[n_cut]:
                n = int(np.searchsorted(row, u, side="right"))
            else:
                u -= row[n_cut]
                trow = tailcum[alpha]
                c = int(np.searchsorted(trow, u, side="right"))
                if c >= T:
                    c = T - 1
                    while c > 0 and trow[c] == trow[c - 1]:
                        c -= 1
                n = n_cut + 1 + (c - alpha - n_cut - 1) % T
                cut = True
            if pos < H:
                if n == 1:
                    path[pos + 1] = 0
                else:
                    beta = (alpha + n) % T
                    sg = _sign(g_sign.random(), n, h, S[beta] - S[alpha])
                    if cut:
                        _uparrow(path, pos, H, sg, p, g_modulus)
                        censored[s] = 1
                    else:
                        _excursion(path, pos, n, sg, p, g_modulus, H)
            pos += n
            alpha = (alpha + n) % T
            n_contacts[s] += 1
        if escaped:
            sg = 1 if g_last.random() < plus_last[alpha] else -1
            last_sign[s] = sg
            if pos < H:
                _uparrow(path, pos, H, sg, p, g_modulus)
                censored[s] = 1
    return paths, last_sign, n_contacts, censored

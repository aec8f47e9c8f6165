# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot loops.

Every function mirrors the one with the same name in ``percop._pykernels``
and consumes random numbers in the same order, so both backends return the
same paths for the same generators.
"""

import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp, log, lgamma
from libc.stdlib cimport malloc, free
from numpy.random cimport bitgen_t

cnp.import_array()


cdef inline bitgen_t* _bitgen(object gen) except NULL:
    capsule = gen.bit_generator.capsule
    return <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef inline double _rand(bitgen_t* g) noexcept nogil:
    return g.next_double(g.state)


# ---------------------------------------------------------------------------
# walk
# ---------------------------------------------------------------------------

def first_return_law(double p, Py_ssize_t n_max):
    cdef cnp.ndarray[double, ndim=1] Karr = np.zeros(n_max + 1)
    cdef cnp.ndarray[double, ndim=1] va = np.zeros(n_max + 3)
    cdef cnp.ndarray[double, ndim=1] vb = np.zeros(n_max + 3)
    cdef double* K = &Karr[0]
    cdef double* v = &va[0]
    cdef double* w = &vb[0]
    cdef double* tmp
    cdef double stay = 1.0 - 2.0 * p
    cdef double pp = 2.0 * p * p
    cdef Py_ssize_t j, x, H
    K[1] = stay
    v[1] = 1.0
    with nogil:
        for j in range(n_max - 1):
            K[j + 2] = pp * v[1]
            H = j + 2
            if n_max - 2 - j < H:
                H = n_max - 2 - j
            if H < 1:
                break
            for x in range(1, H + 1):
                w[x] = stay * v[x] + p * (v[x - 1] + v[x + 1])
            # keep entries just above the window consistent with the
            # in-place numpy update of the reference implementation
            w[H + 1] = v[H + 1]
            tmp = v
            v = w
            w = tmp
    return Karr


# ---------------------------------------------------------------------------
# renewal convolutions
# ---------------------------------------------------------------------------

def renewal_convolve(const double[:, ::1] a, Py_ssize_t N, Py_ssize_t m_cut):
    cdef Py_ssize_t T = a.shape[0]
    cdef cnp.ndarray[double, ndim=2] zarr = np.zeros((T, N + 1))
    cdef cnp.ndarray[double, ndim=2] Darr = np.zeros((T, N + 1))
    cdef double[:, ::1] z = zarr
    cdef double[:, ::1] D = Darr
    cdef Py_ssize_t n, m, mc, al, c
    cdef double acc
    cdef const double* ar
    cdef double* dr
    for al in range(T):
        z[al, 0] = 1.0
        D[al, 0] = 1.0
    with nogil:
        for n in range(1, N + 1):
            mc = n if n < m_cut else m_cut
            for al in range(T):
                c = (al + n) % T
                ar = &a[al, 0]
                dr = &D[c, 0]
                acc = 0.0
                for m in range(1, mc + 1):
                    acc = acc + ar[m] * dr[n - m]
                z[al, n] = acc
            for c in range(T):
                D[c, n] = z[((c - n) % T + T) % T, n]
    return zarr


def causal_convolve(const double[:, ::1] x, const double[::1] w):
    cdef Py_ssize_t R = x.shape[0]
    cdef Py_ssize_t L = x.shape[1]
    cdef cnp.ndarray[double, ndim=2] yarr = np.zeros((R, L))
    cdef double[:, ::1] y = yarr
    cdef Py_ssize_t r, n, l
    cdef double acc
    with nogil:
        for r in range(R):
            for n in range(1, L):
                acc = 0.0
                for l in range(1, n + 1):
                    acc = acc + x[r, n - l] * w[l]
                y[r, n] = acc
    return yarr


# ---------------------------------------------------------------------------
# excursion moduli
# ---------------------------------------------------------------------------

cdef inline double _lchoose(double n, double k) noexcept nogil:
    return lgamma(n + 1.0) - lgamma(k + 1.0) - lgamma(n - k + 1.0)


cdef Py_ssize_t _pick_weighted(double* logw, Py_ssize_t n, double u) noexcept nogil:
    cdef Py_ssize_t i
    cdef double mx = logw[0]
    cdef double tot = 0.0
    cdef double acc = 0.0
    cdef double target
    for i in range(1, n):
        if logw[i] > mx:
            mx = logw[i]
    for i in range(n):
        tot += exp(logw[i] - mx)
    target = u * tot
    for i in range(n):
        acc += exp(logw[i] - mx)
        if target < acc:
            return i
    return n - 1


cdef void _choose_slots(char* out, Py_ssize_t r, Py_ssize_t need, bitgen_t* g) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(r):
        out[i] = 0
    for i in range(r):
        if need == 0:
            break
        if need == r - i or _rand(g) * (r - i) < need:
            out[i] = 1
            need -= 1


cdef int _excursion(long long* path, Py_ssize_t start, Py_ssize_t length,
                    long long sigma, double p, bitgen_t* g,
                    Py_ssize_t limit) noexcept nogil:
    cdef Py_ssize_t end = start + length
    cdef Py_ssize_t r = length - 2
    cdef Py_ssize_t k, i, idx, nk, s, hrel
    cdef double lp, ls, base, pu
    cdef double* logw
    cdef char* moves
    if start + 1 <= limit:
        path[start + 1] = sigma
    if r > 0:
        lp = log(p)
        ls = log(1.0 - 2.0 * p)
        base = lgamma(r + 1.0)
        nk = r // 2 + 1
        logw = <double*> malloc(nk * sizeof(double))
        moves = <char*> malloc(r * sizeof(char))
        if logw == NULL or moves == NULL:
            free(logw)
            free(moves)
            return -1
        for k in range(nk):
            logw[k] = (base - lgamma(r - 2.0 * k + 1.0) - lgamma(k + 1.0)
                       - lgamma(k + 2.0) + 2.0 * k * lp + (r - 2.0 * k) * ls)
        k = _pick_weighted(logw, nk, _rand(g))
        _choose_slots(moves, r, 2 * k, g)
        hrel = 0
        s = 2 * k
        for i in range(r):
            if moves[i]:
                pu = (s - hrel) * (hrel + 2.0) / (2.0 * s * (hrel + 1.0))
                if _rand(g) < pu:
                    hrel += 1
                else:
                    hrel -= 1
                s -= 1
            idx = start + 2 + i
            if idx <= limit:
                path[idx] = sigma * (1 + hrel)
        free(logw)
        free(moves)
    if end <= limit:
        path[end] = 0
    return 0


cdef double _window(Py_ssize_t s, Py_ssize_t h) noexcept nogil:
    cdef Py_ssize_t lo, hi, u, t
    cdef double tot = 0.0
    cdef double c = s * log(2.0)
    t = s - h + 1
    # python floor division semantics for a possibly negative numerator
    if t >= 0:
        lo = t // 2
    else:
        lo = -((-t + 1) // 2)
    if lo < 0:
        lo = 0
    hi = (s + h + 1) // 2
    if hi > s:
        hi = s
    for u in range(lo, hi + 1):
        tot += exp(_lchoose(s, u) - c)
    return tot


cdef int _meander(long long* path, Py_ssize_t start, Py_ssize_t length,
                  long long sigma, double p, bitgen_t* g) noexcept nogil:
    cdef Py_ssize_t r = length - 1
    cdef Py_ssize_t j, i, s, hrel
    cdef double lp, ls, pu
    cdef double* logw
    cdef char* moves
    path[start + 1] = sigma
    if r <= 0:
        return 0
    lp = log(p)
    ls = log(1.0 - 2.0 * p)
    logw = <double*> malloc((r + 1) * sizeof(double))
    moves = <char*> malloc(r * sizeof(char))
    if logw == NULL or moves == NULL:
        free(logw)
        free(moves)
        return -1
    for j in range(r + 1):
        logw[j] = _lchoose(r, j) + j * lp + (r - j) * ls + _lchoose(j, j // 2)
    j = _pick_weighted(logw, r + 1, _rand(g))
    _choose_slots(moves, r, j, g)
    hrel = 0
    s = j
    for i in range(r):
        if moves[i]:
            pu = 0.5 * _window(s - 1, hrel + 1) / _window(s, hrel)
            if _rand(g) < pu:
                hrel += 1
            else:
                hrel -= 1
            s -= 1
        path[start + 2 + i] = sigma * (1 + hrel)
    free(logw)
    free(moves)
    return 0


cdef void _uparrow(long long* path, Py_ssize_t start, Py_ssize_t stop,
                   long long sigma, double p, bitgen_t* g) noexcept nogil:
    cdef Py_ssize_t n
    cdef long long x = 0
    cdef double u, pu
    for n in range(start + 1, stop + 1):
        if x == 0:
            x = 1
        else:
            u = _rand(g)
            pu = p * (x + 1) / <double> x
            if u < pu:
                x += 1
            elif u >= pu + 1.0 - 2.0 * p:
                x -= 1
        path[n] = sigma * x


cdef inline long long _sign(double u, Py_ssize_t length, double h, double dS) noexcept nogil:
    cdef double e = -length * h + dS
    cdef double pplus
    if e > 0:
        pplus = exp(-e) / (1.0 + exp(-e))
    else:
        pplus = 1.0 / (1.0 + exp(e))
    return 1 if u < pplus else -1


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def sample_finite(const double[:, ::1] a, const double[:, ::1] za,
                  const double[::1] S,
                  double h, double p, Py_ssize_t N, bint free_end,
                  Py_ssize_t n_samples, g_contact, g_sign, g_modulus):
    cdef Py_ssize_t T = a.shape[0]
    cdef cnp.ndarray[long long, ndim=2] parr = np.zeros((n_samples, N + 1), dtype=np.int64)
    cdef long long[:, ::1] paths = parr
    cdef bitgen_t* gc = _bitgen(g_contact)
    cdef bitgen_t* gs = _bitgen(g_sign)
    cdef bitgen_t* gm = _bitgen(g_modulus)
    cdef Py_ssize_t s, pos, al, rem, t, chosen, ell
    cdef double target, acc
    cdef long long sg
    cdef long long* path
    cdef int err = 0
    with nogil:
        for s in range(n_samples):
            path = &paths[s, 0]
            pos = 0
            while pos < N:
                al = pos % T
                rem = N - pos
                target = _rand(gc) * za[al, rem]
                acc = 0.0
                chosen = -1
                for t in range(pos + 1, N + 1):
                    acc = acc + a[al, t - pos] * za[t % T, N - t]
                    if target < acc:
                        chosen = t
                        break
                if chosen < 0 and not free_end:
                    chosen = N
                if chosen >= 0:
                    ell = chosen - pos
                    if ell == 1:
                        path[chosen] = 0
                    else:
                        sg = _sign(_rand(gs), ell, h, S[chosen % T] - S[al])
                        err |= _excursion(path, pos, ell, sg, p, gm, N)
                    pos = chosen
                else:
                    sg = _sign(_rand(gs), rem, h, S[N % T] - S[al])
                    err |= _meander(path, pos, rem, sg, p, gm)
                    pos = N
    if err:
        raise MemoryError("excursion buffer allocation failed")
    return parr


cdef Py_ssize_t _search_right(const double* row, Py_ssize_t n, double u) noexcept nogil:
    # first index i in [0, n) with row[i] > u, or n when there is none
    cdef Py_ssize_t lo = 0
    cdef Py_ssize_t hi = n
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) // 2
        if row[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo


def sample_infinite(const double[:, ::1] cum, const double[:, ::1] tailcum,
                    const double[::1] escape, const double[::1] plus_last,
                    const double[::1] S,
                    double h, double p, Py_ssize_t H, Py_ssize_t n_samples,
                    bint defective, g_contact, g_sign, g_modulus, g_last,
                    long long max_steps=10_000_000):
    cdef Py_ssize_t T = cum.shape[0]
    cdef Py_ssize_t n_cut = cum.shape[1] - 1
    cdef cnp.ndarray[long long, ndim=2] parr = np.zeros((n_samples, H + 1), dtype=np.int64)
    cdef cnp.ndarray[long long, ndim=1] larr = np.zeros(n_samples, dtype=np.int64)
    cdef cnp.ndarray[long long, ndim=1] carr = np.zeros(n_samples, dtype=np.int64)
    cdef cnp.ndarray[long long, ndim=1] xarr = np.zeros(n_samples, dtype=np.int64)
    cdef long long[:, ::1] paths = parr
    cdef long long[::1] last_sign = larr
    cdef long long[::1] n_contacts = carr
    cdef long long[::1] censored = xarr
    cdef bitgen_t* gc = _bitgen(g_contact)
    cdef bitgen_t* gs = _bitgen(g_sign)
    cdef bitgen_t* gm = _bitgen(g_modulus)
    cdef bitgen_t* gl = _bitgen(g_last)
    cdef Py_ssize_t s, pos, al, n, c, beta
    cdef long long steps
    cdef bint escaped, cut
    cdef double u
    cdef long long sg
    cdef long long* path
    cdef int err = 0
    cdef int runaway = 0
    with nogil:
        for s in range(n_samples):
            path = &paths[s, 0]
            pos = 0
            al = 0
            steps = 0
            escaped = False
            while True:
                if not defective and pos >= H:
                    break
                steps += 1
                if steps > max_steps:
                    runaway = 1
                    break
                u = _rand(gc)
                if u < escape[al]:
                    escaped = True
                    break
                u = u - escape[al]
                cut = False
                if u < cum[al, n_cut]:
                    n = _search_right(&cum[al, 0], n_cut + 1, u)
                else:
                    u = u - cum[al, n_cut]
                    c = _search_right(&tailcum[al, 0], T, u)
                    if c >= T:
                        c = T - 1
                        while c > 0 and tailcum[al, c] == tailcum[al, c - 1]:
                            c -= 1
                    n = n_cut + 1 + (((c - al - n_cut - 1) % T) + T) % T
                    cut = True
                if pos < H:
                    if n == 1:
                        path[pos + 1] = 0
                    else:
                        beta = (al + n) % T
                        sg = _sign(_rand(gs), n, h, S[beta] - S[al])
                        if cut:
                            _uparrow(path, pos, H, sg, p, gm)
                            censored[s] = 1
                        else:
                            err |= _excursion(path, pos, n, sg, p, gm, H)
                pos += n
                al = (al + n) % T
                n_contacts[s] += 1
            if runaway:
                break
            if escaped:
                sg = 1 if _rand(gl) < plus_last[al] else -1
                last_sign[s] = sg
                if pos < H:
                    _uparrow(path, pos, H, sg, p, gm)
                    censored[s] = 1
    if runaway:
        raise RuntimeError("renewal chain did not terminate")
    if err:
        raise MemoryError("excursion buffer allocation failed")
    return parr, larr, carr, xarr

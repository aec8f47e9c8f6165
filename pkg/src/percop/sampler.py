"""Path samplers for the finite- and infinite-volume polymer measures.

A path is built in three layers: the contact set, one sign per excursion,
and the modulus of each excursion.  Finite-volume contacts are drawn
backwards-exactly from the partition-function tables; infinite-volume
contacts come from a Markov renewal kernel.

Randomness comes from ``numpy.random.Philox`` streams.  Each layer has its
own stream, keyed by ``(seed, layer tag, chunk index)`` through
``SeedSequence.spawn_key``, and samples are produced in fixed-size chunks,
so a batch is reproducible bit for bit whatever the chunking of the work
across processes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .charges import KernelSet
from .limits import GibbsDecomposition, SemiMarkovKernel, renewal_mass
from .partition import CONSTRAINED, FREE, PartitionTable

TAG_CONTACT = 1
TAG_SIGN = 2
TAG_MODULUS = 3
TAG_LAST_SIGN = 4

CHUNK = 4096


def streams(seed: int, chunk: int, tags=(TAG_CONTACT, TAG_SIGN, TAG_MODULUS)):
    """Independent generators for one chunk, one per layer tag."""
    return [np.random.Generator(np.random.Philox(
        np.random.SeedSequence(int(seed), spawn_key=(int(t), int(chunk)))))
        for t in tags]


@dataclass(frozen=True)
class PathSample:
    """One sampled path ``S_0..S_N`` with its contacts and excursion signs."""

    steps: np.ndarray
    contacts: np.ndarray
    signs: np.ndarray
    seed: int


def excursion_signs(path: np.ndarray) -> np.ndarray:
    """Sign of each excursion between consecutive zeros (0 for length 1).

    A final incomplete excursion contributes its sign as well.
    """
    zeros = np.flatnonzero(path == 0)
    out = []
    for k, z in enumerate(zeros):
        if z + 1 >= len(path):
            break
        out.append(int(np.sign(path[z + 1])))
    return np.array(out, dtype=np.int64)


@dataclass
class PathBatch:
    """A batch of sampled paths, stored row-wise in the raw orientation."""

    paths: np.ndarray = field(repr=False)
    seed: int
    last_sign: np.ndarray | None = field(default=None, repr=False)
    censored: np.ndarray | None = field(default=None, repr=False)
    n_contacts: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return self.paths.shape[0]

    def sample(self, i: int) -> PathSample:
        path = self.paths[i]
        return PathSample(steps=path, contacts=np.flatnonzero(path == 0),
                          signs=excursion_signs(path), seed=self.seed)

    def contact_fraction(self) -> np.ndarray:
        """Fraction of sites ``1..N`` in contact, per path."""
        return (self.paths[:, 1:] == 0).mean(axis=1)

    def sign_average(self) -> np.ndarray:
        """``(1/N) sum_n sign(S_n)`` per path, bond convention included."""
        S = self.paths
        cur = np.sign(S[:, 1:])
        prev = np.sign(S[:, :-1])
        sg = np.where(cur != 0, cur, prev)
        return sg.mean(axis=1)

    def summary(self) -> dict:
        """JSON-ready batch statistics."""
        S_N = self.paths[:, -1]
        out = {"n_samples": int(len(self)), "N": int(self.paths.shape[1] - 1),
               "seed": int(self.seed),
               "contact_fraction": float(self.contact_fraction().mean()),
               "endpoint_mean": float(S_N.mean()),
               "endpoint_positive": float((S_N > 0).mean()),
               "endpoint_zero": float((S_N == 0).mean()),
               "sign_average": float(self.sign_average().mean())}
        if self.last_sign is not None and np.any(self.last_sign != 0):
            esc = self.last_sign != 0
            out["escaped_fraction"] = float(esc.mean())
            out["last_sign_positive"] = float((self.last_sign[esc] > 0).mean())
        if self.censored is not None:
            out["censored_fraction"] = float(self.censored.mean())
        return out


def _chunks(n_samples, chunk_size):
    k = 0
    start = 0
    while start < n_samples:
        yield k, start, min(chunk_size, n_samples - start)
        start += chunk_size
        k += 1


def sample_finite(ks: KernelSet, table: PartitionTable, a: str,
                  N: int | None = None, n_samples: int = 1, seed: int = 0,
                  chunk_size: int = CHUNK, backend: str | None = None,
                  chunks=None) -> PathBatch:
    """Exact samples from the finite-volume measure with boundary ``a``.

    Parameters
    ----------
    ks, table
        Kernels and partition tables; the free tables are needed for
        ``a = "free"``.
    N : int, optional
        Horizon; defaults to ``table.N``.
    n_samples, seed, chunk_size
        Batch size and the stream key.  ``chunk_size`` must be kept fixed
        for reproducibility.
    backend : {"compiled", "python"}, optional
    chunks : iterable of int, optional
        Only produce these chunk indices (used by parallel drivers).

    Returns
    -------
    PathBatch
    """
    if a not in (FREE, CONSTRAINED):
        raise ValueError("boundary must be 'free' or 'constrained'")
    N = table.N if N is None else int(N)
    if N != table.N:
        raise ValueError(f"table horizon {table.N} does not match N={N}")
    if N < 1:
        raise ValueError("N must be >= 1")
    impl = kernels.get_backend(backend)
    za = np.ascontiguousarray(table.tilted(a))
    aa = np.ascontiguousarray(table.a)
    S = np.ascontiguousarray(ks.charges.S, dtype=float)
    parts = []
    for k, start, size in _chunks(n_samples, chunk_size):
        if chunks is not None and k not in chunks:
            continue
        gc, gs, gm = streams(seed, k)
        parts.append(impl.sample_finite(aa, za, S, float(ks.charges.h),
                                        float(ks.law.p), N, a == FREE, size,
                                        gc, gs, gm))
    paths = np.concatenate(parts) if parts else np.zeros((0, N + 1), np.int64)
    if ks.charges.flipped:
        paths = -paths
    return PathBatch(paths=paths, seed=int(seed))


def _infinite_tables(kernel: SemiMarkovKernel):
    total = kernel.row_sums()
    hold = kernel.hold / total[:, None]
    cum = np.ascontiguousarray(np.cumsum(hold, axis=1))
    tailcum = np.ascontiguousarray(np.cumsum(kernel.tail / total[:, None],
                                             axis=1))
    escape = np.ascontiguousarray(kernel.escape / total)
    return cum, tailcum, escape


def sample_infinite(ks: KernelSet, kernel: SemiMarkovKernel,
                    gd: GibbsDecomposition | None = None,
                    eta: int | None = None, a: str | None = None,
                    horizon: int = 1000, n_samples: int = 1, seed: int = 0,
                    chunk_size: int = CHUNK,
                    backend: str | None = None) -> PathBatch:
    """Samples of the infinite-volume measure, observed up to ``horizon``.

    For a proper kernel the contact process is run past the horizon.  For a
    defective kernel it runs until it escapes; the last sign is drawn with
    the probability of a positive final excursion given the class of the
    last contact, which averages to ``r(eta, a)``, and the final excursion
    is the walk conditioned to stay positive.  Paths whose final excursion is
    cut by the horizon are flagged in ``censored``; so are the rare
    excursions longer than the kernel table, which are filled the same way.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if horizon > kernel.n_cut:
        raise ValueError(f"horizon {horizon} exceeds the kernel table "
                         f"({kernel.n_cut})")
    if kernel.defective:
        if gd is None:
            raise ValueError("a defective kernel needs the Gibbs decomposition")
        eta = kernel.eta if eta is None else eta
        a = kernel.boundary if a is None else a
        if eta is None or a is None:
            raise ValueError("need eta and the boundary for a defective kernel")
        if (kernel.eta, kernel.boundary) != (eta % ks.T, a):
            raise ValueError("kernel was built for a different (eta, a)")
        plus = np.ascontiguousarray(gd.plus_given_last(ks, eta % ks.T, a))
    else:
        plus = np.zeros(ks.T)
    impl = kernels.get_backend(backend)
    cum, tailcum, escape = _infinite_tables(kernel)
    S = np.ascontiguousarray(ks.charges.S, dtype=float)
    parts = []
    for k, start, size in _chunks(n_samples, chunk_size):
        gens = streams(seed, k, (TAG_CONTACT, TAG_SIGN, TAG_MODULUS,
                                 TAG_LAST_SIGN))
        parts.append(impl.sample_infinite(
            cum, tailcum, escape, plus, S, float(ks.charges.h),
            float(ks.law.p), int(horizon), size, bool(kernel.defective),
            *gens))
    paths = np.concatenate([p[0] for p in parts])
    last = np.concatenate([p[1] for p in parts])
    ncon = np.concatenate([p[2] for p in parts])
    cens = np.concatenate([p[3] for p in parts])
    if ks.charges.flipped:
        paths = -paths
        last = -last
    return PathBatch(paths=paths, seed=int(seed), last_sign=last,
                     censored=cens, n_contacts=ncon)


def bridge_law(p: float, ell: int) -> dict:
    """Exact law of a positive excursion of length ``ell`` by enumeration.

    Returns ``{heights tuple: probability}`` for the interior heights.
    Meant for small ``ell`` (tests and diagnostics).
    """
    import itertools

    out = {}
    tot = 0.0
    for st in itertools.product((-1, 0, 1), repeat=ell):
        s = np.cumsum(st)
        if s[-1] != 0 or np.any(s[:-1] <= 0):
            continue
        w = float(np.prod([p if x else 1 - 2 * p for x in st]))
        out[tuple(int(v) for v in s[:-1])] = w
        tot += w
    return {k: v / tot for k, v in out.items()}


__all__ = ["PathSample", "PathBatch", "sample_finite", "sample_infinite",
           "renewal_mass", "bridge_law", "streams", "excursion_signs"]

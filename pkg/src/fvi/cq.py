"""Convolution quadrature for the kernel K(s) = s^(-exponent).

A positive exponent discretizes the fractional integral of that order, a
negative exponent the fractional derivative of order |exponent|.  Matrix
weights come from a Runge-Kutta generating matrix evaluated on a contour
inside the unit disc; scalar midpoint-rule weights come from an exact
power-series recurrence.
"""

import threading
from dataclasses import dataclass, field

import numpy as np

from .tableau import ButcherTableau

__all__ = [
    "WeightSequence",
    "ScalarWeightSequence",
    "StageTrajectory",
    "compute_weights",
    "apply_retarded",
    "apply_advanced",
    "midcq_weights",
    "apply_midcq",
]

#: eigenvector condition number beyond which a contour point counts as degenerate
_COND_LIMIT = 1e12
#: rows of the Fourier matrix evaluated per block in the direct contour sum
_CHUNK = 256


@dataclass(frozen=True)
class WeightSequence:
    """Matrix convolution weights W_0..W_N for one kernel, tableau and step size.

    W has shape (N+1, r, r) and units time^exponent.  max_imag_residue records
    the largest imaginary part discarded when the contour sum was realified;
    the contour parameters are kept so exports can reproduce the computation.
    """

    exponent: float
    h: float
    W: np.ndarray
    tableau_label: str
    max_imag_residue: float
    radius: float
    eps: float
    contour_points: int

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        if W.ndim != 3 or W.shape[1] != W.shape[2]:
            raise ValueError("W must have shape (N+1, r, r)")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def count(self) -> int:
        return self.W.shape[0]

    @property
    def r(self) -> int:
        return self.W.shape[1]


@dataclass(frozen=True)
class ScalarWeightSequence:
    """Scalar convolution weights w_0..w_N (midpoint/trapezoidal generating function)."""

    exponent: float
    h: float
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).ravel()
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def count(self) -> int:
        return self.w.size


@dataclass(frozen=True)
class StageTrajectory:
    """Blocks of per-step stage values: values[k] is the r x d matrix 𝐟_k.

    With continuity_flag set, the last stage of every block must equal the
    first stage of the next one (shared main node); that is asserted exactly
    at construction.
    """

    values: np.ndarray
    h: float
    continuity_flag: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 3:
            raise ValueError("values must have shape (blocks, r, d)")
        if self.continuity_flag and vals.shape[0] > 1:
            if not np.array_equal(vals[:-1, -1, :], vals[1:, 0, :]):
                raise ValueError("continuity violated: block k last stage != block k+1 first stage")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def nblocks(self) -> int:
        return self.values.shape[0]

    @property
    def r(self) -> int:
        return self.values.shape[1]

    @property
    def d(self) -> int:
        return self.values.shape[2]


_cache: dict = {}
_cache_lock = threading.Lock()


def compute_weights(tab: ButcherTableau, exponent: float, h: float, N: int,
                    radius: float | None = None, eps: float = 1e-16,
                    contour_points: int | None = None,
                    use_fft: bool = False) -> WeightSequence:
    """Convolution weights W_0..W_N of K(s) = s^(-exponent) for the given tableau.

    The weights are Taylor coefficients of K(gamma(z)/h) and are recovered by a
    trapezoidal rule on the circle |z| = radius:

        W_n = radius^(-n)/M * sum_l K(gamma(z_l)/h) exp(+2 pi i l n / M),
        z_l = radius * exp(-2 pi i l / M).

    The radius defaults to eps^(1/(M+N)), which balances the aliasing error
    radius^M against the round-off amplification radius^(-N) eps; both land
    at eps^(M/(M+N)).  M defaults to 2(N+1) contour points, pushing that
    level from ~sqrt(eps) (the minimal M = N+1 rule, reproduced by passing
    contour_points=N+1) down to ~eps^(2/3).  K is applied as a
    matrix function through a complex eigendecomposition of gamma(z_l); if an
    eigenvector matrix is ill-conditioned the whole contour is retried once at
    0.98*radius.  Results are cached per parameter set.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if N < 0:
        raise ValueError("N must be >= 0")
    key = (tab.label, float(exponent), float(h), int(N), radius, float(eps),
           contour_points, bool(use_fft))
    with _cache_lock:
        hit = _cache.get(key)
    if hit is not None:
        return hit
    seq = _compute_weights(tab, exponent, h, N, radius, eps, contour_points, use_fft)
    with _cache_lock:
        _cache[key] = seq
    return seq


def _compute_weights(tab, exponent, h, N, radius, eps, contour_points, use_fft,
                     _retried=False):
    M = 2 * (N + 1) if contour_points is None else int(contour_points)
    if M < N + 1:
        raise ValueError("contour_points must be at least N+1")
    lam = eps ** (1.0 / (M + N)) if radius is None else float(radius)

    ell = np.arange(M)
    z = lam * np.exp(-2j * np.pi * ell / M)
    # rank-one form of (A + z/(1-z) 1 b^T)^{-1}; denominator is 1 for
    # stiffly accurate tableaux
    scale = z / (1.0 + (tab.bT_Ainv_one - 1.0) * z)
    gam = tab.Ainv[None, :, :].astype(complex) \
        - scale[:, None, None] * np.outer(tab.Ainv_one, tab.bT_Ainv)[None, :, :]

    vals, vecs = np.linalg.eig(gam)
    conds = np.linalg.cond(vecs)
    bad = np.nonzero(~(conds < _COND_LIMIT))[0]
    if bad.size:
        if not _retried:
            return _compute_weights(tab, exponent, h, N, 0.98 * lam, eps,
                                    contour_points, use_fft, _retried=True)
        raise RuntimeError(
            f"contour degeneracy at node l={int(bad[0])} (cond={conds[bad[0]]:.3e}) "
            f"even after radius retry")
    kvals = (vals / h) ** (-exponent)
    kmat = (vecs * kvals[:, None, :]) @ np.linalg.inv(vecs)

    r = tab.r
    kflat = kmat.reshape(M, r * r)
    n_all = np.arange(N + 1)
    if use_fft:
        wflat = np.fft.ifft(kflat, axis=0)[: N + 1]
    else:
        # direct Fourier sum, fixed chunked order (deterministic, O(N*M*r^2))
        wflat = np.empty((N + 1, r * r), dtype=complex)
        for lo in range(0, N + 1, _CHUNK):
            hi = min(lo + _CHUNK, N + 1)
            phase = np.exp((2j * np.pi / M) * np.outer(n_all[lo:hi], ell))
            wflat[lo:hi] = phase @ kflat / M
    wflat *= (lam ** -n_all.astype(float))[:, None]
    W = wflat.reshape(N + 1, r, r)
    max_imag = float(np.abs(W.imag).max()) if W.size else 0.0
    return WeightSequence(exponent=float(exponent), h=float(h),
                          W=np.ascontiguousarray(W.real),
                          tableau_label=tab.label, max_imag_residue=max_imag,
                          radius=lam, eps=float(eps), contour_points=M)


def apply_retarded(w: WeightSequence, f: StageTrajectory, k: int) -> np.ndarray:
    """Retarded operator at block k: sum_{n=0}^{k} W_{k-n} 𝐟_n, an r x d matrix."""
    if not 0 <= k < f.nblocks:
        raise IndexError(f"block index {k} out of range")
    if k >= w.count:
        raise IndexError(f"need weights up to index {k}, have {w.count - 1}")
    if w.r != f.r:
        raise ValueError("stage counts of weights and trajectory differ")
    rev = w.W[: k + 1][::-1]  # W_k, ..., W_0 against f_0, ..., f_k
    return np.tensordot(rev, f.values[: k + 1], axes=([0, 2], [0, 1]))


def apply_advanced(w: WeightSequence, g: StageTrajectory, k: int) -> np.ndarray:
    """Advanced operator at block k: sum_{n=0}^{N-k} (W_n)^T 𝐠_{k+n}, N+1 = g.nblocks."""
    if not 0 <= k < g.nblocks:
        raise IndexError(f"block index {k} out of range")
    m = g.nblocks - k
    if m > w.count:
        raise IndexError(f"need weights up to index {m - 1}, have {w.count - 1}")
    if w.r != g.r:
        raise ValueError("stage counts of weights and trajectory differ")
    return np.tensordot(w.W[:m], g.values[k:], axes=([0, 1], [0, 1]))


def midcq_weights(exponent: float, h: float, N: int) -> ScalarWeightSequence:
    """Taylor coefficients w_0..w_N of (gamma_mid(z)/h)^(-exponent), gamma_mid = 2(1-z)/(1+z).

    Computed by the exact binomial recurrences for (1-z)^beta and (1+z)^(-beta)
    (beta = -exponent) and one Cauchy product; no contour quadrature.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if N < 0:
        raise ValueError("N must be >= 0")
    beta = -float(exponent)
    a = np.empty(N + 1)
    d = np.empty(N + 1)
    a[0] = d[0] = 1.0
    for n in range(1, N + 1):
        a[n] = a[n - 1] * (n - 1 - beta) / n
        d[n] = d[n - 1] * (-(beta + n - 1)) / n
    w = np.convolve(a, d)[: N + 1]
    w *= (2.0 / h) ** beta
    return ScalarWeightSequence(exponent=float(exponent), h=float(h), w=w)


def apply_midcq(w: ScalarWeightSequence, nodes: np.ndarray, k: int) -> np.ndarray:
    """Midpoint-rule operator at k: sum_{j=0}^{k} w_{k-j} (f_j + f_{j+1})/2."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim == 1:
        nodes = nodes[:, None]
    if not 0 <= k <= nodes.shape[0] - 2:
        raise IndexError(f"index {k} out of range for {nodes.shape[0]} nodes")
    if k >= w.count:
        raise IndexError(f"need weights up to index {k}, have {w.count - 1}")
    mids = 0.5 * (nodes[: k + 1] + nodes[1: k + 2])
    return w.w[: k + 1][::-1] @ mids

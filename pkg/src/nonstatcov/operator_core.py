"""Block-matrix containers, norms, banding and Schur complements.

Everything in this package manipulates finite sections of doubly infinite
block matrices.  A section is stored as a :class:`BlockWindow`: an
``(L, L, p, p)`` array of real ``p x p`` blocks indexed by a pair of absolute
integer times.  Sections flatten to ``(L*p, L*p)`` matrices in time-major
order (block row ``t`` occupies rows ``(t - t_lo)*p .. (t - t_lo + 1)*p - 1``)
and all eigensolves and inversions operate on that flattening.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConditioningError, DomainError, InputError

#: Relative eigenvalue threshold below which a symmetric matrix is treated
#: as singular (guards Schur complements and inverses against blowup).
SPD_RTOL = 1e-12


def gu(j) -> np.ndarray | float:
    """max(1, |j|), the polynomial decay weight. Vectorized."""
    return np.maximum(1.0, np.abs(j))


def zeta(j) -> np.ndarray | float:
    """max(1, log max(1,|j|)) / max(1,|j|), the log-corrected decay weight.

    This is the clamped variant: the numerator never drops below 1, so
    ``zeta(0) == zeta(1) == 1`` and ``zeta(2) == 0.5``.  It is monotone
    nonincreasing in ``|j|`` from ``|j| = 1`` on.
    """
    g = gu(j)
    return np.maximum(1.0, np.log(g)) / g


def decay_weights(j: int) -> tuple[float, float]:
    """Return the pair ``(gu(j), zeta(j))`` for a single integer lag."""
    g = float(gu(j))
    return g, float(np.maximum(1.0, np.log(g)) / g)


def spectral_norm(a: np.ndarray) -> float:
    """Largest singular value of a real or complex matrix.

    Raises:
        InputError: if ``a`` contains non-finite entries.
    """
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    if not np.all(np.isfinite(a)):
        raise InputError("spectral_norm: non-finite entries in input")
    if a.ndim != 2:
        raise InputError(f"spectral_norm: expected a matrix, got ndim={a.ndim}")
    return float(np.linalg.norm(a, 2))


def block_norms(blocks: np.ndarray) -> np.ndarray:
    """Spectral norms of a batch of blocks, shape ``(..., p, q) -> (...)``."""
    blocks = np.asarray(blocks, dtype=float)
    if not np.all(np.isfinite(blocks)):
        raise InputError("block_norms: non-finite entries")
    if blocks.shape[-1] == 1 and blocks.shape[-2] == 1:
        return np.abs(blocks[..., 0, 0])
    return np.linalg.svd(blocks, compute_uv=False)[..., 0]


def block_row_norm_bound(blocks) -> float:
    """l2 aggregate ``sqrt(sum_l ||A_l||_2^2)`` of a sequence of blocks.

    Upper-bounds the operator norm of the stacked block row ``[A_1 A_2 ...]``.
    """
    norms = block_norms(np.asarray(blocks, dtype=float))
    return float(np.sqrt(np.sum(norms**2)))


@dataclass(frozen=True)
class EigRange:
    """Extremal eigenvalues of a symmetric operator section."""

    lambda_min: float
    lambda_max: float

    def __post_init__(self):
        if self.lambda_min > self.lambda_max + 1e-15:
            raise InputError("EigRange: lambda_min exceeds lambda_max")

    def is_spd(self, rtol: float = SPD_RTOL) -> bool:
        return self.lambda_min > rtol * max(abs(self.lambda_max), 1e-300)

    @property
    def condition(self) -> float:
        if self.lambda_min <= 0:
            return math.inf
        return self.lambda_max / self.lambda_min


@dataclass(frozen=True)
class BlockWindow:
    """A finite section of an infinite block matrix.

    Attributes:
        t_lo: first absolute time index of the window.
        p: block dimension.
        blocks: array of shape ``(L, L, p, p)``; ``blocks[i, j]`` is the
            block at absolute times ``(t_lo + i, t_lo + j)``.
        symmetric: whether ``blocks[i, j] == blocks[j, i].T`` exactly.
            Validated at construction.
    """

    t_lo: int
    p: int
    blocks: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=float)
        if b.ndim != 4 or b.shape[0] != b.shape[1] or b.shape[2:] != (self.p, self.p):
            raise InputError(f"BlockWindow: bad block array shape {b.shape}")
        if b.shape[0] < 1:
            raise InputError("BlockWindow: window length must be >= 1")
        if not np.all(np.isfinite(b)):
            raise InputError("BlockWindow: non-finite entries")
        if self.symmetric and not np.array_equal(b, b.transpose(1, 0, 3, 2)):
            raise InputError("BlockWindow: symmetric flag set but blocks[t,tau] != blocks[tau,t]^T")
        b = b.copy()
        b.flags.writeable = False
        object.__setattr__(self, "blocks", b)

    @property
    def length(self) -> int:
        return self.blocks.shape[0]

    @property
    def t_hi(self) -> int:
        return self.t_lo + self.length - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.t_lo, self.t_hi + 1)

    def block(self, t: int, tau: int) -> np.ndarray:
        """Block at absolute times ``(t, tau)``."""
        if not (self.t_lo <= t <= self.t_hi and self.t_lo <= tau <= self.t_hi):
            raise InputError(f"BlockWindow.block: ({t},{tau}) outside [{self.t_lo},{self.t_hi}]")
        return self.blocks[t - self.t_lo, tau - self.t_lo]

    def flatten(self) -> np.ndarray:
        """Dense ``(L*p, L*p)`` matrix in time-major order."""
        length, p = self.length, self.p
        return self.blocks.transpose(0, 2, 1, 3).reshape(length * p, length * p)

    @classmethod
    def from_flat(cls, flat: np.ndarray, p: int, t_lo: int = 0,
                  symmetrize: bool = False) -> "BlockWindow":
        """Rebuild a window from a flattened matrix.

        With ``symmetrize=True`` the matrix is replaced by ``(M + M^T)/2``
        first, so the result carries the exact-symmetry flag.
        """
        flat = np.asarray(flat, dtype=float)
        n = flat.shape[0]
        if flat.shape != (n, n) or n % p:
            raise InputError(f"from_flat: shape {flat.shape} incompatible with p={p}")
        if symmetrize:
            flat = 0.5 * (flat + flat.T)
        length = n // p
        blocks = flat.reshape(length, p, length, p).transpose(0, 2, 1, 3)
        return cls(t_lo=t_lo, p=p, blocks=blocks, symmetric=symmetrize)

    def subwindow(self, t_lo: int, t_hi: int) -> "BlockWindow":
        """Restriction to absolute times ``[t_lo, t_hi]``."""
        if not (self.t_lo <= t_lo <= t_hi <= self.t_hi):
            raise InputError("subwindow: requested range outside stored window")
        i, j = t_lo - self.t_lo, t_hi - self.t_lo + 1
        return BlockWindow(t_lo=t_lo, p=self.p, blocks=self.blocks[i:j, i:j],
                           symmetric=self.symmetric)

    def norms(self) -> np.ndarray:
        """Spectral norm of every block, shape ``(L, L)``."""
        return block_norms(self.blocks)

    def lag_max_norms(self) -> np.ndarray:
        """``m[l] = max over |t - tau| = l of ||blocks[t, tau]||_2``."""
        norms = self.norms()
        length = self.length
        out = np.zeros(length)
        for lag in range(length):
            d1 = np.diagonal(norms, offset=lag)
            d2 = np.diagonal(norms, offset=-lag)
            out[lag] = max(d1.max(initial=0.0), d2.max(initial=0.0))
        return out


@dataclass(frozen=True)
class BandedBlockWindow:
    """A window together with a certified block bandwidth."""

    base: BlockWindow
    bandwidth: int

    def __post_init__(self):
        if self.bandwidth < 0:
            raise DomainError("BandedBlockWindow: bandwidth must be >= 0")
        lags = np.abs(np.subtract.outer(self.base.times, self.base.times))
        outside = self.base.blocks[lags > self.bandwidth]
        if outside.size and np.any(outside != 0.0):
            raise InputError("BandedBlockWindow: nonzero block outside the band")


def sym_eig_range(w: BlockWindow) -> EigRange:
    """Extremal eigenvalues of the flattened symmetric window.

    Raises:
        InputError: if the window is not flagged symmetric.
    """
    if not w.symmetric:
        raise InputError("sym_eig_range: window must be symmetric")
    vals = scipy.linalg.eigvalsh(w.flatten())
    return EigRange(float(vals[0]), float(vals[-1]))


def band_truncate(w: BlockWindow, m: int) -> BandedBlockWindow:
    """Zero every block with ``|t - tau| > m``; the input is unchanged."""
    if m < 0:
        raise DomainError("band_truncate: bandwidth must be >= 0")
    lags = np.abs(np.subtract.outer(w.times, w.times))
    blocks = np.where((lags <= m)[:, :, None, None], w.blocks, 0.0)
    base = BlockWindow(t_lo=w.t_lo, p=w.p, blocks=blocks, symmetric=w.symmetric)
    return BandedBlockWindow(base=base, bandwidth=m)


def banded_error_bound(k: float, kappa: float, m: int) -> float:
    """Certified spectral-norm error of banding a polynomially decaying window.

    For any symmetric operator whose off-diagonal blocks satisfy
    ``||C_{t,tau}|| <= k * gu(t - tau)**(-kappa)``, zeroing everything beyond
    bandwidth ``m`` changes the operator norm by at most
    ``2*k/(kappa - 1) * (m - 1)**(-kappa + 1)``.

    Raises:
        DomainError: if ``kappa <= 1`` or ``m < 2``.
    """
    if kappa <= 1:
        raise DomainError("banded_error_bound: requires kappa > 1")
    if m < 2:
        raise DomainError("banded_error_bound: requires m >= 2")
    return 2.0 * k / (kappa - 1.0) * float(m - 1) ** (-kappa + 1.0)


def demko_bound(a: float, b: float, m: int, lag: int) -> float:
    """Geometric bound on off-diagonal inverse blocks of an SPD banded operator.

    For an SPD operator with bandwidth ``m`` and spectrum in ``[a, b]``,
    every inverse block at ``lag != 0`` satisfies
    ``||(B^-1)_{t,tau}||_2 <= (1 + sqrt(r))**2 / b * rho**ceil(|lag|/m)``
    with ``r = b/a`` and ``rho = (sqrt(r) - 1)/(sqrt(r) + 1)``.

    The exponent is the polynomial-approximation degree bookkeeping: a
    degree-``n`` polynomial of a bandwidth-``m`` matrix reaches block lag
    ``n*m`` inclusive, so lag ``l`` admits degree ``ceil(l/m) - 1`` and the
    best-approximation error exponent ``ceil(l/m)``.  The diagonal
    (``lag = 0``) is not covered; there ``1/a`` is the sharp bound.

    Raises:
        DomainError: if ``a <= 0``, ``b < a`` or ``m < 1``.
    """
    if a <= 0:
        raise DomainError("demko_bound: requires a > 0")
    if b < a:
        raise DomainError("demko_bound: requires b >= a")
    if m < 1:
        raise DomainError("demko_bound: requires m >= 1")
    r = b / a
    sr = math.sqrt(r)
    rho = (sr - 1.0) / (sr + 1.0)
    return (1.0 + sr) ** 2 / b * rho ** (-(-abs(lag) // m))


def _check_spd_flat(flat: np.ndarray, what: str) -> EigRange:
    vals = scipy.linalg.eigvalsh(flat)
    rng = EigRange(float(vals[0]), float(vals[-1]))
    if not rng.is_spd():
        raise ConditioningError(
            f"{what}: numerically singular (lambda_min={rng.lambda_min:.3e}, "
            f"lambda_max={rng.lambda_max:.3e})")
    return rng


def schur_complement(a: np.ndarray, b: np.ndarray, e: BlockWindow) -> np.ndarray:
    """``A - B E^{-1} B^T`` with ``E`` a symmetric SPD window.

    The result is the covariance of the ``A`` coordinates after projecting
    out the coordinates carried by ``E``.  Symmetric whenever ``A`` is.

    Raises:
        ConditioningError: if ``E`` is numerically singular.
        InputError: on dimension mismatch or a non-symmetric ``E``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not e.symmetric:
        raise InputError("schur_complement: E must be symmetric")
    ef = e.flatten()
    if b.shape != (a.shape[0], ef.shape[0]) or a.shape[0] != a.shape[1]:
        raise InputError(f"schur_complement: non-conformable shapes {a.shape}, "
                         f"{b.shape}, {ef.shape}")
    _check_spd_flat(ef, "schur_complement")
    c, low = scipy.linalg.cho_factor(ef)
    result = a - b @ scipy.linalg.cho_solve((c, low), b.T)
    if np.array_equal(a, a.T):
        result = 0.5 * (result + result.T)
    return result


def block_partition_inverse(a, b, c, d) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Four blocks of ``[[A, B], [C, D]]^{-1}`` via the partitioned-inverse identity.

    Returns ``(Atil, -Atil B D^-1, -D^-1 C Atil, D^-1 + D^-1 C Atil B D^-1)``
    with ``Atil = (A - B D^-1 C)^{-1}``.
    """
    a, b, c, d = (np.asarray(x, dtype=float) for x in (a, b, c, d))
    d_inv = np.linalg.inv(d)
    atil = np.linalg.inv(a - b @ d_inv @ c)
    top_right = -atil @ b @ d_inv
    bottom_left = -d_inv @ c @ atil
    bottom_right = d_inv + d_inv @ c @ atil @ b @ d_inv
    return atil, top_right, bottom_left, bottom_right

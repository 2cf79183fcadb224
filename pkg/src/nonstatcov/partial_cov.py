"""Component-grouped windows, Schur-complement partial covariances, and
local partial spectral coherence.

The partial covariance of components ``(a, b)`` conditions on every lag of
every other component.  On a finite window the conditioning set is the
restriction of those components to the padded window; decay of the inverse
makes the edge contamination negligible in the reported interior.
Component indices are 0-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConditioningError, InputError, ModelError
from .inverse_analysis import _kappa_or_raise
from .models import (ModelSpec, cov_pad, cov_window, local_spectral_density,
                     stationary_window)
from .operator_core import BlockWindow, SPD_RTOL, zeta
from .reports import GapReport, envelope_constant


@dataclass(frozen=True)
class GroupedWindow:
    """Component-major regrouping of a :class:`BlockWindow`.

    ``lag_matrices[a, b]`` is the ``L x L`` matrix of covariances between
    component ``a`` at every time and component ``b`` at every time.
    """

    t_lo: int
    p: int
    lag_matrices: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.lag_matrices, dtype=float)
        if m.ndim != 4 or m.shape[0] != self.p or m.shape[1] != self.p \
                or m.shape[2] != m.shape[3]:
            raise InputError(f"GroupedWindow: bad array shape {m.shape}")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "lag_matrices", m)

    @property
    def length(self) -> int:
        return self.lag_matrices.shape[2]

    def entry(self, a: int, b: int, t: int, tau: int) -> float:
        return float(self.lag_matrices[a, b, t - self.t_lo, tau - self.t_lo])


def regroup_by_component(c: BlockWindow) -> GroupedWindow:
    """Permute a block window into component-major form; lossless."""
    return GroupedWindow(t_lo=c.t_lo, p=c.p,
                         lag_matrices=c.blocks.transpose(2, 3, 0, 1))


def ungroup(g: GroupedWindow, symmetric: bool = False) -> BlockWindow:
    """Inverse of :func:`regroup_by_component`; exact round trip."""
    return BlockWindow(t_lo=g.t_lo, p=g.p,
                       blocks=g.lag_matrices.transpose(2, 3, 0, 1),
                       symmetric=symmetric)


@dataclass(frozen=True)
class PartialPair:
    """Partial covariance of a component pair over an interior window.

    ``deltas[i, j]`` is the 2x2 partial covariance matrix between times
    ``t_lo + i`` and ``t_lo + j`` of the residual pair ``(a, b)``.
    """

    a: int
    b: int
    t_lo: int
    deltas: np.ndarray
    conditioning_set: tuple[int, ...]

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=float)
        if d.ndim != 4 or d.shape[0] != d.shape[1] or d.shape[2:] != (2, 2):
            raise InputError(f"PartialPair: bad delta shape {d.shape}")
        d = d.copy()
        d.flags.writeable = False
        object.__setattr__(self, "deltas", d)

    @property
    def length(self) -> int:
        return self.deltas.shape[0]

    def delta(self, t: int, tau: int) -> np.ndarray:
        return self.deltas[t - self.t_lo, tau - self.t_lo]


def _component_rows(length: int, p: int, component: int) -> np.ndarray:
    return np.arange(length) * p + component


def _schur_on_rows(flat: np.ndarray, keep: np.ndarray,
                   drop: np.ndarray) -> np.ndarray:
    """Schur complement of the ``keep`` rows with the ``drop`` rows
    projected out; returns a symmetrized matrix."""
    css = flat[np.ix_(keep, keep)]
    if drop.size == 0:
        return 0.5 * (css + css.T)
    csr = flat[np.ix_(keep, drop)]
    crr = flat[np.ix_(drop, drop)]
    vals = np.linalg.eigvalsh(crr)
    if vals[0] <= SPD_RTOL * max(vals[-1], 1e-300):
        raise ConditioningError("partial covariance: conditioning block is "
                                "numerically singular")
    cf = scipy.linalg.cho_factor(crr)
    out = css - csr @ scipy.linalg.cho_solve(cf, csr.T)
    return 0.5 * (out + out.T)


def partial_cov_pair(c: BlockWindow, a: int, b: int, pad: int = 0) -> PartialPair:
    """Partial covariance of components ``(a, b)`` given all the others.

    With ``p = 2`` the conditioning set is empty and the raw pair
    covariance is returned.  ``pad`` interior times are discarded on each
    side of the window.

    Raises:
        ConditioningError: singular conditioning block.
    """
    p, length = c.p, c.length
    if not (0 <= a < p and 0 <= b < p) or a == b:
        raise InputError(f"partial_cov_pair: bad component pair ({a}, {b}) "
                         f"for p={p}")
    if not c.symmetric:
        raise InputError("partial_cov_pair: window must be symmetric")
    if length - 2 * pad < 1:
        raise InputError("partial_cov_pair: pad leaves no interior")
    flat = c.flatten()
    rows_a = _component_rows(length, p, a)
    rows_b = _component_rows(length, p, b)
    keep = np.concatenate([rows_a, rows_b])
    others = tuple(sorted(set(range(p)) - {a, b}))
    drop = np.concatenate([_component_rows(length, p, o) for o in others]) \
        if others else np.array([], dtype=int)
    delta_flat = _schur_on_rows(flat, keep, drop)
    deltas = np.empty((length, length, 2, 2))
    deltas[:, :, 0, 0] = delta_flat[:length, :length]
    deltas[:, :, 0, 1] = delta_flat[:length, length:]
    deltas[:, :, 1, 0] = delta_flat[length:, :length]
    deltas[:, :, 1, 1] = delta_flat[length:, length:]
    if pad:
        deltas = deltas[pad:length - pad, pad:length - pad]
    return PartialPair(a=a, b=b, t_lo=c.t_lo + pad, deltas=deltas,
                       conditioning_set=others)


def self_partial_cov(c: BlockWindow, a: int, pad: int = 0) -> np.ndarray:
    """Partial autocovariance of component ``a`` given all other components.

    Returns the interior ``L x L`` matrix of
    ``cov[residual a at t, residual a at tau]``; with ``p = 1`` this is the
    raw autocovariance.
    """
    p, length = c.p, c.length
    if not 0 <= a < p:
        raise InputError(f"self_partial_cov: bad component {a} for p={p}")
    if not c.symmetric:
        raise InputError("self_partial_cov: window must be symmetric")
    if length - 2 * pad < 1:
        raise InputError("self_partial_cov: pad leaves no interior")
    flat = c.flatten()
    keep = _component_rows(length, p, a)
    others = tuple(sorted(set(range(p)) - {a}))
    drop = np.concatenate([_component_rows(length, p, o) for o in others]) \
        if others else np.array([], dtype=int)
    rho = _schur_on_rows(flat, keep, drop)
    if pad:
        rho = rho[pad:length - pad, pad:length - pad]
    return rho


@dataclass(frozen=True)
class StationaryPartialPair:
    """Lag-indexed partial covariance of the frozen process at ``u``."""

    a: int
    b: int
    u: float
    max_lag: int
    deltas: np.ndarray          # (2*max_lag + 1, 2, 2), lag r = index - max_lag
    toeplitz_drift: float

    def delta(self, r: int) -> np.ndarray:
        if abs(r) > self.max_lag:
            raise InputError(f"StationaryPartialPair: lag {r} beyond {self.max_lag}")
        return self.deltas[r + self.max_lag]


def stationary_partial_pair(model: ModelSpec, u: float, a: int, b: int,
                            max_lag: int, pad: int | None = None) -> StationaryPartialPair:
    """Partial covariance lags of the frozen process from a long section.

    ``toeplitz_drift`` records how far the interior of the windowed Schur
    complement is from exactly Toeplitz; it should sit at the pad
    truncation level (<= 1e-8 for the bundled models).
    """
    pad = cov_pad(model) if pad is None else pad
    half = max_lag + pad
    w = stationary_window(model, u, -half, half)
    pair = partial_cov_pair(w, a, b, pad=pad)
    center = max_lag
    # lag convention r = t - tau: Delta_r sits at times (center + r, center)
    deltas = np.stack([pair.deltas[center + r, center]
                       for r in range(-max_lag, max_lag + 1)])
    drift = 0.0
    for shift in (1, 2, 3):
        if center - shift < 0:
            break
        for r in range(-max_lag + shift, max_lag - shift + 1):
            ref = deltas[r + max_lag]
            moved = pair.deltas[center + r - shift, center - shift]
            drift = max(drift, float(np.abs(moved - ref).max()))
    return StationaryPartialPair(a=a, b=b, u=u, max_lag=max_lag,
                                 deltas=deltas, toeplitz_drift=drift)


def stationary_self_partial(model: ModelSpec, u: float, a: int,
                            max_lag: int, pad: int | None = None) -> np.ndarray:
    """Lag sequence of the frozen self partial covariance of component ``a``."""
    pad = cov_pad(model) if pad is None else pad
    half = max_lag + pad
    w = stationary_window(model, u, -half, half)
    rho = self_partial_cov(w, a, pad=pad)
    center = max_lag
    return np.array([rho[center + r, center] for r in range(-max_lag, max_lag + 1)])


@dataclass(frozen=True)
class PartialSmoothnessReport:
    """Array-versus-frozen and Lipschitz gaps of the partial covariances."""

    pair_gaps: GapReport
    self_gaps: GapReport
    pair_lipschitz: GapReport
    self_lipschitz: GapReport
    u_pair: tuple[float, float]


def partial_smoothness_gap(model: ModelSpec, n: int, a: int, b: int,
                           t_lo: int, t_hi: int, pad: int | None = None,
                           kappa: float | None = None,
                           u_pair: tuple[float, float] | None = None) -> PartialSmoothnessReport:
    """Partial-covariance smoothness gaps over an interior window.

    Pair and self gaps are measured against
    ``zeta(t-tau)^(kappa-2) * min(1/N, zeta(t-tau))``; the Lipschitz gaps
    between two rescaled times against ``|u-v| * zeta(r)^(kappa-1)``.
    """
    kappa = _kappa_or_raise(model, kappa)
    pad = cov_pad(model) if pad is None else pad
    c = cov_window(model, n, t_lo - pad, t_hi + pad)
    pair = partial_cov_pair(c, a, b, pad=pad)
    self_a = self_partial_cov(c, a, pad=pad)
    length = pair.length
    max_lag = length - 1

    frozen_pairs, frozen_selfs = {}, {}
    idx, meas_pair, meas_self, bound = [], [], [], []
    for ti in range(length):
        t = t_lo + ti
        if t not in frozen_pairs:
            frozen_pairs[t] = stationary_partial_pair(model, t / n, a, b,
                                                      max_lag, pad=pad)
            frozen_selfs[t] = stationary_self_partial(model, t / n, a,
                                                      max_lag, pad=pad)
        for tj in range(length):
            tau = t_lo + tj
            r = t - tau
            dp = float(np.linalg.norm(
                pair.deltas[ti, tj] - frozen_pairs[t].delta(r), 2))
            ds = abs(float(self_a[ti, tj]) - float(frozen_selfs[t][r + max_lag]))
            zr = float(zeta(r))
            idx.append((t, tau))
            meas_pair.append(dp)
            meas_self.append(ds)
            bound.append(zr ** (kappa - 2.0) * min(1.0 / n, zr))
    bound = np.asarray(bound)
    pair_gaps = GapReport(indices=idx, measured=np.asarray(meas_pair), bound=bound,
                          constant_estimate=envelope_constant(meas_pair, bound))
    self_gaps = GapReport(indices=idx, measured=np.asarray(meas_self), bound=bound,
                          constant_estimate=envelope_constant(meas_self, bound))

    if u_pair is None:
        u_pair = (t_lo / n, t_hi / n)
    u, v = u_pair
    pu = stationary_partial_pair(model, u, a, b, max_lag, pad=pad)
    pv = stationary_partial_pair(model, v, a, b, max_lag, pad=pad)
    su = stationary_self_partial(model, u, a, max_lag, pad=pad)
    sv = stationary_self_partial(model, v, a, max_lag, pad=pad)
    lags = list(range(-max_lag, max_lag + 1))
    lip_bound = np.array([abs(u - v) * float(zeta(r)) ** (kappa - 1.0)
                          for r in lags])
    pair_lip = np.array([float(np.linalg.norm(pu.delta(r) - pv.delta(r), 2))
                         for r in lags])
    self_lip = np.abs(su - sv)
    pair_lipschitz = GapReport(indices=lags, measured=pair_lip, bound=lip_bound,
                               constant_estimate=envelope_constant(pair_lip, lip_bound))
    self_lipschitz = GapReport(indices=lags, measured=self_lip, bound=lip_bound,
                               constant_estimate=envelope_constant(self_lip, lip_bound))
    return PartialSmoothnessReport(pair_gaps=pair_gaps, self_gaps=self_gaps,
                                   pair_lipschitz=pair_lipschitz,
                                   self_lipschitz=self_lipschitz,
                                   u_pair=(u, v))


def partial_spectral_coherence(model: ModelSpec, u: float, a: int, b: int,
                               omega_grid) -> np.ndarray:
    """Local partial spectral coherence
    ``g_{a,b}(omega; u) = -G_ab / sqrt(G_aa G_bb)`` with ``G = f^{-1}``.

    Raises:
        ModelError: if the spectral density is singular on the grid.
    """
    omega_grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    out = np.empty(omega_grid.shape, dtype=complex)
    for i, w in enumerate(omega_grid):
        f = local_spectral_density(model, u, w)
        vals = np.linalg.eigvalsh(f)
        if vals[0] <= SPD_RTOL * max(vals[-1], 1e-300):
            raise ModelError(f"partial_spectral_coherence: f singular at "
                             f"omega={w:.4f}")
        gamma = np.linalg.inv(f)
        denom = math.sqrt(gamma[a, a].real * gamma[b, b].real)
        out[i] = -gamma[a, b] / denom
    return out


@dataclass(frozen=True)
class CoherenceGapReport:
    """Fourier-assembled partial coherence against the frozen coherence."""

    omega_grid: np.ndarray
    assembled: np.ndarray
    frozen: np.ndarray
    gaps: GapReport
    imag_residue: float
    truncation_tail: float

    @property
    def sup_gap(self) -> float:
        return float(self.gaps.measured.max())


def coherence_consistency_gap(model: ModelSpec, n: int, t_index: int,
                              a: int, b: int, omega_grid,
                              max_lag: int | None = None,
                              pad: int | None = None) -> CoherenceGapReport:
    """Assemble the local partial coherence from nonstationary partial
    covariances and compare with the frozen-coherence closed form.

    The assembled curve is
    ``sum_r rho^(ab)_{t,t+r} e^{i r omega}`` normalized by the principal
    square root of the product of the self sums; its gap to
    ``g_{a,b}(omega; t/N)`` is O(1/N) plus the Fourier truncation.

    Raises:
        ConditioningError: a denominator sum within 1e-8 of zero.
    """
    omega_grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    pad = cov_pad(model) if pad is None else pad
    if max_lag is None:
        max_lag = _default_fourier_lag(model, n, t_index, a, b, pad)
    c = cov_window(model, n, t_index - max_lag - pad, t_index + max_lag + pad)
    pair = partial_cov_pair(c, a, b, pad=pad)
    center = max_lag
    lags = np.arange(-max_lag, max_lag + 1)
    rho = np.stack([pair.deltas[center, center + r] for r in lags])
    tail = float(np.linalg.norm(rho[0], 2) + np.linalg.norm(rho[-1], 2))

    phases = np.exp(1j * np.outer(omega_grid, lags))
    num = phases @ rho[:, 0, 1]
    da = phases @ rho[:, 0, 0]
    db = phases @ rho[:, 1, 1]
    imag_residue = float(max(np.abs(da.imag).max(), np.abs(db.imag).max()))
    den = np.sqrt(da * db)
    if np.any(np.abs(den) < 1e-8):
        raise ConditioningError("coherence_consistency_gap: denominator "
                                "Fourier sum vanishes")
    assembled = num / den
    # the sums run over pairs (t, t + r), i.e. lag -r in the t - tau
    # convention, so the frozen coherence enters at reversed frequency sign
    frozen = np.conj(partial_spectral_coherence(model, t_index / n, a, b,
                                                omega_grid))
    gap = np.abs(assembled - frozen)
    bound = np.full(omega_grid.shape, 1.0 / n + tail)
    gaps = GapReport(indices=list(omega_grid), measured=gap, bound=bound,
                     constant_estimate=envelope_constant(gap, bound))
    return CoherenceGapReport(omega_grid=omega_grid, assembled=assembled,
                              frozen=frozen, gaps=gaps,
                              imag_residue=imag_residue, truncation_tail=tail)


def _default_fourier_lag(model: ModelSpec, n: int, t_index: int, a: int,
                         b: int, pad: int, cap: int = 80) -> int:
    """Smallest lag where the partial covariance norm drops below 1e-8."""
    c = cov_window(model, n, t_index - cap - pad, t_index + cap + pad)
    pair = partial_cov_pair(c, a, b, pad=pad)
    center = cap
    scale = float(np.linalg.norm(pair.deltas[center, center], 2))
    for r in range(1, cap + 1):
        hi = np.linalg.norm(pair.deltas[center, center + r], 2)
        lo = np.linalg.norm(pair.deltas[center, center - r], 2)
        if max(hi, lo) < 1e-8 * max(scale, 1e-300):
            return r
    return cap

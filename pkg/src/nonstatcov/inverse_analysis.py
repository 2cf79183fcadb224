"""Finite-section inversion, certified banded/Neumann approximations, and
empirical decay/smoothness measurements on inverse covariance windows.

Finite sections approximate the bi-infinite inverse only away from the
window edges, so every model-facing operation here inverts a padded window
and reports the interior.  The default pad follows the covariance assembly
pad of :func:`nonstatcov.models.cov_pad`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (ConditioningError, DegenerateFitError, DivergenceError,
                     DomainError, InputError)
from .models import (ModelSpec, cov_pad, cov_window, stationary_cov_derivative,
                     stationary_window)
from .operator_core import (BlockWindow, EigRange, SPD_RTOL, band_truncate,
                            gu, spectral_norm, zeta)
from .reports import DecayProfile, GapReport, envelope_constant, fit_decay_profile

_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class InverseWindow:
    """Interior section of the inverse of a (padded) covariance window."""

    base: BlockWindow
    source_pad: int
    conditioning: EigRange
    residual: float

    def block(self, t: int, tau: int) -> np.ndarray:
        return self.base.block(t, tau)


@dataclass(frozen=True)
class NeumannResult:
    """Banded-plus-series approximate inverse with a geometric certificate.

    ``certificate`` bounds the spectral-norm distance to the exact inverse:
    the geometric series tail (``tail``) plus a roundoff allowance
    (``roundoff``), so it stays sound in floating point even when the tail
    underflows the arithmetic noise floor.
    """

    approx: BlockWindow
    certificate: float
    contraction_norm: float
    banded_inverse_norm: float
    tail: float
    roundoff: float


def _invert_flat_symmetric(flat: np.ndarray, what: str) -> tuple[np.ndarray, EigRange, float]:
    vals = np.linalg.eigvalsh(flat)
    rng = EigRange(float(vals[0]), float(vals[-1]))
    if not rng.is_spd():
        raise ConditioningError(
            f"{what}: window is numerically singular "
            f"(lambda_min={rng.lambda_min:.3e}, lambda_max={rng.lambda_max:.3e})")
    inv = np.linalg.inv(flat)
    inv = 0.5 * (inv + inv.T)
    residual = float(np.linalg.norm(flat @ inv - np.eye(flat.shape[0]), np.inf))
    if residual > _RESIDUAL_TOL:
        raise ConditioningError(f"{what}: inversion residual {residual:.3e} "
                                f"exceeds {_RESIDUAL_TOL:g}")
    return inv, rng, residual


def finite_section_inverse(c: BlockWindow, pad: int) -> InverseWindow:
    """Invert a symmetric SPD window and discard ``pad`` times on each side.

    The caller supplies the window *including* the pad; the returned interior
    approximates the bi-infinite inverse away from the original edges.

    Raises:
        ConditioningError: singular window or residual above 1e-8.
    """
    if not c.symmetric:
        raise InputError("finite_section_inverse: window must be symmetric")
    if pad < 0:
        raise DomainError("finite_section_inverse: pad must be >= 0")
    if c.length - 2 * pad < 1:
        raise InputError("finite_section_inverse: pad leaves no interior")
    inv, rng, residual = _invert_flat_symmetric(c.flatten(), "finite_section_inverse")
    full = BlockWindow.from_flat(inv, c.p, t_lo=c.t_lo, symmetrize=True)
    interior = full.subwindow(c.t_lo + pad, c.t_hi - pad)
    return InverseWindow(base=interior, source_pad=pad, conditioning=rng,
                         residual=residual)


def model_inverse_window(model: ModelSpec, n: int, t_lo: int, t_hi: int,
                         pad: int | None = None) -> InverseWindow:
    """Interior inverse-covariance section of a model over ``[t_lo, t_hi]``."""
    pad = cov_pad(model) if pad is None else pad
    c = cov_window(model, n, t_lo - pad, t_hi + pad)
    return finite_section_inverse(c, pad)


def neumann_inverse(c: BlockWindow, m: int, terms: int) -> NeumannResult:
    """Approximate ``C^{-1}`` by a Neumann series around the banded truncation.

    Writes ``C = B_M + E`` and sums ``sum_{s<=terms} (-B_M^{-1} E)^s B_M^{-1}``.
    The certificate bounds the dropped tail by the geometric series
    ``||B_M^{-1}|| q^{terms+1} / (1 - q)`` with ``q = ||B_M^{-1} E||_2``
    computed on the window.

    Raises:
        DivergenceError: if the banded truncation is singular or ``q >= 1``
            (the offending product norm is attached).
    """
    if not c.symmetric:
        raise InputError("neumann_inverse: window must be symmetric")
    if terms < 0:
        raise DomainError("neumann_inverse: terms must be >= 0")
    banded = band_truncate(c, m).base
    bf = banded.flatten()
    vals = np.linalg.eigvalsh(bf)
    amax = float(np.max(np.abs(vals)))
    amin = float(np.min(np.abs(vals)))
    if amin <= SPD_RTOL * max(amax, 1e-300):
        raise DivergenceError(
            f"neumann_inverse: banded truncation at bandwidth {m} is singular",
            contraction_norm=math.inf)
    b_inv = np.linalg.inv(bf)
    b_inv = 0.5 * (b_inv + b_inv.T)
    b_inv_norm = 1.0 / amin
    err = c.flatten() - bf
    prod = b_inv @ err
    q = spectral_norm(prod)
    if q >= 1.0:
        raise DivergenceError(
            f"neumann_inverse: series does not contract, ||B^-1 (C - B)|| = {q:.4f}",
            contraction_norm=q)
    acc = np.eye(bf.shape[0])
    power = np.eye(bf.shape[0])
    for _ in range(terms):
        power = -prod @ power
        acc += power
    approx_flat = acc @ b_inv
    approx = BlockWindow.from_flat(approx_flat, c.p, t_lo=c.t_lo, symmetrize=True)
    tail = b_inv_norm * q ** (terms + 1) / (1.0 - q)
    # ||C^-1|| <= ||B^-1||/(1-q), so a conservative allowance for the
    # rounding of the series products and of any dense reference inverse is
    inv_bound = b_inv_norm / (1.0 - q)
    c_norm = float(np.max(np.abs(vals))) + spectral_norm(err)
    roundoff = bf.shape[0] * np.finfo(float).eps * inv_bound \
        * (1.0 + c_norm * inv_bound)
    return NeumannResult(approx=approx, certificate=tail + roundoff,
                         contraction_norm=q, banded_inverse_norm=b_inv_norm,
                         tail=tail, roundoff=roundoff)


def inverse_decay_fit(d: InverseWindow, kappa_ref: float) -> DecayProfile:
    """Fit the interior inverse decay against the log-corrected weight.

    Regresses ``log max_{|t-tau|=l} ||D_{t,tau}||`` on ``log zeta(l)`` over
    ``l in [2, L//3]`` and reports the sup-bound constant
    ``max ||D|| / zeta(lag)^(kappa_ref - 1)`` over *all* interior lags.

    Raises:
        InputError: interior shorter than 20.
        DegenerateFitError: every interior norm at numerical zero.
    """
    w = d.base
    if w.length < 20:
        raise InputError("inverse_decay_fit: interior window shorter than 20")
    lag_norms = w.lag_max_norms()
    if np.all(lag_norms < 1e-14):
        raise DegenerateFitError("inverse_decay_fit: all interior norms below 1e-14")
    hi = max(3, w.length // 3)
    lags = np.arange(2, hi + 1)
    fitted = fit_decay_profile(lags, lag_norms[2:hi + 1],
                               np.asarray(zeta(lags)) ** (kappa_ref - 1.0),
                               np.asarray(zeta(lags)))
    all_lags = np.arange(w.length)
    constant = envelope_constant(lag_norms, np.asarray(zeta(all_lags)) ** (kappa_ref - 1.0))
    return DecayProfile(constant=constant, exponent=fitted.exponent,
                        lags=fitted.lags, residuals=fitted.residuals,
                        band_limited=fitted.band_limited)


def one_sided_inverse(model: ModelSpec, n: int, t_end: int, depth: int) -> InverseWindow:
    """Inverse of the covariance section over ``[t_end - depth, t_end]``.

    Truncates the semi-infinite past at ``depth``; the bottom-row blocks
    (time ``t_end``) converge geometrically as ``depth`` grows.

    Raises:
        DomainError: if ``depth < 50``.
    """
    if depth < 50:
        raise DomainError("one_sided_inverse: depth must be >= 50")
    c = cov_window(model, n, t_end - depth, t_end)
    inv, rng, residual = _invert_flat_symmetric(c.flatten(), "one_sided_inverse")
    base = BlockWindow.from_flat(inv, c.p, t_lo=c.t_lo, symmetrize=True)
    return InverseWindow(base=base, source_pad=0, conditioning=rng,
                         residual=residual)


def stationary_inverse_sequence(model: ModelSpec, u: float, max_lag: int,
                                pad: int | None = None) -> np.ndarray:
    """``D_r(u)`` for ``r = 0..max_lag`` from a long Toeplitz section.

    The section has half-width ``max_lag + pad``; the centered row of its
    inverse approximates the bi-infinite Toeplitz inverse.
    """
    pad = cov_pad(model) if pad is None else pad
    half = max_lag + pad
    w = stationary_window(model, u, -half, half)
    inv, _, _ = _invert_flat_symmetric(w.flatten(), "stationary_inverse_sequence")
    full = BlockWindow.from_flat(inv, w.p, t_lo=-half, symmetrize=True)
    return np.stack([full.block(0, -r) for r in range(max_lag + 1)])


def _kappa_or_raise(model: ModelSpec, kappa: float | None) -> float:
    if kappa is not None:
        return float(kappa)
    model_kappa = getattr(model, "kappa", None)
    if model_kappa is None:
        raise InputError("a decay exponent kappa is required for the envelope; "
                         "pass kappa= or use a model that declares one")
    return float(model_kappa)


def inverse_smoothness_gap(model: ModelSpec, n: int, t_lo: int, t_hi: int,
                           pad: int | None = None,
                           kappa: float | None = None) -> GapReport:
    """Gap between the array inverse and its frozen-time approximation.

    Measures ``||[D^(N) - D(t/N)]_{t,tau}||`` over the interior window
    against the envelope ``zeta(t-tau)^(kappa-2) * min(1/N, 2*zeta(t-tau))``.
    The variant with ``min(1/N, 2/gu(t-tau))`` is reported as ``alt_bound``.
    """
    kappa = _kappa_or_raise(model, kappa)
    dn = model_inverse_window(model, n, t_lo, t_hi, pad=pad)
    length = dn.base.length
    max_lag = length - 1
    sequences = {}
    indices, measured, bound, alt = [], [], [], []
    for ti in range(length):
        t = t_lo + ti
        if t not in sequences:
            sequences[t] = stationary_inverse_sequence(model, t / n, max_lag, pad=pad)
        seq = sequences[t]
        for tj in range(length):
            tau = t_lo + tj
            r = t - tau
            target = seq[r] if r >= 0 else seq[-r].T
            gap = float(np.linalg.norm(dn.base.blocks[ti, tj] - target, 2))
            zr = float(zeta(r))
            gr = float(gu(r))
            indices.append((t, tau))
            measured.append(gap)
            bound.append(zr ** (kappa - 2.0) * min(1.0 / n, 2.0 * zr))
            alt.append(zr ** (kappa - 2.0) * min(1.0 / n, 2.0 / gr))
    measured = np.asarray(measured)
    bound = np.asarray(bound)
    alt = np.asarray(alt)
    return GapReport(indices=indices, measured=measured, bound=bound,
                     constant_estimate=envelope_constant(measured, bound),
                     alt_bound=alt, alt_constant=envelope_constant(measured, alt))


def inverse_lipschitz_gap(model: ModelSpec, u: float, v: float, max_lag: int,
                          pad: int | None = None,
                          kappa: float | None = None) -> GapReport:
    """Lipschitz gap ``||D_r(u) - D_r(v)||`` against ``|u-v| zeta(r)^(kappa-1)``."""
    kappa = _kappa_or_raise(model, kappa)
    seq_u = stationary_inverse_sequence(model, u, max_lag, pad=pad)
    seq_v = stationary_inverse_sequence(model, v, max_lag, pad=pad)
    indices, measured, bound = [], [], []
    for r in range(-max_lag, max_lag + 1):
        du = seq_u[r] if r >= 0 else seq_u[-r].T
        dv = seq_v[r] if r >= 0 else seq_v[-r].T
        indices.append(r)
        measured.append(float(np.linalg.norm(du - dv, 2)))
        bound.append(abs(u - v) * float(zeta(r)) ** (kappa - 1.0))
    measured = np.asarray(measured)
    bound = np.asarray(bound)
    return GapReport(indices=indices, measured=measured, bound=bound,
                     constant_estimate=envelope_constant(measured, bound))


def inverse_derivative_gap(model: ModelSpec, u: float, max_lag: int,
                           h: float = 1e-4, pad: int | None = None):
    """Forward difference of ``D_r(u)`` against the sandwich derivative.

    The derivative identity assembles ``-D(u) C'(u) D(u)`` on a long
    Toeplitz section, where ``C'`` is the analytic covariance derivative
    (moving-average models).  Returns ``(fd, assembled, max_rel_err)`` with
    per-lag arrays for ``r = 0..max_lag``.
    """
    pad = cov_pad(model) if pad is None else pad
    half = max_lag + pad
    w = stationary_window(model, u, -half, half)
    inv, _, _ = _invert_flat_symmetric(w.flatten(), "inverse_derivative_gap")
    dseq = stationary_cov_derivative(model, u, 2 * half)
    p = w.p
    length = 2 * half + 1
    cprime = np.zeros((length * p, length * p))
    for i in range(length):
        for j in range(length):
            r = i - j
            blk = dseq[r] if r >= 0 else dseq[-r].T
            cprime[i * p:(i + 1) * p, j * p:(j + 1) * p] = blk
    assembled_flat = -inv @ cprime @ inv
    full = BlockWindow.from_flat(0.5 * (assembled_flat + assembled_flat.T),
                                 p, t_lo=-half, symmetrize=True)
    assembled = np.stack([full.block(0, -r) for r in range(max_lag + 1)])

    seq_u = stationary_inverse_sequence(model, u, max_lag, pad=pad)
    seq_uh = stationary_inverse_sequence(model, u + h, max_lag, pad=pad)
    fd = (seq_uh - seq_u) / h
    scale = max(float(np.abs(assembled).max()), 1e-300)
    max_rel_err = float(np.abs(fd - assembled).max()) / scale
    return fd, assembled, max_rel_err

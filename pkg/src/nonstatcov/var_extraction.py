"""Autoregressive representations extracted from covariance windows.

The one-step prediction coefficients of the process live in the bottom row
of the inverse of the one-sided covariance section: with
``D = C([T-L, T])^{-1}``, the lag-``j`` coefficient is
``-(D_{T,T})^{-1} D_{T,T-j}`` and the innovation variance is
``(D_{T,T})^{-1}``.  Finite-order projections use the ``(d+1)``-block
section ``C([T-d, T])`` and are cross-checked against the block normal
equations on every call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, DomainError, NonstatcovError
from .inverse_analysis import _invert_flat_symmetric, _kappa_or_raise, one_sided_inverse
from .models import (ModelSpec, cov_window, local_spectral_density,
                     stationary_window)
from .operator_core import BlockWindow, zeta
from .reports import GapReport, envelope_constant

_DUAL_PATH_TOL = 1e-8


@dataclass(frozen=True)
class VarCoefficients:
    """Projection coefficients of one time point on its (finite) past."""

    t_index: int | None
    order: int
    phis: tuple[np.ndarray, ...]
    sigma: np.ndarray

    def __post_init__(self):
        sig = 0.5 * (self.sigma + self.sigma.T)
        vals = np.linalg.eigvalsh(sig)
        if vals[0] <= 0:
            raise ConditioningError("VarCoefficients: innovation variance "
                                    "is not positive definite")
        object.__setattr__(self, "sigma", sig)
        object.__setattr__(self, "phis", tuple(np.asarray(p, dtype=float)
                                               for p in self.phis))

    def phi_norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(p, 2) for p in self.phis])


def _bottom_row_coeffs(window: BlockWindow, t_end: int, order: int,
                       t_index: int | None) -> VarCoefficients:
    inv, _, _ = _invert_flat_symmetric(window.flatten(), "var coefficients")
    d_win = BlockWindow.from_flat(inv, window.p, t_lo=window.t_lo, symmetrize=True)
    dtt = d_win.block(t_end, t_end)
    sigma = np.linalg.inv(dtt)
    phis = tuple(-sigma @ d_win.block(t_end, t_end - j)
                 for j in range(1, order + 1))
    return VarCoefficients(t_index=t_index, order=order, phis=phis,
                           sigma=0.5 * (sigma + sigma.T))


def _normal_equation_coeffs(window: BlockWindow, t_end: int, order: int,
                            t_index: int | None) -> VarCoefficients:
    p = window.p
    gram = np.zeros((order * p, order * p))
    cross = np.zeros((p, order * p))
    for k in range(1, order + 1):
        cross[:, (k - 1) * p:k * p] = window.block(t_end, t_end - k)
        for j in range(1, order + 1):
            gram[(k - 1) * p:k * p, (j - 1) * p:j * p] = \
                window.block(t_end - k, t_end - j)
    try:
        phi_stack = np.linalg.solve(gram.T, cross.T).T
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("var_coeffs_finite: singular regressor "
                                "covariance") from exc
    sigma = window.block(t_end, t_end) - phi_stack @ cross.T
    phis = tuple(phi_stack[:, (j - 1) * p:j * p] for j in range(1, order + 1))
    return VarCoefficients(t_index=t_index, order=order, phis=phis,
                           sigma=0.5 * (sigma + sigma.T))


def _check_dual_path(a: VarCoefficients, b: VarCoefficients) -> None:
    scale = 1.0 + max(np.linalg.norm(a.sigma, 2),
                      max(a.phi_norms(), default=0.0))
    worst = np.linalg.norm(a.sigma - b.sigma, 2)
    for pa, pb in zip(a.phis, b.phis):
        worst = max(worst, np.linalg.norm(pa - pb, 2))
    if worst > _DUAL_PATH_TOL * scale:
        raise NonstatcovError(
            f"var_coeffs_finite: inverse-row and normal-equation paths "
            f"disagree by {worst:.3e}")


def var_coeffs_infinite(model: ModelSpec, n: int, t_index: int, order: int,
                        depth: int | None = None) -> VarCoefficients:
    """Leading coefficients of the infinite-past projection at ``t_index``.

    ``depth`` is the truncation of the semi-infinite past (default
    ``order + 100``); bottom-row blocks converge geometrically in it.

    Raises:
        DomainError: if ``depth < order + 50``.
    """
    depth = order + 100 if depth is None else depth
    if depth < order + 50:
        raise DomainError("var_coeffs_infinite: depth must be >= order + 50")
    inv = one_sided_inverse(model, n, t_index, depth)
    dtt = inv.block(t_index, t_index)
    sigma = np.linalg.inv(dtt)
    phis = tuple(-sigma @ inv.block(t_index, t_index - j)
                 for j in range(1, order + 1))
    return VarCoefficients(t_index=t_index, order=order, phis=phis,
                           sigma=0.5 * (sigma + sigma.T))


def var_coeffs_finite(model: ModelSpec, n: int, t_index: int, order: int) -> VarCoefficients:
    """Projection of ``X_T`` onto its ``order`` most recent lags.

    Computed from the bottom row of the inverse of the ``(order+1)``-block
    section and, independently, from the block normal equations; the two
    paths must agree to 1e-8.

    With ``order = 0`` the projection is empty and ``sigma = C_{T,T}``.
    """
    if order < 0:
        raise DomainError("var_coeffs_finite: order must be >= 0")
    window = cov_window(model, n, t_index - order, t_index)
    if order == 0:
        return VarCoefficients(t_index=t_index, order=0, phis=(),
                               sigma=window.block(t_index, t_index).copy())
    a = _bottom_row_coeffs(window, t_index, order, t_index)
    b = _normal_equation_coeffs(window, t_index, order, t_index)
    _check_dual_path(a, b)
    return a


def stationary_var_coeffs(model: ModelSpec, u: float, order: int) -> VarCoefficients:
    """Finite-order projection coefficients of the frozen process at ``u``."""
    if order < 0:
        raise DomainError("stationary_var_coeffs: order must be >= 0")
    window = stationary_window(model, u, -order, 0)
    if order == 0:
        return VarCoefficients(t_index=None, order=0, phis=(),
                               sigma=window.block(0, 0).copy())
    a = _bottom_row_coeffs(window, 0, order, None)
    b = _normal_equation_coeffs(window, 0, order, None)
    _check_dual_path(a, b)
    return a


def stationary_var_coeffs_infinite(model: ModelSpec, u: float, order: int,
                                   depth: int | None = None) -> VarCoefficients:
    """Leading infinite-past coefficients of the frozen process at ``u``."""
    depth = order + 100 if depth is None else depth
    if depth < order + 50:
        raise DomainError("stationary_var_coeffs_infinite: depth must be "
                          ">= order + 50")
    window = stationary_window(model, u, -depth, 0)
    return _bottom_row_coeffs(window, 0, order, None)


@dataclass(frozen=True)
class BaxterReport:
    """Finite-order versus infinite-order coefficient gaps at one time."""

    order: int
    per_lag: GapReport
    summed: GapReport
    kappa_used: float


def baxter_gaps(model: ModelSpec, n: int, t_index: int, order: int,
                ref_order: int | None = None,
                kappa: float | None = None) -> BaxterReport:
    """Gaps between the order-``d`` projection and the infinite projection.

    Per-lag gaps are paired with the envelope
    ``zeta(d)^(kappa-3/2) * zeta(d-j)^(kappa-3/2)``; the summed gap with
    ``zeta(d)^(kappa-3/2)``.

    Raises:
        DomainError: if ``ref_order < order`` or the decay exponent is too
            small for the envelopes (``kappa <= 3/2``).
    """
    kappa = _kappa_or_raise(model, kappa)
    if kappa <= 1.5:
        raise DomainError("baxter_gaps: envelopes require kappa > 3/2")
    ref_order = max(order, 40) if ref_order is None else ref_order
    if ref_order < order:
        raise DomainError("baxter_gaps: ref_order must be >= order")
    finite = var_coeffs_finite(model, n, t_index, order)
    infinite = var_coeffs_infinite(model, n, t_index, ref_order)
    zd = float(zeta(order)) ** (kappa - 1.5)
    indices, measured, bound = [], [], []
    for j in range(1, order + 1):
        gap = float(np.linalg.norm(finite.phis[j - 1] - infinite.phis[j - 1], 2))
        indices.append(j)
        measured.append(gap)
        bound.append(zd * float(zeta(order - j)) ** (kappa - 1.5))
    measured = np.asarray(measured)
    bound = np.asarray(bound)
    per_lag = GapReport(indices=indices, measured=measured, bound=bound,
                        constant_estimate=envelope_constant(measured, bound))
    total = float(measured.sum())
    summed = GapReport(indices=[order], measured=np.array([total]),
                       bound=np.array([zd]),
                       constant_estimate=envelope_constant([total], [zd]))
    return BaxterReport(order=order, per_lag=per_lag, summed=summed,
                        kappa_used=kappa)


@dataclass(frozen=True)
class VarSmoothnessReport:
    """Innovation-variance and coefficient gaps to the frozen process."""

    t_index: int
    n: int
    sigma_gap: float
    sigma_constant: float       # sigma_gap * n
    phi_gaps: GapReport


def var_smoothness_gap(model: ModelSpec, n: int, t_index: int, order: int,
                       depth: int | None = None,
                       kappa: float | None = None) -> VarSmoothnessReport:
    """Distance from the array projection to the frozen-time projection.

    The innovation-variance gap is paired with the ``1/N`` envelope, the
    per-lag coefficient gaps with ``zeta(j)^(kappa-2) * min(2*zeta(j), 1/N)``.
    """
    kappa = _kappa_or_raise(model, kappa)
    depth = order + 100 if depth is None else depth
    array_fit = var_coeffs_infinite(model, n, t_index, order, depth=depth)
    frozen_fit = stationary_var_coeffs_infinite(model, t_index / n, order,
                                                depth=depth)
    sigma_gap = float(np.linalg.norm(array_fit.sigma - frozen_fit.sigma, 2))
    indices, measured, bound = [], [], []
    for j in range(1, order + 1):
        gap = float(np.linalg.norm(array_fit.phis[j - 1] - frozen_fit.phis[j - 1], 2))
        zj = float(zeta(j))
        indices.append(j)
        measured.append(gap)
        bound.append(zj ** (kappa - 2.0) * min(2.0 * zj, 1.0 / n))
    measured = np.asarray(measured)
    bound = np.asarray(bound)
    phi_gaps = GapReport(indices=indices, measured=measured, bound=bound,
                         constant_estimate=envelope_constant(measured, bound))
    return VarSmoothnessReport(t_index=t_index, n=n, sigma_gap=sigma_gap,
                               sigma_constant=sigma_gap * n, phi_gaps=phi_gaps)


@dataclass(frozen=True)
class KolmogorovGap:
    """Log-determinant of the innovation variance versus its spectral form."""

    lhs: float     # log det of the extracted innovation variance
    rhs: float     # (2 pi)^-1 integral of log det f(omega; T/N)
    gap: float


def kolmogorov_gap(model: ModelSpec, n: int, t_index: int,
                   depth: int | None = None,
                   quad_points: int = 4096) -> KolmogorovGap:
    """Innovation log-determinant against the spectral log-integral.

    Implements the classical identity
    ``log det Sigma = (2 pi)^{-1} int_0^{2 pi} log det f(omega; u) d omega``
    for the frozen process, evaluated against the array innovation variance
    at ``t_index``; the gap is O(1/N).
    """
    depth = 150 if depth is None else depth
    coeffs = var_coeffs_infinite(model, n, t_index, order=1, depth=depth)
    sign, logdet = np.linalg.slogdet(coeffs.sigma)
    if sign <= 0:
        raise ConditioningError("kolmogorov_gap: innovation variance not SPD")
    omegas = np.linspace(0.0, 2.0 * math.pi, quad_points, endpoint=False)
    u = t_index / n
    acc = 0.0
    for w in omegas:
        vals = np.linalg.eigvalsh(local_spectral_density(model, u, w))
        if vals[0] <= 0:
            raise ConditioningError("kolmogorov_gap: spectral density not SPD")
        acc += float(np.sum(np.log(vals)))
    rhs = acc / quad_points
    return KolmogorovGap(lhs=float(logdet), rhs=rhs, gap=abs(float(logdet) - rhs))

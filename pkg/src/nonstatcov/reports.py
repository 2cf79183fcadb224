"""Result containers shared by the fitting and gap-measuring operations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class DecayProfile:
    """Fitted polynomial-decay profile of per-lag block norms.

    ``constant`` is the smallest K with ``measured <= K * shape`` at every
    fitted lag (a sup-bound constant, not a regression intercept);
    ``exponent`` is the least-squares slope of log-norm against the
    log decay weight.  ``band_limited`` is set when the norms vanish beyond
    a finite lag, in which case the regression may be degenerate (NaN slope).
    """

    constant: float
    exponent: float
    lags: np.ndarray
    residuals: np.ndarray
    band_limited: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lags", np.asarray(self.lags))
        object.__setattr__(self, "residuals", np.asarray(self.residuals, dtype=float))


@dataclass(frozen=True)
class GapReport:
    """Per-index measured discrepancies paired with a theoretical envelope.

    ``bound`` holds the envelope *shape* evaluated at the same indices (no
    leading constant); ``constant_estimate`` is the smallest multiplier
    making ``measured <= constant * bound`` everywhere.  Some operations
    also report an alternative envelope variant in ``alt_bound``.
    """

    indices: list
    measured: np.ndarray
    bound: np.ndarray
    constant_estimate: float
    alt_bound: np.ndarray | None = None
    alt_constant: float | None = None

    def __post_init__(self):
        measured = np.asarray(self.measured, dtype=float)
        bound = np.asarray(self.bound, dtype=float)
        if len(self.indices) != measured.size or measured.shape != bound.shape:
            raise InputError("GapReport: indices, measured and bound sizes differ")
        if np.any(measured < 0) or np.any(bound < 0):
            raise InputError("GapReport: measured and bound must be nonnegative")
        object.__setattr__(self, "measured", measured)
        object.__setattr__(self, "bound", bound)

    @property
    def max_measured(self) -> float:
        return float(self.measured.max(initial=0.0))


def envelope_constant(measured: np.ndarray, shape: np.ndarray) -> float:
    """Smallest K with ``measured <= K * shape`` (inf if shape vanishes
    where measured does not)."""
    measured = np.asarray(measured, dtype=float)
    shape = np.asarray(shape, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(shape > 0, measured / shape,
                         np.where(measured > 0, np.inf, 0.0))
    return float(np.max(ratio, initial=0.0))


def fit_decay_profile(lags: np.ndarray, norms: np.ndarray, shape: np.ndarray,
                      log_abscissa: np.ndarray, zero_tol: float = 1e-14) -> DecayProfile:
    """Least-squares decay fit of ``log norms`` against ``log log_abscissa``.

    ``shape`` is the envelope evaluated at the lags; the reported constant is
    the max ratio ``norms/shape``.  Lags with norms at numerical zero are
    dropped; if every lag is dropped the profile is flagged band-limited and
    the slope is NaN.
    """
    lags = np.asarray(lags)
    norms = np.asarray(norms, dtype=float)
    scale = max(float(norms.max(initial=0.0)), 1e-300)
    usable = norms > max(zero_tol, 1e-13 * scale)
    band_limited = bool((~usable).any())
    if usable.sum() == 0:
        return DecayProfile(constant=0.0, exponent=float("nan"),
                            lags=lags[:0], residuals=norms[:0], band_limited=True)
    x = np.log(np.asarray(log_abscissa, dtype=float)[usable])
    y = np.log(norms[usable])
    if usable.sum() < 2 or np.ptp(x) < 1e-12:
        slope = float("nan")
        resid = np.zeros(int(usable.sum()))
    else:
        coeffs = np.polyfit(x, y, 1)
        slope = float(coeffs[0])
        resid = y - np.polyval(coeffs, x)
    constant = envelope_constant(norms[usable], np.asarray(shape, dtype=float)[usable])
    return DecayProfile(constant=constant, exponent=slope, lags=lags[usable],
                        residuals=resid, band_limited=band_limited)

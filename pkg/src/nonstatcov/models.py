"""Locally stationary process families with closed-form covariances.

Four families are implemented:

* :class:`TvVMA` -- time-varying vector moving average with coefficient
  functions of rescaled time; covariances are exact truncated convolution
  sums.
* :class:`TvVAR` -- time-varying vector autoregression; covariance windows
  are obtained by assembling the exactly banded precision operator on a
  padded window, inverting, and discarding the pad.
* :class:`TvARCH` -- univariate time-varying ARCH; the observed process is
  white with a smoothly varying variance.
* :class:`SRE` -- random-coefficient stochastic recurrence model; no closed
  forms, Monte Carlo only.

Coefficient functions are defined on rescaled time ``u in [0, 1]`` and
extended constantly outside, which keeps every form bounded and Lipschitz
on the whole real line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg

from .errors import (DomainError, FitError, InputError, ModelError,
                     UnsupportedFamilyError)
from .operator_core import BlockWindow, EigRange, block_norms, gu
from .reports import (DecayProfile, GapReport, envelope_constant,
                      fit_decay_profile)

_COV_TAIL_TOL = 1e-12      # relative truncation tolerance of MA tails
_DEFAULT_U_GRID = 33       # points used when validating invariants on [0, 1]


def _clamp_u(u: float) -> float:
    return 0.0 if u < 0.0 else (1.0 if u > 1.0 else u)


@dataclass(frozen=True, eq=False)
class CoefficientFn:
    """A matrix-valued function of rescaled time.

    Supported forms:

    * ``constant``: ``value``
    * ``affine``: ``base + slope * u``
    * ``sinusoidal``: ``base + amplitude * sin(2*pi*(frequency*u + phase))``
    * ``piecewise``: linear interpolation of ``values`` over ``knots``

    All payload matrices must share one square shape.  Evaluation clamps
    ``u`` into ``[0, 1]``.
    """

    form: str
    payload: dict

    def __post_init__(self):
        if self.form not in ("constant", "affine", "sinusoidal", "piecewise"):
            raise InputError(f"CoefficientFn: unknown form {self.form!r}")
        payload = {k: (np.asarray(v, dtype=float) if not np.isscalar(v) else float(v))
                   for k, v in self.payload.items()}
        object.__setattr__(self, "payload", payload)
        shape = self.matrix_shape  # validates
        if shape[0] != shape[1]:
            raise InputError("CoefficientFn: payload matrices must be square")

    @property
    def matrix_shape(self) -> tuple[int, int]:
        if self.form == "constant":
            return np.atleast_2d(self.payload["value"]).shape
        if self.form == "affine":
            return np.atleast_2d(self.payload["base"]).shape
        if self.form == "sinusoidal":
            return np.atleast_2d(self.payload["base"]).shape
        return np.atleast_2d(self.payload["values"][0]).shape

    @property
    def dim(self) -> int:
        return self.matrix_shape[0]

    def __call__(self, u: float) -> np.ndarray:
        u = _clamp_u(float(u))
        p = self.payload
        if self.form == "constant":
            return np.atleast_2d(p["value"]).copy()
        if self.form == "affine":
            return np.atleast_2d(p["base"]) + u * np.atleast_2d(p["slope"])
        if self.form == "sinusoidal":
            freq = p.get("frequency", 1.0)
            phase = p.get("phase", 0.0)
            return (np.atleast_2d(p["base"])
                    + math.sin(2.0 * math.pi * (freq * u + phase))
                    * np.atleast_2d(p["amplitude"]))
        knots = p["knots"]
        values = p["values"]
        i = int(np.clip(np.searchsorted(knots, u, side="right") - 1, 0, len(knots) - 2))
        w = (u - knots[i]) / (knots[i + 1] - knots[i])
        return (1.0 - w) * values[i] + w * values[i + 1]

    def derivative(self, u: float) -> np.ndarray:
        """d/du at an interior point of [0, 1] (zero outside)."""
        uf = float(u)
        if uf < 0.0 or uf > 1.0:
            return np.zeros(self.matrix_shape)
        p = self.payload
        if self.form == "constant":
            return np.zeros(self.matrix_shape)
        if self.form == "affine":
            return np.atleast_2d(p["slope"]).copy()
        if self.form == "sinusoidal":
            freq = p.get("frequency", 1.0)
            phase = p.get("phase", 0.0)
            return (2.0 * math.pi * freq
                    * math.cos(2.0 * math.pi * (freq * uf + phase))
                    * np.atleast_2d(p["amplitude"]))
        knots = p["knots"]
        values = p["values"]
        i = int(np.clip(np.searchsorted(knots, uf, side="right") - 1, 0, len(knots) - 2))
        return (values[i + 1] - values[i]) / (knots[i + 1] - knots[i])

    def lipschitz_constant(self) -> float:
        """Explicit spectral-norm Lipschitz constant of the form."""
        p = self.payload
        if self.form == "constant":
            return 0.0
        if self.form == "affine":
            return float(np.linalg.norm(np.atleast_2d(p["slope"]), 2))
        if self.form == "sinusoidal":
            freq = p.get("frequency", 1.0)
            return float(2.0 * math.pi * abs(freq)
                         * np.linalg.norm(np.atleast_2d(p["amplitude"]), 2))
        knots = p["knots"]
        values = p["values"]
        slopes = [np.linalg.norm(values[i + 1] - values[i], 2) / (knots[i + 1] - knots[i])
                  for i in range(len(knots) - 1)]
        return float(max(slopes))


def constant_fn(value) -> CoefficientFn:
    return CoefficientFn("constant", {"value": np.atleast_2d(value)})


def affine_fn(base, slope) -> CoefficientFn:
    return CoefficientFn("affine", {"base": np.atleast_2d(base),
                                    "slope": np.atleast_2d(slope)})


def sinusoidal_fn(base, amplitude, frequency=1.0, phase=0.0) -> CoefficientFn:
    return CoefficientFn("sinusoidal", {"base": np.atleast_2d(base),
                                        "amplitude": np.atleast_2d(amplitude),
                                        "frequency": float(frequency),
                                        "phase": float(phase)})


# ---------------------------------------------------------------------------
# model families
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TvVMA:
    """Time-varying vector moving average of finite truncation order.

    ``psis[j]`` is the lag-``j`` coefficient function; the observed array
    uses ``psis[j](t/N) + n_correction[j](t/N)/N`` when a correction is
    present, so the array genuinely differs from its frozen-time
    approximation at rate ``1/N``.
    """

    p: int
    psis: tuple[CoefficientFn, ...]
    kappa: float | None = None
    n_correction: tuple[CoefficientFn, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "psis", tuple(self.psis))
        if not self.psis:
            raise InputError("TvVMA: needs at least the lag-0 coefficient")
        for fn in self.psis:
            if fn.dim != self.p:
                raise InputError("TvVMA: coefficient dimension mismatch")
        if self.n_correction is not None:
            corr = tuple(self.n_correction)
            if len(corr) != len(self.psis):
                raise InputError("TvVMA: n_correction length must match psis")
            object.__setattr__(self, "n_correction", corr)

    @property
    def order(self) -> int:
        return len(self.psis) - 1

    def psi_stack(self, u: float) -> np.ndarray:
        """Smooth coefficients at ``u``, shape ``(order+1, p, p)``."""
        return np.stack([fn(u) for fn in self.psis])

    def psi_stack_array(self, u: float, n: int) -> np.ndarray:
        """Array coefficients at time ``t = u*n``, including the 1/N term."""
        out = self.psi_stack(u)
        if self.n_correction is not None:
            out = out + np.stack([fn(u) for fn in self.n_correction]) / n
        return out

    def psi_stack_derivative(self, u: float) -> np.ndarray:
        return np.stack([fn.derivative(u) for fn in self.psis])


@dataclass(frozen=True, eq=False)
class TvVAR:
    """Time-varying vector autoregression with SPD innovation variance."""

    p: int
    phis: tuple[CoefficientFn, ...]
    sigma: CoefficientFn

    def __post_init__(self):
        object.__setattr__(self, "phis", tuple(self.phis))
        if not self.phis:
            raise InputError("TvVAR: needs at least one lag coefficient")
        for fn in self.phis:
            if fn.dim != self.p:
                raise InputError("TvVAR: coefficient dimension mismatch")
        if self.sigma.dim != self.p:
            raise InputError("TvVAR: sigma dimension mismatch")

    @property
    def order(self) -> int:
        return len(self.phis)

    def phi_stack(self, u: float) -> np.ndarray:
        return np.stack([fn(u) for fn in self.phis])

    def sigma_at(self, u: float) -> np.ndarray:
        s = self.sigma(u)
        return 0.5 * (s + s.T)


@dataclass(frozen=True, eq=False)
class TvARCH:
    """Univariate time-varying ARCH; ``coeffs[0]`` is the intercept."""

    coeffs: tuple[CoefficientFn, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if len(self.coeffs) < 1:
            raise InputError("TvARCH: needs the intercept coefficient")
        for fn in self.coeffs:
            if fn.dim != 1:
                raise InputError("TvARCH: coefficients must be scalar")

    @property
    def p(self) -> int:
        return 1

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def a_values(self, u: float) -> np.ndarray:
        return np.array([float(fn(u)[0, 0]) for fn in self.coeffs])


@dataclass(frozen=True, eq=False)
class SRE:
    """Stochastic recurrence model ``X_t = A(u, e_t) X_{t-1} + b(u, e_t)``.

    ``A(u, e) = (a_scale(u) + a_noise * e_0) * a_matrix`` and
    ``b(u, e) = b_scale(u) * e_{1..p}``, with ``e_t`` a standard Gaussian
    vector of dimension ``p + 1``.  Monte Carlo only: no closed-form
    covariances.
    """

    p: int
    a_scale: CoefficientFn
    a_noise: float
    a_matrix: np.ndarray
    b_scale: CoefficientFn

    def __post_init__(self):
        a = np.asarray(self.a_matrix, dtype=float)
        if a.shape != (self.p, self.p):
            raise InputError("SRE: a_matrix must be p x p")
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "a_matrix", a)
        if self.a_scale.dim != 1 or self.b_scale.dim != 1:
            raise InputError("SRE: scale functions must be scalar")

    def contraction_bound(self, u_grid=None) -> float:
        """sup over u of ``||E[A A^T]||_2``; must be below one."""
        if u_grid is None:
            u_grid = np.linspace(0.0, 1.0, _DEFAULT_U_GRID)
        m2 = float(np.linalg.norm(self.a_matrix @ self.a_matrix.T, 2))
        vals = [(float(self.a_scale(u)[0, 0]) ** 2 + self.a_noise**2) * m2
                for u in u_grid]
        return max(vals)


ModelSpec = Union[TvVMA, TvVAR, TvARCH, SRE]


@dataclass(frozen=True)
class SamplePath:
    """A simulated stretch of the process, deterministic given the seed."""

    data: np.ndarray       # (length, p)
    t_lo: int
    n: int
    seed: int

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.t_lo, self.t_lo + self.data.shape[0])


@dataclass(frozen=True)
class PhysicalDepEstimate:
    """Monte Carlo coupled-difference variance norm with a batch stderr."""

    value: float
    stderr: float
    reps: int


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------

def _companion_radius(phi_stack: np.ndarray) -> float:
    """Spectral radius of the companion matrix of a VAR coefficient stack."""
    d, p, _ = phi_stack.shape
    comp = np.zeros((d * p, d * p))
    comp[:p, :] = np.concatenate(phi_stack, axis=1)
    if d > 1:
        comp[p:, :-p] = np.eye((d - 1) * p)
    return float(np.max(np.abs(np.linalg.eigvals(comp)))) if comp.size else 0.0


def stability_radius(model: ModelSpec, u_grid=None) -> float:
    """Worst-case one-step contraction factor of the recursion over ``u``.

    TvVAR: companion spectral radius.  TvARCH: sup of the coefficient sum.
    SRE: sqrt of the second-moment contraction bound.  TvVMA has no
    recursion and returns 0.
    """
    if u_grid is None:
        u_grid = np.linspace(0.0, 1.0, _DEFAULT_U_GRID)
    if isinstance(model, TvVMA):
        return 0.0
    if isinstance(model, TvVAR):
        return max(_companion_radius(model.phi_stack(u)) for u in u_grid)
    if isinstance(model, TvARCH):
        return max(float(np.sum(model.a_values(u)[1:])) for u in u_grid)
    if isinstance(model, SRE):
        return math.sqrt(model.contraction_bound(u_grid))
    raise UnsupportedFamilyError(f"unknown family {type(model).__name__}")


def effective_memory(model: ModelSpec) -> int:
    """e-folding time of the recursion (exact order for moving averages)."""
    if isinstance(model, TvVMA):
        return max(1, model.order)
    rho = stability_radius(model)
    if rho >= 1.0:
        raise ModelError(f"{type(model).__name__}: recursion does not contract "
                         f"(radius {rho:.4f} >= 1)")
    if rho <= 1e-12:
        return 1
    return max(1, math.ceil(-1.0 / math.log(rho)))


def validate_model(model: ModelSpec, u_grid=None, omega_points: int = 128) -> dict:
    """Check the family invariants; raises ModelError on violation.

    Returns a dict of measured margins (stability radius, filter minimum,
    eigenvalue floors) for reporting.
    """
    if u_grid is None:
        u_grid = np.linspace(0.0, 1.0, _DEFAULT_U_GRID)
    info: dict = {"family": type(model).__name__}

    if isinstance(model, TvVAR):
        radius = stability_radius(model, u_grid)
        info["stability_radius"] = radius
        if radius >= 1.0 / 1.02:
            raise ModelError(f"TvVAR: companion radius {radius:.4f} leaves no "
                             "stability margin")
        omegas = np.linspace(0.0, 2.0 * math.pi, omega_points, endpoint=False)
        z = (1.0 + 0.02) * np.exp(1j * omegas)
        margin = math.inf
        for u in u_grid:
            phi = model.phi_stack(u)
            powers = z[:, None] ** np.arange(1, model.order + 1)[None, :]
            a = np.eye(model.p) - np.einsum("wj,jab->wab", powers, phi)
            margin = min(margin, float(np.linalg.svd(a, compute_uv=False)[..., -1].min()))
            svals = np.linalg.eigvalsh(model.sigma_at(u))
            if svals[0] <= 0:
                raise ModelError(f"TvVAR: innovation variance not SPD at u={u:.3f}")
        info["stability_margin"] = margin
        if margin <= 1e-8:
            raise ModelError("TvVAR: transfer function nearly singular inside "
                             "the stability disc")
        return info

    if isinstance(model, TvVMA):
        omegas = np.linspace(0.0, 2.0 * math.pi, omega_points, endpoint=False)
        phases = np.exp(1j * omegas[:, None] * np.arange(model.order + 1)[None, :])
        filt_min = math.inf
        env_const = 0.0
        for u in u_grid:
            stack = model.psi_stack(u)
            transfer = np.einsum("wj,jab->wab", phases, stack)
            filt_min = min(filt_min, float(
                np.linalg.svd(transfer, compute_uv=False)[..., -1].min()))
            if model.kappa is not None:
                shape = gu(np.arange(model.order + 1)) ** (-model.kappa)
                env_const = max(env_const,
                                envelope_constant(block_norms(stack), shape))
        info["filter_min_singular_value"] = filt_min
        if model.kappa is not None:
            info["envelope_constant"] = env_const
        if filt_min <= 1e-8:
            raise ModelError("TvVMA: moving-average filter vanishes on the "
                             "unit circle")
        return info

    if isinstance(model, TvARCH):
        a0_min = min(float(model.a_values(u)[0]) for u in u_grid)
        info["a0_min"] = a0_min
        if a0_min <= 0:
            raise ModelError("TvARCH: intercept must be bounded away from zero")
        for u in u_grid:
            a = model.a_values(u)
            if np.any(a[1:] < 0):
                raise ModelError("TvARCH: lag coefficients must be nonnegative")
        # fourth-moment condition with Gaussian innovations: sqrt(E Z^4) = sqrt(3)
        load = max(math.sqrt(3.0) * float(np.sum(model.a_values(u)[1:]))
                   for u in u_grid)
        info["fourth_moment_load"] = load
        if load >= 1.0:
            raise ModelError(f"TvARCH: fourth-moment condition fails "
                             f"(sqrt(E Z^4) * sum a_j = {load:.4f} >= 1)")
        return info

    if isinstance(model, SRE):
        rho = model.contraction_bound(u_grid)
        info["second_moment_bound"] = rho
        if rho >= 1.0:
            raise ModelError(f"SRE: ||E[A A^T]|| bound {rho:.4f} >= 1")
        return info

    raise UnsupportedFamilyError(f"unknown family {type(model).__name__}")


# ---------------------------------------------------------------------------
# covariances of the observed array
# ---------------------------------------------------------------------------

def _vma_cov_window(model: TvVMA, n: int, t_lo: int, t_hi: int) -> BlockWindow:
    length = t_hi - t_lo + 1
    j_max = model.order
    stacks = np.stack([model.psi_stack_array(t / n, n)
                       for t in range(t_lo, t_hi + 1)])  # (L, J+1, p, p)
    blocks = np.zeros((length, length, model.p, model.p))
    for delta in range(length):
        if delta > j_max:
            break
        left = stacks[:length - delta, :j_max + 1 - delta]
        right = stacks[delta:, delta:]
        vals = np.einsum("tjab,tjcb->tac", left, right)
        idx = np.arange(length - delta)
        blocks[idx, idx + delta] = vals
        if delta:
            blocks[idx + delta, idx] = vals.transpose(0, 2, 1)
    return BlockWindow(t_lo=t_lo, p=model.p, blocks=blocks, symmetric=True)


def _var_precision_flat(model: TvVAR, n: int, t_lo: int, t_hi: int) -> np.ndarray:
    """Flattened section of the exactly banded precision operator."""
    length = t_hi - t_lo + 1
    p, d = model.p, model.order
    big = np.eye(length * p)
    for i, t in enumerate(range(t_lo, t_hi + 1)):
        phi = model.phi_stack(t / n)
        for j in range(1, d + 1):
            if i - j < 0:
                break
            big[i * p:(i + 1) * p, (i - j) * p:(i - j + 1) * p] = -phi[j - 1]
    sinv_blocks = []
    for t in range(t_lo, t_hi + 1):
        s = model.sigma_at(t / n)
        si = np.linalg.inv(s)
        sinv_blocks.append(0.5 * (si + si.T))
    sinv = scipy.linalg.block_diag(*sinv_blocks)
    prec = big.T @ sinv @ big
    return 0.5 * (prec + prec.T)


def cov_pad(model: ModelSpec) -> int:
    """Default pad for covariance assembly and finite-section inversion.

    Recursive families pad by 25 effective memory lengths (edge effects die
    geometrically); moving averages decay polynomially with a known
    exponent, where 50 suffices at desk scale.
    """
    if isinstance(model, TvVMA):
        kappa = model.kappa if model.kappa is not None else 4.0
        return max(50, 10 * math.ceil(kappa))
    mem = effective_memory(model)
    order = getattr(model, "order", 1)
    return max(50, 25 * mem, 4 * order)


def cov_window(model: ModelSpec, n: int, t_lo: int, t_hi: int,
               pad: int | None = None) -> BlockWindow:
    """Covariance section ``(C_{t,tau}; t_lo <= t, tau <= t_hi)``.

    Exact up to the MA truncation tolerance (TvVMA) or the geometric pad
    truncation of the banded-precision inversion (TvVAR).

    Raises:
        ModelError: if the family invariants fail.
        UnsupportedFamilyError: for SRE models (Monte Carlo only).
    """
    if n < 1:
        raise DomainError("cov_window: requires n >= 1")
    if t_hi < t_lo:
        raise InputError("cov_window: empty window")
    validate_model(model)
    if isinstance(model, TvVMA):
        return _vma_cov_window(model, n, t_lo, t_hi)
    if isinstance(model, TvVAR):
        pad = cov_pad(model) if pad is None else pad
        prec = _var_precision_flat(model, n, t_lo - pad, t_hi + pad)
        cov = np.linalg.inv(prec)
        cov = 0.5 * (cov + cov.T)
        full = BlockWindow.from_flat(cov, model.p, t_lo=t_lo - pad, symmetrize=True)
        return full.subwindow(t_lo, t_hi)
    if isinstance(model, TvARCH):
        length = t_hi - t_lo + 1
        m = _arch_mean_square(model, n, t_lo, t_hi)
        blocks = np.zeros((length, length, 1, 1))
        blocks[np.arange(length), np.arange(length), 0, 0] = m
        return BlockWindow(t_lo=t_lo, p=1, blocks=blocks, symmetric=True)
    raise UnsupportedFamilyError(
        "cov_window: stochastic recurrence models have no closed-form "
        "covariance; use simulate_path / physical_dep_estimate")


def cov_block(model: ModelSpec, n: int, t: int, tau: int) -> np.ndarray:
    """Single covariance block ``C_{t,tau}``; see :func:`cov_window`."""
    lo, hi = min(t, tau), max(t, tau)
    return cov_window(model, n, lo, hi).block(t, tau).copy()


def _arch_mean_square(model: TvARCH, n: int, t_lo: int, t_hi: int) -> np.ndarray:
    d = model.order
    burn = 10 * effective_memory(model) + d
    start = t_lo - burn
    a_start = model.a_values(start / n)
    denom = 1.0 - float(np.sum(a_start[1:]))
    state = [a_start[0] / denom] * max(d, 1)
    out = np.zeros(t_hi - t_lo + 1)
    for t in range(start, t_hi + 1):
        a = model.a_values(t / n)
        m = a[0] + float(np.dot(a[1:], state[:d][::-1])) if d else a[0]
        if d:
            state = state[1:] + [m] if len(state) >= d else state + [m]
            state = state[-d:]
        if t >= t_lo:
            out[t - t_lo] = m
    return out


# ---------------------------------------------------------------------------
# stationary approximations
# ---------------------------------------------------------------------------

def _var_ma_expansion(model: TvVAR, u: float, tol: float = _COV_TAIL_TOL) -> np.ndarray:
    """MA coefficients (including the innovation square root) of the frozen
    process at ``u``, truncated when the certified tail drops below ``tol``."""
    phi = model.phi_stack(u)
    d, p = model.order, model.p
    radius = _companion_radius(phi)
    if radius >= 1.0:
        raise ModelError(f"TvVAR: frozen process unstable at u={u:.4f}")
    sig = model.sigma_at(u)
    try:
        chol = np.linalg.cholesky(sig)
    except np.linalg.LinAlgError as exc:
        raise ModelError(f"TvVAR: innovation variance not SPD at u={u:.4f}") from exc
    rho = min(0.999, radius + 1e-6)
    k_max = max(3 * d + 20, int(math.log(tol) / math.log(rho)) + 3 * d) if radius > 1e-12 else d + 1
    psis = np.zeros((k_max + 1, p, p))
    psis[0] = chol
    for k in range(1, k_max + 1):
        acc = np.zeros((p, p))
        for j in range(1, min(d, k) + 1):
            acc += phi[j - 1] @ psis[k - j]
        psis[k] = acc
    norms = block_norms(psis)
    keep = int(np.max(np.nonzero(norms > tol * max(norms.max(), 1e-300))[0])) + 1
    return psis[:keep + 1]


def _stationary_psi_stack(model: ModelSpec, u: float) -> np.ndarray:
    """Stack of MA coefficients of the frozen process at ``u``."""
    if isinstance(model, TvVMA):
        return model.psi_stack(u)
    if isinstance(model, TvVAR):
        return _var_ma_expansion(model, u)
    raise UnsupportedFamilyError(
        f"{type(model).__name__} has no moving-average representation here")


def stationary_cov_sequence(model: ModelSpec, u: float, max_lag: int) -> np.ndarray:
    """``C_r(u)`` for ``r = 0..max_lag``, shape ``(max_lag+1, p, p)``.

    Negative lags follow from ``C_{-r}(u) = C_r(u)^T``.
    """
    if isinstance(model, TvARCH):
        a = model.a_values(u)
        c0 = a[0] / (1.0 - float(np.sum(a[1:])))
        out = np.zeros((max_lag + 1, 1, 1))
        out[0, 0, 0] = c0
        return out
    psis = _stationary_psi_stack(model, u)
    k = psis.shape[0]
    p = psis.shape[1]
    out = np.zeros((max_lag + 1, p, p))
    for r in range(min(max_lag, k - 1) + 1):
        out[r] = np.einsum("jab,jcb->ac", psis[r:], psis[:k - r])
    return out


def stationary_cov(model: ModelSpec, u: float, r: int) -> np.ndarray:
    """Autocovariance ``C_r(u)`` of the frozen process at rescaled time ``u``."""
    seq = stationary_cov_sequence(model, u, abs(int(r)))
    c = seq[abs(int(r))]
    return c.T.copy() if r < 0 else c.copy()


def stationary_window(model: ModelSpec, u: float, t_lo: int, t_hi: int) -> BlockWindow:
    """Block Toeplitz section of the frozen-process covariance at ``u``."""
    length = t_hi - t_lo + 1
    seq = stationary_cov_sequence(model, u, length - 1)
    p = seq.shape[1]
    blocks = np.zeros((length, length, p, p))
    for r in range(length):
        vals = seq[r]
        idx = np.arange(length - r)
        blocks[idx + r, idx] = vals          # C_{t,tau} = C_{t-tau}(u), t-tau = r
        if r:
            blocks[idx, idx + r] = vals.T
    return BlockWindow(t_lo=t_lo, p=p, blocks=blocks, symmetric=True)


def stationary_cov_derivative(model: ModelSpec, u: float, max_lag: int) -> np.ndarray:
    """``d C_r(u)/du`` for ``r = 0..max_lag`` (moving-average models only)."""
    if not isinstance(model, TvVMA):
        raise UnsupportedFamilyError("analytic covariance derivative is only "
                                     "available for moving-average models")
    psis = model.psi_stack(u)
    dpsis = model.psi_stack_derivative(u)
    k = psis.shape[0]
    out = np.zeros((max_lag + 1, model.p, model.p))
    for r in range(min(max_lag, k - 1) + 1):
        out[r] = (np.einsum("jab,jcb->ac", dpsis[r:], psis[:k - r])
                  + np.einsum("jab,jcb->ac", psis[r:], dpsis[:k - r]))
    return out


# ---------------------------------------------------------------------------
# local spectral density
# ---------------------------------------------------------------------------

def local_spectral_density(model: ModelSpec, u: float, omega: float) -> np.ndarray:
    """Hermitian local spectral density ``f(omega; u) = sum_r C_r(u) e^{i r omega}``.

    No ``1/(2*pi)`` factor: the inversion back to lag space is
    ``C_r(u) = (2*pi)^{-1} \\int_0^{2*pi} f(omega; u) e^{-i r omega} d omega``.

    Raises:
        ModelError: if a TvVAR transfer function is singular at ``(u, omega)``.
    """
    if isinstance(model, TvARCH):
        return stationary_cov(model, u, 0).astype(complex)
    z = np.exp(1j * float(omega))
    if isinstance(model, TvVMA):
        stack = model.psi_stack(u)
        transfer = np.einsum("j,jab->ab", z ** np.arange(stack.shape[0]), stack)
        f = transfer @ transfer.conj().T
    elif isinstance(model, TvVAR):
        phi = model.phi_stack(u)
        a = np.eye(model.p) - np.einsum("j,jab->ab",
                                        z ** np.arange(1, model.order + 1), phi)
        svals = np.linalg.svd(a, compute_uv=False)
        if svals[-1] < 1e-10 * max(svals[0], 1.0):
            raise ModelError(f"TvVAR: transfer singular at u={u}, omega={omega}")
        ainv = np.linalg.inv(a)
        f = ainv @ model.sigma_at(u) @ ainv.conj().T
    else:
        raise UnsupportedFamilyError("no spectral density for this family")
    return 0.5 * (f + f.conj().T)


def spectral_eig_range(model: ModelSpec, u_grid, omega_grid) -> EigRange:
    """Extremal eigenvalues of ``f(omega; u)`` over the given grids."""
    u_grid = np.atleast_1d(np.asarray(u_grid, dtype=float))
    omega_grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    if u_grid.size == 0 or omega_grid.size == 0:
        raise InputError("spectral_eig_range: grids must be nonempty")
    lo, hi = math.inf, -math.inf
    for u in u_grid:
        fs = np.stack([local_spectral_density(model, u, w) for w in omega_grid])
        vals = np.linalg.eigvalsh(fs)
        lo = min(lo, float(vals[:, 0].min()))
        hi = max(hi, float(vals[:, -1].max()))
    return EigRange(lo, hi)


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def _innovation_width(model: ModelSpec) -> int:
    if isinstance(model, TvARCH):
        return 1
    if isinstance(model, SRE):
        return model.p + 1
    return model.p


def _psd_sqrt(s: np.ndarray) -> np.ndarray:
    """Symmetric square root, tolerating semidefinite matrices."""
    s = 0.5 * (s + s.T)
    vals, vecs = np.linalg.eigh(s)
    if vals[0] < -1e-10 * max(abs(vals[-1]), 1.0):
        raise ModelError("innovation variance has a negative eigenvalue")
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def _validate_for_simulation(model: ModelSpec) -> None:
    """The subset of invariants a recursion needs: contraction, nonnegative
    variances.  Invertibility of the filter is not required to simulate."""
    if isinstance(model, TvVMA):
        return
    rho = stability_radius(model)
    if rho >= 1.0:
        raise ModelError(f"{type(model).__name__}: recursion does not "
                         f"contract (radius {rho:.4f})")
    if isinstance(model, TvARCH):
        for u in np.linspace(0.0, 1.0, _DEFAULT_U_GRID):
            a = model.a_values(u)
            if a[0] < 0 or np.any(a[1:] < 0):
                raise ModelError("TvARCH: coefficients must be nonnegative")


def _burn_in(model: ModelSpec) -> int:
    order = getattr(model, "order", 1)
    if isinstance(model, TvVMA):
        return model.order
    return 10 * effective_memory(model) + order


def _run_from_innovations(model: ModelSpec, n: int, start: int,
                          eps: np.ndarray) -> np.ndarray:
    """Drive the recursion with a given innovation array.

    ``eps`` has shape ``(reps, T, width)`` for innovations at times
    ``start .. start + T - 1``; returns the paths ``(reps, T, p)``.
    Recursions start from zero state at ``start``.
    """
    reps, steps, _ = eps.shape
    if isinstance(model, TvVMA):
        j_max = model.order
        p = model.p
        out = np.zeros((reps, steps, p))
        stacks = [model.psi_stack_array((start + i) / n, n) for i in range(steps)]
        for i in range(steps):
            t = start + i
            jj = min(j_max, i)
            # X_t = sum_j Psi_{t,j} eps_{t-j}
            e = eps[:, i - jj:i + 1][:, ::-1]          # lags 0..jj
            out[:, i] = np.einsum("jab,rjb->ra", stacks[i][:jj + 1], e)
        return out
    if isinstance(model, TvVAR):
        p, d = model.p, model.order
        out = np.zeros((reps, steps, p))
        for i in range(steps):
            t = start + i
            u = t / n
            phi = model.phi_stack(u)
            chol = _psd_sqrt(model.sigma_at(u))
            acc = eps[:, i] @ chol.T
            for j in range(1, min(d, i) + 1):
                acc = acc + out[:, i - j] @ phi[j - 1].T
            out[:, i] = acc
        return out
    if isinstance(model, TvARCH):
        d = model.order
        out = np.zeros((reps, steps, 1))
        for i in range(steps):
            a = model.a_values((start + i) / n)
            var = np.full(reps, a[0])
            for j in range(1, min(d, i) + 1):
                var = var + a[j] * out[:, i - j, 0] ** 2
            out[:, i, 0] = np.sqrt(var) * eps[:, i, 0]
        return out
    if isinstance(model, SRE):
        p = model.p
        out = np.zeros((reps, steps, p))
        state = np.zeros((reps, p))
        for i in range(steps):
            u = (start + i) / n
            scale = float(model.a_scale(u)[0, 0]) + model.a_noise * eps[:, i, 0]
            drive = float(model.b_scale(u)[0, 0]) * eps[:, i, 1:]
            state = scale[:, None] * (state @ model.a_matrix.T) + drive
            out[:, i] = state
        return out
    raise UnsupportedFamilyError(f"cannot simulate {type(model).__name__}")


def simulate_path(model: ModelSpec, n: int, t_lo: int, t_hi: int,
                  seed: int) -> SamplePath:
    """Simulate ``X_{t,N}`` for ``t_lo <= t <= t_hi`` with Gaussian innovations.

    Recursive families are burnt in over at least ten effective memory
    lengths; the result is bitwise reproducible for a fixed seed.
    """
    _validate_for_simulation(model)
    burn = _burn_in(model)
    start = t_lo - burn
    steps = t_hi - start + 1
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((1, steps, _innovation_width(model)))
    path = _run_from_innovations(model, n, start, eps)[0, burn:]
    return SamplePath(data=path, t_lo=t_lo, n=n, seed=seed)


def simulate_ensemble(model: ModelSpec, n: int, t_lo: int, t_hi: int,
                      reps: int, seed: int) -> np.ndarray:
    """Independent replications of a path, shape ``(reps, length, p)``.

    Used by Monte Carlo oracles; shares the burn-in policy of
    :func:`simulate_path`.
    """
    _validate_for_simulation(model)
    burn = _burn_in(model)
    start = t_lo - burn
    steps = t_hi - start + 1
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((reps, steps, _innovation_width(model)))
    return _run_from_innovations(model, n, start, eps)[:, burn:]


def physical_dep_estimate(model: ModelSpec, n: int, t: int, j: int,
                          reps: int, seed: int) -> PhysicalDepEstimate:
    """Coupled-process dependence measure at time ``t`` and lag ``j``.

    Reruns the recursion with the innovation at ``t - j`` replaced by an
    independent copy (identical innovations elsewhere) and returns the
    spectral norm of the Monte Carlo variance of ``X_t - X_t'``, with a
    10-batch standard error.

    Raises:
        DomainError: if ``j < 0`` or ``reps < 100``.
    """
    if j < 0:
        raise DomainError("physical_dep_estimate: requires j >= 0")
    if reps < 100:
        raise DomainError("physical_dep_estimate: requires reps >= 100")
    _validate_for_simulation(model)
    burn = _burn_in(model)
    start = t - j - burn
    steps = t - start + 1
    rng = np.random.default_rng(seed)
    width = _innovation_width(model)
    eps = rng.standard_normal((reps, steps, width))
    swap = rng.standard_normal((reps, width))
    base = _run_from_innovations(model, n, start, eps)
    eps_c = eps.copy()
    eps_c[:, steps - 1 - j] = swap
    coupled = _run_from_innovations(model, n, start, eps_c)
    diff = base[:, -1] - coupled[:, -1]

    n_batches = 10
    sizes = np.full(n_batches, reps // n_batches)
    sizes[:reps % n_batches] += 1
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    batch_norms = []
    for b in range(n_batches):
        d = diff[bounds[b]:bounds[b + 1]]
        batch_norms.append(np.linalg.norm(d.T @ d / len(d), 2))
    batch_norms = np.asarray(batch_norms)
    value = float(np.linalg.norm(diff.T @ diff / reps, 2))
    stderr = float(batch_norms.std(ddof=1) / math.sqrt(n_batches))
    return PhysicalDepEstimate(value=value, stderr=stderr, reps=reps)


# ---------------------------------------------------------------------------
# assumption verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionFit:
    """Measured decay and smoothness constants of a covariance window."""

    decay: DecayProfile
    smoothness_constant: float
    kappa_used: float
    gaps: GapReport
    max_gap: float


def assumption_fit(model: ModelSpec, n: int, t_lo: int, t_hi: int,
                   kappa: float | None = None) -> AssumptionFit:
    """Fit the covariance decay and measure the local-stationarity constant.

    The decay exponent comes from regressing the per-lag maximum block norm
    on ``log gu(lag)`` over lags >= 2.  The smoothness constant is the
    smallest K with ``||C_{t,tau} - C_{t-tau}(t/N)|| <= K * gu(t-tau)^{1-kappa}
    * min(1/N, 2/gu(t-tau))`` over the window.

    Raises:
        FitError: if fewer than 4 lags carry a nonzero norm.
    """
    w = cov_window(model, n, t_lo, t_hi)
    length = w.length
    lag_norms = w.lag_max_norms()
    lags = np.arange(2, length)
    if lags.size < 4:
        raise FitError("assumption_fit: window too short for a decay fit")
    norms = lag_norms[2:]
    usable = norms > 1e-14
    if usable.sum() < 4:
        raise FitError("assumption_fit: fewer than 4 usable lags")
    kappa_used = kappa if kappa is not None else getattr(model, "kappa", None)
    fitted = fit_decay_profile(lags, norms, gu(lags) ** 0.0, np.asarray(gu(lags)))
    kappa_hat = -fitted.exponent
    if kappa_used is None:
        kappa_used = kappa_hat
    shape_decay = gu(lags) ** (-kappa_hat)
    k_hat = envelope_constant(norms[usable], shape_decay[usable])
    decay = DecayProfile(constant=k_hat, exponent=kappa_hat, lags=fitted.lags,
                         residuals=fitted.residuals, band_limited=fitted.band_limited)

    # per-pair smoothness gaps against the stationary approximation
    seqs = {}
    indices, measured, envelope = [], [], []
    for ti in range(length):
        t = t_lo + ti
        if t not in seqs:
            seqs[t] = stationary_cov_sequence(model, t / n, length - 1)
        seq = seqs[t]
        for tj in range(length):
            tau = t_lo + tj
            r = t - tau
            target = seq[r] if r >= 0 else seq[-r].T
            diff = float(np.linalg.norm(w.blocks[ti, tj] - target, 2))
            g = float(gu(r))
            env = g ** (-(kappa_used - 1.0)) * min(1.0 / n, 2.0 / g)
            indices.append((t, tau))
            measured.append(diff)
            envelope.append(env)
    gaps = GapReport(indices=indices, measured=np.asarray(measured),
                     bound=np.asarray(envelope),
                     constant_estimate=envelope_constant(measured, envelope))
    return AssumptionFit(decay=decay, smoothness_constant=gaps.constant_estimate,
                         kappa_used=float(kappa_used), gaps=gaps,
                         max_gap=float(np.max(measured)))

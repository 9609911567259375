"""Linear response of the driven cavity to a weak probe.

The probe acquires first-order sidebands on top of the steady state; the
sideband amplitude per unit probe drive is the rational function

    c_plus(d) = [ m*(d^2 - om^2 + i*gm*d) * (2k - i*(D + d)) - i*alpha ]
                ---------------------------------------------------------
                [ m*(d^2 - om^2 + i*gm*d) * ((2k - i*d)^2 + D^2) + 2*D*alpha ]

with d the probe-pump detuning, om/gm the membrane frequency/damping,
k the cavity half-linewidth, D the effective detuning and alpha the
optomechanical interaction strength from the steady state.  Everything
else in this module is algebra on top of it:

* transmitted / reflected amplitudes  eps_T = 2k*c_plus,  eps_R = eps_T - 1
* spectra  T = |eps_T|^2,  R = |eps_R|^2
* group delay / advance  tau_X = Im[(d eps_X / d detuning) / eps_X],
  available both as the exact quotient-rule derivative of the rational
  function and as a Richardson-extrapolated central difference; the two
  act as independent cross-checks of each other
* transparency half-width  Gamma = gm/2 + alpha / (4*m*om*k), affine in
  pump power.

Delays where the relevant amplitude magnitude falls below
``AMPLITUDE_FLOOR`` are reported as NaN rather than as a huge number:
1/eps_X amplifies roundoff without bound there, and at the empty-cavity
resonance eps_R is genuinely zero, so no finite value would be honest.
NaN propagates through tables and CSV output as a gap; command-line entry
points translate it to a nonzero exit status when a single requested
scalar is undefined.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .params import DriveParams, ParameterError, SystemParams, derive
from .steady_state import SteadyState, solve_steady

ArrayLike = Union[float, np.ndarray]

# |eps_X| below which a group delay is declared undefined.
AMPLITUDE_FLOOR = 1e-9
# |denominator| below which evaluating the response is refused outright.
DENOMINATOR_FLOOR = 1e-300
# Default finite-difference step as a fraction of the mirror frequency:
# small enough to resolve the narrow transparency feature at microwatt
# pump powers, large enough to stay far above double-precision noise.
FD_STEP_FRACTION = 1e-6

METHOD_ANALYTIC = "analytic"
METHOD_FINITE_DIFFERENCE = "finite_difference"


class DegenerateDenominatorError(ArithmeticError):
    """Response denominator vanished; inputs are outside the physical domain."""


@dataclass(frozen=True)
class ProbeResponse:
    """Complex probe response at a single detuning."""

    delta: float  # rad/s
    c_plus: complex  # s, sideband amplitude per unit probe drive
    eps_t: complex  # transmitted amplitude, dimensionless
    eps_r: complex  # reflected amplitude, eps_t - 1 exactly
    phase_t: float  # rad, principal value; NaN for zero amplitude
    phase_r: float  # rad


@dataclass(frozen=True)
class DelayReport:
    """Group delay (tau > 0) or advance (tau < 0) of the two output ports."""

    tau_t: float  # s, transmission; NaN when |eps_t| < AMPLITUDE_FLOOR
    tau_r: float  # s, reflection; NaN when |eps_r| < AMPLITUDE_FLOOR
    method: str  # METHOD_ANALYTIC or METHOD_FINITE_DIFFERENCE
    fd_step: float  # rad/s, step used by the finite-difference method (else NaN)


@dataclass(frozen=True)
class SpectrumTable:
    """Columnar probe response over a detuning grid."""

    delta: np.ndarray  # rad/s, strictly increasing
    eps_t: np.ndarray  # complex
    transmission: np.ndarray  # |eps_t|^2
    reflection: np.ndarray  # |eps_t - 1|^2
    phase_t: np.ndarray  # rad
    tau_t: np.ndarray  # s, NaN gaps where undefined
    tau_r: np.ndarray  # s
    power: float  # W, pump power the steady state was solved at

    def __len__(self) -> int:
        return len(self.delta)


@dataclass(frozen=True)
class WidthReport:
    """Half-width of the transparency feature at a given pump power."""

    gamma_width: float  # rad/s
    power: float  # W


class PowerPoint(NamedTuple):
    power: float  # W
    tau_t: float  # s
    tau_r: float  # s
    gamma_width: float  # rad/s


def thread_count() -> int:
    """Worker count for grid evaluations, capped by CAVITY_EIT_THREADS (0 = auto)."""
    raw = os.environ.get("CAVITY_EIT_THREADS", "0").strip()
    try:
        n = int(raw)
    except ValueError:
        raise ParameterError(f"CAVITY_EIT_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise ParameterError(f"CAVITY_EIT_THREADS must be >= 0, got {n}")
    if n == 0:
        return min(8, os.cpu_count() or 1)
    return n


def _pieces(delta: ArrayLike, params: SystemParams, alpha: float):
    """Numerator and denominator of the response, plus their detuning derivatives."""
    d = np.asarray(delta, dtype=float)
    m = params.mirror_mass
    om = params.mirror_freq
    gm = params.mirror_damping
    k2 = 2.0 * params.cavity_decay
    det = params.effective_detuning

    chi = m * (d * d - om * om + 1j * gm * d)
    dchi = m * (2.0 * d + 1j * gm)
    u = k2 - 1j * (det + d)
    w = (k2 - 1j * d) ** 2 + det * det
    dw = -2j * (k2 - 1j * d)

    num = chi * u - 1j * alpha
    dnum = dchi * u - 1j * chi
    den = chi * w + 2.0 * det * alpha
    dden = dchi * w + chi * dw
    return num, dnum, den, dden


def c_plus(
    delta: ArrayLike, params: SystemParams, steady: SteadyState
) -> complex | np.ndarray:
    """Sideband amplitude per unit probe drive. Accepts scalars or arrays."""
    num, _, den, _ = _pieces(delta, params, steady.alpha)
    if np.ndim(delta) == 0:
        if abs(den) < DENOMINATOR_FLOOR:
            raise DegenerateDenominatorError(
                f"response denominator |{complex(den)!r}| below {DENOMINATOR_FLOOR} "
                f"at delta={float(delta)!r}"
            )
        return complex(num / den)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(np.abs(den) < DENOMINATOR_FLOOR, np.nan + 0j, num / den)


def transmitted_amplitude(
    delta: ArrayLike, params: SystemParams, steady: SteadyState
) -> complex | np.ndarray:
    """eps_T = 2*kappa*c_plus."""
    return 2.0 * params.cavity_decay * c_plus(delta, params, steady)


def _phase(z: complex) -> float:
    if z == 0:
        return math.nan
    return math.atan2(z.imag, z.real)


def probe_response(
    delta: float, params: SystemParams, steady: SteadyState
) -> ProbeResponse:
    """Full complex response at one detuning.

    Phases are principal-value arguments in (-pi, pi]; the phase of an
    exactly zero amplitude is NaN (undefined), which happens for the
    reflected port at the empty-cavity resonance.
    """
    cp = c_plus(delta, params, steady)
    eps_t = 2.0 * params.cavity_decay * cp
    eps_r = eps_t - 1.0
    return ProbeResponse(
        delta=float(delta),
        c_plus=cp,
        eps_t=eps_t,
        eps_r=eps_r,
        phase_t=_phase(eps_t),
        phase_r=_phase(eps_r),
    )


def _mask_floor(tau: np.ndarray, amp: np.ndarray) -> np.ndarray:
    return np.where(amp < AMPLITUDE_FLOOR, np.nan, tau)


def _taus_analytic(delta: ArrayLike, params: SystemParams, alpha: float):
    """Exact log-derivative delays from the quotient rule on the rational response."""
    num, dnum, den, dden = _pieces(delta, params, alpha)
    k2 = 2.0 * params.cavity_decay
    rnum = k2 * num - den  # eps_r = rnum / den
    drnum = k2 * dnum - dden
    with np.errstate(divide="ignore", invalid="ignore"):
        tau_t = np.imag(dnum / num - dden / den)
        tau_r = np.imag(drnum / rnum - dden / den)
        amp_t = np.abs(k2 * num / den)
        amp_r = np.abs(rnum / den)
    return _mask_floor(tau_t, amp_t), _mask_floor(tau_r, amp_r)


def _taus_fd(delta: ArrayLike, params: SystemParams, alpha: float, step: float):
    """Central-difference delays with one Richardson halving (O(step^4) error)."""

    def eps_t(d):
        num, _, den, _ = _pieces(d, params, alpha)
        with np.errstate(divide="ignore", invalid="ignore"):
            return 2.0 * params.cavity_decay * num / den

    d = np.asarray(delta, dtype=float)
    coarse = (eps_t(d + step) - eps_t(d - step)) / (2.0 * step)
    half = 0.5 * step
    fine = (eps_t(d + half) - eps_t(d - half)) / (2.0 * half)
    der = (4.0 * fine - coarse) / 3.0
    et = eps_t(d)
    with np.errstate(divide="ignore", invalid="ignore"):
        tau_t = np.imag(der / et)
        tau_r = np.imag(der / (et - 1.0))
    return _mask_floor(tau_t, np.abs(et)), _mask_floor(tau_r, np.abs(et - 1.0))


def group_delay_analytic(
    delta: float, params: SystemParams, steady: SteadyState
) -> DelayReport:
    """Group delay of both ports from the exact derivative of the response."""
    tau_t, tau_r = _taus_analytic(delta, params, steady.alpha)
    return DelayReport(
        tau_t=float(tau_t),
        tau_r=float(tau_r),
        method=METHOD_ANALYTIC,
        fd_step=math.nan,
    )


def group_delay_fd(
    delta: float,
    params: SystemParams,
    steady: SteadyState,
    step: float | None = None,
) -> DelayReport:
    """Group delay of both ports by Richardson-extrapolated central differences.

    Shares no derivative algebra with group_delay_analytic, so agreement
    between the two validates both.
    """
    if step is None:
        step = FD_STEP_FRACTION * params.mirror_freq
    if not (step > 0):
        raise ParameterError(f"finite-difference step must be positive, got {step!r}")
    tau_t, tau_r = _taus_fd(delta, params, steady.alpha, step)
    return DelayReport(
        tau_t=float(tau_t),
        tau_r=float(tau_r),
        method=METHOD_FINITE_DIFFERENCE,
        fd_step=step,
    )


def default_delta_grid(params: SystemParams, n: int = 2001) -> np.ndarray:
    """Uniform grid over delta/mirror_freq in [0.5, 1.5], matching the figure range."""
    return np.linspace(0.5 * params.mirror_freq, 1.5 * params.mirror_freq, n)


def _spectrum_block(delta: np.ndarray, params: SystemParams, alpha: float):
    num, _, den, _ = _pieces(delta, params, alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        eps_t = 2.0 * params.cavity_decay * num / den
    phase = np.angle(eps_t)
    phase = np.where(eps_t == 0, np.nan, phase)
    tau_t, tau_r = _taus_analytic(delta, params, alpha)
    return eps_t, phase, tau_t, tau_r


def spectrum(
    delta_grid: Sequence[float] | np.ndarray,
    params: SystemParams,
    steady: SteadyState,
    power: float = math.nan,
) -> SpectrumTable:
    """Evaluate the probe response over a detuning grid.

    Points are independent; with CAVITY_EIT_THREADS > 1 the grid is split
    into contiguous chunks evaluated concurrently.  Output ordering always
    matches the input grid, and per-point undefined delays appear as NaN
    gaps instead of aborting the sweep.
    """
    grid = np.asarray(delta_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ParameterError("delta grid must be a non-empty 1-D array")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ParameterError("delta grid must be strictly increasing")

    workers = thread_count()
    if workers > 1 and grid.size >= 4 * workers:
        chunks = np.array_split(grid, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(lambda c: _spectrum_block(c, params, steady.alpha), chunks)
            )
        eps_t = np.concatenate([p[0] for p in parts])
        phase = np.concatenate([p[1] for p in parts])
        tau_t = np.concatenate([p[2] for p in parts])
        tau_r = np.concatenate([p[3] for p in parts])
    else:
        eps_t, phase, tau_t, tau_r = _spectrum_block(grid, params, steady.alpha)

    return SpectrumTable(
        delta=grid,
        eps_t=eps_t,
        transmission=np.abs(eps_t) ** 2,
        reflection=np.abs(eps_t - 1.0) ** 2,
        phase_t=phase,
        tau_t=tau_t,
        tau_r=tau_r,
        power=power,
    )


def eit_width(
    params: SystemParams, steady: SteadyState, power: float = math.nan
) -> WidthReport:
    """Transparency half-width Gamma = gamma_m/2 + alpha / (4*m*omega_m*kappa)."""
    gamma = params.mirror_damping / 2.0 + steady.alpha / (
        4.0 * params.mirror_mass * params.mirror_freq * params.cavity_decay
    )
    return WidthReport(gamma_width=gamma, power=power)


def power_sweep(
    powers: Sequence[float],
    delta: float,
    params: SystemParams,
) -> list[PowerPoint]:
    """Delays and transparency width at one detuning across pump powers.

    The steady state is re-solved for every power.  Powers must be
    non-negative and sorted ascending; undefined delays propagate as NaN.
    """
    values = [float(p) for p in powers]
    if not values:
        raise ParameterError("power sweep needs at least one power")
    if any(p < 0 for p in values):
        raise ParameterError(f"pump powers must be non-negative, got {values!r}")
    if values != sorted(values):
        raise ParameterError("pump powers must be sorted ascending")

    out = []
    for p in values:
        steady = solve_steady(params, derive(params, DriveParams(pump_power=p)))
        report = group_delay_analytic(delta, params, steady)
        width = eit_width(params, steady, power=p)
        out.append(PowerPoint(p, report.tau_t, report.tau_r, width.gamma_width))
    return out


def unwrap_phase(phases: Sequence[float] | np.ndarray) -> np.ndarray:
    """Stitch 2*pi jumps of principal-value phases sampled on a monotone grid.

    The core reports principal values only; this post-processing step
    recovers a continuous phase curve for plotting.
    """
    return np.unwrap(np.asarray(phases, dtype=float))

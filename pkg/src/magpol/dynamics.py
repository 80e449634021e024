"""Time integration and hysteretic detuning sweeps.

Segments are integrated with a fixed-step classical Runge-Kutta
scheme on the two complex mode amplitudes. Before integrating, the
state and parameters are rescaled so amplitudes are O(1) (see
``model.rescale``); the nonlinear coefficients absorb the scale, the
trajectory is exactly equivalent, and a fixed overflow guard then
means the same thing for every parameter set.

The sweep protocol models a stepped magnet sweep in which the system
keeps oscillating between steps: each step starts from the final
state of the previous one, and the detuning actually experienced is
the programmed value minus the emission offset measured on the
previous step. Both memory channels can be disabled independently to
recover a memoryless sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError
from .model import DriveSpec, ModeState, SystemParams, rescale
from .spectral import phase_slope_offset

# Squared-amplitude overflow guard, in rescaled units where the
# natural saturated state is O(1).
DIVERGENCE_CAP = 1e12

# Phase-fit confidence below which a sweep step is flagged as not
# single-tone (chaotic, multi-tone, or still transient).
LOW_CONFIDENCE = 0.5


@dataclass(frozen=True)
class TrajectorySegment:
    """One integrated stretch at fixed parameters.

    ``times`` has length n_steps + 1 and includes the initial sample;
    ``a`` and ``m`` are the complex photon and magnon amplitudes at
    those times, in sqrt quanta.
    """

    times: np.ndarray
    a: np.ndarray
    m: np.ndarray
    detuning_nominal: float = 0.0
    detuning_effective: float = 0.0

    def final_state(self) -> ModeState:
        return ModeState(a=complex(self.a[-1]), m=complex(self.m[-1]),
                         t=float(self.times[-1]))


def _natural_scale(params: SystemParams, drive: DriveSpec | None) -> float:
    """Squared-amplitude scale of the saturated/driven state."""
    if drive is not None:
        denom = 0.25 * params.kappa ** 2 + params.delta_c ** 2
        if drive.eta > 0 and denom > 0:
            return drive.eta ** 2 / denom
        return 1.0
    if params.gain_eff > 0 and params.gamma_sat > 0:
        return params.gain_eff / params.gamma_sat
    return 1.0


def integrate_segment(state: ModeState, params: SystemParams,
                      duration: float, dt: float,
                      drive: DriveSpec | None = None) -> TrajectorySegment:
    """Fixed-step RK4 integration over ``duration`` (us).

    With ``drive`` the passive driven equations are integrated;
    without it the active (gain plus saturation) equations are, which
    requires ``delta_c == 0`` like the rest of the active machinery.
    Raises DivergenceError if the rescaled squared amplitude of either
    mode exceeds DIVERGENCE_CAP, with ``step`` set to the offending
    step index.
    """
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive and finite, got {dt}")
    n = int(round(duration / dt))
    if n < 1:
        raise ValueError(f"duration {duration} shorter than one step {dt}")
    if not state.is_finite():
        raise ValueError("initial state is not finite")
    if drive is None and params.delta_c != 0.0:
        raise ValueError("active integration requires delta_c == 0")

    scale_sq = max(_natural_scale(params, drive), state.n_a, state.n_m, 1.0)
    state_s, params_s, drive_s = rescale(state, params, math.sqrt(scale_sq),
                                         drive)

    hk = 0.5 * params_s.kappa
    hg = 0.5 * params_s.gamma
    g = params_s.g
    kerr = params_s.kerr
    dc = params_s.delta_c
    dmg = params_s.delta_m
    if drive_s is not None:
        eta = drive_s.eta

        def rhs(a: complex, m: complex) -> tuple[complex, complex]:
            da = -(hk + 1j * dc) * a - 1j * g * m + eta
            nm = m.real * m.real + m.imag * m.imag
            dm = -(hg + 1j * (dmg + kerr * nm)) * m - 1j * g * a
            return da, dm
    else:
        g_eff = params_s.gain_eff
        gsat = params_s.gamma_sat

        def rhs(a: complex, m: complex) -> tuple[complex, complex]:
            na = a.real * a.real + a.imag * a.imag
            da = (g_eff - gsat * na) * a - 1j * g * m
            nm = m.real * m.real + m.imag * m.imag
            dm = -(hg + 1j * (dmg + kerr * nm)) * m - 1j * g * a
            return da, dm

    a_out = np.empty(n + 1, dtype=complex)
    m_out = np.empty(n + 1, dtype=complex)
    a, m = state_s.a, state_s.m
    a_out[0], m_out[0] = a, m
    h = dt
    h2 = 0.5 * dt
    h6 = dt / 6.0
    for k in range(1, n + 1):
        k1a, k1m = rhs(a, m)
        k2a, k2m = rhs(a + h2 * k1a, m + h2 * k1m)
        k3a, k3m = rhs(a + h2 * k2a, m + h2 * k2m)
        k4a, k4m = rhs(a + h * k3a, m + h * k3m)
        a = a + h6 * (k1a + 2.0 * (k2a + k3a) + k4a)
        m = m + h6 * (k1m + 2.0 * (k2m + k3m) + k4m)
        na = a.real * a.real + a.imag * a.imag
        nm = m.real * m.real + m.imag * m.imag
        if not (na < DIVERGENCE_CAP and nm < DIVERGENCE_CAP):
            raise DivergenceError(
                f"amplitude overflow at step {k} (t = "
                f"{state.t + k * dt:.6g} us): scaled photon number "
                f"{na:.3e}, magnon number {nm:.3e}", step=k)
        a_out[k], m_out[k] = a, m

    s = math.sqrt(scale_sq)
    times = state.t + dt * np.arange(n + 1)
    return TrajectorySegment(times=times, a=a_out * s, m=m_out * s,
                             detuning_nominal=params.delta_m,
                             detuning_effective=params.delta_m)


@dataclass(frozen=True)
class SweepProtocol:
    """Stepped detuning sweep with optional state and detuning memory.

    ``detunings`` are the programmed magnon detunings (rad/us) in
    sweep order. Each step runs for ``t_total`` us at step ``dt``;
    analysis drops the first ``t_drop`` us and fits the trailing
    ``fit_fraction`` of the remainder. With ``memory_state`` each step
    continues from the previous final state; with ``memory_detuning``
    the detuning applied at step k is detunings[k] minus the emission
    offset measured at step k - 1 (the previously developed
    oscillation drags the effective resonance); ``omega_initial`` is
    the offset assumed before the first step (no prior oscillation).
    """

    detunings: tuple[float, ...]
    dt: float = 1.0e-3
    t_total: float = 8.0
    t_drop: float = 3.0
    fit_fraction: float = 0.5
    memory_detuning: bool = True
    memory_state: bool = True
    omega_initial: float = 0.0

    def __post_init__(self):
        if len(self.detunings) == 0:
            raise ValueError("sweep needs at least one detuning")
        if not all(math.isfinite(d) for d in self.detunings):
            raise ValueError("detunings must be finite")
        if not math.isfinite(self.omega_initial):
            raise ValueError("omega_initial must be finite")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0.0 <= self.t_drop < self.t_total:
            raise ValueError(f"need 0 <= t_drop < t_total, got t_drop = "
                             f"{self.t_drop}, t_total = {self.t_total}")
        if not 0.0 < self.fit_fraction <= 1.0:
            raise ValueError(f"fit_fraction must be in (0, 1], got "
                             f"{self.fit_fraction}")
        if (self.t_total - self.t_drop) / self.dt < 16:
            raise ValueError("fewer than 16 samples would survive t_drop")


@dataclass
class SweepResult:
    """Outcome of ``run_sweep``.

    ``omegas`` holds the fitted emission offsets (rad/us) per step,
    NaN from the first diverged step onward; ``confidences`` the
    phase-fit confidences (0 where never run); ``low_confidence``
    flags steps whose fit fell below LOW_CONFIDENCE.
    ``detunings_effective`` are the detunings actually applied.
    ``diverged_at`` is the index of the step whose integration
    overflowed, or None; ``error`` carries its message.
    """

    protocol: SweepProtocol
    params: SystemParams
    segments: list[TrajectorySegment] = field(default_factory=list)
    detunings_nominal: np.ndarray = field(default_factory=lambda: np.empty(0))
    detunings_effective: np.ndarray = field(default_factory=lambda: np.empty(0))
    omegas: np.ndarray = field(default_factory=lambda: np.empty(0))
    confidences: np.ndarray = field(default_factory=lambda: np.empty(0))
    low_confidence: np.ndarray = field(default_factory=lambda: np.empty(0,
                                                                        bool))
    diverged_at: int | None = None
    error: str | None = None


def default_seed_state(params: SystemParams,
                       drive: DriveSpec | None = None) -> ModeState:
    """Small reproducible kick used when no initial state is given.

    The active equations have the origin as an exact fixed point, so
    an exactly zero seed would never leave it; seed the photon mode at
    1e-3 of the saturated amplitude instead.
    """
    amp = 1e-3 * math.sqrt(max(_natural_scale(params, drive), 1.0))
    return ModeState(a=amp + 0.0j, m=0.0j, t=0.0)


def run_sweep(protocol: SweepProtocol, params: SystemParams,
              drive: DriveSpec | None = None,
              initial_state: ModeState | None = None) -> SweepResult:
    """Run a stepped detuning sweep and fit each step's emission offset.

    The first step is offset by ``protocol.omega_initial`` (zero by
    default: no prior oscillation). A DivergenceError inside a step is
    recorded on the result (``diverged_at``, ``error``) rather than
    raised; completed steps keep their fits and the remaining ones
    stay NaN.
    """
    n_seg = len(protocol.detunings)
    result = SweepResult(
        protocol=protocol, params=params,
        detunings_nominal=np.asarray(protocol.detunings, dtype=float),
        detunings_effective=np.full(n_seg, np.nan),
        omegas=np.full(n_seg, np.nan),
        confidences=np.zeros(n_seg),
        low_confidence=np.zeros(n_seg, dtype=bool),
    )
    seed = initial_state if initial_state is not None \
        else default_seed_state(params, drive)
    state = seed
    omega_prev = protocol.omega_initial
    for k, d_nom in enumerate(protocol.detunings):
        d_eff = d_nom - omega_prev if protocol.memory_detuning else d_nom
        params_k = params.replace(delta_m=d_eff)
        seg_state = state if (k == 0 or protocol.memory_state) else seed
        try:
            seg = integrate_segment(seg_state, params_k, protocol.t_total,
                                    protocol.dt, drive)
        except DivergenceError as exc:
            result.diverged_at = k
            result.error = (f"step {k} (detuning {d_nom:.6g} rad/us, "
                            f"effective {d_eff:.6g}): {exc}")
            break
        seg = TrajectorySegment(times=seg.times, a=seg.a, m=seg.m,
                                detuning_nominal=d_nom,
                                detuning_effective=d_eff)
        result.segments.append(seg)
        result.detunings_effective[k] = d_eff
        omega, conf = phase_slope_offset(seg.times - seg.times[0], seg.a,
                                         protocol.t_drop,
                                         protocol.fit_fraction)
        result.omegas[k] = omega
        result.confidences[k] = conf
        result.low_confidence[k] = conf < LOW_CONFIDENCE
        omega_prev = omega
        state = seg.final_state()
    return result

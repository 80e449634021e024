"""Stability phase diagrams over (drive or gain) x (magnon detuning).

A grid cell fixes one point in parameter space; the cell is solved for
all fixed points, each is classified, and the cell reports how many
came out stable, unstable, and marginal. Cells with no admissible
fixed point are blank (for the active system that means the origin is
the only attractor). Exceptions raised while solving a cell go to a
per-cell error channel instead of aborting the scan.

The x axis is either a photon number target ``n0`` (drive power for
the passive system through ``n0_to_drive_passive``, pump gain for the
active one through ``n0_to_gain_active``) or the effective gain
directly. n0 axes are sampled logarithmically, gain axes linearly,
detuning always linearly.

Scans are deterministic: cells are evaluated independently and
assembled by index, so the result is identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import steady
from .model import DriveSpec, SystemParams
from .stability import MARGIN_RTOL, classify
from .steady import active_fixed_points, passive_fixed_points

_VALID_SYSTEMS = ("passive", "active")
_VALID_AXES = ("n0", "gain")


@dataclass(frozen=True)
class GridSpec:
    """Scan layout: x axis, detuning axis, and the shared base parameters.

    ``base`` carries every rate that does not vary across the grid;
    ``delta_m`` and (depending on the axis) ``gain`` in it are
    overridden cell by cell. Detunings and gain are rad/us as usual;
    ``n0`` bounds are photon numbers.
    """

    system: str
    x_axis: str
    x_min: float
    x_max: float
    x_count: int
    delta_m_min: float
    delta_m_max: float
    delta_m_count: int
    base: SystemParams

    def __post_init__(self):
        if self.system not in _VALID_SYSTEMS:
            raise ValueError(f"system must be one of {_VALID_SYSTEMS}")
        if self.x_axis not in _VALID_AXES:
            raise ValueError(f"x_axis must be one of {_VALID_AXES}")
        if self.system == "passive" and self.x_axis == "gain":
            raise ValueError("passive scans take an n0 axis, not gain")
        if self.x_count < 2 or self.delta_m_count < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be < x_max")
        if not self.delta_m_min < self.delta_m_max:
            raise ValueError("delta_m_min must be < delta_m_max")
        if self.x_axis == "n0" and self.x_min <= 0:
            raise ValueError("n0 axis is logarithmic and needs x_min > 0")

    def x_values(self) -> np.ndarray:
        if self.x_axis == "n0":
            return np.geomspace(self.x_min, self.x_max, self.x_count)
        return np.linspace(self.x_min, self.x_max, self.x_count)

    def delta_m_values(self) -> np.ndarray:
        return np.linspace(self.delta_m_min, self.delta_m_max,
                           self.delta_m_count)


@dataclass
class PhaseDiagram:
    """Counts per cell; arrays are (delta_m_count, x_count)."""

    grid: GridSpec
    stable: np.ndarray
    unstable: np.ndarray
    marginal: np.ndarray
    blank: np.ndarray
    errors: np.ndarray
    error_messages: dict[tuple[int, int], str] = field(default_factory=dict)

    def phase_label(self, iy: int, ix: int) -> str:
        """Cell label like '2S+1U', or 'blank' / 'error'."""
        if self.errors[iy, ix]:
            return "error"
        if self.blank[iy, ix]:
            return "blank"
        lab = f"{self.stable[iy, ix]}S+{self.unstable[iy, ix]}U"
        if self.marginal[iy, ix]:
            lab += f"+{self.marginal[iy, ix]}M"
        return lab

    def region_summary(self) -> dict[str, int]:
        """Cell count per phase label, for reporting."""
        out: dict[str, int] = {}
        ny, nx = self.stable.shape
        for iy in range(ny):
            for ix in range(nx):
                lab = self.phase_label(iy, ix)
                out[lab] = out.get(lab, 0) + 1
        return dict(sorted(out.items()))


def n0_to_drive_passive(n0: float, params: SystemParams) -> DriveSpec:
    """Drive that puts n0 photons in the bare (uncoupled) cavity.

    Inverts n0 = eta^2 / ((kappa/2)^2 + delta_c^2). When the external
    port is configured (kappa_ext > 0 and omega_d > 0) the equivalent
    input power and flux are attached for reporting; without a port the
    drive amplitude alone is returned, since the steady-state problem
    only sees eta.
    """
    if n0 < 0:
        raise ValueError(f"n0 must be >= 0, got {n0}")
    denom = (0.5 * params.kappa) ** 2 + params.delta_c ** 2
    if denom <= 0.0:
        raise ValueError("degenerate mapping: kappa and delta_c both zero")
    eta = math.sqrt(n0 * denom)
    if params.kappa_ext <= 0.0 or params.omega_d <= 0.0:
        return DriveSpec(eta=eta)
    from .model import power_from_drive
    drive = DriveSpec(eta=eta)
    return DriveSpec(eta=eta, s_in=eta / math.sqrt(params.kappa_ext),
                     power_w=power_from_drive(drive, params))


def n0_to_gain_active(n0: float, params: SystemParams) -> float:
    """Effective gain whose free-running photon number would be n0."""
    if n0 < 0:
        raise ValueError(f"n0 must be >= 0, got {n0}")
    if params.gamma_sat <= 0.0:
        raise ValueError("degenerate mapping: gamma_sat must be > 0")
    return n0 * params.gamma_sat


def _eval_cell(grid: GridSpec, x: float, delta_m: float,
               margin_rtol: float) -> tuple[int, int, int, int, str | None]:
    """(n_stable, n_unstable, n_marginal, n_total, error) for one cell."""
    try:
        params = grid.base.replace(delta_m=delta_m)
        if grid.system == "passive":
            drive = n0_to_drive_passive(x, params)
            fps = passive_fixed_points(params, drive)
        else:
            if grid.x_axis == "gain":
                g_eff = x
            else:
                g_eff = n0_to_gain_active(x, params)
            params = params.replace(gain=g_eff, gain_absorbed=True,
                                    delta_c=0.0)
            fps = active_fixed_points(params)
        ns = nu = nm = 0
        for fp in fps:
            rep = classify(fp, params, margin_rtol=margin_rtol)
            if rep.is_marginal:
                nm += 1
            elif rep.is_stable:
                ns += 1
            else:
                nu += 1
        return ns, nu, nm, len(fps), None
    except Exception as exc:  # cell errors must not abort the scan
        return 0, 0, 0, 0, f"{type(exc).__name__}: {exc}"


def _eval_row(args) -> list[tuple[int, int, int, int, str | None]]:
    grid, iy, margin_rtol = args
    dm = grid.delta_m_values()[iy]
    return [_eval_cell(grid, x, dm, margin_rtol) for x in grid.x_values()]


def scan(grid: GridSpec, workers: int = 1,
         margin_rtol: float = MARGIN_RTOL) -> PhaseDiagram:
    """Evaluate every cell of the grid; see the module docstring.

    ``workers`` > 1 distributes rows over processes. Results do not
    depend on the worker count.
    """
    ny, nx = grid.delta_m_count, grid.x_count
    stable = np.zeros((ny, nx), dtype=np.int16)
    unstable = np.zeros((ny, nx), dtype=np.int16)
    marginal = np.zeros((ny, nx), dtype=np.int16)
    blank = np.zeros((ny, nx), dtype=bool)
    errors = np.zeros((ny, nx), dtype=bool)
    messages: dict[tuple[int, int], str] = {}

    tasks = [(grid, iy, margin_rtol) for iy in range(ny)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_eval_row, tasks, chunksize=1))
    else:
        rows = [_eval_row(t) for t in tasks]

    for iy, row in enumerate(rows):
        for ix, (ns, nu, nm, ntot, err) in enumerate(row):
            if err is not None:
                errors[iy, ix] = True
                messages[(iy, ix)] = err
                continue
            stable[iy, ix] = ns
            unstable[iy, ix] = nu
            marginal[iy, ix] = nm
            blank[iy, ix] = ntot == 0
    return PhaseDiagram(grid=grid, stable=stable, unstable=unstable,
                        marginal=marginal, blank=blank, errors=errors,
                        error_messages=messages)


def bistable_onset(diagram: PhaseDiagram,
                   n_stable: int = 2, n_unstable: int = 1) -> np.ndarray:
    """First x index per detuning row matching the given phase, else -1."""
    ny, nx = diagram.stable.shape
    out = np.full(ny, -1, dtype=int)
    for iy in range(ny):
        hits = np.flatnonzero(
            (diagram.stable[iy] == n_stable)
            & (diagram.unstable[iy] == n_unstable)
            & ~diagram.blank[iy] & ~diagram.errors[iy])
        if hits.size:
            out[iy] = hits[0]
    return out


def onset_monotonicity_flags(diagram: PhaseDiagram) -> list[int]:
    """Rows where the bistable onset is not monotone in distance from
    the most favorable detuning.

    The onset drive should only grow as the detuning moves away from
    the row where bistability starts earliest. Returns the offending
    row indices for manual review; an empty list means the profile is
    clean. Rows without any bistable cell are skipped.
    """
    onset = bistable_onset(diagram)
    present = np.flatnonzero(onset >= 0)
    if present.size == 0:
        return []
    opt = present[np.argmin(onset[present])]
    flags = []
    for row_range in (range(opt, -1, -1), range(opt, len(onset))):
        last = None
        for iy in row_range:
            if onset[iy] < 0:
                continue
            if last is not None and onset[iy] < last:
                flags.append(iy)
            last = onset[iy]
    return sorted(set(flags))

"""Transmission scans, perfect-transmission resonance search and verification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .observables import (
    TunnelingTimes,
    current_uniformity,
    interior_current_integral,
    interior_norm,
    phase_delay_time,
)
from .potential import PotentialSpec
from .scattering import (
    DEFAULT_SAMPLES_PER_SEGMENT,
    _segment_lead_matrices,
    _compose_transfer,
    reconstruct_wavefunction,
    solve_amplitudes,
    solve_scattering,
)

CERTIFY_TOL = 1e-10
DEFAULT_SCAN_DENSITY = 2000.0
REFINE_RTOL = 1e-13
MERGE_RTOL = 1e-12
# |R|^2 below this is rounding noise; a dip whose neighbours never rise above
# it is a transparent plateau (free propagation), not an isolated resonance
NOISE_FLOOR = 1e-20

# verification battery thresholds
IDENTITY_TOL = 1e-8
IM_FRACTION_TOL = 1e-8
PHASE_TOL = 1e-6
BOUNDARY_TOL = 1e-9
INTEGRAL_TOL = 1e-9
UNIFORMITY_TOL = 1e-8

_INV_PHI = (math.sqrt(5) - 1) / 2


class NotAResonanceError(ValueError):
    """Energy fails the |R|^2 certification threshold."""

    def __init__(self, energy: float, residual: float, tol: float):
        self.energy = energy
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"E={energy:.17g} is not a certified resonance: |R|^2={residual:.3e} > {tol:.1e}")


@dataclass(frozen=True, eq=False)
class TransmissionScan:
    energy: np.ndarray
    t2: np.ndarray
    r2: np.ndarray
    arg_t: np.ndarray

    @property
    def flux_err(self) -> np.ndarray:
        return np.abs(self.t2 + self.r2 - 1.0)

    def __len__(self):
        return self.energy.size


@dataclass(frozen=True)
class ResonanceRecord:
    e_res: float
    residual: float
    alpha: float
    times: TunnelingTimes
    identity_rel_err: float
    im_fraction: float
    boundary_err: float
    length: float = 0.0
    current_integral: complex = 0j
    j_in: float = 0.0
    uniformity: float = 0.0
    phase_rel_err: float = 0.0
    integral_rel_err: float = 0.0
    checks: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def scan_transmission(spec: PotentialSpec, e_min: float, e_max: float, n: int) -> TransmissionScan:
    """|T|^2, |R|^2 and arg T on ``n`` uniformly spaced energies."""
    if not (0 < e_min < e_max) or not math.isfinite(e_max):
        raise ValueError(f"invalid energy range ({e_min!r}, {e_max!r})")
    if n < 2:
        raise ValueError("scan needs at least two samples")
    energies = np.linspace(e_min, e_max, int(n))
    t, r, *_ = solve_amplitudes(spec, energies)
    return TransmissionScan(energies, np.abs(t) ** 2, np.abs(r) ** 2, np.angle(t))


def golden_section_minimize(f, a: float, b: float, rel_width: float = REFINE_RTOL) -> float:
    """Minimize a unimodal f on [a, b] until the bracket is below rel_width * |x|."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > rel_width * max(abs(a), abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
        if not a < c < d < b:
            # bracket collapsed onto adjacent doubles
            break
    return c if fc < fd else d


def reflection_residual(spec: PotentialSpec, energy: float) -> float:
    _, r, *_ = solve_amplitudes(spec, [energy])
    return float(abs(r[0]) ** 2)


def _candidate_minima(r2: np.ndarray) -> np.ndarray:
    # strict on the left so flat plateaus (R == 0 everywhere) yield nothing
    inner = (r2[1:-1] < r2[:-2]) & (r2[1:-1] <= r2[2:])
    inner &= np.maximum(r2[:-2], r2[2:]) > NOISE_FLOOR
    return np.nonzero(inner)[0] + 1


def find_resonances(spec: PotentialSpec, e_min: float, e_max: float,
                    n_scan: int | None = None, certify_tol: float = CERTIFY_TOL,
                    scan_density: float = DEFAULT_SCAN_DENSITY,
                    samples_per_segment: int = DEFAULT_SAMPLES_PER_SEGMENT) -> list[ResonanceRecord]:
    """Certified |T| = 1 resonances in (e_min, e_max), sorted by energy.

    Without ``n_scan`` the scan uses ``scan_density`` samples per unit energy.
    Resonances narrower than the scan spacing can be missed.
    """
    if n_scan is None:
        if not scan_density > 0:
            raise ValueError("scan density must be positive")
        n_scan = max(3, math.ceil(scan_density * (e_max - e_min)) + 1)
    scan = scan_transmission(spec, e_min, e_max, n_scan)
    refined = []
    for i in _candidate_minima(scan.r2):
        e = golden_section_minimize(lambda x: reflection_residual(spec, x),
                                    float(scan.energy[i - 1]), float(scan.energy[i + 1]))
        residual = reflection_residual(spec, e)
        if residual <= certify_tol:
            refined.append((e, residual))
    refined.sort()
    merged: list[tuple[float, float]] = []
    for e, res in refined:
        if merged and e - merged[-1][0] <= MERGE_RTOL * e:
            if res < merged[-1][1]:
                merged[-1] = (e, res)
            continue
        merged.append((e, res))
    return [verify_identity(spec, e, certify_tol, samples_per_segment) for e, _ in merged]


def verify_identity(spec: PotentialSpec, e_res: float, certify_tol: float = CERTIFY_TOL,
                    samples_per_segment: int = DEFAULT_SAMPLES_PER_SEGMENT) -> ResonanceRecord:
    """Run the velocity/tunneling-time battery at a certified resonance."""
    state = solve_scattering(spec, e_res)
    residual = state.reflection
    if residual > certify_tol:
        raise NotAResonanceError(e_res, residual, certify_tol)
    grid = reconstruct_wavefunction(spec, state, samples_per_segment)
    length = spec.length
    norm = interior_norm(grid)
    integral = interior_current_integral(grid)
    tau_d = norm / grid.j_in
    tau_phi = phase_delay_time(spec, e_res)
    v = integral / norm
    classical = length / tau_d

    identity_rel_err = abs(v - classical) / classical
    im_fraction = abs(v.imag) / abs(v.real)
    boundary_err = float(max(abs(abs(grid.phi[0]) ** 2 - 1), abs(abs(grid.phi[-1]) ** 2 - 1)))
    uniformity = current_uniformity(grid)
    phase_rel_err = abs(tau_phi - tau_d) / tau_d
    integral_rel_err = abs(integral.real - length * grid.j_in) / (length * grid.j_in)
    checks = {
        "im_fraction": im_fraction <= IM_FRACTION_TOL,
        "identity": identity_rel_err <= IDENTITY_TOL,
        "phase_time": phase_rel_err <= PHASE_TOL,
        "boundary_modulus": bool(boundary_err <= BOUNDARY_TOL),
        "current_integral": integral_rel_err <= INTEGRAL_TOL,
        "current_uniformity": uniformity <= UNIFORMITY_TOL,
    }
    return ResonanceRecord(
        e_res=float(e_res),
        residual=residual,
        alpha=float(np.angle(state.t_amp)),
        times=TunnelingTimes(tau_dwell=tau_d, tau_phase=tau_phi, v_expect=v, ratio=classical),
        identity_rel_err=identity_rel_err,
        im_fraction=im_fraction,
        boundary_err=boundary_err,
        length=length,
        current_integral=integral,
        j_in=grid.j_in,
        uniformity=uniformity,
        phase_rel_err=phase_rel_err,
        integral_rel_err=integral_rel_err,
        checks=checks,
    )


def bloch_half_trace(cell: PotentialSpec, energies) -> np.ndarray:
    """Re(tr M_cell)/2; |value| <= 1 marks an allowed band of the infinite lattice."""
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    m = _compose_transfer(*_segment_lead_matrices(cell, energies)[:4])
    return 0.5 * (m[0] + m[3]).real


def bloch_bands(cell: PotentialSpec, e_min: float, e_max: float, n: int = 20000) -> list[tuple[float, float]]:
    """Allowed-band intervals of the periodic lattice built from ``cell``.

    Band edges are located on a uniform grid and polished by bisection.
    """
    energies = np.linspace(e_min, e_max, n)
    allowed = np.abs(bloch_half_trace(cell, energies)) <= 1.0

    def edge(lo, hi):
        inside_lo = abs(bloch_half_trace(cell, lo)[0]) <= 1.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if (abs(bloch_half_trace(cell, mid)[0]) <= 1.0) == inside_lo:
                lo = mid
            else:
                hi = mid
        return lo if inside_lo else hi

    bands = []
    start = e_min if allowed[0] else None
    for i in range(1, n):
        if allowed[i] and not allowed[i - 1]:
            start = edge(energies[i - 1], energies[i])
        elif not allowed[i] and allowed[i - 1]:
            bands.append((float(start), float(edge(energies[i - 1], energies[i]))))
            start = None
    if start is not None:
        bands.append((float(start), float(e_max)))
    return bands

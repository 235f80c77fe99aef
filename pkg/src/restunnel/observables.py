"""Current, dwell time, interior velocity expectation and phase-delay time.

All integrals over [0, l] use composite Simpson on the per-segment uniform
sub-grids of a :class:`WavefunctionGrid`; segment boundaries are always
nodes, so every panel sees an analytic integrand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .potential import PotentialSpec
from .scattering import (
    ScatteringState,
    WavefunctionGrid,
    segment_wavevector,
    solve_scattering,
    _propagator,
    _right_boundary_values,
)

PHASE_STEP_RTOL = 1e-6
MAX_PHASE_HALVINGS = 60


class ZeroCurrentError(ValueError):
    """The reference current vanishes, so relative uniformity is undefined."""


class PhaseUnwrapError(RuntimeError):
    def __init__(self, message: str, step: float):
        self.step = step
        super().__init__(message)


@dataclass(frozen=True)
class TunnelingTimes:
    tau_dwell: float
    tau_phase: float
    v_expect: complex
    ratio: float  # l / tau_dwell


def probability_current(phi, dphi, mass: float = 1.0, hbar: float = 1.0):
    """j = Re{phi* (-i hbar/m) phi'}; works elementwise on arrays."""
    return np.real(np.conj(phi) * (-1j * hbar / mass) * dphi)


def simpson(y, x) -> complex | float:
    """Composite Simpson on a uniform grid with an even number of intervals."""
    y = np.asarray(y)
    n = y.size - 1
    if n < 2 or n % 2:
        raise ValueError(f"Simpson needs an even number of intervals, got {n}")
    h = (x[-1] - x[0]) / n
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def grid_integral(grid: WavefunctionGrid, values):
    """Integral over [0, l] of values sampled on ``grid``, segment by segment."""
    return sum(simpson(values[sl], grid.xs[sl]) for sl in grid.segment_slices())


def grid_current(grid: WavefunctionGrid) -> np.ndarray:
    return probability_current(grid.phi, grid.dphi, grid.mass, grid.hbar)


def current_uniformity(grid: WavefunctionGrid) -> float:
    """max_i |j(x_i) - j(x_0)| / |j(x_0)|."""
    j = grid_current(grid)
    if j[0] == 0:
        raise ZeroCurrentError("probability current vanishes at x=0")
    return float(np.max(np.abs(j - j[0])) / abs(j[0]))


def interior_current_integral(grid: WavefunctionGrid) -> complex:
    """I = integral over [0, l] of Phi* (-i hbar/m) Phi'."""
    integrand = np.conj(grid.phi) * (-1j * grid.hbar / grid.mass) * grid.dphi
    return complex(grid_integral(grid, integrand))


def interior_norm(grid: WavefunctionGrid) -> float:
    return float(grid_integral(grid, np.abs(grid.phi) ** 2))


def dwell_time(grid: WavefunctionGrid) -> float:
    if grid.j_in <= 0:
        raise ValueError("incoming current must be positive")
    return interior_norm(grid) / grid.j_in


def velocity_expectation(grid: WavefunctionGrid) -> complex:
    """Projected <v> on [0, l]; the full complex value, imaginary part included."""
    norm = interior_norm(grid)
    if not norm > 0:
        raise ZeroDivisionError("wavefunction has zero norm on [0, l]")
    return interior_current_integral(grid) / norm


def time_from_velocity(length: float, v: float) -> float:
    if not v > 0:
        raise ValueError(f"velocity must be positive, got {v!r}")
    return length / v


def _exp_integral(a: complex, w: float) -> complex:
    """Integral of exp(a u) for u in [0, w]."""
    if a == 0:
        return complex(w)
    aw = a * w
    if abs(aw) < 1e-5:
        return w * (1 + aw / 2 + aw * aw / 6 + aw ** 3 / 24)
    return np.expm1(aw) / a


def interior_norm_closed_form(spec: PotentialSpec, state: ScatteringState) -> float:
    """Integral of |Phi|^2 over [0, l] from per-segment antiderivatives."""
    ks = np.array([segment_wavevector(state.energy, s, spec.mass, spec.hbar)
                   for s in spec.segments])
    phi_b, dphi_b = _right_boundary_values(spec, state, ks)
    total = 0.0
    for j, seg in enumerate(spec.segments):
        w = seg.width
        k = ks[j]
        c, s_, d = _propagator(k, -w)
        phi0 = c * phi_b[j] + s_ * dphi_b[j]
        dphi0 = d * phi_b[j] + c * dphi_b[j]
        if k == 0:
            a, b = phi0, dphi0
            total += (abs(a) ** 2 * w + (a * np.conj(b)).real * w * w
                      + abs(b) ** 2 * w ** 3 / 3.0)
            continue
        # Phi = A exp(iku) + B exp(-iku), u = x - x_left
        A = 0.5 * (phi0 + dphi0 / (1j * k))
        B = 0.5 * (phi0 - dphi0 / (1j * k))
        kappa, kr = k.imag, k.real
        total += (abs(A) ** 2 * _exp_integral(-2 * kappa, w).real
                  + abs(B) ** 2 * _exp_integral(2 * kappa, w).real
                  + 2 * (A * np.conj(B) * _exp_integral(2j * kr, w)).real)
    return float(total)


def dwell_time_closed_form(spec: PotentialSpec, state: ScatteringState) -> float:
    return interior_norm_closed_form(spec, state) / (spec.hbar * state.k / spec.mass)


def transmission_phase(spec: PotentialSpec, energy: float) -> float:
    """alpha = arg T(E), wrapped to (-pi, pi]."""
    return float(np.angle(solve_scattering(spec, energy).t_amp))


def _wrap(delta: float) -> float:
    return (delta + math.pi) % (2 * math.pi) - math.pi


def phase_delay_time(spec: PotentialSpec, energy: float, dE: float | None = None) -> float:
    """hbar d(arg T)/dE by central difference of the unwrapped phase.

    The step starts at ``1e-6 * E`` and is halved until both phase increments
    over the stencil are below pi/2.
    """
    if dE is None:
        dE = PHASE_STEP_RTOL * energy
    if not (dE > 0 and energy - dE > 0):
        raise ValueError(f"invalid phase step dE={dE!r} at E={energy!r}")
    for _ in range(MAX_PHASE_HALVINGS):
        lo, mid, hi = (transmission_phase(spec, e) for e in (energy - dE, energy, energy + dE))
        d_lo, d_hi = _wrap(mid - lo), _wrap(hi - mid)
        if abs(d_lo) < math.pi / 2 and abs(d_hi) < math.pi / 2:
            return spec.hbar * (d_lo + d_hi) / (2 * dE)
        dE /= 2
    raise PhaseUnwrapError(f"phase unwrapping did not converge; final dE={dE:.3g}", dE)


def tunneling_times(spec: PotentialSpec, grid: WavefunctionGrid,
                    dE: float | None = None) -> TunnelingTimes:
    tau_d = dwell_time(grid)
    return TunnelingTimes(
        tau_dwell=tau_d,
        tau_phase=phase_delay_time(spec, grid.energy, dE),
        v_expect=velocity_expectation(grid),
        ratio=spec.length / tau_d,
    )

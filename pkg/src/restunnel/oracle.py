"""Independent brute-force cross-checks.

Nothing here touches the transfer/scattering-matrix machinery: the
Schrodinger equation is integrated directly with classical fixed-step RK4,
integrals are re-done with plain Newton-Cotes rules, and derivatives with
central differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .potential import PotentialSpec
from .scattering import WavefunctionGrid

STEPS_PER_UNIT = 10_000
ORACLE_OPACITY_CAP = 20.0


@dataclass(frozen=True, eq=False)
class OracleSolution:
    t_amp: complex
    r_amp: complex
    grid: WavefunctionGrid


def _opacity(spec: PotentialSpec, energy: float) -> float:
    worst = 0.0
    for seg in spec.segments:
        if seg.height > energy:
            worst = max(worst, math.sqrt(2 * spec.mass * (seg.height - energy)) / spec.hbar * seg.width)
    return worst


def _rk4_step_matrix(q: float, h: float) -> tuple[complex, complex, complex, complex]:
    """One RK4 step for y' = A y with A = [[0, 1], [q, 0]], written out as a matrix.

    For a constant coefficient matrix the four RK4 stages collapse to
    I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24.
    """
    a = q * h * h  # (hA)^2 = a I
    even = 1 + a / 2 + a * a / 24
    odd = 1 + a / 6  # multiplies hA
    return even, odd * h, odd * h * q, even


def _normalize(phi0: complex, dphi0: complex, k: float):
    """Amplitudes of exp(ikx) and exp(-ikx) in the left lead."""
    a = 0.5 * (phi0 + dphi0 / (1j * k))
    b = 0.5 * (phi0 - dphi0 / (1j * k))
    return a, b


def ode_solve_scattering(spec: PotentialSpec, energy: float,
                         steps_per_unit: int = STEPS_PER_UNIT) -> OracleSolution:
    """Integrate (Phi, Phi') from x=l to x=0 with RK4 and normalize to unit incidence."""
    if not energy > 0:
        raise ValueError("energy must be positive")
    opacity = _opacity(spec, energy)
    if opacity >= ORACLE_OPACITY_CAP:
        raise ValueError(f"oracle limited to opacity < {ORACLE_OPACITY_CAP:g}, got {opacity:.3g}")
    k = math.sqrt(2 * spec.mass * energy) / spec.hbar
    scale = 2 * spec.mass / spec.hbar ** 2
    edges = spec.boundaries

    counts = [max(4, -(-math.ceil(seg.width * steps_per_unit) // 4) * 4) for seg in spec.segments]
    total = sum(counts)
    xs = np.empty(total + 1)
    phi = np.empty(total + 1, dtype=complex)
    dphi = np.empty(total + 1, dtype=complex)

    y0, y1 = 1.0 + 0j, 1j * k
    pos = total
    xs[pos], phi[pos], dphi[pos] = edges[-1], y0, y1
    for j in range(len(spec.segments) - 1, -1, -1):
        n = counts[j]
        h = -(edges[j + 1] - edges[j]) / n
        g11, g12, g21, g22 = _rk4_step_matrix(scale * (spec.segments[j].height - energy), h)
        for i in range(1, n + 1):
            y0, y1 = g11 * y0 + g12 * y1, g21 * y0 + g22 * y1
            pos -= 1
            xs[pos] = edges[j + 1] + i * h
            phi[pos], dphi[pos] = y0, y1
        xs[pos] = edges[j]
    a, b = _normalize(phi[0], dphi[0], k)
    breaks = tuple(np.concatenate(([0], np.cumsum(counts))).tolist())
    grid = WavefunctionGrid(
        xs=xs, phi=phi / a, dphi=dphi / a, j_in=spec.hbar * k / spec.mass,
        breaks=breaks, energy=float(energy), k=k, mass=spec.mass, hbar=spec.hbar,
    )
    return OracleSolution(t_amp=complex(1 / a), r_amp=complex(b / a), grid=grid)


def ode_solve_profile(potential: Callable[[float], float], length: float, energy: float,
                      steps: int, mass: float = 1.0, hbar: float = 1.0) -> tuple[complex, complex]:
    """T and R for a smooth potential on [0, length] by generic RK4 (zero outside)."""
    if not energy > 0:
        raise ValueError("energy must be positive")
    k = math.sqrt(2 * mass * energy) / hbar
    scale = 2 * mass / hbar ** 2

    def rhs(x, y0, y1):
        return y1, scale * (potential(x) - energy) * y0

    h = -length / steps
    x, y0, y1 = length, 1.0 + 0j, 1j * k
    for _ in range(steps):
        k1 = rhs(x, y0, y1)
        k2 = rhs(x + h / 2, y0 + h / 2 * k1[0], y1 + h / 2 * k1[1])
        k3 = rhs(x + h / 2, y0 + h / 2 * k2[0], y1 + h / 2 * k2[1])
        k4 = rhs(x + h, y0 + h * k3[0], y1 + h * k3[1])
        y0 += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        y1 += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        x += h
    a, b = _normalize(y0, y1, k)
    return complex(1 / a), complex(b / a)


def brute_quadrature(f, x, rule: str = "simpson") -> tuple[float, float]:
    """Integral of samples ``f`` on the uniform grid ``x`` with an error estimate.

    ``rule="simpson"`` compares composite Simpson at spacing h and 2h and
    returns the h value with the Richardson estimate |S_h - S_2h| / 15.
    ``rule="midpoint"`` takes the odd samples as midpoints of 2h panels and
    estimates the error from the trapezoid rule on the same panels, (T - M) / 3.
    """
    f = np.asarray(f)
    x = np.asarray(x, dtype=float)
    n = f.size - 1
    if n < 2:
        raise ValueError("need at least 3 samples")
    if x.size != f.size:
        raise ValueError("f and x differ in length")
    h = (x[-1] - x[0]) / n
    if not np.allclose(np.diff(x), h, rtol=1e-9, atol=0):
        raise ValueError("grid must be uniform")
    if n % 2:
        raise ValueError("need an even number of intervals")
    if rule == "simpson":
        fine = h / 3 * (f[0] + f[-1] + 4 * f[1:-1:2].sum() + 2 * f[2:-1:2].sum())
        if n % 4:
            coarse = h * (f[0] / 2 + f[1:-1].sum() + f[-1] / 2)  # trapezoid fallback
            return fine, abs(fine - coarse) / 3
        g = f[::2]
        coarse = 2 * h / 3 * (g[0] + g[-1] + 4 * g[1:-1:2].sum() + 2 * g[2:-1:2].sum())
        return fine, abs(fine - coarse) / 15
    if rule == "midpoint":
        mid = 2 * h * f[1::2].sum()
        trap = h * (f[0] + f[-1] + 2 * f[2:-1:2].sum())
        return mid, abs(trap - mid) / 3
    raise ValueError(f"unknown rule {rule!r}")


def grid_quadrature(grid: WavefunctionGrid, values, rule: str = "simpson") -> tuple[complex, float]:
    """Segment-wise brute_quadrature summed over a WavefunctionGrid."""
    total, err = 0.0, 0.0
    for sl in grid.segment_slices():
        v, e = brute_quadrature(values[sl], grid.xs[sl], rule)
        total += v
        err += e
    return total, err


def fd_derivative(f: Callable[[float], float], energy: float, h: float, order: int = 2) -> float:
    """Central-difference derivative of f at ``energy`` (order 2 or 4)."""
    if not h > 0 or energy - 2 * h <= 0:
        raise ValueError(f"invalid step h={h!r} at E={energy!r}")
    if order == 2:
        return (f(energy + h) - f(energy - h)) / (2 * h)
    if order == 4:
        return (-f(energy + 2 * h) + 8 * f(energy + h) - 8 * f(energy - h) + f(energy - 2 * h)) / (12 * h)
    raise ValueError("order must be 2 or 4")


def unwrapped_phase(spec: PotentialSpec, solver=None) -> Callable[[float], float]:
    """arg T(E) as a function, continuous near a reference point.

    The returned callable picks the branch closest to the value at the first
    energy it is called with, which is enough for tight finite-difference
    stencils.
    """
    from .scattering import solve_scattering

    solver = solver or (lambda e: solve_scattering(spec, e).t_amp)
    ref: list[float] = []

    def alpha(e: float) -> float:
        a = float(np.angle(solver(e)))
        if not ref:
            ref.append(a)
            return a
        return ref[0] + (a - ref[0] + math.pi) % (2 * math.pi) - math.pi

    return alpha

"""Shared test potentials, analytic formulas and the randomized corpus."""

import math

import numpy as np

from restunnel.potential import PotentialSpec, repeat_cell
from restunnel.scattering import solve_scattering

BARRIER = PotentialSpec.from_pairs([(math.pi, 1.0)])
FREE = PotentialSpec.from_pairs([(1.0, 0.0)])
DOUBLE_BARRIER = PotentialSpec.from_pairs([(0.3, 1.0), (0.5, 0.0), (0.3, 1.0)])
CELL = PotentialSpec.from_pairs([(0.2, 1.0), (0.5, 0.0)])
SL5 = repeat_cell(CELL, 5)
SL10 = repeat_cell(CELL, 10)


def barrier_t2(energy, v0=1.0, a=math.pi, mass=1.0, hbar=1.0):
    """Textbook |T|^2 for a single rectangular barrier (E != V0)."""
    q = 2 * mass * (energy - v0) / hbar ** 2
    if q > 0:
        s2 = math.sin(math.sqrt(q) * a) ** 2
    else:
        s2 = -math.sinh(math.sqrt(-q) * a) ** 2
    return 1.0 / (1.0 + v0 ** 2 * s2 / (4 * energy * (energy - v0)))


def random_cases(n, seed, opacity_cap=30.0, max_segments=6):
    """Deterministic corpus of (spec, E, state) with opacity below the cap."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        m = int(rng.integers(1, max_segments + 1))
        widths = rng.uniform(0.05, 1.5, m)
        heights = rng.uniform(-3.0, 4.0, m)
        spec = PotentialSpec.from_pairs(zip(widths, heights))
        energy = float(rng.uniform(0.05, 5.0))
        state = solve_scattering(spec, energy)
        if state.opacity < opacity_cap:
            out.append((spec, energy, state))
    return out

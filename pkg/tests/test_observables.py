import math

import numpy as np
import pytest

from restunnel.observables import (
    ZeroCurrentError,
    current_uniformity,
    dwell_time,
    dwell_time_closed_form,
    grid_current,
    interior_current_integral,
    interior_norm,
    interior_norm_closed_form,
    phase_delay_time,
    probability_current,
    simpson,
    time_from_velocity,
    tunneling_times,
    velocity_expectation,
)
from restunnel.potential import PotentialSpec
from restunnel.scattering import WavefunctionGrid, reconstruct_wavefunction, solve_scattering

from helpers import BARRIER, DOUBLE_BARRIER, FREE, SL5, random_cases


def grid_at(spec, energy, samples=256):
    return reconstruct_wavefunction(spec, solve_scattering(spec, energy), samples)


def test_probability_current_examples():
    assert probability_current(np.exp(0.3j), 1j * np.exp(0.3j)) == pytest.approx(1.0)
    # a real wavefunction carries no current
    assert probability_current(np.array([0.7, -2.0]), np.array([1.5, 3.0])).tolist() == [0, 0]
    assert probability_current(1.0, 2j, mass=2.0, hbar=3.0) == pytest.approx(3.0)


def test_simpson_exact_for_cubics():
    x = np.linspace(0, 2, 9)
    assert simpson(x ** 3 - x, x) == pytest.approx(2.0, abs=1e-14)
    with pytest.raises(ValueError):
        simpson(x[:4], x[:4])


def test_uniformity_free_and_off_resonance():
    assert current_uniformity(grid_at(FREE, 0.5)) <= 1e-12
    for spec, e in [(BARRIER, 0.5), (BARRIER, 1.6), (DOUBLE_BARRIER, 0.7), (SL5, 3.3)]:
        assert current_uniformity(grid_at(spec, e)) <= 1e-8


def test_uniformity_detects_corruption():
    g = grid_at(BARRIER, 1.6)
    dphi = g.dphi.copy()
    dphi[len(dphi) // 2] *= 1.01
    bad = WavefunctionGrid(g.xs, g.phi, dphi, g.j_in, g.breaks, g.energy, g.k)
    assert current_uniformity(bad) > 1e-4


def test_uniformity_zero_current():
    g = grid_at(FREE, 0.5)
    real = WavefunctionGrid(g.xs, np.cos(g.xs) + 0j, -np.sin(g.xs) + 0j, g.j_in, g.breaks, g.energy, g.k)
    with pytest.raises(ZeroCurrentError):
        current_uniformity(real)


def test_free_particle_observables():
    g = grid_at(FREE, 0.5)
    assert interior_current_integral(g) == pytest.approx(1.0, abs=1e-13)
    assert dwell_time(g) == pytest.approx(1.0, rel=1e-13)
    assert velocity_expectation(g) == pytest.approx(1.0, abs=1e-13)
    assert phase_delay_time(FREE, 0.5) == pytest.approx(1.0, rel=1e-8)


def test_free_particle_dwell_scales_with_length_over_speed():
    spec = PotentialSpec.from_pairs([(2.0, 0.0)])
    assert dwell_time(grid_at(spec, 2.0)) == pytest.approx(1.0, rel=1e-13)


@pytest.mark.parametrize("energy", [1.5, 3.0, 5.5])
def test_barrier_resonance_interior_integral(energy):
    g = grid_at(BARRIER, energy)
    integral = interior_current_integral(g)
    assert abs(integral.imag) / abs(integral.real) <= 1e-9
    assert integral.real == pytest.approx(BARRIER.length * g.j_in, rel=1e-9)
    v = velocity_expectation(g)
    assert v.real == pytest.approx(BARRIER.length / dwell_time(g), rel=1e-9)


def test_resonance_values_at_1_5():
    g = grid_at(BARRIER, 1.5)
    times = tunneling_times(BARRIER, g)
    assert times.tau_dwell == pytest.approx(3.6275987284684357, rel=1e-10)
    assert times.v_expect.real == pytest.approx(math.sqrt(3) / 2, rel=1e-10)
    assert abs(times.tau_phase - times.tau_dwell) <= 1e-6 * times.tau_dwell
    # slower inside than in the leads: l / v_lead = pi / sqrt(3)
    assert times.tau_dwell > math.pi / math.sqrt(3)


def test_off_resonance_interior_integral_is_complex():
    for e in (0.5, 1.6, 2.2):
        g = grid_at(BARRIER, e)
        integral = interior_current_integral(g)
        assert abs(integral.imag) > 1e-4 * abs(integral)


@pytest.mark.parametrize("spec, energy", [
    (BARRIER, 1.5), (BARRIER, 0.5), (DOUBLE_BARRIER, 2.2949583829987668), (SL5, 0.9),
    (PotentialSpec.from_pairs([(0.4, 0.0), (1.0, 1.0)]), 1.0),
])
def test_dwell_time_matches_closed_form(spec, energy):
    state = solve_scattering(spec, energy)
    g = reconstruct_wavefunction(spec, state)
    assert dwell_time(g) == pytest.approx(dwell_time_closed_form(spec, state), rel=1e-9)
    assert interior_norm(g) == pytest.approx(interior_norm_closed_form(spec, state), rel=1e-9)


def test_phase_delay_step_convergence():
    # central difference error shrinks like dE^2
    exact = phase_delay_time(BARRIER, 1.6, 1e-6)
    e1 = abs(phase_delay_time(BARRIER, 1.6, 1e-2) - exact)
    e2 = abs(phase_delay_time(BARRIER, 1.6, 5e-3) - exact)
    assert 3.0 < e1 / e2 < 5.0


def test_phase_delay_rejects_bad_step():
    with pytest.raises(ValueError):
        phase_delay_time(BARRIER, 1.0, 0.0)
    with pytest.raises(ValueError):
        phase_delay_time(BARRIER, 1.0, 2.0)


def test_time_from_velocity():
    assert time_from_velocity(math.pi, math.sqrt(3) / 2) == pytest.approx(2 * math.pi / math.sqrt(3))
    with pytest.raises(ValueError):
        time_from_velocity(1.0, 0.0)
    with pytest.raises(ValueError):
        time_from_velocity(1.0, -1.0)


def test_appendix_identity_on_corpus():
    worst = 0.0
    for spec, energy, s in random_cases(300, seed=21):
        g = reconstruct_wavefunction(spec, s)
        lhs = interior_current_integral(g).imag
        rhs = -(spec.hbar / (2 * spec.mass)) * (abs(g.phi[-1]) ** 2 - abs(g.phi[0]) ** 2)
        worst = max(worst, abs(lhs - rhs))
    assert worst <= 1e-9


def test_quadrature_resolution_doubling():
    for spec, e in [(BARRIER, 1.5), (SL5, 0.9), (DOUBLE_BARRIER, 0.7)]:
        a = interior_norm(grid_at(spec, e, 256))
        b = interior_norm(grid_at(spec, e, 512))
        assert abs(a - b) <= 1e-10 * abs(b)


def test_grid_current_equals_j_in_times_transmission():
    s = solve_scattering(DOUBLE_BARRIER, 0.7)
    g = reconstruct_wavefunction(DOUBLE_BARRIER, s)
    assert grid_current(g) == pytest.approx(g.j_in * s.transmission, rel=1e-10)

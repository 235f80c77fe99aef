import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from restunnel.oracle import ode_solve_scattering
from restunnel.potential import PotentialSpec, Segment
from restunnel.scattering import (
    NumericalOverflowError,
    evaluate_wavefunction,
    reconstruct_wavefunction,
    segment_wavevector,
    solve_amplitudes,
    solve_scattering,
)

from helpers import BARRIER, DOUBLE_BARRIER, FREE, SL5, barrier_t2, random_cases


def test_segment_wavevector_examples():
    assert segment_wavevector(0.5, Segment(1, 0.0)) == 1.0
    assert segment_wavevector(0.5, Segment(1, 1.0)) == 1j
    assert segment_wavevector(1.0, Segment(1, 1.0)) == 0
    k = segment_wavevector(0.5, Segment(1, 0.0), mass=2.0, hbar=0.5)
    assert k == pytest.approx(math.sqrt(2 * 2.0 * 0.5) / 0.5)


def test_free_particle_amplitudes():
    s = solve_scattering(FREE, 0.5)
    assert s.k == 1.0
    assert abs(s.t_amp - cmath.exp(1j)) < 1e-15
    assert abs(s.r_amp) < 1e-15


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_over_barrier_resonances_unit_transmission(n):
    s = solve_scattering(BARRIER, 1 + n * n / 2)
    assert abs(s.transmission - 1) < 1e-10
    assert s.reflection < 1e-20


def test_over_barrier_resonances_seen_in_analytic_scan():
    # independent: textbook |T|^2 on a fine grid; maxima reaching 1 sit at 1 + n^2/2
    es = np.linspace(1.01, 6, 20001)
    t2 = np.array([barrier_t2(e) for e in es])
    peaks = es[1:-1][(t2[1:-1] > t2[:-2]) & (t2[1:-1] >= t2[2:]) & (t2[1:-1] > 1 - 1e-6)]
    assert peaks == pytest.approx([1.5, 3.0, 5.5], abs=5e-4)


@pytest.mark.parametrize("energy", [0.05, 0.3, 0.5, 0.9, 0.999, 1.2, 1.6, 2.7, 7.0])
def test_barrier_matches_textbook_formula(energy):
    s = solve_scattering(BARRIER, energy)
    assert s.transmission == pytest.approx(barrier_t2(energy), rel=1e-12)


def test_under_barrier_against_oracle():
    s = solve_scattering(BARRIER, 0.5)
    assert 0 < s.transmission < 1
    assert abs(s.reflection - (1 - s.transmission)) < 1e-14
    o = ode_solve_scattering(BARRIER, 0.5)
    assert abs(o.t_amp - s.t_amp) < 1e-8
    assert abs(o.r_amp - s.r_amp) < 1e-8


def test_lead_wavevector_relation():
    spec = PotentialSpec.from_pairs([(1, 0.3)], mass=3.0, hbar=0.7)
    s = solve_scattering(spec, 2.0)
    assert s.k == pytest.approx(math.sqrt(2 * 3.0 * 2.0) / 0.7, rel=1e-15)


def test_mass_hbar_scaling():
    # T depends on widths only through sqrt(m)/hbar * w
    base = PotentialSpec.from_pairs([(0.4, 1.0), (0.7, -0.5), (0.3, 2.0)])
    scaled = PotentialSpec.from_pairs(
        [(s.width * 0.5 / math.sqrt(2.0), s.height) for s in base.segments], mass=2.0, hbar=0.5)
    a, b = solve_scattering(base, 0.8), solve_scattering(scaled, 0.8)
    assert abs(a.t_amp - b.t_amp) < 1e-13
    assert abs(a.r_amp - b.r_amp) < 1e-13


def test_degenerate_segment_linear_propagator():
    spec = PotentialSpec.from_pairs([(0.4, 0.0), (1.0, 1.0), (0.3, 0.2)])
    exact = solve_scattering(spec, 1.0)
    # continuity across E = V and agreement with direct integration
    for de in (1e-9, -1e-9):
        near = solve_scattering(spec, 1.0 + de)
        assert abs(near.t_amp - exact.t_amp) < 1e-7
    o = ode_solve_scattering(spec, 1.0)
    assert abs(o.t_amp - exact.t_amp) < 1e-9
    assert abs(exact.transmission + exact.reflection - 1) < 1e-14


def test_energy_must_be_positive():
    with pytest.raises(ValueError):
        solve_scattering(BARRIER, 0.0)
    with pytest.raises(ValueError):
        solve_scattering(BARRIER, -1.0)
    with pytest.raises(ValueError):
        solve_scattering(BARRIER, math.nan)


def test_composition_switches_to_star_product():
    opaque = PotentialSpec.from_pairs([(0.5, 0.0), (4.0, 60.0), (0.5, 0.0)])
    s = solve_scattering(opaque, 1.0)
    assert s.opacity > 30 and s.method == "smatrix"
    assert s.transmission == pytest.approx(barrier_t2(1.0, 60.0, 4.0), rel=1e-9)
    assert abs(s.transmission + s.reflection - 1) < 1e-14
    assert solve_scattering(BARRIER, 0.5).method == "transfer"


def test_very_opaque_stack_stays_finite():
    # total attenuation exp(-3 * 2 * 400): far beyond what transfer matrices carry
    stack = PotentialSpec.from_pairs([(2.0, 20000.0), (0.5, 0.0)] * 3)
    s = solve_scattering(stack, 1.0)
    assert s.method == "smatrix"
    assert np.isfinite(s.t_amp) and abs(s.r_amp) == pytest.approx(1.0, abs=1e-12)


def test_hard_opacity_cap():
    spec = PotentialSpec.from_pairs([(10.0, 2000.0)])
    with pytest.raises(NumericalOverflowError) as info:
        solve_scattering(spec, 1.0)
    assert info.value.segment == 0
    assert info.value.opacity > 600


def test_vectorized_matches_scalar():
    es = np.linspace(0.1, 4, 37)
    t, r, *_ = solve_amplitudes(DOUBLE_BARRIER, es)
    for e, tv, rv in zip(es, t, r):
        s = solve_scattering(DOUBLE_BARRIER, e)
        assert tv == s.t_amp and rv == s.r_amp


def test_corpus_flux_det_reversal_and_star_product():
    for spec, energy, s in random_cases(1000, seed=11):
        assert abs(s.transmission + s.reflection - 1) <= 1e-10
        m = s.matrix
        scale = abs(m.m11 * m.m22) + abs(m.m12 * m.m21)
        assert abs(m.det() - 1) <= 1e-10 * scale
        rev = solve_scattering(spec.reversed(), energy)
        assert abs(abs(rev.t_amp) - abs(s.t_amp)) <= 1e-10
        tm = solve_scattering(spec, energy, "transfer")
        sm = solve_scattering(spec, energy, "smatrix")
        assert abs(tm.t_amp - sm.t_amp) <= 1e-9 * abs(tm.t_amp)
        assert abs(tm.r_amp - sm.r_amp) <= 1e-9 * max(abs(tm.r_amp), 1e-300)


heights = st.floats(-5, 5)
widths = st.floats(0.01, 2)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(widths, heights), min_size=1, max_size=8), st.floats(0.01, 8))
def test_flux_conservation_property(pairs, energy):
    spec = PotentialSpec.from_pairs(pairs)
    s = solve_scattering(spec, energy)
    if s.opacity < 30:
        assert abs(s.transmission + s.reflection - 1) <= 1e-10
        rev = solve_scattering(spec.reversed(), energy)
        assert abs(abs(rev.t_amp) - abs(s.t_amp)) <= 1e-10


# --- wavefunction ---------------------------------------------------------

def test_free_particle_wavefunction():
    s = solve_scattering(FREE, 0.5)
    g = reconstruct_wavefunction(FREE, s)
    assert np.max(np.abs(g.phi - np.exp(1j * g.xs))) < 1e-14
    assert np.max(np.abs(np.abs(g.phi) - 1)) < 1e-14
    assert g.j_in == 1.0


@pytest.mark.parametrize("spec, energy", [
    (BARRIER, 0.5), (BARRIER, 1.5), (BARRIER, 1.6), (DOUBLE_BARRIER, 0.4), (SL5, 0.9),
])
def test_wavefunction_matches_leads(spec, energy):
    s = solve_scattering(spec, energy)
    g = reconstruct_wavefunction(spec, s)
    assert abs(g.phi[0] - (1 + s.r_amp)) < 1e-10
    assert abs(g.dphi[0] - 1j * s.k * (1 - s.r_amp)) < 1e-10
    assert abs(g.phi[-1] - s.t_amp) < 1e-10
    assert abs(g.dphi[-1] - 1j * s.k * s.t_amp) < 1e-10


def test_grid_contains_boundaries_and_sample_rule():
    s = solve_scattering(SL5, 2.0)
    g = reconstruct_wavefunction(SL5, s, samples_per_segment=8)
    edges = SL5.boundaries
    assert list(g.xs[list(g.breaks)]) == pytest.approx(edges, abs=0)
    assert g.xs[0] == 0.0 and g.xs[-1] == SL5.length
    assert np.all(np.diff(g.xs) > 0)
    counts = np.diff(g.breaks)
    assert np.all(counts % 4 == 0) and np.all(counts >= 8)
    g256 = reconstruct_wavefunction(SL5, s)
    assert np.all(np.diff(g256.breaks) >= 256)


def test_resonance_boundary_modulus():
    g = reconstruct_wavefunction(BARRIER, solve_scattering(BARRIER, 1.5))
    assert abs(abs(g.phi[0]) - 1) < 1e-12
    assert abs(abs(g.phi[-1]) - 1) < 1e-12


def test_wavefunction_against_oracle_corpus():
    for spec, energy, s in random_cases(25, seed=5, opacity_cap=20):
        o = ode_solve_scattering(spec, energy)
        phi, dphi = evaluate_wavefunction(spec, s, o.grid.xs)
        scale = np.max(np.abs(phi))
        assert np.max(np.abs(phi - o.grid.phi)) <= 1e-8 * scale


def test_reconstruction_overflow_reported():
    spec = PotentialSpec.from_pairs([(0.5, 0.0), (1.0, 5001.0)])
    s = solve_scattering(spec, 1.0)
    bogus = type(s)(s.energy, s.k, 1e300 + 0j, s.r_amp, s.matrix, s.opacity)
    with pytest.raises(NumericalOverflowError) as info:
        reconstruct_wavefunction(spec, bogus)
    assert info.value.segment == 1

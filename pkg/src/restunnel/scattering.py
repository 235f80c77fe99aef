"""Exact stationary scattering through piecewise-constant potentials.

The scattering state has unit incoming amplitude from the left::

    psi(x) = exp(ikx) + R exp(-ikx)      x <= 0
           = Phi(x)                      0 <= x <= l
           = T exp(ik(x - l))            x >= l

Inside each segment the solution is propagated in closed form with the
(Phi, Phi') propagator ``[[cos kw, sin(kw)/k], [-k sin kw, cos kw]]``, which
stays valid for evanescent (imaginary k) and degenerate (k = 0) segments.
Segment matrices are expressed in the plane-wave basis of the zero-potential
leads and composed either as transfer matrices or, for opaque stacks, as
scattering matrices with the Redheffer star product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .potential import PotentialSpec, Segment

DEGENERATE_RTOL = 1e-12
TRANSFER_OPACITY_LIMIT = 30.0
OPACITY_HARD_CAP = 600.0

DEFAULT_SAMPLES_PER_SEGMENT = 256
# Simpson nodes per radian of |k_j| * width; sized so the composite rule on
# |Phi|^2 and Phi* Phi' stays inside a 1e-10 relative error budget.
POINTS_PER_RADIAN = 320


class NumericalOverflowError(OverflowError):
    """Raised when evanescent growth exceeds what double precision can carry."""

    def __init__(self, message: str, segment: int | None = None, opacity: float | None = None):
        self.segment = segment
        self.opacity = opacity
        super().__init__(message)


@dataclass(frozen=True)
class TransferMatrix:
    """Maps lead amplitudes (right-moving, left-moving) from x=0 to x=l."""

    m11: complex
    m12: complex
    m21: complex
    m22: complex

    def det(self) -> complex:
        return self.m11 * self.m22 - self.m12 * self.m21

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]], dtype=complex)


@dataclass(frozen=True)
class ScatteringState:
    energy: float
    k: float
    t_amp: complex
    r_amp: complex
    matrix: TransferMatrix
    opacity: float
    method: str = "transfer"

    @property
    def transmission(self) -> float:
        return abs(self.t_amp) ** 2

    @property
    def reflection(self) -> float:
        return abs(self.r_amp) ** 2


@dataclass(frozen=True, eq=False)
class WavefunctionGrid:
    """Phi and Phi' sampled on [0, l].

    ``breaks`` holds the indices into ``xs`` of the segment boundaries, so
    ``xs[breaks[j]:breaks[j+1]+1]`` is the uniform sub-grid of segment j.
    """

    xs: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    j_in: float
    breaks: tuple[int, ...]
    energy: float
    k: float
    mass: float = 1.0
    hbar: float = 1.0

    @property
    def length(self) -> float:
        return float(self.xs[-1] - self.xs[0])

    def segment_slices(self):
        for a, b in zip(self.breaks[:-1], self.breaks[1:]):
            yield slice(a, b + 1)


def lead_wavevector(spec: PotentialSpec, energy: float) -> float:
    return math.sqrt(2.0 * spec.mass * energy) / spec.hbar


def segment_wavevector(energy: float, seg: Segment, mass: float = 1.0, hbar: float = 1.0) -> complex:
    """k_j = sqrt(2m(E - V_j))/hbar; positive-imaginary under the barrier, 0 when degenerate."""
    diff = energy - seg.height
    if abs(diff) < DEGENERATE_RTOL * max(1.0, abs(seg.height)):
        return 0j
    q = 2.0 * mass * diff
    if q > 0:
        return complex(math.sqrt(q) / hbar, 0.0)
    return complex(0.0, math.sqrt(-q) / hbar)


def _wavevectors(spec: PotentialSpec, energies: np.ndarray) -> np.ndarray:
    """Segment wavevectors, shape (n_segments, n_energies)."""
    heights = np.array([s.height for s in spec.segments])[:, None]
    diff = energies[None, :] - heights
    q = 2.0 * spec.mass * diff
    root = np.sqrt(np.abs(q)) / spec.hbar
    k = np.where(q > 0, root + 0j, 1j * root)
    degenerate = np.abs(diff) < DEGENERATE_RTOL * np.maximum(1.0, np.abs(heights))
    return np.where(degenerate, 0j, k)


def _propagator(k, u):
    """Entries (c, s, d) of the (Phi, Phi') propagator over a distance u.

    Wavevectors are either real or purely imaginary, so the entries are real:
    cos/sin for oscillating segments, cosh/sinh for evanescent ones.
    """
    k = np.asarray(k, dtype=complex)
    kr, ki = k.real, k.imag
    osc = ki == 0
    arg_r = kr * u
    arg_i = ki * u
    sin_r = np.sin(arg_r)
    sinh_i = np.sinh(arg_i)
    c = np.where(osc, np.cos(arg_r), np.cosh(arg_i))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(osc, sin_r / kr, sinh_i / ki)
    s = np.where(k == 0, u, s)
    d = np.where(osc, -kr * sin_r, ki * sinh_i)
    return c, s, d


def _segment_lead_matrices(spec: PotentialSpec, energies: np.ndarray):
    """Per-segment transfer matrices in the lead plane-wave basis.

    Returns (m11, m12, m21, m22, opacity) with matrix entries of shape
    (n_segments, n_energies) and the per-energy opacity.
    """
    k0 = np.sqrt(2.0 * spec.mass * energies) / spec.hbar
    ks = _wavevectors(spec, energies)
    widths = np.array([s.width for s in spec.segments])[:, None]
    opacity = np.max(np.abs(ks.imag) * widths, axis=0)
    with np.errstate(over="ignore", invalid="ignore"):
        c, s, d = _propagator(ks, widths)
        plus = 0.5j * (k0 * s - d / k0)
        cross = 0.5j * (k0 * s + d / k0)
    return c + plus, -cross, cross, c - plus, opacity


def _compose_transfer(m11, m12, m21, m22):
    a11, a12, a21, a22 = m11[0], m12[0], m21[0], m22[0]
    for j in range(1, m11.shape[0]):
        b11, b12, b21, b22 = m11[j], m12[j], m21[j], m22[j]
        a11, a12, a21, a22 = (
            b11 * a11 + b12 * a21,
            b11 * a12 + b12 * a22,
            b21 * a11 + b22 * a21,
            b21 * a12 + b22 * a22,
        )
    return a11, a12, a21, a22


def _star_product(sa, sb):
    """Redheffer star product of two single-channel S-matrices (r, t, r', t')."""
    ra, ta, rpa, tpa = sa
    rb, tb, rpb, tpb = sb
    inv = 1.0 / (1.0 - rpa * rb)
    return (
        ra + tpa * rb * ta * inv,
        tb * ta * inv,
        rpb + tb * rpa * tpb * inv,
        tpa * tpb * inv,
    )


def _compose_smatrix(m11, m12, m21, m22):
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        inv = 1.0 / m22
        seg_s = (-m21 * inv, inv, m12 * inv, inv)
        acc = tuple(x[0] for x in seg_s)
        for j in range(1, m11.shape[0]):
            acc = _star_product(acc, tuple(x[j] for x in seg_s))
        r, t, rp, tp = acc
        # back to a transfer matrix; entries may be huge but are informational
        return (t - r * rp / tp, rp / tp, -r / tp, 1.0 / tp), r, t


def _check_energies(energies) -> np.ndarray:
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    if energies.ndim != 1:
        raise ValueError("energies must be a scalar or a 1-D array")
    if not np.all(np.isfinite(energies)) or np.any(energies <= 0):
        raise ValueError("scattering energies must be positive and finite")
    return energies


def solve_amplitudes(spec: PotentialSpec, energies, method: str = "auto"):
    """Vectorized solver: returns (T, R, matrix entries, opacity, used_smatrix).

    ``method`` is "auto" (transfer matrices up to opacity 30, star product
    above), "transfer" or "smatrix".
    """
    if method not in ("auto", "transfer", "smatrix"):
        raise ValueError(f"unknown composition method {method!r}")
    energies = _check_energies(energies)
    m11, m12, m21, m22, opacity = _segment_lead_matrices(spec, energies)
    bad = opacity > OPACITY_HARD_CAP
    if np.any(bad):
        i = int(np.argmax(bad))
        ks = _wavevectors(spec, energies[i:i + 1])[:, 0]
        seg = int(np.argmax(np.abs(ks.imag) * [s.width for s in spec.segments]))
        raise NumericalOverflowError(
            f"opacity {opacity[i]:.4g} at E={energies[i]:.17g} exceeds hard cap "
            f"{OPACITY_HARD_CAP:g} (segment {seg})", segment=seg, opacity=float(opacity[i]))

    if method == "transfer":
        use_s = np.zeros(energies.shape, dtype=bool)
    elif method == "smatrix":
        use_s = np.ones(energies.shape, dtype=bool)
    else:
        use_s = opacity > TRANSFER_OPACITY_LIMIT

    n = energies.size
    mats = [np.empty(n, dtype=complex) for _ in range(4)]
    t = np.empty(n, dtype=complex)
    r = np.empty(n, dtype=complex)
    for mask, smatrix in ((~use_s, False), (use_s, True)):
        if not np.any(mask):
            continue
        parts = (m11[:, mask], m12[:, mask], m21[:, mask], m22[:, mask])
        if smatrix:
            total, r[mask], t[mask] = _compose_smatrix(*parts)
        else:
            with np.errstate(over="ignore", invalid="ignore"):
                total = _compose_transfer(*parts)
                t[mask] = 1.0 / total[3]
                r[mask] = -total[2] / total[3]
        for dst, src in zip(mats, total):
            dst[mask] = src
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(r))):
        raise NumericalOverflowError("non-finite amplitudes during composition")
    return t, r, tuple(mats), opacity, use_s


def solve_scattering(spec: PotentialSpec, energy: float, method: str = "auto") -> ScatteringState:
    """Exact T, R and composed transfer matrix at a single energy."""
    if not (math.isfinite(energy) and energy > 0):
        raise ValueError(f"energy must be positive, got {energy!r}")
    t, r, mats, opacity, use_s = solve_amplitudes(spec, [energy], method)
    matrix = TransferMatrix(*(complex(m[0]) for m in mats))
    return ScatteringState(
        energy=float(energy),
        k=lead_wavevector(spec, energy),
        t_amp=complex(t[0]),
        r_amp=complex(r[0]),
        matrix=matrix,
        opacity=float(opacity[0]),
        method="smatrix" if use_s[0] else "transfer",
    )


def _right_boundary_values(spec: PotentialSpec, state: ScatteringState, ks):
    """(Phi, Phi') at the right edge of every segment, propagated from x = l."""
    n = len(spec.segments)
    phi_b = np.empty(n, dtype=complex)
    dphi_b = np.empty(n, dtype=complex)
    phi, dphi = state.t_amp, 1j * state.k * state.t_amp
    for j in range(n - 1, -1, -1):
        phi_b[j], dphi_b[j] = phi, dphi
        c, s, d = _propagator(ks[j], -spec.segments[j].width)
        with np.errstate(over="ignore", invalid="ignore"):
            phi, dphi = c * phi + s * dphi, d * phi + c * dphi
        if not (np.isfinite(phi) and np.isfinite(dphi)):
            raise NumericalOverflowError(
                f"wavefunction overflow propagating through segment {j}", segment=j)
    return phi_b, dphi_b


def evaluate_wavefunction(spec: PotentialSpec, state: ScatteringState, xs):
    """Phi(x) and Phi'(x) at arbitrary points of [0, l] from the closed forms."""
    xs = np.asarray(xs, dtype=float)
    ks = np.array([segment_wavevector(state.energy, s, spec.mass, spec.hbar)
                   for s in spec.segments])
    phi_b, dphi_b = _right_boundary_values(spec, state, ks)
    edges = np.asarray(spec.boundaries)
    idx = np.clip(np.searchsorted(edges, xs, side="right") - 1, 0, len(ks) - 1)
    u = xs - edges[idx + 1]
    with np.errstate(over="ignore", invalid="ignore"):
        c, s, d = _propagator(ks[idx], u)
        phi = c * phi_b[idx] + s * dphi_b[idx]
        dphi = d * phi_b[idx] + c * dphi_b[idx]
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(dphi))):
        bad = int(idx[np.argmax(~(np.isfinite(phi) & np.isfinite(dphi)))])
        raise NumericalOverflowError(f"wavefunction overflow in segment {bad}", segment=bad)
    return phi, dphi


def segment_sample_counts(spec: PotentialSpec, energy: float,
                          samples_per_segment: int = DEFAULT_SAMPLES_PER_SEGMENT,
                          points_per_radian: float = POINTS_PER_RADIAN) -> list[int]:
    """Intervals per segment: at least ``samples_per_segment``, multiples of 4."""
    counts = []
    for seg in spec.segments:
        k = segment_wavevector(energy, seg, spec.mass, spec.hbar)
        n = max(int(samples_per_segment), math.ceil(abs(k) * seg.width * points_per_radian), 4)
        counts.append(-(-n // 4) * 4)
    return counts


def sample_positions(spec: PotentialSpec, counts) -> tuple[np.ndarray, tuple[int, ...]]:
    edges = spec.boundaries
    pieces = []
    breaks = [0]
    for j, n in enumerate(counts):
        pts = np.linspace(edges[j], edges[j + 1], n + 1)
        pieces.append(pts if j == 0 else pts[1:])
        breaks.append(breaks[-1] + n)
    return np.concatenate(pieces), tuple(breaks)


def reconstruct_wavefunction(spec: PotentialSpec, state: ScatteringState,
                             samples_per_segment: int = DEFAULT_SAMPLES_PER_SEGMENT,
                             points_per_radian: float = POINTS_PER_RADIAN) -> WavefunctionGrid:
    """Interior wavefunction on a grid that contains every segment boundary."""
    if samples_per_segment < 1:
        raise ValueError("samples_per_segment must be positive")
    counts = segment_sample_counts(spec, state.energy, samples_per_segment, points_per_radian)
    xs, breaks = sample_positions(spec, counts)
    phi, dphi = evaluate_wavefunction(spec, state, xs)
    return WavefunctionGrid(
        xs=xs, phi=phi, dphi=dphi,
        j_in=spec.hbar * state.k / spec.mass,
        breaks=breaks, energy=state.energy, k=state.k,
        mass=spec.mass, hbar=spec.hbar,
    )

"""Command-line front end.

Exit codes: 0 success, 1 verification battery failed, 2 potential file
unreadable or malformed, 3 invalid arguments, 4 energy is not a certified
resonance, 5 numerical overflow.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import sys

import numpy as np

from . import __version__
from .observables import grid_current
from .oracle import (
    ORACLE_OPACITY_CAP,
    fd_derivative,
    grid_quadrature,
    ode_solve_scattering,
    unwrapped_phase,
)
from .potential import PotentialParseError, load_potential
from .resonance import (
    CERTIFY_TOL,
    DEFAULT_SCAN_DENSITY,
    NotAResonanceError,
    find_resonances,
    scan_transmission,
    verify_identity,
)
from .scattering import (
    DEFAULT_SAMPLES_PER_SEGMENT,
    NumericalOverflowError,
    evaluate_wavefunction,
    reconstruct_wavefunction,
    solve_scattering,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_PARSE = 2
EXIT_ARGS = 3
EXIT_NOT_RESONANCE = 4
EXIT_OVERFLOW = 5

SCAN_HEADER = "E,T2,R2,argT,flux_err"
RESONANCE_HEADER = ("E_res,residual,alpha,tau_dwell,tau_phase,v_expect_re,v_expect_im,"
                    "l_over_tau,identity_rel_err,boundary_err")
WAVEFUNCTION_HEADER = "x,phi_re,phi_im,phi_abs2,j"


class UsageError(Exception):
    pass


def _load(path):
    try:
        return load_potential(path)
    except OSError as exc:
        raise PotentialParseError(f"cannot read {path}: {exc.strerror or exc}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGS, f"{self.prog}: error: {message}\n")


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def csv_rows(header: str, rows) -> str:
    lines = [header]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _check_range(e_min, e_max):
    if not (math.isfinite(e_min) and math.isfinite(e_max) and 0 < e_min < e_max):
        raise UsageError(f"need 0 < emin < emax, got emin={e_min} emax={e_max}")


def _check_energy(energy):
    if not (math.isfinite(energy) and energy > 0):
        raise UsageError(f"energy must be positive, got {energy}")


def cmd_scan(args) -> int:
    spec = _load(args.potential)
    _check_range(args.emin, args.emax)
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    scan = scan_transmission(spec, args.emin, args.emax, args.n)
    rows = zip(scan.energy, scan.t2, scan.r2, scan.arg_t, scan.flux_err)
    with _output(args.out) as fh:
        fh.write(csv_rows(SCAN_HEADER, rows))
    return EXIT_OK


def cmd_resonances(args) -> int:
    spec = _load(args.potential)
    _check_range(args.emin, args.emax)
    if not args.scan_density > 0:
        raise UsageError("--scan-density must be positive")
    if not args.tol > 0:
        raise UsageError("--tol must be positive")
    records = find_resonances(spec, args.emin, args.emax, certify_tol=args.tol,
                              scan_density=args.scan_density)
    rows = [(r.e_res, r.residual, r.alpha, r.times.tau_dwell, r.times.tau_phase,
             r.times.v_expect.real, r.times.v_expect.imag, r.times.ratio,
             r.identity_rel_err, r.boundary_err) for r in records]
    with _output(args.out) as fh:
        fh.write(csv_rows(RESONANCE_HEADER, rows))
    return EXIT_OK


def _oracle_lines(spec, energy) -> list[str]:
    state = solve_scattering(spec, energy)
    if state.opacity >= ORACLE_OPACITY_CAP:
        return [f"oracle: skipped (opacity {state.opacity:.3g} >= {ORACLE_OPACITY_CAP:g})"]
    sol = ode_solve_scattering(spec, energy)
    phi_main, _ = evaluate_wavefunction(spec, state, sol.grid.xs)
    phi_err = np.max(np.abs(phi_main - sol.grid.phi)) / np.max(np.abs(phi_main))
    norm, norm_err = grid_quadrature(sol.grid, np.abs(sol.grid.phi) ** 2)
    current, _ = grid_quadrature(
        sol.grid, np.conj(sol.grid.phi) * (-1j * spec.hbar / spec.mass) * sol.grid.dphi)
    alpha = unwrapped_phase(spec)
    alpha(energy)
    tau_fd = spec.hbar * fd_derivative(alpha, energy, 1e-4 * energy, order=4)
    return [
        "oracle (fixed-step RK4 integration):",
        f"  |T_ode - T|            = {abs(sol.t_amp - state.t_amp):.3e}",
        f"  |R_ode - R|            = {abs(sol.r_amp - state.r_amp):.3e}",
        f"  max |Phi_ode - Phi|/max|Phi| = {phi_err:.3e}",
        f"  tau_dwell (ode grid)   = {fmt(norm.real / sol.grid.j_in)}  (Richardson est {norm_err:.1e})",
        f"  <v> (ode grid)         = {fmt((current / norm).real)} {(current / norm).imag:+.3e}i",
        f"  tau_phase (4th-order fd) = {fmt(tau_fd)}",
    ]


def cmd_verify(args) -> int:
    spec = _load(args.potential)
    _check_energy(args.energy)
    try:
        rec = verify_identity(spec, args.energy, certify_tol=args.tol)
    except NotAResonanceError as exc:
        print(f"not a certified resonance: residual |R|^2 = {exc.residual:.17g} "
              f"(threshold {exc.tol:g})", file=sys.stderr)
        print(f"residual {fmt(exc.residual)}")
        return EXIT_NOT_RESONANCE
    v = rec.times.v_expect
    lines = [
        f"potential: {args.potential}",
        f"mass = {fmt(spec.mass)}   hbar = {fmt(spec.hbar)}   segments = {len(spec.segments)}",
        f"l = {fmt(rec.length)}",
        f"E = {fmt(rec.e_res)}",
        f"residual |R|^2 = {rec.residual:.3e}",
        f"alpha = arg T = {fmt(rec.alpha)}",
        f"tau_dwell = {fmt(rec.times.tau_dwell)}",
        f"tau_phase = {fmt(rec.times.tau_phase)}",
        f"<v>_0,l = {fmt(v.real)} {v.imag:+.3e}i",
        f"l / tau_dwell = {fmt(rec.times.ratio)}",
        "checks:",
    ]
    metrics = {
        "im_fraction": (rec.im_fraction, "|Im<v>|/|Re<v>| <= 1e-8"),
        "identity": (rec.identity_rel_err, "|<v> - l/tau_D|/(l/tau_D) <= 1e-8"),
        "phase_time": (rec.phase_rel_err, "|tau_phase - tau_D|/tau_D <= 1e-6"),
        "boundary_modulus": (rec.boundary_err, "max ||Phi(0)|^2-1|, ||Phi(l)|^2-1| <= 1e-9"),
        "current_integral": (rec.integral_rel_err, "|Re I - l j_in|/(l j_in) <= 1e-9"),
        "current_uniformity": (rec.uniformity, "max |j - j(0)|/|j(0)| <= 1e-8"),
    }
    for name, ok in rec.checks.items():
        value, text = metrics[name]
        lines.append(f"  [{'PASS' if ok else 'FAIL'}] {name:<19} {value:.3e}   {text}")
    lines.append(f"overall: {'PASS' if rec.passed else 'FAIL'}")
    if args.oracle:
        lines += _oracle_lines(spec, args.energy)
    print("\n".join(lines))
    return EXIT_OK if rec.passed else EXIT_FAILED


def cmd_wavefunction(args) -> int:
    spec = _load(args.potential)
    _check_energy(args.energy)
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    state = solve_scattering(spec, args.energy)
    grid = reconstruct_wavefunction(spec, state, args.samples)
    j = grid_current(grid)
    rows = zip(grid.xs, grid.phi.real, grid.phi.imag, np.abs(grid.phi) ** 2, j)
    with _output(args.out) as fh:
        fh.write(csv_rows(WAVEFUNCTION_HEADER, rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="restunnel", description="1D resonant-tunneling scattering engine")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("scan", help="tabulate |T|^2, |R|^2 and arg T over an energy range")
    p.add_argument("potential")
    p.add_argument("--emin", type=float, required=True)
    p.add_argument("--emax", type=float, required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("resonances", help="find and verify |T|=1 resonances")
    p.add_argument("potential")
    p.add_argument("--emin", type=float, required=True)
    p.add_argument("--emax", type=float, required=True)
    p.add_argument("--scan-density", type=float, default=DEFAULT_SCAN_DENSITY,
                   help="scan samples per unit energy (default %(default)g)")
    p.add_argument("--tol", type=float, default=CERTIFY_TOL,
                   help="|R|^2 certification threshold (default %(default)g)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_resonances)

    p = sub.add_parser("verify", help="run the velocity/tunneling-time battery at one energy")
    p.add_argument("potential")
    p.add_argument("--energy", type=float, required=True)
    p.add_argument("--tol", type=float, default=CERTIFY_TOL, help=argparse.SUPPRESS)
    p.add_argument("--oracle", action="store_true",
                   help="append a direct ODE integration cross-check")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("wavefunction", help="sample Phi(x) and j(x) on [0, l]")
    p.add_argument("potential")
    p.add_argument("--energy", type=float, required=True)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES_PER_SEGMENT,
                   help="minimum samples per segment (default %(default)d)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_wavefunction)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PotentialParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except NumericalOverflowError as exc:
        print(f"numerical overflow: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW


if __name__ == "__main__":
    sys.exit(main())

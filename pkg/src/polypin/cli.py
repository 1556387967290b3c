"""Command line front-end.

    polypin COMMAND [--config PATH] [--out DIR] [--seed N] [--quiet]

Commands write CSV files into the output directory.  Exit status is 0 on
success, 2 for configuration errors, 3 for certification failures and 4 for
numerical errors; failures also print a one-line JSON record on stderr.
"""

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import __version__
from .chain import bridge_density_table, density_bounds_check, sample_trajectory
from .config import load_config
from .ergodics import (drift_check, feller_smoothing_check, first_below, is_nonincreasing,
                       lyapunov_recursion, tv_convergence)
from .exceptions import CertificationError, PinningError
from .io import write_csv
from .partition import contact_fraction, free_energy, log_partition_sequence
from .potentials import certify_assumptions
from .renewal import interarrival_law, renewal_mass, solve_mu
from .spectral import (Grid, check_left_right_relation, invariant_measure, row_integrals,
                       spectral_data, symmetry_deviation)

log = logging.getLogger("polypin")

COMMANDS = ("check-potentials", "spectrum", "density", "free-energy", "mu-curve",
            "phase", "sample", "certify")


class Run:
    """Shared state of one command invocation (config, output, cached results)."""

    def __init__(self, command, cfg, out_dir):
        self.command = command
        self.cfg = cfg
        self.out_dir = out_dir
        self.hash = cfg.hash()
        self.written = []
        self._sd = None

    def write(self, name, columns, rows):
        path = write_csv(os.path.join(self.out_dir, name), columns, rows,
                         command=self.command, config_hash=self.hash, seed=self.cfg.seed)
        self.written.append(path)
        log.info("wrote %s", path)
        return path

    def spec(self):
        report = certify_assumptions(self.cfg.spec)
        if not report.passed:
            raise CertificationError("potential spec failed certification: "
                                     + "; ".join(report.failures), report.failures)
        return report.spec

    def sd(self):
        if self._sd is None:
            grid = Grid.symmetric(self.cfg.L, self.cfg.n_points)
            self._sd = spectral_data(self.spec(), grid, tol=self.cfg.tol,
                                     max_iter=self.cfg.max_iter)
            log.info("lambda = %r", self._sd.lam)
        return self._sd

    def w_grid(self):
        if self.cfg.w_points <= 0:
            return None
        return Grid.lattice(self.sd().grid.h, self.cfg.w_points // 2)

    def height_grid(self):
        return self.w_grid()


def cmd_check_potentials(run):
    report = certify_assumptions(run.cfg.spec)
    run.write("potentials.csv", ["key", "value"], report.rows())
    if not report.passed:
        raise CertificationError("potential spec failed certification: "
                                 + "; ".join(report.failures), report.failures)


def cmd_spectrum(run):
    sd = run.sd()
    x = sd.grid.nodes
    run.write("spectrum.csv", ["node", "x", "v", "w", "pi"],
              ((i, x[i], sd.v[i], sd.w[i], sd.pi_weights[i]) for i in range(x.size)))
    _, inv = invariant_measure(sd)
    rows = [("lambda", sd.lam), ("residual_right", sd.residual_right),
            ("residual_left", sd.residual_left),
            ("row_error", float(np.max(np.abs(row_integrals(sd) - 1.0)))),
            ("invariance_residual", inv), ("symmetry_deviation", symmetry_deviation(sd)),
            ("left_right_deviation", check_left_right_relation(sd))]
    run.write("spectrum_summary.csv", ["key", "value"], rows)


def cmd_density(run):
    sd = run.sd()
    table = bridge_density_table(sd, run.cfg.n_max, w_grid=run.w_grid())
    run.write("density.csv", ["n", "phi"], table.rows())
    if run.cfg.n_max >= 13:
        rep = density_bounds_check(table)
        run.write("density_bounds.csv", ["key", "value"],
                  [("n_lo", rep.n_lo), ("n_hi", rep.n_hi), ("C1_hat", rep.c1_hat),
                   ("C2_hat", rep.c2_hat), ("decay_exponent", rep.exponent),
                   ("leakage", table.leakage)])


def cmd_free_energy(run):
    sd = run.sd()
    N = list(run.cfg.N)
    z0 = log_partition_sequence(sd, 0.0, N[-1], run.height_grid())
    rows = []
    for eps in run.cfg.eps:
        fe = free_energy(None, sd, eps, N, height_grid=run.height_grid(), log_z_0=z0)
        rows.extend(fe.rows())
    run.write("free_energy.csv", ["eps", "N", "logZ_eps", "logZ_0", "f_N"], rows)


def _long_table(run):
    log.info("building bridge densities up to n = %d", run.cfg.mu_table_max)
    return bridge_density_table(run.sd(), run.cfg.mu_table_max, w_grid=run.w_grid())


def cmd_mu_curve(run):
    table = _long_table(run)
    rows = []
    for eps in run.cfg.eps:
        if eps <= 0:
            continue
        br = solve_mu(table, eps, n_trunc=run.cfg.n_trunc)
        rd = interarrival_law(table, eps, br.mu, br.n_trunc, c2_hat=br.c2_hat, bracket=br)
        rows.append((eps, br.mu_lo, br.mu_hi, rd.mean))
    run.write("mu_curve.csv", ["eps", "mu_lo", "mu_hi", "m_eps"], rows)
    eps = run.cfg.renewal_eps
    br = solve_mu(table, eps, n_trunc=run.cfg.n_trunc)
    rd = renewal_mass(interarrival_law(table, eps, br.mu, br.n_trunc, c2_hat=br.c2_hat),
                      run.cfg.renewal_N)
    run.write("mass_function.csv", ["n", "u"], enumerate(rd.mass_fn))


def cmd_phase(run):
    sd = run.sd()
    N = list(run.cfg.N)
    table = _long_table(run)
    z0 = log_partition_sequence(sd, 0.0, N[-1], run.height_grid())
    rows = []
    for eps in run.cfg.eps:
        if eps <= 0:
            rows.append((eps, 0.0, math.nan, math.nan))
            continue
        fe = free_energy(None, sd, eps, N, height_grid=run.height_grid(), log_z_0=z0)
        br = solve_mu(table, eps, n_trunc=run.cfg.n_trunc)
        cf = contact_fraction(None, sd, eps, run.cfg.contact_N, height_grid=run.height_grid())
        rows.append((eps, fe.estimate, br.mu, cf))
    run.write("phase.csv", ["eps", "F_estimate", "mu_eps", "contact_fraction"], rows)


def cmd_sample(run):
    traj = sample_trajectory(run.sd(), a=run.cfg.a, b=run.cfg.b, n=run.cfg.n_steps,
                             seed=run.cfg.seed)
    run.write("trajectory.csv", ["k", "y", "w"], traj.rows())


def cmd_certify(run):
    sd = run.sd()
    failures = []
    try:
        cert = drift_check(sd)
    except CertificationError as exc:
        cert = None
        failures.append(str(exc))
    tv = tv_convergence(sd, run.cfg.x0, run.cfg.tv_n_max)
    run.write("tv.csv", ["n", "tv"], enumerate(tv))
    rows = []
    if cert is not None:
        rows = cert.rows()
        lyap = lyapunov_recursion(sd, cert, x0=run.cfg.x0, n_max=run.cfg.tv_n_max)
        rows.append(("lyapunov_recursion", lyap.passed))
        if not cert.valid:
            failures.append("drift margin is negative")
        if not lyap.passed:
            failures.append("Lyapunov recursion violated")
    smooth = feller_smoothing_check(sd, np.sign)
    n_hit = first_below(tv, run.cfg.tv_threshold)
    rows += [("tv_first_below", -1 if n_hit is None else n_hit),
             ("tv_nonincreasing", is_nonincreasing(tv)),
             ("feller_modulus_pf", smooth.modulus_pf), ("feller_bound", smooth.bound)]
    run.write("drift.csv", ["key", "value"], rows)
    if n_hit is None:
        failures.append(f"TV did not fall below {run.cfg.tv_threshold:g}")
    if not is_nonincreasing(tv):
        failures.append("TV sequence increases")
    if not smooth.passed:
        failures.append("smoothing bound violated")
    if failures:
        raise CertificationError("; ".join(failures), failures)


HANDLERS = {
    "check-potentials": cmd_check_potentials,
    "spectrum": cmd_spectrum,
    "density": cmd_density,
    "free-energy": cmd_free_energy,
    "mu-curve": cmd_mu_curve,
    "phase": cmd_phase,
    "sample": cmd_sample,
    "certify": cmd_certify,
}


def build_parser():
    p = argparse.ArgumentParser(prog="polypin",
                                description="Pinning of a semiflexible chain: transfer "
                                            "operator, partition functions, renewal bound.")
    p.add_argument("--version", action="version", version=f"polypin {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", metavar="PATH", help="INI configuration file")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    p.add_argument("--seed", type=int, help="random seed (overrides config)")
    p.add_argument("--quiet", action="store_true", help="only report errors")
    return p


def _error_record(exc, code):
    return json.dumps({"error": type(exc).__name__, "exit_code": code, "message": str(exc),
                       "failures": list(getattr(exc, "failures", ()))})


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr, force=True)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        run = Run(args.command, cfg, args.out or cfg.out_dir)
        HANDLERS[args.command](run)
    except PinningError as exc:
        print(_error_record(exc, exc.exit_code), file=sys.stderr)
        return exc.exit_code
    except (ValueError, ArithmeticError) as exc:
        code = 2 if isinstance(exc, ValueError) else 4
        print(_error_record(exc, code), file=sys.stderr)
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command line interface.

Hamiltonians are read as JSON from --input (default: standard input) and
results are printed as JSON; grid results are CSV with a header row.

CSV columns:
  density        x, w
  profile        r, K
  krein-density  x, w_krein, w_solver, abs_pstar_sq
  report         density.csv (x, w, w_krein), profile.csv (r, K),
                 ktilde.csv (n, term), factorization.csv (t, trQ_minus_2,
                 norm_V1, norm_V2), krein.csv (r, abs_pstar_i, abs_pstar_d_i),
                 log_integrand.csv (theta, log_w)

Exit status: 1 parse error, 2 precondition violated, 3 no convergence.
"""

import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import factorization as fz
from . import functionals as fn
from . import hamiltonian as hm
from . import krein as kr
from . import mat2
from . import models
from . import solver
from .errors import ConvergenceError, PreconditionError
from .io import csv_text, dumps, matrix_json, parse_complex, write_csv


class ParseError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


def _read_text(path):
    if path in (None, "-"):
        return sys.stdin.read()
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(str(exc)) from exc


def _z(text):
    try:
        return parse_complex(text)
    except ValueError as exc:
        raise ParseError(f"bad complex number {text!r}") from exc


def _load_h(args, check=True):
    text = _read_text(args.input)
    try:
        h = hm.PiecewiseHamiltonian.from_json(text)
    except (ValueError, json.JSONDecodeError) as exc:
        raise ParseError(str(exc)) from exc
    if check:
        hm.require_valid(h)
    return h


def _emit(obj):
    print(dumps(obj))


def _emit_csv(args, header, cols):
    if getattr(args, "out", None):
        write_csv(args.out, header, cols)
    else:
        sys.stdout.write(csv_text(header, cols))


def _factorize(h, method, grid_step=1.0 / 64):
    if method == "oscillation":
        return fz.factorize_oscillation(h, grid_step)
    if method == "spectral":
        return fz.factorize_spectral(h)
    if method == "identity":
        return fz.identity_factorization(h)
    raise ParseError(f"unknown method {method!r}")


# --- commands -----------------------------------------------------------------

def cmd_validate(args):
    h = _load_h(args, check=False)
    c = hm.validate(h)
    _emit({"kind": c.kind, "reason": c.reason})
    if c.kind == "invalid":
        print(c.reason, file=sys.stderr)
        return 2
    return 0


def cmd_transfer(args):
    h = _load_h(args)
    z = _z(args.z)
    m = solver.transfer(h, args.t, z)
    _emit({"t": args.t, "z": z, "M": matrix_json(m)})
    return 0


def cmd_weyl(args):
    h = _load_h(args)
    z = _z(args.z)
    if args.r > 0:
        m = complex(solver.weyl_at_r(h, args.r, z))
    else:
        m = solver.weyl_fc(h, z).m
    _emit({"z": z, "r": args.r, "m": m, "I": m.imag, "R": m.real})
    return 0


def cmd_density(args):
    h = _load_h(args)
    x = np.linspace(args.xmin, args.xmax, args.n)
    _emit_csv(args, ["x", "w"], [x, solver.spectral_density(h, x)])
    return 0


def cmd_entropy(args):
    h = _load_h(args)
    if args.method == "closed":
        _emit({"K": fn.entropy_closed(h).K})
    else:
        rep = fn.entropy_quadrature(h, tol=args.tol)
        _emit({"K": rep.K, "error_estimate": rep.quadrature_error_estimate})
    return 0


def cmd_ktilde(args):
    h = _load_h(args)
    rep = fn.ktilde(h)
    out = {"ktilde": rep.total}
    if args.terms:
        out["terms"] = [float(t) for t in rep.terms]
    _emit(out)
    return 0


def cmd_profile(args):
    h = _load_h(args)
    prof = fn.entropy_profile(h)
    r, k = zip(*prof) if prof else ((), ())
    _emit_csv(args, ["r", "K"], [r, k])
    return 0


def cmd_factorize(args):
    h = _load_h(args)
    f = _factorize(h, args.method, args.grid_step)
    d = f.to_dict(f.grid(args.grid_step))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(json.dumps(d))
        _emit({"written": args.out, "norms": d["norms"]})
    else:
        print(json.dumps(d))
    return 0


def cmd_verify_fact(args):
    h = _load_h(args)
    if args.fact:
        try:
            arrs = fz.factorization_from_dict(json.loads(_read_text(args.fact)))
        except (ValueError, json.JSONDecodeError) as exc:
            raise ParseError(str(exc)) from exc
        _emit(fz.verify_sampled(h, *arrs))
    else:
        f = _factorize(h, args.method, args.grid_step)
        _emit(fz.verify_factorization(h, f, f.grid(args.grid_step)))
    return 0


def cmd_krein_density(args):
    h = _load_h(args)
    f = _factorize(h, args.method)
    ell = h.ell if args.ell is None else args.ell
    x = np.linspace(args.xmin, args.xmax, args.n)
    hl, fl = fz.truncate_factorized(h, f, ell, grid=np.append(f.grid(), ell))
    wk = kr.density_via_pstar(fl, ell, x)
    ws = solver.spectral_density(hl, x)
    _emit_csv(args, ["x", "w_krein", "w_solver", "abs_pstar_sq"], [x, wk, ws, 1.0 / wk])
    return 0


def cmd_audit(args):
    h = _load_h(args)
    _emit(fn.theorem1_audit(h))
    return 0


def cmd_example1(args):
    print(models.example1(args.L).h.to_json())
    return 0


def cmd_example2(args):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ex = models.example2(args.eps, args.T, step=args.step)
    print(ex.h.to_json())
    return 0


def _floats(text):
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def cmd_example3(args):
    v = _floats(args.v)
    lengths = _floats(args.len) if args.len else [1.0] * len(v)
    if len(lengths) != len(v):
        raise ParseError("--len and --v differ in number")
    print(models.example3(lengths, v, step=args.step).h.to_json())
    return 0


def cmd_dirac(args):
    try:
        pot = models.DiracPotential.from_dict(json.loads(_read_text(args.input)))
    except (ValueError, json.JSONDecodeError) as exc:
        raise ParseError(str(exc)) from exc
    print(models.dirac_to_hamiltonian(pot, step=args.step).to_json())
    return 0


def cmd_report(args):
    from . import plotting
    h = _load_h(args)
    os.makedirs(args.out_dir, exist_ok=True)
    p = lambda name: os.path.join(args.out_dir, name)  # noqa: E731
    files = []
    summary = {"ell": h.ell, "n_cells": h.n_cells, "classification": hm.validate(h).kind}

    x = np.linspace(args.xmin, args.xmax, args.n)
    w = solver.spectral_density(h, x)
    k_closed = fn.entropy_closed(h)
    summary["K_closed"] = k_closed.K
    prof = fn.entropy_profile(h)
    r_prof = [a for a, _ in prof]
    k_prof = [b for _, b in prof]
    write_csv(p("profile.csv"), ["r", "K"], [r_prof, k_prof])
    files += [p("profile.csv"), plotting.plot_profile(r_prof, k_prof, p("profile.png"))]
    theta, logw = fn.entropy_diagnostics(h)
    write_csv(p("log_integrand.csv"), ["theta", "log_w"], [theta, logw])
    files += [p("log_integrand.csv"), plotting.plot_log_integrand(theta, logw, p("log_integrand.png"))]
    try:
        kt = fn.ktilde(h)
        summary["ktilde"] = kt.total
        n = np.arange(len(kt.terms))
        write_csv(p("ktilde.csv"), ["n", "term"], [n, kt.terms])
        files += [p("ktilde.csv"), plotting.plot_ktilde_terms(n, kt.terms, p("ktilde.png"))]
    except PreconditionError as exc:
        summary["ktilde"] = None
        summary["ktilde_error"] = str(exc)

    method = args.method
    if method != "identity":
        try:
            fn.require_det1(h)
        except PreconditionError:
            method = "identity"
    f = _factorize(h, method)
    summary["factorization"] = method
    summary["norms"] = f.norms()
    grid = f.grid()
    _, q, v1, v2 = f.evaluate(grid)
    cols = [grid, mat2.tr2(q) - 2.0, mat2.opnorm(v1), mat2.opnorm(v2)]
    write_csv(p("factorization.csv"), ["t", "trQ_minus_2", "norm_V1", "norm_V2"], cols)
    files += [p("factorization.csv"), plotting.plot_factorization(*cols, p("factorization.png"))]

    hl, fl = fz.truncate_factorized(h, f, h.ell, grid=np.append(grid, h.ell))
    wk = kr.density_via_pstar(fl, h.ell, x)
    summary["density_max_rel_diff"] = float(np.max(np.abs(wk / w - 1.0)))
    write_csv(p("density.csv"), ["x", "w", "w_krein"], [x, w, wk])
    files += [p("density.csv"), plotting.plot_density(x, w, p("density.png"), wk)]

    rr = np.linspace(0.0, fl.extent, 65)[1:] if fl.extent > 0 else np.array([0.0])
    pa = kr.propagate_krein(kr.KreinCoefficients(fl), 1j, max(fl.extent, 1e-12), r_eval=rr)
    pd = kr.propagate_krein(kr.KreinCoefficients(fl.dual()), 1j, max(fl.extent, 1e-12), r_eval=rr)
    ka, kd = np.abs(pa.pstar), np.abs(pd.pstar)
    write_csv(p("krein.csv"), ["r", "abs_pstar_i", "abs_pstar_d_i"], [pa.r, ka, kd])
    files += [p("krein.csv"), plotting.plot_krein(pa.r, ka, kd, p("krein.png"))]
    summary["files"] = files
    _emit(summary)
    return 0


# --- parser -------------------------------------------------------------------

def build_parser():
    ap = _Parser(prog="canonsys", description=__doc__,
                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text, reads_h=True):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        if reads_h:
            sp.add_argument("--input", "-i", default=None, help="Hamiltonian JSON (default stdin)")
        sp.set_defaults(func=func)
        return sp

    add("validate", cmd_validate, "classify a Hamiltonian")
    sp = add("transfer", cmd_transfer, "transfer matrix M(t, z)")
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--z", default="i")
    sp = add("weyl", cmd_weyl, "Weyl function m(z), or m_r(z) with --r")
    sp.add_argument("--z", default="i")
    sp.add_argument("--r", type=float, default=0.0)
    sp = add("density", cmd_density, "spectral density on a grid (CSV: x, w)")
    sp.add_argument("--xmin", type=float, default=-10.0)
    sp.add_argument("--xmax", type=float, default=10.0)
    sp.add_argument("--n", type=int, default=401)
    sp.add_argument("--out", default=None, help="CSV path (default stdout)")
    sp = add("entropy", cmd_entropy, "entropy K_m")
    sp.add_argument("--method", choices=["closed", "quad"], default="closed")
    sp.add_argument("--tol", type=float, default=1e-7)
    sp = add("ktilde", cmd_ktilde, "oscillation functional")
    sp.add_argument("--terms", action="store_true")
    sp = add("profile", cmd_profile, "entropy profile at cell boundaries (CSV: r, K)")
    sp.add_argument("--out", default=None)
    sp = add("factorize", cmd_factorize, "factorization H = G^T Q G as JSON")
    sp.add_argument("--method", choices=["oscillation", "spectral", "identity"], default="oscillation")
    sp.add_argument("--grid-step", type=float, default=1.0 / 64)
    sp.add_argument("--out", default=None)
    sp = add("verify-fact", cmd_verify_fact, "verify a factorization (built, or read with --fact)")
    sp.add_argument("--fact", default=None, help="factorization JSON to verify")
    sp.add_argument("--method", choices=["oscillation", "spectral", "identity"], default="oscillation")
    sp.add_argument("--grid-step", type=float, default=1.0 / 64)
    sp = add("krein-density", cmd_krein_density,
             "density from the Krein system (CSV: x, w_krein, w_solver, abs_pstar_sq)")
    sp.add_argument("--method", choices=["oscillation", "spectral", "identity"], default="identity")
    sp.add_argument("--ell", type=float, default=None)
    sp.add_argument("--xmin", type=float, default=-5.0)
    sp.add_argument("--xmax", type=float, default=5.0)
    sp.add_argument("--n", type=int, default=200)
    sp.add_argument("--out", default=None)
    add("audit-theorem1", cmd_audit, "both sides of the two-sided entropy bound")
    sp = add("example1", cmd_example1, "diag(1,0) on [0,L], then I", reads_h=False)
    sp.add_argument("--L", type=float, default=1.0)
    sp = add("example2", cmd_example2, "Dirac potential ((0,eps),(eps,0)) on [0,T]", reads_h=False)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--T", type=int, default=500)
    sp.add_argument("--step", type=float, default=1.0)
    sp = add("example3", cmd_example3, "Dirac potential diag(v,-v)", reads_h=False)
    sp.add_argument("--v", required=True, help="comma separated values")
    sp.add_argument("--len", default=None, help="comma separated cell lengths (default 1)")
    sp.add_argument("--step", type=float, default=1.0 / 16)
    sp = add("dirac", cmd_dirac, "Hamiltonian of a Dirac potential JSON "
             '{"cells":[{"len":..,"v":[[..],[..]]}]}')
    sp.add_argument("--step", type=float, default=1.0 / 16)
    sp = add("report", cmd_report, "CSV tables and PNG figures for one Hamiltonian")
    sp.add_argument("--out-dir", default="report")
    sp.add_argument("--method", choices=["oscillation", "spectral", "identity"], default="spectral")
    sp.add_argument("--xmin", type=float, default=-10.0)
    sp.add_argument("--xmax", type=float, default=10.0)
    sp.add_argument("--n", type=int, default=400)
    return ap


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    except (PreconditionError, ValueError) as exc:
        print(f"precondition violated: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, ArithmeticError) as exc:
        print(f"no convergence: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

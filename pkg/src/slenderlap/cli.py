"""Command-line entry point for every verification harness.

Subcommands: check-bessel, symbols, geometry, check-geometry, greens-check,
dtn, ntd, exterior, decompose, scaling.  Exit codes: 0 success/PASS, 2
verification FAIL (inequality or slope breach), 1 usage or config error.
CSV output uses a header row, '.' decimals, 17 significant digits; JSON
summaries go to files and, with --json, to stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np


def _fmt(x):
    return f"{x:.17g}"


def _emit_json(args, payload):
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, default=float))


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) if isinstance(x, float) else str(x)
                             for x in row) + "\n")


def _parse_eps_list(text):
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if "/" in tok:
            num, den = tok.split("/")
            out.append(float(num) / float(den))
        else:
            out.append(float(tok))
    return out


def _curve_config(args):
    if args.curve.endswith(".json") or os.path.sep in args.curve:
        with open(args.curve) as fh:
            return json.load(fh)
    return {"preset": args.curve}


def _build_spec(args, n_frame=128):
    from . import geometry as geo
    cl = geo.build_centerline(_curve_config(args))
    fr = geo.build_frame(cl, n_frame)
    return geo.SurfaceSpec(centerline=cl, frame=fr, epsilon=args.epsilon)


def _dry_run_report(args, n_s, n_theta, n_systems=1):
    n = n_s * n_theta
    mem = n * n * 8 / 1e9
    print(f"dry run: grid {n_s} x {n_theta} ({n} nodes), "
          f"~{mem:.2f} GB per dense operator, {n_systems} system(s)")
    return 0


def _apply_threads(args):
    threads = os.environ.get("SLENDERLAP_THREADS", None)
    if getattr(args, "threads", None):
        threads = str(args.threads)
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = threads


# subcommand implementations -------------------------------------------------

def cmd_check_bessel(args):
    from . import specfun as sf
    if args.dry_run:
        return _dry_run_report(args, 1, 1)
    rep = sf.check_suite()
    from .spectral import finite_diff_symbol_bounds
    for name in ("m_S_inv", "m_eps_inv", "m_eps"):
        rep[f"bounds_{name}"] = finite_diff_symbol_bounds(name, args.epsilon)
    ok = rep["wronskian_sup"] <= 1e-12 and rep["recurrence_sup"] <= 1e-10
    print(f"max Wronskian deviation: {rep['wronskian_sup']:.3e} "
          f"(limit 1e-12): {'PASS' if ok else 'FAIL'}")
    for k, v in rep.items():
        if isinstance(v, float):
            print(f"  {k}: {_fmt(v)}")
    _emit_json(args, {"pass": ok, **{k: v for k, v in rep.items()}})
    return 0 if ok else 2


def cmd_symbols(args):
    from .spectral import (symbol_m_D, symbol_m_S, symbol_m_eps,
                           symbol_m_eps_inv)
    if args.dry_run:
        return _dry_run_report(args, args.kmax, args.lmax)
    rows = []
    for k in range(0, args.kmax + 1):
        for ell in range(0, args.lmax + 1):
            m_s = symbol_m_S(args.epsilon, k, ell) if (k, ell) != (0, 0) \
                else float("nan")
            rows.append((k, ell, m_s, symbol_m_D(args.epsilon, k, ell),
                         symbol_m_eps_inv(args.epsilon, k),
                         symbol_m_eps(args.epsilon, k)))
    _write_csv(args.out, ("k", "l", "m_S", "m_D", "m_eps_inv", "m_eps"),
               [(r[0], r[1], float(r[2]), float(r[3]), float(r[4]),
                 float(r[5])) for r in rows])
    print(f"wrote {len(rows)} symbol rows to {args.out}")
    return 0


def cmd_geometry(args):
    from . import geometry as geo
    if args.dry_run:
        return _dry_run_report(args, args.ns, 1)
    spec = _build_spec(args, n_frame=args.ns)
    rep = geo.geometry_report(spec)
    if args.report or args.json:
        _emit_json(args, rep)
    if not args.json:
        for k, v in rep.items():
            print(f"{k}: {v}")
    return 0


def cmd_check_geometry(args):
    from .grid import make_grid
    from .kernels import check_geometric_inequalities, oddness_residual
    if args.dry_run:
        return _dry_run_report(args, args.ns, args.ntheta)
    spec = _build_spec(args)
    grid = make_grid(spec, args.ns, args.ntheta)
    rep = check_geometric_inequalities(grid)
    rep["oddness_n1_m0"] = oddness_residual(grid, 1, 0)
    rep["oddness_n0_m1"] = oddness_residual(grid, 0, 1)
    rep["oddness_n2_m1"] = oddness_residual(grid, 2, 1)
    for k, v in rep.items():
        print(f"{k}: {v}")
    _emit_json(args, rep)
    return 0 if rep["pass"] else 2


def cmd_greens_check(args):
    from . import solver as sv
    ladder = [int(x) for x in args.ladder.split(",")]
    if args.dry_run:
        return _dry_run_report(args, max(ladder), args.ntheta, len(ladder))
    spec = _build_spec(args)
    out = {}
    ok = True
    for backend in ("direct", "split"):
        resids, order = sv.greens_ladder(spec, [(1.0, 0.0)], ladder,
                                         args.ntheta, backend)
        out[backend] = {"residuals": resids, "order": order}
        ok = ok and order >= 1.0
        print(f"{backend}: residuals " +
              " ".join(_fmt(r) for r in resids) + f"  order {order:.3f}")
    _emit_json(args, {"pass": ok, **out})
    return 0 if ok else 2


def _parse_data_spec(text, n_s):
    s = np.arange(n_s) / n_s
    if text.startswith("cos:"):
        return np.cos(2 * np.pi * int(text[4:]) * s)
    if text.startswith("sin:"):
        return np.sin(2 * np.pi * int(text[4:]) * s)
    vals = np.asarray(json.loads(text), float)
    if vals.size != n_s:
        raise ValueError(f"nodal data length {vals.size} != n_s {n_s}")
    return vals


def _solve_common(args, direction):
    from .analysis import decomposition_operators
    from .grid import make_grid
    from .solver import SlenderBodySolver
    from .spectral import GridFunction
    if args.dry_run:
        return _dry_run_report(args, args.ns, args.ntheta, 1)
    spec = _build_spec(args)
    grid = make_grid(spec, args.ns, args.ntheta)
    solver = SlenderBodySolver(grid, "split-decomp",
                               decomposition_operators(grid))
    if direction == "dtn":
        data = _parse_data_spec(args.dirichlet, args.ns)
        res = solver.dtn(GridFunction(data))
        primary = res.f.values
        label = "f"
    else:
        data = _parse_data_spec(args.neumann, args.ns)
        res = solver.ntd(GridFunction(data))
        primary = res.v.values
        label = "v"
    rows = [(float(s), float(val))
            for s, val in zip(grid.s_nodes, primary)]
    out_csv = args.out or f"{direction}_result.csv"
    _write_csv(out_csv, ("s", label), rows)
    summary = {"residuals": res.residuals, "conditioning": res.conditioning,
               "csv": str(out_csv)}
    print(f"wrote {out_csv}; cond(S) ~ {res.conditioning['cond_S']:.3e}")
    _emit_json(args, summary)
    return 0


def cmd_dtn(args):
    return _solve_common(args, "dtn")


def cmd_ntd(args):
    return _solve_common(args, "ntd")


def cmd_exterior(args):
    from .grid import make_grid
    from . import solver as sv
    if args.dry_run:
        return _dry_run_report(args, args.ns, args.ntheta, 1)
    spec = _build_spec(args)
    grid = make_grid(spec, args.ns, args.ntheta)
    charges = [(1.0, 0.0)]
    v_exact, w_exact = sv.point_charge_data(grid, charges)
    pts = _exterior_points(spec, count=8)
    u_ref = sv.exact_point_charge_potential(grid, pts, charges)
    u_dp, info = sv.solve_exterior_dirichlet(grid, v_exact, pts,
                                             backend="split")
    u_gr = sv.green_representation_eval(grid, pts, v_exact, w_exact)
    err_dp = float(np.max(np.abs(u_dp - u_ref)))
    err_gr = float(np.max(np.abs(u_gr - u_ref)))
    gap = float(np.max(np.abs(u_dp - u_gr)))
    ok = err_dp <= 1e-3 and err_gr <= 1e-3 and gap <= 1e-3
    print(f"D'-route error {err_dp:.3e}, Green-route error {err_gr:.3e}, "
          f"route gap {gap:.3e}: {'PASS' if ok else 'FAIL'}")
    _emit_json(args, {"pass": ok, "err_Dprime": err_dp, "err_green": err_gr,
                      "gap": gap, "cond": info["cond_Dprime"]})
    return 0 if ok else 2


def _exterior_points(spec, count=8, seed=3):
    rng = np.random.default_rng(seed)
    pts = []
    for i in range(count):
        s0 = i / count
        x0 = spec.centerline.position(np.array([s0]))[0]
        _, e_n1, e_n2, _, _ = spec.frame_at(np.array([s0]))
        ang = 2 * np.pi * rng.random()
        dist = spec.epsilon * (5.0 + 3.0 * rng.random())
        pts.append(x0 + dist * (np.cos(ang) * e_n1[0] + np.sin(ang) * e_n2[0]))
    return np.array(pts)


def cmd_decompose(args):
    from .analysis import decompose_dtn
    from .grid import make_grid
    from .spectral import GridFunction
    if args.dry_run:
        return _dry_run_report(args, args.ns, args.ntheta, 1)
    spec = _build_spec(args)
    grid = make_grid(spec, args.ns, args.ntheta)
    v = GridFunction(np.cos(2 * np.pi * grid.s_nodes))
    rep = decompose_dtn(grid, v, alpha=args.alpha, gamma=args.gamma)
    ok = rep["relative_mismatch"] <= 1e-5
    print(f"term-sum vs direct mismatch: {rep['relative_mismatch']:.3e} "
          f"({'PASS' if ok else 'FAIL'})")
    for name, norm in rep["term_norms"].items():
        print(f"  {name}: C^(0,{args.alpha}) size {_fmt(norm)}")
    _emit_json(args, {"pass": ok, "relative_mismatch": rep["relative_mismatch"],
                      "term_norms": rep["term_norms"]})
    return 0 if ok else 2


def cmd_scaling(args):
    from .analysis import make_study, run_scaling_study
    eps = _parse_eps_list(args.eps) if args.eps else None
    study = make_study(args.study, epsilons=eps,
                       curve_config=_curve_config(args) if args.curve else None)
    if args.dry_run:
        ns = max(study.grid_ns(e) for e in study.epsilons)
        return _dry_run_report(args, ns, study.n_theta, len(study.epsilons))
    rep = run_scaling_study(study)
    outdir = Path(args.out or ".")
    _write_csv(outdir / f"{args.study}.csv", ("epsilon", "value", "norm"),
               [(float(e), float(v), study.study_id)
                for e, v in zip(rep["epsilons"], rep["values"])])
    with open(outdir / f"{args.study}.json", "w") as fh:
        json.dump(rep, fh, indent=2, default=float)
    print(f"{args.study}: slope {rep['slope']:.3f} "
          f"(target {rep['target_slope']} +- {rep['margin']}, "
          f"{rep['direction']}): {'PASS' if rep['pass'] else 'FAIL'}")
    _emit_json(args, rep)
    return 0 if rep["pass"] else 2


def _add_common(p, epsilon=True, grid=False):
    p.add_argument("--json", action="store_true",
                   help="print the JSON summary to stdout")
    p.add_argument("--dry-run", action="store_true",
                   help="validate config, print planned sizes, do not compute")
    p.add_argument("--threads", type=int, default=None,
                   help="BLAS thread count (or SLENDERLAP_THREADS)")
    if epsilon:
        p.add_argument("--epsilon", type=float, default=1.0 / 64.0)
    if grid:
        p.add_argument("--ns", type=int, default=128)
        p.add_argument("--ntheta", type=int, default=16)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="slenderlap",
        description="slender-body Laplace NtD/DtN maps and their "
                    "verification harnesses")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-bessel", help="Bessel invariant suite")
    _add_common(p)
    p.set_defaults(fn=cmd_check_bessel)

    p = sub.add_parser("symbols", help="emit symbol table CSV")
    _add_common(p)
    p.add_argument("--kmax", type=int, default=64)
    p.add_argument("--lmax", type=int, default=8)
    p.add_argument("--out", default="symbols.csv")
    p.set_defaults(fn=cmd_symbols)

    p = sub.add_parser("geometry", help="geometry report for a curve")
    _add_common(p)
    p.add_argument("--curve", default="circle")
    p.add_argument("--ns", type=int, default=128)
    p.add_argument("--report", action="store_true")
    p.set_defaults(fn=cmd_geometry)

    p = sub.add_parser("check-geometry", help="displacement inequality sweep")
    _add_common(p, grid=True)
    p.add_argument("--curve", default="circle")
    p.set_defaults(fn=cmd_check_geometry)

    p = sub.add_parser("greens-check", help="Green identity ladder")
    _add_common(p)
    p.add_argument("--curve", default="circle")
    p.add_argument("--ladder", default="64,128,256")
    p.add_argument("--ntheta", type=int, default=16)
    p.set_defaults(fn=cmd_greens_check)

    p = sub.add_parser("dtn", help="Dirichlet -> total Neumann solve")
    _add_common(p, grid=True)
    p.add_argument("--curve", default="circle")
    p.add_argument("--dirichlet", default="cos:1",
                   help='"cos:k", "sin:k", or a JSON array of nodal values')
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_dtn)

    p = sub.add_parser("ntd", help="total Neumann -> Dirichlet solve")
    _add_common(p, grid=True)
    p.add_argument("--curve", default="circle")
    p.add_argument("--neumann", default="cos:1")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_ntd)

    p = sub.add_parser("exterior", help="exterior Dirichlet cross-validation")
    _add_common(p, grid=True)
    p.add_argument("--curve", default="circle")
    p.set_defaults(fn=cmd_exterior)

    p = sub.add_parser("decompose", help="DtN decomposition identity")
    _add_common(p, grid=True)
    p.add_argument("--curve", default="circle")
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--gamma", type=float, default=0.5)
    p.set_defaults(fn=cmd_decompose)

    p = sub.add_parser("scaling", help="epsilon-scaling slope study")
    _add_common(p, epsilon=False)
    p.add_argument("--study", required=True)
    p.add_argument("--eps", default=None,
                   help="comma list, fractions allowed: 1/16,1/32,...")
    p.add_argument("--curve", default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(fn=cmd_scaling)

    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    _apply_threads(args)
    try:
        return args.fn(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

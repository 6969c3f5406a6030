"""Experiment runner: convergence sweeps, robustness comparisons, CSV/SVG.

Reproduces the test cases at desk scale: manufactured Oseen/Navier-Stokes
sweeps (cases a-d) with dt = h^2 and delta0 = 0.1, and the forced
rest-state problem (case ex42) with dt = 0.01, N = 16, delta0 = 1e-3.
"""

import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np

from . import metrics, problems, scheme

FULL_N_LIST = [16, 23, 32, 45, 64]
CI_N_LIST = [8, 11, 16, 23]

CASE_PRESETS = {
    "a": {"kind": "oseen", "cp": 1.0, "schemes": ["O_TH", "O_PS"]},
    "b": {"kind": "oseen", "cp": 10.0, "schemes": ["O_TH", "O_PS"]},
    "c": {"kind": "navier_stokes", "cp": 1.0, "schemes": ["NS_TH", "NS_PS"]},
    "d": {"kind": "navier_stokes", "cp": 10.0, "schemes": ["NS_TH", "NS_PS"]},
}

CSV_HEADER = [
    "case", "scheme", "k", "N", "h", "dt", "nu", "delta0", "Cp",
    "E_linfL2_u", "E_l2H10_u", "E_l2L2_p", "slope_flag", "wall_seconds",
]


def build_parser():
    p = argparse.ArgumentParser(
        prog="lgfem", description="Lagrange-Galerkin Oseen/Navier-Stokes experiments"
    )
    p.add_argument("--case", required=True, choices=["a", "b", "c", "d", "ex42", "custom"])
    p.add_argument("--schemes", nargs="+", choices=scheme.SCHEMES, default=None)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--N", type=int, nargs="+", default=None)
    p.add_argument("--dt", type=float, default=None, help="time step (default h^2)")
    p.add_argument("--nu", type=float, nargs="+", default=[1e-2])
    p.add_argument("--cp", type=float, default=None)
    p.add_argument("--delta0", type=float, default=None)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--composite", choices=["exact", "quadrature"], default="exact")
    p.add_argument("--solver", choices=["direct", "minres", "krylov"], default="direct",
                   help="linear solver back-end (krylov is an alias for minres)")
    p.add_argument("--problem", choices=["manufactured", "forced", "zero"],
                   default="manufactured", help="problem for --case custom")
    p.add_argument("--out", type=Path, default=Path("lgfem_out"))
    p.add_argument("--ci", action="store_true", help="reduced mesh list for quick runs")
    p.add_argument("--strict", action="store_true",
                   help="abort when the step condition is violated")
    p.add_argument("--timings", action="store_true",
                   help="record wall seconds (breaks byte-identical CSV re-runs)")
    return p


def _zero_problem():
    def zf(x, y, t):
        z = np.zeros_like(np.asarray(x, dtype=np.float64))
        return np.stack([z, z])

    return problems.ProblemDef(
        name="zero", T=1.0,
        f=zf, u0=lambda x, y: zf(x, y, 0.0),
        exact_u=zf, exact_p=lambda x, y, t: np.zeros_like(np.asarray(x, dtype=np.float64)),
        w=zf, cp=0.0,
    )


def _single_run(case, sch, problem, n, dt, nu, delta0, t_final, args):
    cfg = scheme.RunConfig(
        scheme=sch, N=n, dt=dt, T=t_final, nu=nu, k=args.k,
        delta0=delta0 if sch.endswith("PS") else None,
        composite_mode=args.composite, solver=args.solver, strict=args.strict,
    )
    start = time.perf_counter()
    states = scheme.run(cfg, problem)
    report = metrics.relative_errors(states, problem, dt)
    wall = time.perf_counter() - start
    return cfg, report, wall


def _fmt(x):
    return "" if x is None else f"{x:.8g}"


def run_convergence_case(case, args, outdir):
    preset = CASE_PRESETS.get(case)
    if preset is not None:
        kind, cp = preset["kind"], preset["cp"]
        schemes = args.schemes or preset["schemes"]
    else:
        cp = args.cp if args.cp is not None else 1.0
        schemes = args.schemes or ["O_PS"]
        kind = "navier_stokes" if all(s.startswith("NS") for s in schemes) else "oseen"
    n_list = args.N or (CI_N_LIST if args.ci else FULL_N_LIST)
    t_final = args.T if args.T is not None else 1.0
    delta0 = args.delta0 if args.delta0 is not None else 0.1

    rows = []
    series = {}  # (scheme, nu) -> (h list, report list)
    for nu in args.nu:
        if args.problem == "zero":
            problem = _zero_problem()
        else:
            problem = problems.example41(cp, kind=kind, nu=nu)
        for sch in schemes:
            for n in n_list:
                h = 1.0 / n
                dt = args.dt if args.dt is not None else h * h
                row = {
                    "case": case, "scheme": sch, "k": args.k, "N": n,
                    "h": _fmt(h), "dt": _fmt(dt), "nu": _fmt(nu),
                    "delta0": _fmt(delta0 if sch.endswith("PS") else None),
                    "Cp": _fmt(cp),
                }
                try:
                    _cfg, report, wall = _single_run(
                        case, sch, problem, n, dt, nu, delta0, t_final, args
                    )
                except Exception as exc:  # record and continue with the sweep
                    row.update({
                        "E_linfL2_u": "", "E_l2H10_u": "", "E_l2L2_p": "",
                        "slope_flag": f"error:{type(exc).__name__}",
                        "wall_seconds": "",
                    })
                    rows.append(row)
                    continue
                trivial = report.e_linf_l2_u == 0.0 and report.e_l2_l2_p == 0.0
                row.update({
                    "E_linfL2_u": _fmt(report.e_linf_l2_u),
                    "E_l2H10_u": _fmt(report.e_l2_h1_u),
                    "E_l2L2_p": _fmt(report.e_l2_l2_p),
                    "slope_flag": "trivial" if trivial else "ok",
                    "wall_seconds": f"{wall:.3f}" if args.timings else "",
                })
                rows.append(row)
                series.setdefault((sch, nu), ([], []))
                series[(sch, nu)][0].append(h)
                series[(sch, nu)][1].append(report)

    _write_csv(outdir / f"case_{case}.csv", rows)
    slope_rows = _write_slopes(case, series, outdir)
    for nu in args.nu:
        _plot_case(case, nu, series, outdir)
    return rows, slope_rows


def _write_csv(path, rows):
    with open(path, "w", newline="\n") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _write_slopes(case, series, outdir):
    header = ["case", "scheme", "nu", "slope_linfL2_u", "slope_l2H10_u", "slope_l2L2_p"]
    rows = []
    for (sch, nu), (hs, reports) in sorted(series.items()):
        if len(hs) < 3:
            continue
        row = {"case": case, "scheme": sch, "nu": _fmt(nu)}
        for key, attr in [
            ("slope_linfL2_u", "e_linf_l2_u"),
            ("slope_l2H10_u", "e_l2_h1_u"),
            ("slope_l2L2_p", "e_l2_l2_p"),
        ]:
            vals = [getattr(r, attr) for r in reports]
            try:
                s, _ = metrics.fit_order(hs, vals)
                row[key] = f"{s:.4f}"
            except ValueError:
                row[key] = ""
        rows.append(row)
    if rows:
        with open(outdir / f"case_{case}_slopes.csv", "w", newline="\n") as fh:
            writer = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    return rows


def _plot_case(case, nu, series, outdir):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 6))
    markers = {"E_linfL2_u": "o", "E_l2H10_u": "s", "E_l2L2_p": "^"}
    any_data = False
    for (sch, nu_s), (hs, reports) in sorted(series.items()):
        if nu_s != nu or not hs:
            continue
        for label, attr in [
            ("E_linfL2_u", "e_linf_l2_u"),
            ("E_l2H10_u", "e_l2_h1_u"),
            ("E_l2L2_p", "e_l2_l2_p"),
        ]:
            vals = [getattr(r, attr) for r in reports]
            if any(v <= 0 or not np.isfinite(v) for v in vals):
                continue
            any_data = True
            txt = f"{sch} {label}"
            if len(hs) >= 3:
                s, _ = metrics.fit_order(hs, vals)
                txt += f" (slope {s:.2f})"
            ax.loglog(hs, vals, marker=markers[label], label=txt)
    if not any_data:
        plt.close(fig)
        return
    ax.set_xlabel("h")
    ax.set_ylabel("relative error")
    ax.set_title(f"case {case}, nu={nu:g}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.savefig(outdir / f"case_{case}_nu{nu:g}.svg", metadata={"Date": None})
    plt.close(fig)


def _dump_field_grid(path, fld, samples=65):
    xs = np.linspace(0.0, 1.0, samples)
    with open(path, "w", newline="\n") as fh:
        hint = None
        for y in xs:
            for x in xs:
                e, lam = fld.space.mesh.locate_point((x, y), hint=hint)
                hint = e
                v = np.atleast_1d(fld.evaluate(e, lam))
                vals = " ".join(f"{t:.12g}" for t in v)
                fh.write(f"{x:.6g} {y:.6g} {vals}\n")


def run_ex42_case(args, outdir):
    problem = problems.example42()
    n = args.N[0] if args.N else 16
    dt = args.dt if args.dt is not None else 0.01
    delta0 = args.delta0 if args.delta0 is not None else 1e-3
    t_final = args.T if args.T is not None else 40.0
    schemes = args.schemes or ["NS_TH", "NS_PS"]

    header = ["case", "scheme", "k", "N", "h", "dt", "nu", "delta0", "Cp",
              "final_u_l2", "final_p_err_l2", "wall_seconds"]
    rows = []
    for sch in schemes:
        cfg = scheme.RunConfig(
            scheme=sch, N=n, dt=dt, T=t_final, nu=problem.nu, k=args.k,
            delta0=delta0 if sch.endswith("PS") else None,
            composite_mode=args.composite, solver=args.solver, strict=args.strict,
        )
        start = time.perf_counter()
        final = None
        for state in scheme.run(cfg, problem):
            final = state
        wall = time.perf_counter() - start
        u_l2 = metrics.l2_norm(final.u)
        p_err = metrics.quadrature_l2_error(
            final.p, lambda x, y: problem.exact_p(x, y, t_final)
        )
        for comp, tag in [(final.u, "u"), (final.p, "p")]:
            _dump_field_grid(outdir / f"ex42_{sch}_{tag}.txt", comp)
        rows.append({
            "case": "ex42", "scheme": sch, "k": args.k, "N": n,
            "h": _fmt(1.0 / n), "dt": _fmt(dt), "nu": _fmt(problem.nu),
            "delta0": _fmt(delta0 if sch.endswith("PS") else None), "Cp": "",
            "final_u_l2": _fmt(u_l2), "final_p_err_l2": _fmt(p_err),
            "wall_seconds": f"{wall:.3f}" if args.timings else "",
        })
    with open(outdir / "case_ex42.csv", "w", newline="\n") as fh:
        writer = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return rows


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.solver == "krylov":
        args.solver = "minres"
    outdir = args.out
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        probe = outdir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"output directory not writable: {exc}", file=sys.stderr)
        return 2

    if args.case == "ex42":
        rows = run_ex42_case(args, outdir)
    else:
        rows, _ = run_convergence_case(args.case, args, outdir)
    print(f"wrote {len(rows)} result rows to {outdir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

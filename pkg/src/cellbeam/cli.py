"""Command-line front end.

Subcommands: ``gen`` (draw and store a scenario), ``feas`` (feasibility
report for given or default beamformers), ``solve`` (full pipeline with a
summary JSON), ``sim`` (one protocol run to a CSV trace plus manifest), and
``experiment`` (the named CSV recipes).  ``solve`` exit status: 0 converged
and feasible, 2 dual iteration did not converge, 3 targets infeasible.

The default output directory for experiments honors CELLBEAM_OUT_DIR.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .asyncsim import ScheduleSpec, run
from .channel import LayoutSpec, generate_scenario, load_scenario, save_scenario
from .experiments import EXPERIMENTS, run_experiment
from .feasibility import InfeasibleSystemError, build_coupling, is_feasible, k_matrix_test, min_power_vector
from .pipeline import MODES, solve_scenario

EXIT_OK = 0
EXIT_NO_CONVERGENCE = 2
EXIT_INFEASIBLE = 3


def _add_scenario_arg(p):
    p.add_argument("scenario", help="scenario JSON file")


def _build_parser():
    parser = argparse.ArgumentParser(prog="cellbeam",
                                     description="multi-cell minimum-power beamforming toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random scenario file")
    g.add_argument("--layout", default="two-cell-line",
                   choices=["two-cell-line", "square-corners", "hexagonal-7"])
    g.add_argument("--cells", type=int, default=None,
                   help="cell count; must match the layout (defaults to it)")
    g.add_argument("--users", type=int, default=2, help="users per cell")
    g.add_argument("--antennas", type=int, default=4, help="antennas per BS")
    g.add_argument("--gamma", type=float, default=0.1, help="SINR target (linear)")
    g.add_argument("--sigma2", type=float, default=1e-12, help="noise variance (W)")
    g.add_argument("--spacing", type=float, default=2000.0, help="inter-BS distance")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    f = sub.add_parser("feas", help="feasibility report for a scenario")
    _add_scenario_arg(f)
    f.add_argument("--beamformers", default=None,
                   help="JSON file with per-user beamformers as [re, im] pairs; "
                        "defaults to each user's strongest own-link direction")

    so = sub.add_parser("solve", help="solve the minimum-power problem")
    _add_scenario_arg(so)
    so.add_argument("--tol", type=float, default=1e-5)
    so.add_argument("--max-iter", type=int, default=10000)
    so.add_argument("--mode", default="multi-cell", choices=list(MODES))
    so.add_argument("--out", default=None, help="write the summary JSON here instead of stdout")

    si = sub.add_parser("sim", help="run the distributed protocol simulator")
    _add_scenario_arg(si)
    si.add_argument("--p-fail", type=float, default=0.0)
    si.add_argument("--d-max", type=int, default=0)
    si.add_argument("--t-dc", type=int, default=1)
    si.add_argument("--t-bf", type=int, default=1)
    si.add_argument("--t-pc", type=int, default=1)
    si.add_argument("--horizon", type=int, default=200)
    si.add_argument("--seed", type=int, default=0)
    si.add_argument("--mode", default="multi-cell", choices=list(MODES))
    si.add_argument("--neighbor-threshold", type=float, default=0.0)
    si.add_argument("--out", required=True, help="trace CSV path; manifest goes beside it")

    e = sub.add_parser("experiment", help="run a named experiment recipe")
    e.add_argument("name", choices=sorted(EXPERIMENTS))
    e.add_argument("--out-dir", default=os.environ.get("CELLBEAM_OUT_DIR", "."))
    e.add_argument("--seeds", type=int, default=None,
                   help="Monte-Carlo draws for the averaging recipes")
    e.add_argument("--jobs", type=int, default=1)
    return parser


def _default_beamformers(s):
    w = np.empty((s.n_users, s.N), dtype=np.complex128)
    for m in range(s.M):
        for i in range(s.K):
            vals, vecs = np.linalg.eigh(s.R[m, m, i])
            w[s.user_index(m, i)] = vecs[:, -1]
    return w


def _load_beamformers(path, s):
    with open(path, "r", encoding="utf-8") as fh:
        data = np.asarray(json.load(fh), dtype=float)
    if data.shape != (s.n_users, s.N, 2):
        raise ValueError(f"beamformer file must have shape {(s.n_users, s.N, 2)}, got {data.shape}")
    w = data[..., 0] + 1j * data[..., 1]
    norms = np.linalg.norm(w, axis=1)
    if not np.allclose(norms, 1.0, atol=1e-9):
        raise ValueError("beamformers must be unit norm")
    return w


def _cmd_gen(args):
    layout = LayoutSpec(kind=args.layout, spacing=args.spacing)
    cells = layout.cells if args.cells is None else args.cells
    s = generate_scenario(layout, cells, args.users, args.antennas,
                          args.gamma, args.sigma2, args.seed)
    save_scenario(s, args.out)
    print(f"wrote {args.out}: M={s.M} K={s.K} N={s.N} seed={s.seed}")
    return EXIT_OK


def _cmd_feas(args):
    s = load_scenario(args.scenario)
    w = _load_beamformers(args.beamformers, s) if args.beamformers else _default_beamformers(s)
    cs = build_coupling(s, w)
    res = is_feasible(cs)
    report = {
        "rho": res.rho,
        "feasible": res.feasible,
        "marginal": res.marginal,
        "k_matrix": k_matrix_test(cs),
        "min_power": None,
    }
    report["k_matrix_agrees"] = report["k_matrix"] == res.feasible or res.marginal
    if res.feasible:
        report["min_power"] = min_power_vector(cs).tolist()
    json.dump(report, sys.stdout, indent=2)
    print()
    return EXIT_OK


def _cmd_solve(args):
    s = load_scenario(args.scenario)
    sol = solve_scenario(s, mode=args.mode, tol=args.tol, max_iter=args.max_iter)
    summary = {
        "mode": sol.mode,
        "converged": sol.converged,
        "feasible": sol.feasible,
        "rho": sol.rho,
        "iterations": sol.dual_report.iterations,
        "total_power": sol.total_power,
        "dual_objective": sol.dual_objective,
        "gap_rel": sol.gap_rel,
        "lambda": sol.lambda_star.tolist(),
        "power": None if sol.power is None else sol.power.tolist(),
        "sinr_margins": None if sol.sinr_margin_rel is None else sol.sinr_margin_rel.tolist(),
    }
    text = json.dumps(summary, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if not sol.converged:
        return EXIT_NO_CONVERGENCE
    if not sol.feasible:
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_sim(args):
    s = load_scenario(args.scenario)
    sched = ScheduleSpec(t_dc=args.t_dc, t_bf=args.t_bf, t_pc=args.t_pc,
                         p_fail=args.p_fail, d_max=args.d_max,
                         horizon=args.horizon, seed=args.seed)
    trace = run(s, sched, mode=args.mode, neighbor_threshold=args.neighbor_threshold)
    trace.to_csv(args.out)
    manifest_path = args.out + ".manifest.json"
    trace.save_manifest(manifest_path)
    print(f"wrote {args.out} and {manifest_path}")
    return EXIT_OK


def _cmd_experiment(args):
    run_experiment(args.name, args.out_dir, seeds=args.seeds, jobs=args.jobs)
    print(f"experiment {args.name} written under {args.out_dir}")
    return EXIT_OK


_HANDLERS = {
    "gen": _cmd_gen,
    "feas": _cmd_feas,
    "solve": _cmd_solve,
    "sim": _cmd_sim,
    "experiment": _cmd_experiment,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (OSError, ValueError, InfeasibleSystemError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

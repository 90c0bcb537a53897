"""Named experiment recipes emitting plot-ready CSV.

Each recipe reproduces one simulation study: dual-iteration convergence
traces (synchronous and asynchronous), the seven-cell variant, total-power
convergence under update failures, the iteration-count-versus-failure-rate
table, and the single-cell versus multi-cell power comparison.  Recipes are
deterministic for fixed seed inputs, fan independent runs over an optional
process pool, and aggregate in seed order.
"""

import csv
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .asyncsim import ScheduleSpec, convergence_tick, run
from .channel import LayoutSpec, generate_scenario, with_gamma
from .dualsolve import DualWorkspace, sync_solve
from .pipeline import solve_scenario

__all__ = [
    "EXPERIMENTS",
    "fig_baseline",
    "fig_dual_async",
    "fig_dual_sync",
    "fig_hex7",
    "fig_total_power",
    "run_experiment",
    "table_iterations",
]

# Shared defaults: four antennas, thermal noise 1e-12 W, target SINR 0.1.
N_ANT = 4
SIGMA2 = 1e-12
GAMMA = 0.1

CONVERGENCE_TOL = 1e-5
# DC iterations needed at p_fail=0.5 stay well under this in practice.
ITER_HORIZON = 1500


def _two_cell(seed):
    return generate_scenario(LayoutSpec("two-cell-line"), 2, 2, N_ANT, GAMMA, SIGMA2, seed)


def _square(seed, users):
    return generate_scenario(LayoutSpec("square-corners"), 4, users, N_ANT, GAMMA, SIGMA2, seed)


def _write_csv(path, header, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _pmap(fn, items, jobs):
    if jobs <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _dual_trajectories(s, starts, max_iter=400):
    """Synchronous iterate paths from several starts, plus the fixed point."""
    ws = DualWorkspace(s)
    ref = sync_solve(ws, tol=1e-9, max_iter=20000)
    paths = []
    for lam0 in starts:
        lam = np.full(s.n_users, float(lam0))
        path = [lam.copy()]
        for _ in range(max_iter):
            lam = ws.dual_map(lam)
            path.append(lam.copy())
            if np.linalg.norm(path[-1] - path[-2]) <= 1e-9:
                break
        paths.append(np.asarray(path))
    return paths, ref.lambda_star


def fig_dual_sync(out_dir, scenario_seed=1, starts=(40.0, 25.0)):
    """Synchronous dual-iteration traces for a two-cell network."""
    s = _two_cell(scenario_seed)
    paths, star = _dual_trajectories(s, starts)
    rows = []
    for case, path in enumerate(paths, start=1):
        for t, lam in enumerate(path):
            rows.append([case, starts[case - 1], t] + [repr(x) for x in lam])
    header = ["case", "start", "iteration"] + [f"lambda_{u}" for u in range(s.n_users)]
    path = os.path.join(out_dir, "fig_dual_sync.csv")
    _write_csv(path, header, rows)
    _write_csv(os.path.join(out_dir, "fig_dual_sync_star.csv"),
               [f"lambda_{u}" for u in range(s.n_users)], [[repr(x) for x in star]])
    return path


def fig_dual_async(out_dir, scenario_seed=1, starts=(40.0, 25.0), p_fail=0.5,
                   sim_seed=0, horizon=400):
    """Asynchronous dual-iteration traces (update failures, no extra delay)."""
    s = _two_cell(scenario_seed)
    _, star = _dual_trajectories(s, starts=())
    sched = ScheduleSpec(t_bf=horizon + 1, t_pc=horizon + 1, p_fail=p_fail,
                         horizon=horizon, seed=sim_seed)
    rows = []
    for case, lam0 in enumerate(starts, start=1):
        trace = run(s, sched, lam0=np.full(s.n_users, float(lam0)))
        for k, t in enumerate(trace.dc_ticks):
            rows.append([case, lam0, int(t)] + [repr(x) for x in trace.lam_dc[k]])
    header = ["case", "start", "iteration"] + [f"lambda_{u}" for u in range(s.n_users)]
    path = os.path.join(out_dir, "fig_dual_async.csv")
    _write_csv(path, header, rows)
    _write_csv(os.path.join(out_dir, "fig_dual_async_star.csv"),
               [f"lambda_{u}" for u in range(s.n_users)], [[repr(x) for x in star]])
    return path


def fig_hex7(out_dir, scenario_seed=1, p_fail=0.5, sim_seed=0, horizon=400):
    """Asynchronous dual traces on the seven-cell hexagonal layout."""
    s = generate_scenario(LayoutSpec("hexagonal-7"), 7, 2, N_ANT, GAMMA, SIGMA2, scenario_seed)
    sched = ScheduleSpec(t_bf=horizon + 1, t_pc=horizon + 1, p_fail=p_fail,
                         horizon=horizon, seed=sim_seed)
    trace = run(s, sched)
    header = ["iteration"] + [f"lambda_{u}" for u in range(s.n_users)]
    rows = [[int(t)] + [repr(x) for x in trace.lam_dc[k]]
            for k, t in enumerate(trace.dc_ticks)]
    path = os.path.join(out_dir, "fig_hex7.csv")
    _write_csv(path, header, rows)
    return path


def fig_total_power(out_dir, scenario_seed=1, p_grid=(0.0, 0.3, 0.5), sim_seed=0,
                    horizon=250, users=4):
    """Total transmit power over time under different failure rates.

    The full protocol runs (dual, beamforming and power agents every tick);
    the benchmark column is the converged optimum of the same scenario.
    """
    s = _square(scenario_seed, users)
    sol = solve_scenario(s)
    benchmark = sol.total_power if sol.ok else float("nan")
    rows = []
    for p_fail in p_grid:
        sched = ScheduleSpec(p_fail=p_fail, horizon=horizon, seed=sim_seed)
        trace = run(s, sched)
        for k, t in enumerate(trace.ticks):
            rows.append([p_fail, int(t), repr(float(trace.total_power[k])), repr(benchmark)])
    path = os.path.join(out_dir, "fig_total_power.csv")
    _write_csv(path, ["p_fail", "tick", "total_power", "benchmark"], rows)
    return path


def _iterations_one_seed(args):
    seed, p_grid, users, tol, horizon = args
    s = _square(seed, users)
    counts = []
    for k, p_fail in enumerate(p_grid):
        sched = ScheduleSpec(t_bf=horizon + 1, t_pc=horizon + 1, p_fail=p_fail,
                             horizon=horizon, seed=10_000 + 7 * seed + k)
        trace = run(s, sched, stop_tol=tol, stop_streak=10)
        tick = convergence_tick(trace, tol)
        counts.append(tick if tick is not None else np.nan)
    return counts


def table_iterations(out_dir=None, seeds=100, p_grid=(0.0, 0.1, 0.2, 0.3, 0.4, 0.5),
                     users=4, tol=CONVERGENCE_TOL, horizon=ITER_HORIZON, jobs=1,
                     base_seed=0):
    """Mean DC iterations to convergence versus update-failure probability.

    The same scenario seeds are reused across the failure grid so the sweep
    is paired.  Returns (p_grid, mean_iterations, per_seed_counts); writes
    the summary CSV when ``out_dir`` is given.
    """
    args = [(base_seed + k, tuple(p_grid), users, tol, horizon) for k in range(seeds)]
    counts = np.asarray(_pmap(_iterations_one_seed, args, jobs), dtype=float)
    means = counts.mean(axis=0)
    if out_dir is not None:
        rows = [[p, repr(float(mu)), seeds] for p, mu in zip(p_grid, means)]
        _write_csv(os.path.join(out_dir, "table_iterations.csv"),
                   ["p_fail", "mean_iterations", "seeds"], rows)
    return np.asarray(p_grid, dtype=float), means, counts


def _baseline_one_seed(args):
    seed, users, gammas, tol = args
    s = _square(seed, users)
    totals = {}
    for g in gammas:
        sg = with_gamma(s, g)
        multi = solve_scenario(sg, mode="multi-cell", tol=tol)
        single = solve_scenario(sg, mode="single-cell", tol=tol)
        if not (multi.ok and single.ok):
            return None  # setup infeasible under one of the modes: discard
        totals[g] = (multi.total_power, single.total_power)
    return totals


def fig_baseline(out_dir=None, seeds=100, users_grid=(2, 3),
                 gammas=(0.05, 0.1, 0.2, 0.3, 0.5), tol=CONVERGENCE_TOL, jobs=1,
                 base_seed=0):
    """Average total power, multi-cell versus single-cell planning.

    Draws are kept only when every swept target is feasible under both
    modes, so the two averages are over the same setups.  Returns a dict
    {users: {"gammas", "multi", "single", "kept"}}; writes the CSV when
    ``out_dir`` is given.
    """
    results = {}
    rows = []
    for users in users_grid:
        args = [(base_seed + k, users, tuple(gammas), tol) for k in range(seeds)]
        per_seed = [r for r in _pmap(_baseline_one_seed, args, jobs) if r is not None]
        if not per_seed:
            raise RuntimeError(f"no feasible draws for K={users}")
        multi = np.array([[r[g][0] for g in gammas] for r in per_seed])
        single = np.array([[r[g][1] for g in gammas] for r in per_seed])
        results[users] = {
            "gammas": np.asarray(gammas, dtype=float),
            "multi": multi.mean(axis=0),
            "single": single.mean(axis=0),
            "kept": len(per_seed),
        }
        for j, g in enumerate(gammas):
            rows.append([users, g, "multi-cell", repr(float(multi.mean(axis=0)[j])), len(per_seed)])
            rows.append([users, g, "single-cell", repr(float(single.mean(axis=0)[j])), len(per_seed)])
    if out_dir is not None:
        _write_csv(os.path.join(out_dir, "fig_baseline.csv"),
                   ["users_per_cell", "gamma", "mode", "mean_total_power", "draws"], rows)
    return results


EXPERIMENTS = {
    "fig-dual-sync": fig_dual_sync,
    "fig-dual-async": fig_dual_async,
    "fig-hex7": fig_hex7,
    "fig-total-power": fig_total_power,
    "table-iterations": table_iterations,
    "fig-baseline": fig_baseline,
}


def run_experiment(name, out_dir, seeds=None, jobs=1):
    """Dispatch a named recipe with its CSV output directory."""
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; expected one of {sorted(EXPERIMENTS)}")
    if name == "table-iterations":
        return table_iterations(out_dir, seeds=seeds or 100, jobs=jobs)
    if name == "fig-baseline":
        return fig_baseline(out_dir, seeds=seeds or 100, jobs=jobs)
    return EXPERIMENTS[name](out_dir)

"""Virtual-time simulator of the distributed beamforming protocol.

Four agent kinds advance on a shared integer clock: per-BS dual-computation
agents (period ``t_dc``), per-BS beamforming agents (``t_bf``), per-user
power agents (``t_pc``), and a backhaul that carries dual variables between
BSs with per-message integer delay in [0, d_max].  Channel statistics are
fixed for the whole run (they vary on a far slower timescale).

Asynchrony is modeled logically rather than with threads: at every DC tick
each dual variable independently skips its update with probability
``p_fail``, and each BS computes from its own backhaul view, i.e. the last
delivered (possibly stale) remote values.  A value consumed at tick t was
computed no earlier than t - t_dc - d_max once the backhaul is warm, which
realizes bounded staleness; for any p_fail < 1 the iteration still reaches
the unique fixed point of the synchronous map.

Every run is a pure function of (scenario, schedule, seed): traces are
bit-identical across repetitions.
"""

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .channel import scenario_digest
from .dualsolve import DualWorkspace
from .pipeline import MODES
from .primal import beamform, build_E, gain_table, power_map_arrays, single_cell_mode
from . import __version__

__all__ = [
    "ScheduleSpec",
    "SimTrace",
    "convergence_tick",
    "interference_neighborhood",
    "run",
]

TRACE_COLUMNS = ("tick", "agent", "event")


@dataclass(frozen=True)
class ScheduleSpec:
    """Agent periods (in ticks), backhaul model and run length."""

    t_dc: int = 1
    t_bf: int = 1
    t_pc: int = 1
    p_fail: float = 0.0  # per dual variable per DC tick
    d_max: int = 0  # max extra delivery delay, ticks
    horizon: int = 200
    seed: int = 0

    def __post_init__(self):
        if min(self.t_dc, self.t_bf, self.t_pc) < 1:
            raise ValueError("agent periods must be at least 1 tick")
        if not 0.0 <= self.p_fail < 1.0:
            raise ValueError("p_fail must lie in [0, 1): a variable that never "
                             "updates cannot converge")
        if self.d_max < 0:
            raise ValueError("d_max must be nonnegative")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1 tick")


@dataclass
class SimTrace:
    """Per-tick record of a simulation run."""

    ticks: np.ndarray  # (T,) int
    lam: np.ndarray  # (T, U) multiplier vector after each tick
    total_power: np.ndarray  # (T,)
    sinr: np.ndarray  # (T, U)
    dual_objective: np.ndarray  # (T,)
    dc_ticks: np.ndarray  # (D+1,) tick of each DC snapshot; entry 0 is the start
    lam_dc: np.ndarray  # (D+1, U) multiplier snapshots at DC ticks
    events: list  # (tick, agent, kind)
    schedule: ScheduleSpec
    mode: str
    seed: int
    scenario_hash: str
    sinr_target: np.ndarray
    stopped_early_at: int | None = None

    @property
    def n_users(self):
        return self.lam.shape[1]

    def min_sinr_margin(self, t_index):
        return float((self.sinr[t_index] / self.sinr_target - 1.0).min())

    def manifest(self):
        sched = asdict(self.schedule)
        return {
            "scenario_sha256": self.scenario_hash,
            "schedule": sched,
            "mode": self.mode,
            "seed": self.seed,
            "version": __version__,
            "ticks_recorded": int(len(self.ticks)),
            "stopped_early_at": self.stopped_early_at,
            "columns": list(TRACE_COLUMNS)
            + [f"lambda_{u}" for u in range(self.n_users)]
            + ["total_power", "min_sinr_margin"],
        }

    def to_csv(self, path):
        """One row per recorded event, with the state at that tick."""
        index = {int(t): k for k, t in enumerate(self.ticks)}
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.manifest()["columns"])
            for tick, agent, kind in self.events:
                k = index[tick]
                writer.writerow(
                    [tick, agent, kind]
                    + [repr(x) for x in self.lam[k]]
                    + [repr(float(self.total_power[k])), repr(self.min_sinr_margin(k))]
                )

    def save_manifest(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.manifest(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def interference_neighborhood(s, threshold):
    """Directed coordination graph over BSs.

    ``adj[m, n]`` is True (m != n) iff some user of cell n receives power
    from BS m above ``threshold`` times the largest link trace, i.e. BS m's
    planning needs that user's dual variable and cell n must send it.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    traces = np.einsum("nmiaa->nmi", s.R).real
    max_trace = float(traces.max())
    adj = np.zeros((s.M, s.M), dtype=bool)
    for m in range(s.M):
        for n in range(s.M):
            if m != n and bool((traces[m, n] > threshold * max_trace).any()):
                adj[m, n] = True
    return adj


def _record_state(k, t, lam, p, gains, sigma2, sinr_out, ticks, lam_hist, power_hist, obj_hist):
    ticks[k] = t
    lam_hist[k] = lam
    power_hist[k] = p.sum()
    received = p @ gains
    own = p * np.diag(gains)
    sinr_out[k] = own / (received - own + sigma2)
    obj_hist[k] = lam @ sigma2


def run(s, sched, mode="multi-cell", lam0=None, neighbor_threshold=0.0,
        stop_tol=None, stop_streak=10):
    """Simulate the protocol and return a SimTrace.

    ``stop_tol`` optionally halts the run once the DC step norm has stayed
    at or below it for ``stop_streak`` consecutive DC ticks (the recorded
    trace is a prefix of the full one).  Infeasible scenarios produce
    divergence in the trace, never an exception.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    planning = single_cell_mode(s) if mode == "single-cell" else s
    ws = DualWorkspace(planning)
    u_count = s.n_users
    needs = interference_neighborhood(planning, neighbor_threshold)
    rng = np.random.default_rng(sched.seed)

    cell_users = [list(range(m * s.K, (m + 1) * s.K)) for m in range(s.M)]
    lam = np.zeros(u_count) if lam0 is None else np.asarray(lam0, dtype=float).reshape(-1).copy()
    if (lam < 0).any():
        raise ValueError("lam0 must be nonnegative")

    # Backhaul view of each BS: last delivered value and its origin tick per
    # remote dual.  Start values are the shared initial lambda (origin 0).
    view_val = np.tile(lam, (s.M, 1))
    view_origin = np.zeros((s.M, u_count), dtype=int)
    pending = {}  # deliver_tick -> list of (receiver, user, value, origin)

    # Non-neighbor duals never traverse the backhaul and enter the map as 0.
    visible = np.zeros((s.M, u_count), dtype=bool)
    for m in range(s.M):
        for u in range(u_count):
            n = u // s.K
            visible[m, u] = (n == m) or needs[m, n]

    horizon = sched.horizon
    ticks = np.empty(horizon, dtype=int)
    lam_hist = np.empty((horizon, u_count))
    power_hist = np.empty(horizon)
    sinr_hist = np.empty((horizon, u_count))
    obj_hist = np.empty(horizon)
    events = []
    dc_ticks = [0]
    lam_dc = [lam.copy()]

    w = np.empty((u_count, s.N), dtype=np.complex128)
    for m in range(s.M):
        mview = np.where(visible[m], view_val[m], 0.0)
        mview[cell_users[m]] = lam[cell_users[m]]
        for u in cell_users[m]:
            w[u] = beamform(build_E(planning, mview, m, u % s.K))
    gains = gain_table(s, w)
    sigma2 = s.flat_sigma2
    gamma = s.flat_gamma
    p = np.zeros(u_count)

    streak = 0
    stopped_at = None
    recorded = 0
    for t in range(1, horizon + 1):
        # backhaul deliveries due by this tick; stale (superseded) ones drop
        for receiver, u, value, origin in pending.pop(t, ()):
            if origin > view_origin[receiver, u]:
                view_val[receiver, u] = value
                view_origin[receiver, u] = origin
            else:
                events.append((t, f"bh:{receiver}", "msg-stale-drop"))

        if t % sched.t_dc == 0:
            lam_before = lam.copy()
            views = []
            for m in range(s.M):
                mview = np.where(visible[m], view_val[m], 0.0)
                mview[cell_users[m]] = lam_before[cell_users[m]]
                views.append(mview)
            for m in range(s.M):
                draws = rng.random(s.K)
                mask = np.zeros(u_count, dtype=np.uint8)
                for i, u in enumerate(cell_users[m]):
                    if draws[i] >= sched.p_fail:
                        mask[u] = 1
                        events.append((t, f"dc:{m}:{i}", "dc-update"))
                    else:
                        events.append((t, f"dc:{m}:{i}", "dc-skip"))
                if mask.any():
                    out = lam.copy()
                    ws.dual_map(views[m], mask=mask, out=out)
                    for u in cell_users[m]:
                        if mask[u]:
                            lam[u] = out[u]
            # each BS sends fresh duals to the BSs that need them
            for m in range(s.M):
                for n in range(s.M):
                    if n == m or not needs[n, m]:
                        continue
                    for u in cell_users[m]:
                        delay = int(rng.integers(0, sched.d_max + 1)) if sched.d_max else 0
                        pending.setdefault(t + delay + 1, []).append((n, u, lam[u], t))
            dc_ticks.append(t)
            lam_dc.append(lam.copy())
            if stop_tol is not None:
                step = float(np.linalg.norm(lam - lam_before))
                streak = streak + 1 if step <= stop_tol else 0

        if t % sched.t_bf == 0:
            for m in range(s.M):
                mview = np.where(visible[m], view_val[m], 0.0)
                mview[cell_users[m]] = lam[cell_users[m]]
                for u in cell_users[m]:
                    w[u] = beamform(build_E(planning, mview, m, u % s.K))
                events.append((t, f"bf:{m}", "bf-update"))
            gains = gain_table(s, w)

        if t % sched.t_pc == 0:
            p = power_map_arrays(gamma, sigma2, gains, p)
            for u in range(u_count):
                events.append((t, f"pc:{u // s.K}:{u % s.K}", "pc-update"))

        _record_state(recorded, t, lam, p, gains, sigma2, sinr_hist, ticks,
                      lam_hist, power_hist, obj_hist)
        recorded += 1

        if stop_tol is not None and streak >= stop_streak:
            stopped_at = t
            break

    return SimTrace(
        ticks=ticks[:recorded].copy(),
        lam=lam_hist[:recorded].copy(),
        total_power=power_hist[:recorded].copy(),
        sinr=sinr_hist[:recorded].copy(),
        dual_objective=obj_hist[:recorded].copy(),
        dc_ticks=np.asarray(dc_ticks, dtype=int),
        lam_dc=np.asarray(lam_dc),
        events=events,
        schedule=sched,
        mode=mode,
        seed=sched.seed,
        scenario_hash=scenario_digest(s),
        sinr_target=gamma.copy(),
        stopped_early_at=stopped_at,
    )


def convergence_tick(trace, tol):
    """First DC tick from which every later DC step stays within ``tol``.

    Steps are measured between consecutive multiplier snapshots taken at DC
    ticks, starting from the initial vector.  Returns the tick as an int, or
    None when the recorded window never settles.
    """
    snaps = trace.lam_dc
    if len(snaps) < 2:
        return None
    deltas = np.linalg.norm(np.diff(snaps, axis=0), axis=1)
    ok = deltas <= tol
    if not ok[-1]:
        return None
    # last index where the criterion fails, +1 -> first all-quiet DC event
    bad = np.flatnonzero(~ok)
    first = int(bad[-1]) + 2 if bad.size else 1
    if first > len(deltas):
        return None
    return int(trace.dc_ticks[first])

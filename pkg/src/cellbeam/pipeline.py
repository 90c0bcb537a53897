"""End-to-end solve: dual fixed point, beamformers, exact powers.

Chains the dual iteration, beamformer recovery and the linear power solve
into one call, reporting the strong-duality gap and per-user SINR margins.
``mode="single-cell"`` runs the dual/beamforming stage on the per-cell view
(inter-cell interference ignored during planning) while powers and SINRs are
always evaluated against the true network.
"""

from dataclasses import dataclass, field

import numpy as np

from .dualsolve import DEFAULT_MAX_ITER, DEFAULT_TOL, DualWorkspace, sync_solve
from .feasibility import build_coupling, is_feasible, min_power_vector
from .primal import achieved_sinr, beamform_all, single_cell_mode

MODES = ("multi-cell", "single-cell")

__all__ = ["MODES", "Solution", "solve_scenario"]


@dataclass
class Solution:
    mode: str
    converged: bool
    feasible: bool
    rho: float
    lambda_star: np.ndarray
    beamformers: np.ndarray  # (U, N)
    power: np.ndarray | None  # (U,), None when infeasible
    total_power: float | None
    dual_objective: float
    gap_rel: float | None  # |sum p - dual| / sum p, multi-cell only
    sinr: np.ndarray | None
    sinr_margin_rel: np.ndarray | None  # sinr / target - 1
    dual_report: object = field(repr=False, default=None)

    @property
    def ok(self):
        return self.converged and self.feasible


def solve_scenario(s, mode="multi-cell", tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                   lam0=None):
    """Solve a scenario end to end and summarize the result.

    Returns a Solution; infeasibility and dual non-convergence are reported
    through its flags rather than raised, since both are legitimate outcomes
    for hard target sets.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    planning = single_cell_mode(s) if mode == "single-cell" else s
    report = sync_solve(DualWorkspace(planning), lam0=lam0, tol=tol, max_iter=max_iter)
    w = beamform_all(planning, report.lambda_star)

    coupling = build_coupling(s, w)
    feas = is_feasible(coupling)
    feasible = bool(report.converged and feas.feasible)

    power = total = sinr = margins = None
    if feasible:
        power = min_power_vector(coupling)
        total = float(power.sum())
        sinr = achieved_sinr(s, w, power)
        margins = sinr / s.flat_gamma - 1.0

    gap = None
    if mode == "multi-cell" and feasible and total:
        gap = abs(total - report.objective) / total

    return Solution(
        mode=mode,
        converged=report.converged,
        feasible=feasible,
        rho=feas.rho,
        lambda_star=report.lambda_star,
        beamformers=w,
        power=power,
        total_power=total,
        dual_objective=report.objective,
        gap_rel=gap,
        sinr=sinr,
        sinr_margin_rel=margins,
        dual_report=report,
    )

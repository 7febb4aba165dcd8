"""Quasi-static collapse of a deployed grid by lifting the anchor weight.

The anchor weight lambda is decreased linearly toward zero; after every
decrement the grid is relaxed to a local energy minimum. If consecutive
equilibria jump too far, the decrement is rejected and the rate of decrease
is lowered. Traced node positions across all accepted steps form a set of
deployment paths sharing one time grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, InvalidInputError, StalledCollapseError
from .geometry import TimedPath
from .rod import (
    GridModel,
    RodState,
    default_joint_weight,
    initial_state,
    refreshed_frames,
)

__all__ = [
    "CollapseSchedule",
    "TraceSet",
    "relax",
    "collapse",
    "reverse_for_deployment",
    "default_traced_nodes",
]


@dataclass(frozen=True)
class CollapseSchedule:
    """Rate control and inner-solver settings for one collapse run.

    jump_threshold is the mean vertex displacement (meters) allowed between
    consecutive equilibria; None picks 1% of the deployed bounding-box
    diagonal. w_joint=None picks the grid's default penalty weight.
    """

    lambda0: float
    dlambda: float
    jump_threshold: float | None = None
    rate_backoff: float = 0.5
    max_steps: int = 20000
    grad_tol: float = 1e-6
    max_inner_iters: int = 2000
    dlambda_min: float | None = None
    w_joint: float | None = None

    def __post_init__(self):
        if not self.lambda0 > 0.0:
            raise InvalidInputError("lambda0 must be positive")
        if not self.dlambda > 0.0:
            raise InvalidInputError("dlambda must be positive")
        if not 0.0 < self.rate_backoff < 1.0:
            raise InvalidInputError("rate_backoff must lie in (0, 1)")
        if self.jump_threshold is not None and not self.jump_threshold > 0.0:
            raise InvalidInputError("jump_threshold must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TraceSet:
    """Synchronized deformation paths c_j(t) sharing one time grid."""

    paths: list
    node_refs: list
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.paths) != len(self.node_refs):
            raise InvalidInputError("one node reference per path required")
        if self.paths:
            t0 = self.paths[0].times
            for p in self.paths[1:]:
                if p.times.shape != t0.shape or not np.array_equal(p.times, t0):
                    raise InvalidInputError("all paths must share an identical time grid")

    @property
    def times(self) -> np.ndarray:
        return self.paths[0].times

    @property
    def m(self) -> int:
        return len(self.paths)


def _bbox_diagonal(grid: GridModel) -> float:
    pts = np.vstack([p for p in grid.deployed_positions.values()])
    return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))


def _projected_grad_inf(grad: np.ndarray, dofs: np.ndarray, bounds_lo, bounds_hi) -> float:
    g = grad.copy()
    at_lo = (dofs <= bounds_lo) & (g > 0.0)
    at_hi = (dofs >= bounds_hi) & (g < 0.0)
    g[at_lo | at_hi] = 0.0
    return float(np.max(np.abs(g))) if g.size else 0.0


def relax(
    state: RodState,
    grid: GridModel,
    lam: float,
    w_joint: float | None = None,
    grad_tol: float = 1e-6,
    max_iters: int = 2000,
) -> RodState:
    """Minimize total energy at fixed lambda down to the gradient tolerance.

    Joint sliding coordinates are box-constrained to [0, 1]; the solver is
    a line-searched quasi-Newton descent (L-BFGS-B), so energy never
    increases. Raises ConvergenceError (carrying the last iterate) if the
    gradient tolerance is not reached within max_iters iterations.
    """
    if w_joint is None:
        w_joint = default_joint_weight(grid)
    engine = grid.engine
    engine.check_state(state)
    layout = engine.layout
    dofs0 = layout.pack(state)
    ref = {mid: np.asarray(state.ref_dirs[mid]) for mid in layout.member_ids}
    eval_flat = engine.value_and_grad_fn(lam, w_joint)

    lo = np.full(layout.size, -np.inf)
    hi = np.full(layout.size, np.inf)
    lo[layout.joint_slice] = 0.0
    hi[layout.joint_slice] = 1.0

    _, g0 = eval_flat(dofs0, ref)
    if _projected_grad_inf(g0, dofs0, lo, hi) < grad_tol:
        return state

    res = minimize(
        lambda d: eval_flat(d, ref),
        dofs0,
        jac=True,
        method="L-BFGS-B",
        bounds=list(zip(lo, hi)),
        options={"maxiter": max_iters, "gtol": grad_tol, "ftol": 0.0, "maxls": 60},
    )
    dofs = np.clip(res.x, lo, hi)
    _, g = eval_flat(dofs, ref)
    out = refreshed_frames(layout.unpack(dofs, state))
    pg = _projected_grad_inf(g, dofs, lo, hi)
    if pg >= grad_tol:
        raise ConvergenceError(
            f"inner solver stopped at projected gradient {pg:.3e} >= tol {grad_tol:.3e}",
            state=out,
        )
    return out


def default_traced_nodes(grid: GridModel) -> list:
    """All joint connection points, as (member id, vertex index) references."""
    nodes = []
    for j in grid.joints:
        c = grid.engine.consts[j.member_a]
        mid_arc = 0.5 * (j.hole_a[0] + j.hole_a[1])
        vidx = int(np.argmin(np.abs(c.cum_rest - mid_arc)))
        ref = (j.member_a, vidx)
        if ref not in nodes:
            nodes.append(ref)
    return nodes


def _all_positions(state: RodState, member_ids) -> np.ndarray:
    return np.vstack([state.positions[mid] for mid in member_ids])


def collapse(
    grid: GridModel,
    schedule: CollapseSchedule,
    traced_nodes: list | None = None,
) -> TraceSet:
    """Collapse the deployed grid to the stress-free state, tracing nodes.

    Returns a TraceSet whose shared times are the normalized anchor-weight
    values t = lambda / lambda0 of the accepted steps, ordered so that t=0
    is the collapsed rest state and t=1 the deployed state.
    """
    if traced_nodes is None:
        traced_nodes = default_traced_nodes(grid)
    if not traced_nodes:
        raise InvalidInputError("no traced nodes: grid has no joints and none were given")
    for mid, vidx in traced_nodes:
        m = grid.member(mid)
        if not 0 <= vidx < m.n_vertices:
            raise InvalidInputError(f"traced node ({mid!r}, {vidx}) out of range")

    w_joint = schedule.w_joint if schedule.w_joint is not None else default_joint_weight(grid)
    delta = (
        schedule.jump_threshold
        if schedule.jump_threshold is not None
        else 0.01 * _bbox_diagonal(grid)
    )
    dlam_min = (
        schedule.dlambda_min if schedule.dlambda_min is not None else 1e-9 * schedule.lambda0
    )
    member_ids = [m.id for m in grid.members]

    def do_relax(s, lam):
        return relax(
            s, grid, lam, w_joint, grad_tol=schedule.grad_tol, max_iters=schedule.max_inner_iters
        )

    state = do_relax(initial_state(grid), schedule.lambda0)

    lam = schedule.lambda0
    dlam = schedule.dlambda
    lambdas = [lam]
    traces = [
        np.array([state.positions[mid][vidx] for mid, vidx in traced_nodes])
    ]
    steps = 0
    while lam > 0.0:
        steps += 1
        if steps > schedule.max_steps:
            raise StalledCollapseError(
                f"collapse exceeded max_steps={schedule.max_steps}",
                diagnostics={"lambda": lam, "dlambda": dlam, "accepted": len(lambdas)},
            )
        lam_try = max(lam - dlam, 0.0)
        prev_pts = _all_positions(state, member_ids)
        try:
            cand = do_relax(state, lam_try)
        except ConvergenceError:
            cand = None
        if cand is not None:
            mean_disp = float(
                np.mean(np.linalg.norm(_all_positions(cand, member_ids) - prev_pts, axis=1))
            )
        if cand is None or mean_disp > delta:
            dlam *= schedule.rate_backoff
            if dlam < dlam_min:
                raise StalledCollapseError(
                    "rate of decrease underflowed before reaching lambda = 0",
                    diagnostics={
                        "lambda": lam,
                        "dlambda": dlam,
                        "accepted": len(lambdas),
                        "jump_threshold": delta,
                    },
                )
            continue
        state = cand
        lam = lam_try
        lambdas.append(lam)
        traces.append(np.array([state.positions[mid][vidx] for mid, vidx in traced_nodes]))

    # deployed-first recording -> t ascending from collapsed (0) to deployed (1)
    times = np.array(lambdas[::-1]) / schedule.lambda0
    times[0], times[-1] = 0.0, 1.0
    positions = np.array(traces[::-1])  # (steps+1, n_nodes, 3)
    paths = [TimedPath(positions[:, k, :], times) for k in range(len(traced_nodes))]
    provenance = {
        "schedule": schedule.to_dict(),
        "jump_threshold": delta,
        "w_joint": w_joint,
        "accepted_steps": len(lambdas) - 1,
    }
    return TraceSet(paths=paths, node_refs=list(traced_nodes), provenance=provenance)


def reverse_for_deployment(trace: TraceSet) -> TraceSet:
    """Flip the time direction of every path, preserving the shared grid."""
    if not trace.paths:
        return TraceSet(paths=[], node_refs=[], provenance=dict(trace.provenance))
    times = (1.0 - trace.times)[::-1].copy()
    times[0], times[-1] = 0.0, 1.0
    paths = [TimedPath(p.vertices[::-1].copy(), times) for p in trace.paths]
    return TraceSet(paths=paths, node_refs=list(trace.node_refs), provenance=dict(trace.provenance))

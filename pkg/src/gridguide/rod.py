"""Discrete elastic rod energies for lamella members.

Each member is a polyline rod with per-edge twist angles measured against
stored reference directors. Energies (stretch, bend, twist), the anchor
penalty with global weight lambda, and the sliding-joint penalty are all
differentiable functions of the degrees of freedom; gradients come from
automatic differentiation and are validated against finite differences in
the test suite.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

import jax

jax.config.update("jax_enable_x64", True)
jax.config.update("jax_platform_name", "cpu")

import jax.numpy as jnp  # noqa: E402

from .errors import InvalidInputError, SingularConfigurationError  # noqa: E402
from .geometry import Polyline3  # noqa: E402

__all__ = [
    "CrossSection",
    "Member",
    "SlidingJoint",
    "Anchor",
    "RodState",
    "GridModel",
    "StateGrad",
    "DofLayout",
    "stretch_energy",
    "bend_energy",
    "twist_energy",
    "anchor_energy",
    "joint_energy",
    "total_energy",
    "initial_state",
    "default_joint_weight",
]


@dataclass(frozen=True)
class CrossSection:
    """Rectangular lamella cross-section: width w, thickness r, E, G."""

    width: float
    thickness: float
    youngs_modulus: float
    shear_modulus: float

    def __post_init__(self):
        w, r = self.width, self.thickness
        if not (w > 0.0 and r > 0.0):
            raise InvalidInputError("cross-section dimensions must be positive")
        if r > w:
            raise InvalidInputError("thickness must not exceed width")
        if not (self.youngs_modulus > 0.0 and self.shear_modulus > 0.0):
            raise InvalidInputError("moduli must be positive")

    @property
    def stretch_stiffness(self) -> float:
        return self.youngs_modulus * self.width * self.thickness

    @property
    def bend_stiffness_flat(self) -> float:
        """Bending about the width axis (thickness-direction deflection)."""
        return self.youngs_modulus * self.width * self.thickness**3 / 12.0

    @property
    def bend_stiffness_edge(self) -> float:
        """Bending about the thickness axis (width-direction deflection)."""
        return self.youngs_modulus * self.width**3 * self.thickness / 12.0

    @property
    def torsion_constant(self) -> float:
        # standard engineering approximation for a solid rectangle, r <= w
        w, r = self.width, self.thickness
        return w * r**3 * (1.0 / 3.0 - 0.21 * (r / w) * (1.0 - r**4 / (12.0 * w**4)))

    @property
    def twist_stiffness(self) -> float:
        return self.shear_modulus * self.torsion_constant


@dataclass(frozen=True)
class Member:
    """A lamella: rest centerline (flat development) plus cross-section.

    width_dir is the unit direction of the cross-section's width axis on the
    first rest edge; it is orthonormalized against that edge and transported
    along the rest centerline to define the rest material frame.
    """

    id: str
    rest_centerline: Polyline3
    cross_section: CrossSection
    width_dir: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        d = np.asarray(self.width_dir, dtype=float)
        if d.shape != (3,) or not np.all(np.isfinite(d)):
            raise InvalidInputError(f"member {self.id}: width_dir must be a finite 3-vector")
        t0 = self.rest_centerline.vertices[1] - self.rest_centerline.vertices[0]
        t0 = t0 / np.linalg.norm(t0)
        d = d - (d @ t0) * t0
        n = np.linalg.norm(d)
        if n < 1e-9:
            raise InvalidInputError(f"member {self.id}: width_dir parallel to first edge")
        object.__setattr__(self, "width_dir", d / n)

    @property
    def n_vertices(self) -> int:
        return len(self.rest_centerline.vertices)

    @property
    def length(self) -> float:
        return self.rest_centerline.length


@dataclass(frozen=True)
class SlidingJoint:
    """Two hole intervals (arc-length ranges on two members) sharing a pin.

    t1, t2 are the dimensionless sliding coordinates of the pin within each
    hole interval.
    """

    member_a: str
    member_b: str
    hole_a: tuple[float, float]
    hole_b: tuple[float, float]
    t1: float = 0.5
    t2: float = 0.5

    def __post_init__(self):
        for name, (lo, hi) in (("hole_a", self.hole_a), ("hole_b", self.hole_b)):
            if not hi > lo:
                raise InvalidInputError(f"{name} interval must have positive length")
            if lo < 0.0:
                raise InvalidInputError(f"{name} interval must start at arc length >= 0")
        for name, t in (("t1", self.t1), ("t2", self.t2)):
            if not 0.0 <= t <= 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class Anchor:
    """Pulls one member vertex toward a spatial target.

    The penalty strength is the global lambda times the anchor's own weight
    multiplier; weights far above 1 act as clamps that release only when
    lambda is nearly zero.
    """

    member: str
    vertex: int
    target: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        tgt = np.asarray(self.target, dtype=float)
        if tgt.shape != (3,) or not np.all(np.isfinite(tgt)):
            raise InvalidInputError("anchor target must be a finite 3D position")
        if not self.weight > 0.0:
            raise InvalidInputError("anchor weight multiplier must be positive")
        object.__setattr__(self, "target", tgt)


@dataclass
class RodState:
    """Simulation degrees of freedom plus the stored reference directors.

    positions: member id -> (n, 3) vertex positions
    thetas:    member id -> (n-1,) per-edge twist angles
    ref_dirs:  member id -> (n-1, 3) unit reference directors (width axis)
    joint_ts:  (n_joints, 2) sliding coordinates in [0, 1]
    """

    positions: dict
    thetas: dict
    ref_dirs: dict
    joint_ts: np.ndarray

    def copy(self) -> "RodState":
        return RodState(
            positions={k: v.copy() for k, v in self.positions.items()},
            thetas={k: v.copy() for k, v in self.thetas.items()},
            ref_dirs={k: v.copy() for k, v in self.ref_dirs.items()},
            joint_ts=self.joint_ts.copy(),
        )

    def validate_for(self, grid: "GridModel"):
        for m in grid.members:
            x = self.positions.get(m.id)
            if x is None or x.shape != (m.n_vertices, 3):
                raise InvalidInputError(f"state positions missing/misshaped for member {m.id}")
            th = self.thetas.get(m.id)
            if th is None or th.shape != (m.n_vertices - 1,):
                raise InvalidInputError(f"state twist angles missing/misshaped for member {m.id}")
            d1 = self.ref_dirs.get(m.id)
            if d1 is None or d1.shape != (m.n_vertices - 1, 3):
                raise InvalidInputError(f"state reference frames missing/misshaped for member {m.id}")
            if np.max(np.abs(np.linalg.norm(d1, axis=1) - 1.0)) > 1e-9:
                raise InvalidInputError(f"reference directors of member {m.id} are not unit length")
        if self.joint_ts.shape != (len(grid.joints), 2):
            raise InvalidInputError("joint sliding coordinate array has wrong shape")


@dataclass
class StateGrad:
    """Gradient with the same layout as the state's degrees of freedom."""

    positions: dict
    thetas: dict
    joint_ts: np.ndarray

    @classmethod
    def zeros_like(cls, state: RodState) -> "StateGrad":
        return cls(
            positions={k: np.zeros_like(v) for k, v in state.positions.items()},
            thetas={k: np.zeros_like(v) for k, v in state.thetas.items()},
            joint_ts=np.zeros_like(state.joint_ts),
        )


@dataclass
class GridModel:
    """Members, sliding joints, anchors, and the target deployed geometry."""

    members: list
    joints: list
    anchors: list
    deployed_positions: dict

    def __post_init__(self):
        ids = [m.id for m in self.members]
        if len(set(ids)) != len(ids):
            raise InvalidInputError("duplicate member ids")
        by_id = {m.id: m for m in self.members}
        for j in self.joints:
            for mid, hole in ((j.member_a, j.hole_a), (j.member_b, j.hole_b)):
                m = by_id.get(mid)
                if m is None:
                    raise InvalidInputError(f"joint references unknown member {mid!r}")
                if hole[1] > m.length * (1.0 + 1e-9):
                    raise InvalidInputError(
                        f"hole interval {hole} exceeds member {mid!r} length {m.length:g}"
                    )
        for a in self.anchors:
            m = by_id.get(a.member)
            if m is None:
                raise InvalidInputError(f"anchor references unknown member {a.member!r}")
            if not 0 <= a.vertex < m.n_vertices:
                raise InvalidInputError(f"anchor vertex {a.vertex} out of range for {a.member!r}")
        for mid, pos in self.deployed_positions.items():
            m = by_id.get(mid)
            if m is None:
                raise InvalidInputError(f"deployed positions for unknown member {mid!r}")
            pos = np.asarray(pos, dtype=float)
            if pos.shape != (m.n_vertices, 3) or not np.all(np.isfinite(pos)):
                raise InvalidInputError(f"deployed positions misshaped for member {mid!r}")
            self.deployed_positions[mid] = pos
        self._by_id = by_id
        self._engine = None

    def member(self, mid: str) -> Member:
        return self._by_id[mid]

    @property
    def engine(self) -> "_Engine":
        if self._engine is None:
            self._engine = _Engine(self)
        return self._engine


class DofLayout:
    """Flat packing order: positions per member, thetas per member, joint ts."""

    def __init__(self, grid: GridModel):
        self.member_ids = [m.id for m in grid.members]
        self.pos_slices = {}
        self.theta_slices = {}
        off = 0
        for m in grid.members:
            self.pos_slices[m.id] = slice(off, off + 3 * m.n_vertices)
            off += 3 * m.n_vertices
        for m in grid.members:
            self.theta_slices[m.id] = slice(off, off + m.n_vertices - 1)
            off += m.n_vertices - 1
        self.joint_slice = slice(off, off + 2 * len(grid.joints))
        self.size = off + 2 * len(grid.joints)
        self._shapes = {m.id: m.n_vertices for m in grid.members}

    def pack(self, state: RodState) -> np.ndarray:
        v = np.empty(self.size)
        for mid in self.member_ids:
            v[self.pos_slices[mid]] = state.positions[mid].ravel()
            v[self.theta_slices[mid]] = state.thetas[mid]
        v[self.joint_slice] = state.joint_ts.ravel()
        return v

    def unpack(self, vec: np.ndarray, template: RodState) -> RodState:
        out = template.copy()
        for mid in self.member_ids:
            n = self._shapes[mid]
            out.positions[mid] = vec[self.pos_slices[mid]].reshape(n, 3)
            out.thetas[mid] = vec[self.theta_slices[mid]].copy()
        out.joint_ts = vec[self.joint_slice].reshape(-1, 2).copy()
        return out

    def pack_grad(self, grad: StateGrad) -> np.ndarray:
        v = np.zeros(self.size)
        for mid in self.member_ids:
            v[self.pos_slices[mid]] = grad.positions[mid].ravel()
            v[self.theta_slices[mid]] = grad.thetas[mid]
        v[self.joint_slice] = grad.joint_ts.ravel()
        return v

    def unpack_grad(self, vec: np.ndarray, template: RodState) -> StateGrad:
        g = StateGrad.zeros_like(template)
        for mid in self.member_ids:
            n = self._shapes[mid]
            g.positions[mid] = vec[self.pos_slices[mid]].reshape(n, 3)
            g.thetas[mid] = vec[self.theta_slices[mid]].copy()
        g.joint_ts = vec[self.joint_slice].reshape(-1, 2).copy()
        return g


def _rotate_between(v, a, b):
    """Rotate vectors v by the rotation taking unit vector a to unit vector b."""
    w = jnp.cross(a, b)
    c = jnp.sum(a * b, axis=-1, keepdims=True)
    wv = jnp.cross(w, v)
    return v + wv + jnp.cross(w, wv) / (1.0 + c)


def _safe_normalize(v, axis=-1):
    n = jnp.linalg.norm(v, axis=axis, keepdims=True)
    return v / jnp.maximum(n, 1e-300)


def _member_frames(x, theta, d1ref):
    e = x[1:] - x[:-1]
    el = jnp.linalg.norm(e, axis=1)
    t = e / el[:, None]
    d1 = _safe_normalize(d1ref - jnp.sum(d1ref * t, axis=1)[:, None] * t)
    d2 = jnp.cross(t, d1)
    m1 = jnp.cos(theta)[:, None] * d1 + jnp.sin(theta)[:, None] * d2
    m2 = -jnp.sin(theta)[:, None] * d1 + jnp.cos(theta)[:, None] * d2
    return e, el, t, d1, m1, m2


def _member_curvature(t, m1, m2):
    chi = 1.0 + jnp.sum(t[:-1] * t[1:], axis=1)
    kb = 2.0 * jnp.cross(t[:-1], t[1:]) / chi[:, None]
    k1 = jnp.sum(kb * 0.5 * (m1[:-1] + m1[1:]), axis=1)
    k2 = jnp.sum(kb * 0.5 * (m2[:-1] + m2[1:]), axis=1)
    return k1, k2


def _member_twist(t, d1, theta):
    transported = _rotate_between(d1[:-1], t[:-1], t[1:])
    sin_psi = jnp.sum(jnp.cross(transported, d1[1:]) * t[1:], axis=1)
    cos_psi = jnp.sum(transported * d1[1:], axis=1)
    psi = jnp.arctan2(sin_psi, cos_psi)
    return theta[1:] - theta[:-1] + psi


class _MemberConsts:
    """Static per-member quantities derived from the rest centerline."""

    def __init__(self, member: Member):
        rest = member.rest_centerline.vertices
        self.rest_lengths = np.linalg.norm(np.diff(rest, axis=0), axis=1)
        self.voronoi = 0.5 * (self.rest_lengths[:-1] + self.rest_lengths[1:])
        cs = member.cross_section
        self.ks = cs.stretch_stiffness
        self.b_flat = cs.bend_stiffness_flat
        self.b_edge = cs.bend_stiffness_edge
        self.gj = cs.twist_stiffness
        # rest material frame: width_dir transported along the rest centerline
        d1ref = _transport_frames(rest, member.width_dir)
        theta0 = np.zeros(len(rest) - 1)
        _, _, t, d1, m1, m2 = _member_frames(rest, theta0, d1ref)
        k1, k2 = _member_curvature(t, m1, m2)
        self.rest_k1 = np.asarray(k1)
        self.rest_k2 = np.asarray(k2)
        self.rest_twist = np.asarray(_member_twist(t, d1, theta0))
        self.rest_d1 = d1ref
        self.cum_rest = np.concatenate([[0.0], np.cumsum(self.rest_lengths)])


def _transport_frames(x: np.ndarray, d1_first: np.ndarray) -> np.ndarray:
    """Space-parallel transport of a first-edge director along a centerline."""
    e = np.diff(x, axis=0)
    t = e / np.linalg.norm(e, axis=1)[:, None]
    d = d1_first - (d1_first @ t[0]) * t[0]
    d = d / np.linalg.norm(d)
    out = [d]
    for j in range(1, len(t)):
        a, b = t[j - 1], t[j]
        w = np.cross(a, b)
        c = a @ b
        if c < -1.0 + 1e-12:
            raise SingularConfigurationError("antiparallel consecutive edges")
        wv = np.cross(w, d)
        d = d + wv + np.cross(w, wv) / (1.0 + c)
        d = d - (d @ b) * b
        d = d / np.linalg.norm(d)
        out.append(d)
    return np.array(out)


def _arc_to_edge(cum: np.ndarray, s: float) -> tuple[int, float]:
    """Locate rest arc length s: edge index and fractional position."""
    s = float(np.clip(s, 0.0, cum[-1]))
    i = int(np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(cum) - 2))
    frac = (s - cum[i]) / (cum[i + 1] - cum[i])
    return i, frac


class _Engine:
    """Compiled energy/gradient evaluators for one grid's fixed structure."""

    def __init__(self, grid: GridModel):
        self.grid = grid
        self.layout = DofLayout(grid)
        self.consts = {m.id: _MemberConsts(m) for m in grid.members}
        # anchors: (member, vertex index, weight multiplier) plus targets
        self.anchor_refs = [(a.member, a.vertex, a.weight) for a in grid.anchors]
        self.anchor_targets = np.array([a.target for a in grid.anchors]).reshape(-1, 3)
        # joints: hole endpoints as (edge index, fraction) on the rest centerline
        self.joint_refs = []
        for j in grid.joints:
            ca = self.consts[j.member_a]
            cb = self.consts[j.member_b]
            self.joint_refs.append(
                (
                    j.member_a,
                    j.member_b,
                    _arc_to_edge(ca.cum_rest, j.hole_a[0]),
                    _arc_to_edge(ca.cum_rest, j.hole_a[1]),
                    _arc_to_edge(cb.cum_rest, j.hole_b[0]),
                    _arc_to_edge(cb.cum_rest, j.hole_b[1]),
                )
            )
        self._compiled = {}

    # ---- jax energy expressions ---------------------------------------

    def _split(self, dofs):
        lay = self.layout
        parts = {}
        for mid in lay.member_ids:
            n = self.grid.member(mid).n_vertices
            parts[mid] = (
                dofs[lay.pos_slices[mid]].reshape(n, 3),
                dofs[lay.theta_slices[mid]],
            )
        jts = dofs[lay.joint_slice].reshape(-1, 2)
        return parts, jts

    def _stretch_expr(self, dofs, ref):
        parts, _ = self._split(dofs)
        total = 0.0
        for mid, (x, theta) in parts.items():
            c = self.consts[mid]
            e = x[1:] - x[:-1]
            el = jnp.linalg.norm(e, axis=1)
            total = total + 0.5 * c.ks * jnp.sum((el - c.rest_lengths) ** 2 / c.rest_lengths)
        return total

    def _bend_expr(self, dofs, ref):
        parts, _ = self._split(dofs)
        total = 0.0
        for mid, (x, theta) in parts.items():
            c = self.consts[mid]
            _, _, t, d1, m1, m2 = _member_frames(x, theta, ref[mid])
            k1, k2 = _member_curvature(t, m1, m2)
            total = total + jnp.sum(
                (c.b_flat * (k1 - c.rest_k1) ** 2 + c.b_edge * (k2 - c.rest_k2) ** 2)
                / (2.0 * c.voronoi)
            )
        return total

    def _twist_expr(self, dofs, ref):
        parts, _ = self._split(dofs)
        total = 0.0
        for mid, (x, theta) in parts.items():
            c = self.consts[mid]
            if len(theta) < 2:
                continue
            _, _, t, d1, _, _ = _member_frames(x, theta, ref[mid])
            tw = _member_twist(t, d1, theta)
            total = total + jnp.sum(0.5 * c.gj * (tw - c.rest_twist) ** 2 / c.voronoi)
        return total

    def _anchor_expr(self, dofs, ref, lam):
        if not self.anchor_refs:
            return jnp.asarray(0.0)
        parts, _ = self._split(dofs)
        total = 0.0
        for (mid, vidx, w), tgt in zip(self.anchor_refs, self.anchor_targets):
            x, _ = parts[mid]
            total = total + w * jnp.sum((x[vidx] - tgt) ** 2)
        return lam * total

    def _joint_expr(self, dofs, ref, w_joint):
        if not self.joint_refs:
            return jnp.asarray(0.0)
        parts, jts = self._split(dofs)
        total = 0.0
        for k, (ma, mb, ea0, ea1, eb0, eb1) in enumerate(self.joint_refs):
            xa, _ = parts[ma]
            xb, _ = parts[mb]

            def lerp(x, ref_pt):
                i, f = ref_pt
                return x[i] * (1.0 - f) + x[i + 1] * f

            a_pt, b_pt = lerp(xa, ea0), lerp(xa, ea1)
            c_pt, d_pt = lerp(xb, eb0), lerp(xb, eb1)
            t1, t2 = jts[k]
            x1 = a_pt * (1.0 - t1) + b_pt * t1
            x2 = c_pt * (1.0 - t2) + d_pt * t2
            total = total + jnp.sum((x1 - x2) ** 2)
        return w_joint * total

    def _total_expr(self, dofs, ref, lam, w_joint):
        return (
            self._stretch_expr(dofs, ref)
            + self._bend_expr(dofs, ref)
            + self._twist_expr(dofs, ref)
            + self._anchor_expr(dofs, ref, lam)
            + self._joint_expr(dofs, ref, w_joint)
        )

    # ---- compiled evaluators ------------------------------------------

    def _get(self, name):
        if name not in self._compiled:
            expr = {
                "stretch": self._stretch_expr,
                "bend": self._bend_expr,
                "twist": self._twist_expr,
                "anchor": self._anchor_expr,
                "joint": self._joint_expr,
                "total": self._total_expr,
            }[name]
            self._compiled[name] = jax.jit(jax.value_and_grad(expr))
        return self._compiled[name]

    def check_state(self, state: RodState):
        state.validate_for(self.grid)
        for m in self.grid.members:
            x = state.positions[m.id]
            e = np.diff(x, axis=0)
            el = np.linalg.norm(e, axis=1)
            if np.any(el <= 1e-12):
                raise SingularConfigurationError(f"zero-length edge in member {m.id}")
            t = e / el[:, None]
            if len(t) > 1 and np.any(np.einsum("ij,ij->i", t[:-1], t[1:]) < -1.0 + 1e-12):
                raise SingularConfigurationError(f"antiparallel edges in member {m.id}")

    def evaluate(self, name, state: RodState, *args) -> tuple[float, StateGrad]:
        self.check_state(state)
        dofs = self.layout.pack(state)
        ref = {mid: jnp.asarray(state.ref_dirs[mid]) for mid in self.layout.member_ids}
        val, grad = self._get(name)(jnp.asarray(dofs), ref, *args)
        g = self.layout.unpack_grad(np.asarray(grad), state)
        return float(val), g

    def value_and_grad_fn(self, lam: float, w_joint: float):
        """Flat (dofs -> energy, grad) callable for the minimizer."""
        fn = self._get("total")

        def eval_flat(dofs, ref):
            val, grad = fn(jnp.asarray(dofs), ref, lam, w_joint)
            return float(val), np.asarray(grad)

        return eval_flat


# ---- public operations -----------------------------------------------


def stretch_energy(state: RodState, grid: GridModel) -> tuple[float, StateGrad]:
    """Sum over edges of 0.5 * ks * (|e| - |e_rest|)^2 / |e_rest|, ks = E*w*r."""
    return grid.engine.evaluate("stretch", state)


def bend_energy(state: RodState, grid: GridModel) -> tuple[float, StateGrad]:
    """Anisotropic discrete-curvature bending energy with gradient."""
    return grid.engine.evaluate("bend", state)


def twist_energy(state: RodState, grid: GridModel) -> tuple[float, StateGrad]:
    """Discrete twist energy with stiffness G*J for the rectangular section."""
    return grid.engine.evaluate("twist", state)


def anchor_energy(state: RodState, anchors, lam: float) -> tuple[float, StateGrad]:
    """lambda * sum w_i * |p_i - a_i|^2 over anchored vertices, with gradient."""
    if lam < 0.0:
        raise InvalidInputError("anchor weight must be non-negative")
    grad = StateGrad.zeros_like(state)
    total = 0.0
    for a in anchors:
        p = state.positions[a.member][a.vertex]
        diff = p - a.target
        total += a.weight * float(diff @ diff)
        grad.positions[a.member][a.vertex] += 2.0 * lam * a.weight * diff
    return lam * total, grad


def joint_energy(state: RodState, grid: GridModel, w_joint: float) -> tuple[float, StateGrad]:
    """Quadratic sliding-joint penalty w * sum |x1(t1) - x2(t2)|^2."""
    if np.any(state.joint_ts < 0.0) or np.any(state.joint_ts > 1.0):
        raise InvalidInputError("joint sliding coordinates must lie in [0, 1]")
    return grid.engine.evaluate("joint", state, w_joint)


def total_energy(
    state: RodState, grid: GridModel, lam: float, w_joint: float
) -> tuple[float, StateGrad]:
    """Stretch + bend + twist + anchor + joint energy and full gradient."""
    return grid.engine.evaluate("total", state, lam, w_joint)


def default_joint_weight(grid: GridModel) -> float:
    """1e4 x the largest axial stiffness per length among members."""
    if not grid.members:
        return 0.0
    return 1e4 * max(m.cross_section.stretch_stiffness / m.length for m in grid.members)


def initial_state(grid: GridModel, positions: dict | None = None) -> RodState:
    """Build a RodState for the given positions (default: deployed geometry).

    Reference directors are obtained by rotating each member's rest width
    director onto the current first edge and space-parallel transporting it
    along the current centerline; twist angles start at zero.
    """
    if positions is None:
        positions = grid.deployed_positions
    pos, thetas, dirs = {}, {}, {}
    for m in grid.members:
        x = np.asarray(positions[m.id], dtype=float)
        rest = m.rest_centerline.vertices
        t_rest = rest[1] - rest[0]
        t_rest = t_rest / np.linalg.norm(t_rest)
        t_cur = x[1] - x[0]
        t_cur = t_cur / np.linalg.norm(t_cur)
        w = np.cross(t_rest, t_cur)
        c = t_rest @ t_cur
        if c < -1.0 + 1e-12:
            raise SingularConfigurationError(f"cannot orient member {m.id}: reversed first edge")
        wd = m.width_dir
        wv = np.cross(w, wd)
        d_first = wd + wv + np.cross(w, wv) / (1.0 + c)
        pos[m.id] = x.copy()
        thetas[m.id] = np.zeros(m.n_vertices - 1)
        dirs[m.id] = _transport_frames(x, d_first)
    joint_ts = np.array([[j.t1, j.t2] for j in grid.joints]).reshape(-1, 2)
    return RodState(positions=pos, thetas=thetas, ref_dirs=dirs, joint_ts=joint_ts)


def refreshed_frames(state: RodState) -> RodState:
    """Re-orthonormalize stored reference directors against current tangents.

    Leaves the energy unchanged (the energy only ever sees the projected
    directors) while restoring the orthonormality invariant after a solve.
    """
    out = state.copy()
    for mid, x in out.positions.items():
        e = np.diff(x, axis=0)
        t = e / np.linalg.norm(e, axis=1)[:, None]
        d = out.ref_dirs[mid]
        d = d - np.einsum("ij,ij->i", d, t)[:, None] * t
        norms = np.linalg.norm(d, axis=1)
        if np.any(norms < 1e-9):
            raise SingularConfigurationError("reference director degenerated during solve")
        out.ref_dirs[mid] = d / norms[:, None]
    return out

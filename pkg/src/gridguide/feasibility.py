"""Geometric compression audit of a linearized deployment schedule.

Between knots, constrained nodes move on straight lines. If the chord
distances between consecutive constrained nodes of a member drop below that
member's rest arc length, the member is being compressed, which is the
buckling failure mode the guidance paths exist to avoid.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .reparam import LinearizedPathSet
from .rod import GridModel

__all__ = ["CompressionFlag", "CompressionReport", "check_compression"]


@dataclass(frozen=True)
class CompressionFlag:
    """One compressed chord: which member, node pair, knot segment, and when."""

    member: str
    vertex_pair: tuple[int, int]
    segment: int  # knot interval index
    t_local: float  # position within the interval, in [0, 1]
    ratio: float  # chord length / rest arc length


@dataclass(frozen=True)
class CompressionReport:
    """Worst compression ratio found and the list of flagged chords."""

    worst_ratio: float
    threshold: float
    flags: list
    members_checked: list

    @property
    def ok(self) -> bool:
        return not self.flags


def check_compression(
    paths: LinearizedPathSet,
    grid: GridModel,
    samples_per_segment: int = 9,
    threshold: float = 0.02,
) -> CompressionReport:
    """Audit intermediate states q = p + t*v of a linearized schedule.

    For every knot interval and every intermediate sample, measures the
    chord length between consecutive constrained nodes of each member
    against the rest arc length between those nodes, and flags ratios
    below 1 - threshold. Members with fewer than two constrained nodes
    cannot be audited and are skipped.
    """
    if not 0.0 < threshold < 1.0:
        raise InvalidInputError("threshold must lie in (0, 1)")
    if samples_per_segment < 1:
        raise InvalidInputError("need at least one sample per segment")

    member_ids = {m.id for m in grid.members}
    by_member: dict[str, list] = {}
    for path_idx, (mid, vidx) in enumerate(paths.node_refs):
        if mid not in member_ids:
            raise InvalidInputError(f"constrained node references unknown member {mid!r}")
        m = grid.member(mid)
        if not 0 <= vidx < m.n_vertices:
            raise InvalidInputError(f"constrained node vertex {vidx} not on member {mid!r}")
        by_member.setdefault(mid, []).append((vidx, path_idx))

    # fractional positions inside each knot interval, endpoints included
    t_loc = np.linspace(0.0, 1.0, samples_per_segment + 2)

    flags = []
    worst = np.inf
    checked = []
    for mid, nodes in sorted(by_member.items()):
        if len(nodes) < 2:
            continue
        checked.append(mid)
        nodes = sorted(nodes)
        cum = grid.engine.consts[mid].cum_rest
        rest_gaps = np.array(
            [cum[b[0]] - cum[a[0]] for a, b in zip(nodes[:-1], nodes[1:])]
        )
        if np.any(rest_gaps <= 0.0):
            raise InvalidInputError(f"duplicate constrained vertices on member {mid!r}")
        node_pos = paths.positions[[p for _, p in nodes]]  # (nodes, knots, 3)
        for seg in range(len(paths.knots) - 1):
            p = node_pos[:, seg, :]
            v = node_pos[:, seg + 1, :] - p
            for tl in t_loc:
                q = p + tl * v
                chords = np.linalg.norm(np.diff(q, axis=0), axis=1)
                ratios = chords / rest_gaps
                worst = min(worst, float(ratios.min()))
                for pair_idx in np.nonzero(ratios < 1.0 - threshold)[0]:
                    flags.append(
                        CompressionFlag(
                            member=mid,
                            vertex_pair=(nodes[pair_idx][0], nodes[pair_idx + 1][0]),
                            segment=seg,
                            t_local=float(tl),
                            ratio=float(ratios[pair_idx]),
                        )
                    )
    if not checked:
        raise InvalidInputError("no member has two or more constrained nodes to audit")
    return CompressionReport(
        worst_ratio=float(worst),
        threshold=threshold,
        flags=flags,
        members_checked=checked,
    )

"""Model ingestion, artifact persistence, and schedule export.

All pipeline artifacts are text files: JSON for models, traces, and
linearized path sets, CSV (node_id,t,x,y,z) for the FEA displacement
handoff. Every output embeds its schema version and the content hashes of
its inputs so downstream stages can refuse mismatched provenance.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

from .collapse import TraceSet
from .errors import DanglingReferenceError, InvalidInputError, ProvenanceError, SchemaError
from .geometry import Polyline3, TimedPath
from .reparam import DeviationReport, LinearizedPathSet
from .rod import Anchor, CrossSection, GridModel, Member, SlidingJoint

__all__ = [
    "MODEL_SCHEMA",
    "TRACE_SCHEMA",
    "LINPATHS_SCHEMA",
    "SCHEDULE_SCHEMA",
    "load_model",
    "save_model",
    "model_hash",
    "load_trace",
    "save_trace",
    "load_linpaths",
    "save_linpaths",
    "export_schedule",
    "atomic_write_text",
]

MODEL_SCHEMA = "gridguide/model-v1"
TRACE_SCHEMA = "gridguide/trace-v1"
LINPATHS_SCHEMA = "gridguide/linpaths-v1"
SCHEDULE_SCHEMA = "gridguide/schedule-v1"


def atomic_write_text(path: str, text: str):
    """Write text to path via a temp file + rename in the same directory."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".gridguide-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _payload_hash(payload: dict) -> str:
    return hashlib.sha256(_canonical_json(payload).encode()).hexdigest()


def _require(payload: dict, key: str, where: str):
    if key not in payload:
        raise SchemaError(f"{where}: missing required field {key!r}")
    return payload[key]


def _load_json(path: str, expected_schema: str) -> dict:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON (line {exc.lineno}: {exc.msg})") from exc
    schema = _require(payload, "schema", path)
    if schema != expected_schema:
        raise SchemaError(f"{path}: unrecognized schema {schema!r} (expected {expected_schema!r})")
    return payload


# ---- model files ------------------------------------------------------


def model_to_dict(grid: GridModel) -> dict:
    members = []
    for m in grid.members:
        cs = m.cross_section
        members.append(
            {
                "id": m.id,
                "rest_centerline": m.rest_centerline.vertices.tolist(),
                "width_dir": m.width_dir.tolist(),
                "cross_section": {
                    "width": cs.width,
                    "thickness": cs.thickness,
                    "youngs_modulus": cs.youngs_modulus,
                    "shear_modulus": cs.shear_modulus,
                },
            }
        )
    return {
        "schema": MODEL_SCHEMA,
        "units": {"length": "m", "pressure": "Pa"},
        "members": members,
        "joints": [
            {
                "member_a": j.member_a,
                "member_b": j.member_b,
                "hole_a": list(j.hole_a),
                "hole_b": list(j.hole_b),
                "t1": j.t1,
                "t2": j.t2,
            }
            for j in grid.joints
        ],
        "anchors": [
            {
                "member": a.member,
                "vertex": a.vertex,
                "target": a.target.tolist(),
                "weight": a.weight,
            }
            for a in grid.anchors
        ],
        "deployed_positions": {k: v.tolist() for k, v in grid.deployed_positions.items()},
    }


def model_from_dict(payload: dict, where: str = "model") -> GridModel:
    units = _require(payload, "units", where)
    if units.get("length") != "m" or units.get("pressure") != "Pa":
        raise SchemaError(f"{where}: units must declare length 'm' and pressure 'Pa'")
    members = []
    member_ids = set()
    for i, md in enumerate(_require(payload, "members", where)):
        ctx = f"{where}: members[{i}]"
        cs = _require(md, "cross_section", ctx)
        try:
            member = Member(
                id=str(_require(md, "id", ctx)),
                rest_centerline=Polyline3(np.asarray(_require(md, "rest_centerline", ctx))),
                cross_section=CrossSection(
                    width=float(_require(cs, "width", ctx)),
                    thickness=float(_require(cs, "thickness", ctx)),
                    youngs_modulus=float(_require(cs, "youngs_modulus", ctx)),
                    shear_modulus=float(_require(cs, "shear_modulus", ctx)),
                ),
                width_dir=np.asarray(md.get("width_dir", [0.0, 0.0, 1.0]), dtype=float),
            )
        except InvalidInputError as exc:
            raise SchemaError(f"{ctx}: {exc}") from exc
        members.append(member)
        member_ids.add(member.id)
    joints = []
    for i, jd in enumerate(payload.get("joints", [])):
        ctx = f"{where}: joints[{i}]"
        for key in ("member_a", "member_b"):
            mid = _require(jd, key, ctx)
            if mid not in member_ids:
                raise DanglingReferenceError(f"{ctx}: references missing member id {mid!r}")
        try:
            joints.append(
                SlidingJoint(
                    member_a=jd["member_a"],
                    member_b=jd["member_b"],
                    hole_a=tuple(_require(jd, "hole_a", ctx)),
                    hole_b=tuple(_require(jd, "hole_b", ctx)),
                    t1=float(jd.get("t1", 0.5)),
                    t2=float(jd.get("t2", 0.5)),
                )
            )
        except InvalidInputError as exc:
            raise SchemaError(f"{ctx}: {exc}") from exc
    anchors = []
    for i, ad in enumerate(payload.get("anchors", [])):
        ctx = f"{where}: anchors[{i}]"
        mid = _require(ad, "member", ctx)
        if mid not in member_ids:
            raise DanglingReferenceError(f"{ctx}: references missing member id {mid!r}")
        try:
            anchors.append(
                Anchor(
                    member=mid,
                    vertex=int(_require(ad, "vertex", ctx)),
                    target=np.asarray(_require(ad, "target", ctx), dtype=float),
                    weight=float(ad.get("weight", 1.0)),
                )
            )
        except InvalidInputError as exc:
            raise SchemaError(f"{ctx}: {exc}") from exc
    deployed = {
        k: np.asarray(v, dtype=float)
        for k, v in _require(payload, "deployed_positions", where).items()
    }
    for mid in deployed:
        if mid not in member_ids:
            raise DanglingReferenceError(
                f"{where}: deployed positions reference missing member id {mid!r}"
            )
    try:
        return GridModel(
            members=members, joints=joints, anchors=anchors, deployed_positions=deployed
        )
    except InvalidInputError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def load_model(path: str) -> GridModel:
    return model_from_dict(_load_json(path, MODEL_SCHEMA), where=path)


def save_model(grid: GridModel, path: str):
    atomic_write_text(path, json.dumps(model_to_dict(grid), indent=1) + "\n")


def model_hash(grid: GridModel) -> str:
    payload = model_to_dict(grid)
    return _payload_hash(payload)


# ---- trace files ------------------------------------------------------


def trace_to_dict(trace: TraceSet) -> dict:
    return {
        "schema": TRACE_SCHEMA,
        "times": trace.times.tolist(),
        "nodes": [{"member": mid, "vertex": vidx} for mid, vidx in trace.node_refs],
        "paths": [p.vertices.tolist() for p in trace.paths],
        "provenance": trace.provenance,
    }


def trace_hash(trace: TraceSet) -> str:
    payload = trace_to_dict(trace)
    payload.pop("provenance")
    return _payload_hash(payload)


def save_trace(trace: TraceSet, path: str):
    atomic_write_text(path, json.dumps(trace_to_dict(trace), indent=1) + "\n")


def load_trace(path: str) -> TraceSet:
    payload = _load_json(path, TRACE_SCHEMA)
    times = np.asarray(_require(payload, "times", path), dtype=float)
    nodes = [(nd["member"], int(nd["vertex"])) for nd in _require(payload, "nodes", path)]
    try:
        paths = [
            TimedPath(np.asarray(p, dtype=float), times)
            for p in _require(payload, "paths", path)
        ]
        return TraceSet(paths=paths, node_refs=nodes, provenance=payload.get("provenance", {}))
    except InvalidInputError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


# ---- linearized path sets --------------------------------------------


def _report_to_dict(report: DeviationReport) -> dict:
    return {
        "d_max": report.d_max.tolist(),
        "mu": report.mu,
        "sigma": report.sigma,
        "beta": report.beta.tolist(),
        "k": report.k,
        "energy": report.energy,
    }


def _report_from_dict(rd: dict) -> DeviationReport:
    return DeviationReport(
        d_max=np.asarray(rd["d_max"], dtype=float),
        mu=float(rd["mu"]),
        sigma=float(rd["sigma"]),
        beta=np.asarray(rd["beta"], dtype=int),
        k=int(rd["k"]),
        energy=float(rd["energy"]),
    )


def linpaths_to_dict(lp: LinearizedPathSet) -> dict:
    return {
        "schema": LINPATHS_SCHEMA,
        "knots": lp.knots.tolist(),
        "nodes": [{"member": mid, "vertex": vidx} for mid, vidx in lp.node_refs],
        "positions": lp.positions.tolist(),
        "report": _report_to_dict(lp.report),
        "provenance": lp.provenance,
    }


def save_linpaths(lp: LinearizedPathSet, path: str):
    atomic_write_text(path, json.dumps(linpaths_to_dict(lp), indent=1) + "\n")


def load_linpaths(path: str) -> LinearizedPathSet:
    payload = _load_json(path, LINPATHS_SCHEMA)
    try:
        return LinearizedPathSet(
            knots=np.asarray(_require(payload, "knots", path), dtype=float),
            node_refs=[(nd["member"], int(nd["vertex"])) for nd in _require(payload, "nodes", path)],
            positions=np.asarray(_require(payload, "positions", path), dtype=float),
            report=_report_from_dict(_require(payload, "report", path)),
            provenance=payload.get("provenance", {}),
        )
    except InvalidInputError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def check_provenance(recorded: str | None, actual: str, what: str, force: bool = False):
    """Refuse mismatched input hashes unless forced."""
    if recorded is None or force:
        return
    if recorded != actual:
        raise ProvenanceError(
            f"{what} hash mismatch: recorded {recorded[:12]}..., got {actual[:12]}... "
            "(pass --force to override)"
        )


# ---- schedule export --------------------------------------------------


def node_id(ref) -> str:
    mid, vidx = ref
    return f"{mid}:{vidx}"


def export_schedule(lp: LinearizedPathSet, fmt: str, path: str):
    """Write the displacement schedule as CSV (node_id,t,x,y,z) or JSON.

    Rows are grouped by node with knots ascending; floats carry 9
    significant digits. Identical inputs produce byte-identical files.
    """
    if fmt == "csv":
        lines = ["node_id,t,x,y,z"]
        for ref, pos in zip(lp.node_refs, lp.positions):
            nid = node_id(ref)
            for t, p in zip(lp.knots, pos):
                lines.append(f"{nid},{t:.9g},{p[0]:.9g},{p[1]:.9g},{p[2]:.9g}")
        atomic_write_text(path, "\n".join(lines) + "\n")
    elif fmt == "json":
        payload = {
            "schema": SCHEDULE_SCHEMA,
            "knots": lp.knots.tolist(),
            "nodes": [
                {"id": node_id(ref), "positions": pos.tolist()}
                for ref, pos in zip(lp.node_refs, lp.positions)
            ],
            "provenance": lp.provenance,
        }
        atomic_write_text(path, json.dumps(payload, indent=1) + "\n")
    else:
        raise InvalidInputError(f"unknown schedule format {fmt!r} (use 'csv' or 'json')")

"""Snapshot persistence and the bundled cyclone-vessel corpus.

Snapshot files are line oriented: a header line, then ``[section]``
headers each followed by one JSON object per record. Records within a
section keep store insertion order, so saving the same state twice gives
identical bytes and diffs stay readable.

Loading replays every record through the store's ``add_*`` methods, so a
file that breaks any model invariant is refused.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from collections.abc import Callable, Iterator
from importlib import resources
from pathlib import Path

from ppco.errors import Io, ParseError, PPCOError, ReferentialIntegrity, UnknownId
from ppco.model import (
    RECORD_TYPES,
    ActivityNode,
    ActorRecord,
    Competence,
    FlowSpec,
    InfoFlowEdge,
    PPCOStore,
    ProcessNode,
    TaskNode,
    Team,
    artifact_from_dict,
    artifact_to_dict,
)
from ppco.viewpoints import (
    BatchAccessProfile,
    BatchConnexion,
    Viewpoint,
    ViewpointObjective,
    ViewpointRelationship,
)
from ppco.workflow import Annotation, ChangeProposal, Decision, ProposalState

HEADER = "#ppco-snapshot 1"

SECTIONS = (
    "config", "artifacts", "edges", "interactions", "batch_records",
    "tasks", "activities", "processes", "info_flows",
    "teams", "actors", "competences", "team_interactions",
    "viewpoints", "viewpoint_relationships", "profiles",
    "proposals", "annotations",
)


def _records(store: PPCOStore) -> Iterator[tuple[str, dict]]:
    yield "config", {
        "drp_schema_location": store.drp_schema_location,
        "redaction": {str(k): list(v) for k, v in sorted(store.redaction.items())},
    }
    for node in store.artifacts.values():
        yield "artifacts", artifact_to_dict(node)
    for e in store.edges.values():
        yield "edges", {"parent": e.parent, "child": e.child, "note": e.relationship_note}
    for i in store.interactions.values():
        yield "interactions", {"a": i.a, "b": i.b, "kind": i.kind.value, "note": i.note}
    for r in store.batch_records.values():
        rec = {"id": r.id, "owner": r.owner, "kind": r.batch_kind, "payload": r.payload}
        if isinstance(r, FlowSpec) and r.function_ref is not None:
            rec["function_ref"] = r.function_ref
        yield "batch_records", rec
    for t in store.tasks.values():
        yield "tasks", {"id": t.id, "name": t.name, "domain": t.domain}
    for a in store.activities.values():
        yield "activities", {"id": a.id, "name": a.name, "tasks": list(a.tasks)}
    for p in store.processes.values():
        yield "processes", {"id": p.id, "name": p.name, "activities": list(p.activities)}
    for f in store.info_flows:
        yield "info_flows", {"source": f.source, "target": f.target, "payload": f.payload}
    for t in store.teams.values():
        yield "teams", {"id": t.id, "name": t.name, "responsible_for": t.responsible_for}
    for a in store.actors.values():
        yield "actors", {"id": a.id, "name": a.name, "role": a.role, "team": a.team}
    for c in store.competences.values():
        yield "competences", {"actor": c.actor, "domain": c.domain, "level": c.level}
    for ti in store.team_interactions.values():
        yield "team_interactions", {"a": ti.a, "b": ti.b, "frequency": ti.frequency}
    for vp in store.viewpoints.values():
        yield "viewpoints", {
            "id": vp.id, "actor": vp.actor, "focus": vp.focus, "domain": vp.domain,
            "competence_level": vp.competence_level, "scope": sorted(vp.scope),
            "objective": {
                "focus": vp.objective.focus,
                "activity": vp.objective.activity,
                "domain": vp.objective.domain,
            },
        }
    for rel in store.viewpoint_relationships:
        yield "viewpoint_relationships", {"from": rel.from_vp, "to": rel.to_vp, "label": rel.label}
    for prof in store.profiles.values():
        yield "profiles", {
            "domain": prof.domain,
            "competence_level": prof.competence_level,
            "grants": [
                {"batch": g.batch_kind, "level": g.level, "description": g.description}
                for g in prof.grants
            ],
        }
    for prop in store.proposals.values():
        yield "proposals", {
            "id": prop.id, "author": prop.author, "target": prop.target,
            "batch_kind": prop.batch_kind, "payload": prop.payload,
            "concerned": sorted(prop.concerned), "state": prop.state.value,
            "votes": {k: v.value for k, v in prop.votes.items()},
            "created_at": prop.created_at,
        }
    for note in store.annotations:
        yield "annotations", {
            "proposal": note.proposal, "recipient": note.recipient,
            "timestamp": note.timestamp, "message": note.message, "stage": note.stage,
        }


def dumps(store: PPCOStore) -> str:
    lines = [HEADER]
    by_section: dict[str, list[str]] = {name: [] for name in SECTIONS}
    for section, rec in _records(store):
        by_section[section].append(json.dumps(rec, sort_keys=True, ensure_ascii=False))
    for name in SECTIONS:
        lines.append(f"[{name}]")
        lines.extend(by_section[name])
    return "\n".join(lines) + "\n"


def snapshot_hash(store: PPCOStore) -> str:
    return hashlib.sha256(dumps(store).encode("utf-8")).hexdigest()


def _apply_config(store: PPCOStore, rec: dict) -> None:
    store.drp_schema_location = rec["drp_schema_location"]
    store.redaction = {int(k): tuple(v) for k, v in rec["redaction"].items()}


def _add_batch_record(store: PPCOStore, rec: dict) -> None:
    cls = RECORD_TYPES.get(rec["kind"])
    if cls is None:
        raise ValueError(f"unknown batch record kind {rec['kind']!r}")
    extra = {"function_ref": rec["function_ref"]} if "function_ref" in rec else {}
    store.add_batch_record(cls(id=rec["id"], owner=rec["owner"], payload=rec["payload"], **extra))


def _add_viewpoint(store: PPCOStore, rec: dict) -> None:
    obj = rec["objective"]
    store.add_viewpoint(Viewpoint(
        id=rec["id"], actor=rec["actor"], focus=rec["focus"], domain=rec["domain"],
        competence_level=rec["competence_level"], scope=frozenset(rec["scope"]),
        objective=ViewpointObjective(obj["focus"], obj["activity"], obj["domain"]),
    ))


def _add_profile(store: PPCOStore, rec: dict) -> None:
    grants = tuple(BatchConnexion(g["batch"], g["level"], g["description"]) for g in rec["grants"])
    store.add_profile(BatchAccessProfile(rec["domain"], rec["competence_level"], grants))


def _add_proposal(store: PPCOStore, rec: dict) -> None:
    if rec["id"] in store.proposals:
        raise ValueError(f"proposal {rec['id']} repeated")
    if rec["target"] not in store.artifacts:
        raise UnknownId(f"proposal {rec['id']} targets unknown artifact {rec['target']}")
    for actor in [rec["author"], *rec["concerned"]]:
        store.get_actor(actor)
    prop = ChangeProposal(
        id=rec["id"], author=rec["author"], target=rec["target"],
        batch_kind=rec["batch_kind"], payload=dict(rec["payload"]),
        concerned=frozenset(rec["concerned"]), state=ProposalState(rec["state"]),
        votes={k: Decision(v) for k, v in rec["votes"].items()},
        created_at=rec["created_at"],
    )
    prop.check_invariants()
    store.proposals[prop.id] = prop


def _add_annotation(store: PPCOStore, rec: dict) -> None:
    if rec["proposal"] not in store.proposals:
        raise UnknownId(f"annotation references unknown proposal {rec['proposal']}")
    store.get_actor(rec["recipient"])
    store.annotations.append(Annotation(
        rec["proposal"], rec["recipient"], rec["timestamp"], rec["message"], rec["stage"],
    ))


_LOADERS: dict[str, Callable[[PPCOStore, dict], object]] = {
    "config": _apply_config,
    "artifacts": lambda s, r: s.add_artifact(artifact_from_dict(r)),
    "edges": lambda s, r: s.add_assembly_edge(r["parent"], r["child"], r["note"]),
    "interactions": lambda s, r: s.add_interaction(r["a"], r["b"], r["kind"], r["note"]),
    "batch_records": _add_batch_record,
    "tasks": lambda s, r: s.add_task(TaskNode(r["id"], r["name"], r["domain"])),
    "activities": lambda s, r: s.add_activity(ActivityNode(r["id"], r["name"], tuple(r["tasks"]))),
    "processes": lambda s, r: s.add_process(ProcessNode(r["id"], r["name"], tuple(r["activities"]))),
    "info_flows": lambda s, r: s.add_info_flow(InfoFlowEdge(r["source"], r["target"], r["payload"])),
    "teams": lambda s, r: s.add_team(Team(r["id"], r["name"], r["responsible_for"])),
    "actors": lambda s, r: s.add_actor(ActorRecord(r["id"], r["name"], r["role"], r["team"])),
    "competences": lambda s, r: s.add_competence(Competence(r["actor"], r["domain"], r["level"])),
    "team_interactions": lambda s, r: s.set_team_interaction(r["a"], r["b"], r["frequency"]),
    "viewpoints": _add_viewpoint,
    "viewpoint_relationships": lambda s, r: s.add_viewpoint_relationship(
        ViewpointRelationship(r["from"], r["to"], r["label"])
    ),
    "profiles": _add_profile,
    "proposals": _add_proposal,
    "annotations": _add_annotation,
}


def loads(text: str) -> PPCOStore:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise ParseError(f"missing snapshot header {HEADER!r}")
    store = PPCOStore()
    section: str | None = None
    seen: list[str] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            if section not in _LOADERS:
                raise ParseError(f"line {lineno}: unknown section [{section}]")
            if section in seen:
                raise ParseError(f"line {lineno}: section [{section}] repeated")
            if seen and SECTIONS.index(section) < SECTIONS.index(seen[-1]):
                raise ParseError(f"line {lineno}: section [{section}] out of order")
            seen.append(section)
            continue
        if section is None:
            raise ParseError(f"line {lineno}: record outside any section")
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        if not isinstance(rec, dict):
            raise ParseError(f"line {lineno}: record must be a JSON object")
        try:
            _LOADERS[section](store, rec)
        except UnknownId as exc:
            raise ReferentialIntegrity(f"line {lineno}: {exc}") from None
        except PPCOError as exc:
            raise type(exc)(f"line {lineno}: {exc}") from None
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"line {lineno}: bad [{section}] record: {exc!r}") from None
    try:
        store.validate()
    except UnknownId as exc:
        raise ReferentialIntegrity(str(exc)) from None
    return store


def save(store: PPCOStore, path: str | Path) -> None:
    """Write atomically: the target is replaced only by a complete file."""
    store.validate()
    path = Path(path)
    text = dumps(store)
    tmp = None
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if tmp is not None and os.path.exists(tmp):
            os.unlink(tmp)
        raise Io(f"cannot write snapshot {path}: {exc}") from None


def load(path: str | Path) -> PPCOStore:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise Io(f"cannot read snapshot {path}: {exc}") from None
    return loads(text)


def load_cyclone_fixture() -> PPCOStore:
    text = resources.files("ppco").joinpath("data/cyclone.snap").read_text(encoding="utf-8")
    return loads(text)


CYCLONE_ROOT = "381009"

"""Product, process and organization metadata held as a typed in-memory graph.

The :class:`PPCOStore` is the single mutable owner of all state (product
structure, process trees, organization, viewpoints, access profiles and
workflow records). Mutations go through its ``add_*``/``replace_*`` methods,
which enforce the model invariants eagerly; :meth:`PPCOStore.validate`
re-checks everything in one pass and is what snapshot loading relies on.
"""

from __future__ import annotations

import copy
import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field, fields
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import TYPE_CHECKING, ClassVar

import numpy as np

from ppco.errors import (
    CycleDetected,
    DuplicateId,
    InvariantViolation,
    SelfInteraction,
    UnknownActor,
    UnknownArtifact,
    UnknownId,
)

if TYPE_CHECKING:
    from ppco.viewpoints import BatchAccessProfile, Viewpoint, ViewpointRelationship
    from ppco.workflow import Annotation, ChangeProposal

_INT_ID = re.compile(r"^\d+$")

# Abbreviations seen in display timestamps; offsets in hours east of UTC.
_TZ_OFFSETS = {
    "UTC": 0, "GMT": 0, "WET": 0, "WEST": 1, "CET": 1, "CEST": 2,
    "EET": 2, "EEST": 3, "MSK": 3, "EST": -5, "EDT": -4, "CST": -6,
    "CDT": -5, "MST": -7, "MDT": -6, "PST": -8, "PDT": -7,
}
_WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")

# DRP export configuration kept with the store: the fields withheld from
# access level N and above, and the schema location stamped on documents.
DEFAULT_REDACTION: dict[int, tuple[str, ...]] = {2: ("properties", "methods", "documentation")}
DEFAULT_SCHEMA_LOCATION = "C:\\PPCO\\schema\\DRP.xsd"


def id_sort_key(value: str) -> tuple:
    """Numeric order for integer-valued ids, lexical order otherwise."""
    if _INT_ID.match(value):
        return (0, int(value), value)
    return (1, 0, value)


@dataclass(frozen=True)
class Timestamp:
    """A display-format timestamp such as ``Sat Nov 12 07:34:44 EET 2005``.

    The display text is authoritative and is what gets exported; ``epoch``
    is derived from it and only used for ordering checks.
    """

    text: str
    epoch: float = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "epoch", _parse_display(self.text))

    @classmethod
    def from_datetime(cls, when: datetime) -> "Timestamp":
        when = when.astimezone(timezone.utc)
        return cls(when.strftime("%a %b %d %H:%M:%S UTC %Y"))

    def __str__(self) -> str:
        return self.text


def _parse_display(text: str) -> float:
    parts = text.split()
    if len(parts) != 6:
        raise ValueError(f"unrecognized timestamp {text!r}")
    weekday, month, day, clock, tz, year = parts
    if tz not in _TZ_OFFSETS:
        raise ValueError(f"unknown time zone {tz!r} in {text!r}")
    try:
        naive = datetime.strptime(f"{month} {day} {clock} {year}", "%b %d %H:%M:%S %Y")
    except ValueError as exc:
        raise ValueError(f"unrecognized timestamp {text!r}") from exc
    if _WEEKDAYS[naive.weekday()] != weekday:
        raise ValueError(f"weekday {weekday!r} does not match date in {text!r}")
    aware = naive.replace(tzinfo=timezone(timedelta(hours=_TZ_OFFSETS[tz])))
    return aware.timestamp()


def _as_timestamp(value: Timestamp | str) -> Timestamp:
    return value if isinstance(value, Timestamp) else Timestamp(value)


@dataclass(frozen=True, kw_only=True)
class ArtifactNode:
    """A product component and its authorship metadata.

    ``is_complete`` is only carried by root artifacts. ``type_code`` is an
    opaque signed integer: stored and compared, never interpreted.
    """

    id: str
    name: str
    class_name: str = "ARTIFACT"
    properties_ref: str = ""
    methods_ref: str = ""
    documentation_ref: str = ""
    description: str = ""
    created_by: str
    creation_date: Timestamp
    last_update_by: str | None = None
    last_update_date: Timestamp | None = None
    type_code: int = 0
    is_complete: bool | None = None

    # Fields an approved change proposal on the Artifact batch may rewrite.
    EDITABLE: ClassVar[tuple[str, ...]] = (
        "name", "class_name", "properties_ref", "methods_ref",
        "documentation_ref", "description", "type_code", "is_complete",
    )

    def __post_init__(self) -> None:
        if not _INT_ID.match(self.id):
            raise InvariantViolation(f"artifact id must be integer-valued, got {self.id!r}")
        object.__setattr__(self, "creation_date", _as_timestamp(self.creation_date))
        if self.last_update_by is None:
            object.__setattr__(self, "last_update_by", self.created_by)
        if self.last_update_date is None:
            object.__setattr__(self, "last_update_date", self.creation_date)
        else:
            object.__setattr__(self, "last_update_date", _as_timestamp(self.last_update_date))
        if isinstance(self.type_code, bool) or not isinstance(self.type_code, int):
            raise InvariantViolation(f"type_code must be an integer, got {self.type_code!r}")
        if self.creation_date.epoch > self.last_update_date.epoch:
            raise InvariantViolation(
                f"artifact {self.id}: last update precedes creation"
            )


@dataclass(frozen=True)
class AssemblyEdge:
    parent: str
    child: str
    relationship_note: str = ""


class InteractionKind(str, Enum):
    SPACE = "Space"
    ENERGY = "Energy"
    MATERIAL = "Material"
    INFORMATION = "Information"


@dataclass(frozen=True)
class Interaction:
    """Undirected component interaction, stored with ``a`` before ``b``."""

    a: str
    b: str
    kind: InteractionKind
    note: str = ""

    @property
    def key(self) -> tuple[str, str, InteractionKind]:
        return (self.a, self.b, self.kind)


@dataclass(frozen=True)
class BatchRecord:
    """Content attached to an artifact under one batch category."""

    id: str
    owner: str
    payload: str = ""

    batch_kind: ClassVar[str] = ""


@dataclass(frozen=True)
class FunctionSpec(BatchRecord):
    batch_kind: ClassVar[str] = "Function"


@dataclass(frozen=True)
class BehaviorSpec(BatchRecord):
    batch_kind: ClassVar[str] = "Behavior"


@dataclass(frozen=True)
class FlowSpec(BatchRecord):
    # Flows hang off the artifact; the function they serve is referenced.
    function_ref: str | None = None

    batch_kind: ClassVar[str] = "Flows"


@dataclass(frozen=True)
class GeometryRef(BatchRecord):
    """Pointer to an external CAD document; geometry itself is not stored."""

    batch_kind: ClassVar[str] = "Geometry-Form"


@dataclass(frozen=True)
class ConstraintSpec(BatchRecord):
    batch_kind: ClassVar[str] = "Constraints"


@dataclass(frozen=True)
class RequirementSpec(BatchRecord):
    batch_kind: ClassVar[str] = "Requirements"


RECORD_TYPES: dict[str, type[BatchRecord]] = {
    cls.batch_kind: cls
    for cls in (FunctionSpec, BehaviorSpec, FlowSpec, GeometryRef, ConstraintSpec, RequirementSpec)
}


@dataclass(frozen=True)
class TaskNode:
    id: str
    name: str
    domain: str = ""


@dataclass(frozen=True)
class ActivityNode:
    id: str
    name: str
    tasks: tuple[str, ...] = ()


@dataclass(frozen=True)
class ProcessNode:
    id: str
    name: str
    activities: tuple[str, ...]


@dataclass(frozen=True)
class InfoFlowEdge:
    source: str
    target: str
    payload: str = ""


@dataclass(frozen=True)
class Team:
    id: str
    name: str
    responsible_for: str


@dataclass(frozen=True)
class ActorRecord:
    id: str
    name: str
    role: str
    team: str


@dataclass(frozen=True)
class Competence:
    actor: str
    domain: str
    level: int


@dataclass(frozen=True)
class TeamInteraction:
    a: str
    b: str
    frequency: float


class PPCOStore:
    """All product, process, organization and viewpoint state.

    Writes are expected from a single owner at a time; :meth:`copy` yields an
    independent value that can be handed to concurrent readers.
    """

    def __init__(self) -> None:
        self.artifacts: dict[str, ArtifactNode] = {}
        self.edges: dict[tuple[str, str], AssemblyEdge] = {}
        self._children: dict[str, list[str]] = {}
        self._parents: dict[str, list[str]] = {}
        self.interactions: dict[tuple[str, str, InteractionKind], Interaction] = {}
        self.batch_records: dict[str, BatchRecord] = {}

        self.tasks: dict[str, TaskNode] = {}
        self.activities: dict[str, ActivityNode] = {}
        self.processes: dict[str, ProcessNode] = {}
        self.info_flows: list[InfoFlowEdge] = []
        self._task_activity: dict[str, str] = {}
        self._activity_process: dict[str, str] = {}

        self.teams: dict[str, Team] = {}
        self.actors: dict[str, ActorRecord] = {}
        self.competences: dict[tuple[str, str], Competence] = {}
        self.team_interactions: dict[tuple[str, str], TeamInteraction] = {}

        self.viewpoints: dict[str, Viewpoint] = {}
        self.viewpoint_relationships: list[ViewpointRelationship] = []
        self.profiles: dict[tuple[str, int], BatchAccessProfile] = {}
        self.redaction: dict[int, tuple[str, ...]] = dict(DEFAULT_REDACTION)
        self.drp_schema_location = DEFAULT_SCHEMA_LOCATION

        self.proposals: dict[str, ChangeProposal] = {}
        self.annotations: list[Annotation] = []

    def copy(self) -> "PPCOStore":
        return copy.deepcopy(self)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PPCOStore):
            return NotImplemented
        return vars(self) == vars(other)

    __hash__ = None  # type: ignore[assignment]

    # -- product -------------------------------------------------------

    def add_artifact(self, node: ArtifactNode) -> str:
        if node.id in self.artifacts:
            raise DuplicateId(f"artifact {node.id} already present")
        self.artifacts[node.id] = node
        self._children[node.id] = []
        self._parents[node.id] = []
        return node.id

    def get_artifact(self, artifact_id: str) -> ArtifactNode:
        try:
            return self.artifacts[artifact_id]
        except KeyError:
            raise UnknownArtifact(f"unknown artifact {artifact_id}") from None

    def replace_artifact(self, node: ArtifactNode) -> None:
        self.get_artifact(node.id)
        if node.is_complete is not None and self._parents[node.id]:
            raise InvariantViolation(f"artifact {node.id} is not a root; is_complete not allowed")
        self.artifacts[node.id] = node

    def add_assembly_edge(self, parent: str, child: str, relationship_note: str = "") -> AssemblyEdge:
        self.get_artifact(parent)
        child_node = self.get_artifact(child)
        if parent == child:
            raise CycleDetected(f"self-loop on {parent}")
        if (parent, child) in self.edges:
            raise DuplicateId(f"edge {parent} -> {child} already present")
        if parent in self._descendants(child):
            raise CycleDetected(f"edge {parent} -> {child} closes a cycle")
        if child_node.is_complete is not None:
            raise InvariantViolation(f"artifact {child} carries is_complete and cannot become a child")
        edge = AssemblyEdge(parent, child, relationship_note)
        self.edges[(parent, child)] = edge
        self._children[parent].append(child)
        self._parents[child].append(parent)
        return edge

    def children(self, artifact_id: str) -> list[str]:
        self.get_artifact(artifact_id)
        return list(self._children[artifact_id])

    def parents(self, artifact_id: str) -> list[str]:
        self.get_artifact(artifact_id)
        return list(self._parents[artifact_id])

    def roots(self) -> list[str]:
        return [a for a in self.artifacts if not self._parents[a]]

    def _descendants(self, start: str) -> set[str]:
        seen: set[str] = set()
        stack = [start]
        while stack:
            for nxt in self._children[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen

    def ancestors(self, artifact_id: str) -> set[str]:
        self.get_artifact(artifact_id)
        seen: set[str] = set()
        stack = [artifact_id]
        while stack:
            for up in self._parents[stack.pop()]:
                if up not in seen:
                    seen.add(up)
                    stack.append(up)
        return seen

    def decomposition(self, root: str) -> list[str]:
        """Depth-first pre-order from ``root``; children in insertion order.

        Shared sub-assemblies are listed once, at their first visit.
        """
        self.get_artifact(root)
        order: list[str] = []
        seen: set[str] = set()

        def visit(node: str) -> None:
            seen.add(node)
            order.append(node)
            for child in self._children[node]:
                if child not in seen:
                    visit(child)

        visit(root)
        return order

    def add_interaction(
        self, a: str, b: str, kind: InteractionKind | str, note: str = ""
    ) -> Interaction:
        self.get_artifact(a)
        self.get_artifact(b)
        if a == b:
            raise SelfInteraction(f"interaction of {a} with itself")
        kind = InteractionKind(kind)
        lo, hi = sorted((a, b), key=id_sort_key)
        key = (lo, hi, kind)
        if key in self.interactions:
            return self.interactions[key]
        interaction = Interaction(lo, hi, kind, note)
        self.interactions[key] = interaction
        return interaction

    def interaction_histogram(self) -> dict[InteractionKind, int]:
        counts = {kind: 0 for kind in InteractionKind}
        for interaction in self.interactions.values():
            counts[interaction.kind] += 1
        return counts

    def add_batch_record(self, record: BatchRecord) -> BatchRecord:
        if record.id in self.batch_records:
            raise DuplicateId(f"batch record {record.id} already present")
        self._check_record(record)
        self.batch_records[record.id] = record
        return record

    def put_batch_record(self, record: BatchRecord) -> None:
        """Insert or overwrite a record; the kind of an existing id cannot change."""
        existing = self.batch_records.get(record.id)
        if existing is not None and type(existing) is not type(record):
            raise InvariantViolation(
                f"record {record.id} is {existing.batch_kind}, not {record.batch_kind}"
            )
        self._check_record(record)
        self.batch_records[record.id] = record

    def _check_record(self, record: BatchRecord) -> None:
        if type(record) is BatchRecord:
            raise InvariantViolation("batch records must use a concrete record type")
        if record.owner not in self.artifacts:
            raise UnknownArtifact(f"record {record.id} owner {record.owner} unknown")
        if isinstance(record, FlowSpec) and record.function_ref is not None:
            target = self.batch_records.get(record.function_ref)
            if not isinstance(target, FunctionSpec):
                raise UnknownId(f"flow {record.id} references unknown function {record.function_ref}")

    def records_for(self, owner: str, batch_kind: str | None = None) -> list[BatchRecord]:
        return [
            r for r in self.batch_records.values()
            if r.owner == owner and (batch_kind is None or r.batch_kind == batch_kind)
        ]

    # -- process -------------------------------------------------------

    def add_task(self, task: TaskNode) -> TaskNode:
        if task.id in self.tasks:
            raise DuplicateId(f"task {task.id} already present")
        self.tasks[task.id] = task
        return task

    def add_activity(self, activity: ActivityNode) -> ActivityNode:
        if activity.id in self.activities:
            raise DuplicateId(f"activity {activity.id} already present")
        for task_id in activity.tasks:
            if task_id not in self.tasks:
                raise UnknownId(f"activity {activity.id} references unknown task {task_id}")
            if task_id in self._task_activity:
                raise InvariantViolation(f"task {task_id} already belongs to an activity")
        self.activities[activity.id] = activity
        for task_id in activity.tasks:
            self._task_activity[task_id] = activity.id
        return activity

    def add_process(self, process: ProcessNode) -> ProcessNode:
        if process.id in self.processes:
            raise DuplicateId(f"process {process.id} already present")
        if not process.activities:
            raise InvariantViolation(f"process {process.id} has no activity")
        for act_id in process.activities:
            if act_id not in self.activities:
                raise UnknownId(f"process {process.id} references unknown activity {act_id}")
            if act_id in self._activity_process:
                raise InvariantViolation(f"activity {act_id} already belongs to a process")
        self.processes[process.id] = process
        for act_id in process.activities:
            self._activity_process[act_id] = process.id
        return process

    def process_of_task(self, task_id: str) -> str | None:
        activity = self._task_activity.get(task_id)
        return None if activity is None else self._activity_process.get(activity)

    def add_info_flow(self, flow: InfoFlowEdge) -> InfoFlowEdge:
        for end in (flow.source, flow.target):
            if end not in self.tasks:
                raise UnknownId(f"info flow endpoint {end} is not a task")
        process = self.process_of_task(flow.source)
        if process is None or process != self.process_of_task(flow.target):
            raise InvariantViolation(
                f"info flow {flow.source} -> {flow.target} crosses process trees"
            )
        if flow.source == flow.target or self._task_reaches(flow.target, flow.source):
            raise CycleDetected(f"info flow {flow.source} -> {flow.target} closes a cycle")
        self.info_flows.append(flow)
        return flow

    def _task_reaches(self, start: str, goal: str) -> bool:
        succ: dict[str, list[str]] = {}
        for f in self.info_flows:
            succ.setdefault(f.source, []).append(f.target)
        seen = {start}
        stack = [start]
        while stack:
            node = stack.pop()
            if node == goal:
                return True
            for nxt in succ.get(node, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    # -- organization --------------------------------------------------

    def add_team(self, team: Team) -> Team:
        if team.id in self.teams:
            raise DuplicateId(f"team {team.id} already present")
        self.get_artifact(team.responsible_for)
        self.teams[team.id] = team
        return team

    def add_actor(self, actor: ActorRecord) -> ActorRecord:
        if actor.id in self.actors:
            raise DuplicateId(f"actor {actor.id} already present")
        if actor.team not in self.teams:
            raise UnknownId(f"actor {actor.id} references unknown team {actor.team}")
        self.actors[actor.id] = actor
        return actor

    def get_actor(self, actor_id: str) -> ActorRecord:
        try:
            return self.actors[actor_id]
        except KeyError:
            raise UnknownActor(f"unknown actor {actor_id}") from None

    def team_members(self, team_id: str) -> list[str]:
        return sorted((a.id for a in self.actors.values() if a.team == team_id), key=id_sort_key)

    def add_competence(self, competence: Competence) -> Competence:
        self.get_actor(competence.actor)
        if competence.level < 1:
            raise InvariantViolation(f"competence level must be >= 1, got {competence.level}")
        key = (competence.actor, competence.domain)
        if key in self.competences:
            raise DuplicateId(f"competence {key} already present")
        self.competences[key] = competence
        return competence

    def set_team_interaction(self, a: str, b: str, frequency: float) -> TeamInteraction:
        for team_id in (a, b):
            if team_id not in self.teams:
                raise UnknownId(f"unknown team {team_id}")
        if a == b:
            raise InvariantViolation("team interaction matrix has a zero diagonal")
        if frequency < 0:
            raise InvariantViolation(f"frequency must be non-negative, got {frequency}")
        lo, hi = sorted((a, b), key=id_sort_key)
        record = TeamInteraction(lo, hi, frequency)
        self.team_interactions[(lo, hi)] = record
        return record

    def team_ids(self) -> list[str]:
        return sorted(self.teams, key=id_sort_key)

    def team_matrix(self) -> np.ndarray:
        """Collaboration frequencies; rows and columns follow :meth:`team_ids`."""
        order = self.team_ids()
        index = {t: i for i, t in enumerate(order)}
        matrix = np.zeros((len(order), len(order)))
        for rec in self.team_interactions.values():
            i, j = index[rec.a], index[rec.b]
            matrix[i, j] = matrix[j, i] = rec.frequency
        return matrix

    # -- viewpoints ----------------------------------------------------

    def add_viewpoint(self, vp: Viewpoint) -> Viewpoint:
        if vp.id in self.viewpoints:
            raise DuplicateId(f"viewpoint {vp.id} already present")
        self.get_actor(vp.actor)
        if not vp.scope:
            raise InvariantViolation(f"viewpoint {vp.id} has an empty scope")
        for artifact_id in vp.scope:
            self.get_artifact(artifact_id)
        if vp.competence_level < 1:
            raise InvariantViolation(f"viewpoint {vp.id} competence level must be >= 1")
        if vp.objective.activity not in self.activities:
            raise UnknownId(f"viewpoint {vp.id} objective references unknown activity")
        self.viewpoints[vp.id] = vp
        return vp

    def add_viewpoint_relationship(self, rel: ViewpointRelationship) -> ViewpointRelationship:
        for end in (rel.from_vp, rel.to_vp):
            if end not in self.viewpoints:
                raise UnknownId(f"relationship references unknown viewpoint {end}")
        if rel.from_vp == rel.to_vp:
            raise InvariantViolation(f"viewpoint {rel.from_vp} related to itself")
        self.viewpoint_relationships.append(rel)
        return rel

    def add_profile(self, profile: BatchAccessProfile) -> BatchAccessProfile:
        if profile.key in self.profiles:
            raise DuplicateId(f"profile {profile.key} already present")
        self.profiles[profile.key] = profile
        return profile

    # -- whole-store validation ---------------------------------------

    def validate(self) -> None:
        """Re-check every cross-module invariant; raise on the first failure."""
        for node_id in self.artifacts:
            is_root = not self._parents[node_id]
            if self.artifacts[node_id].is_complete is not None and not is_root:
                raise InvariantViolation(f"non-root artifact {node_id} carries is_complete")
            if is_root and self.artifacts[node_id].is_complete is None:
                raise InvariantViolation(f"root artifact {node_id} lacks is_complete")
        _check_acyclic(self.artifacts, self._children)
        for record in self.batch_records.values():
            self._check_record(record)
        matrix = self.team_matrix()
        if not np.array_equal(matrix, matrix.T) or np.any(np.diag(matrix) != 0):
            raise InvariantViolation("team interaction matrix not symmetric with zero diagonal")
        for proposal in self.proposals.values():
            proposal.check_invariants()


def _check_acyclic(nodes: Iterable[str], children: dict[str, list[str]]) -> None:
    white, grey, black = 0, 1, 2
    color = dict.fromkeys(nodes, white)

    def walk(start: str) -> None:
        stack: list[tuple[str, Iterator[str]]] = [(start, iter(children[start]))]
        color[start] = grey
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = black
                stack.pop()
            elif color[nxt] == grey:
                raise CycleDetected(f"cycle through {nxt}")
            elif color[nxt] == white:
                color[nxt] = grey
                stack.append((nxt, iter(children[nxt])))

    for node in list(color):
        if color[node] == white:
            walk(node)


def artifact_to_dict(node: ArtifactNode) -> dict:
    out = {}
    for f in fields(node):
        value = getattr(node, f.name)
        out[f.name] = value.text if isinstance(value, Timestamp) else value
    return out


def artifact_from_dict(data: dict) -> ArtifactNode:
    return ArtifactNode(**data)


__all__ = [
    "ActivityNode", "ActorRecord", "ArtifactNode", "AssemblyEdge", "BatchRecord",
    "BehaviorSpec", "Competence", "ConstraintSpec", "FlowSpec", "FunctionSpec",
    "GeometryRef", "InfoFlowEdge", "Interaction", "InteractionKind", "PPCOStore",
    "ProcessNode", "RECORD_TYPES", "RequirementSpec", "TaskNode", "Team",
    "TeamInteraction", "Timestamp", "artifact_from_dict", "artifact_to_dict",
    "id_sort_key",
]

"""Actor viewpoints and the per-artifact information filtering algorithm.

Filtering an artifact for an actor runs five steps: collect the actor's
viewpoints, keep those scoped on the artifact (or an ancestor of it),
order them by decreasing competence, look up each one's batch grants, and
fold the grant lists together keeping the fullest access per batch kind.

Access levels count down: level 1 is the fullest access to a batch, larger
numbers mean less detail. Merging therefore keeps the numeric minimum.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from ppco.errors import InvariantViolation, MissingProfile, NoApplicableViewpoint

if TYPE_CHECKING:
    from ppco.model import PPCOStore

# Core batch kinds in presentation order. Domain-specific kinds (the open
# part of the vocabulary, e.g. "Mechanic") sort ahead of these by name.
CORE_BATCH_KINDS = (
    "Artifact", "Function", "Behavior", "Flows", "Geometry-Form",
    "Sub-Artifact", "Assembly", "Constraints", "Requirements", "Group",
)
_CORE_INDEX = {kind: i for i, kind in enumerate(CORE_BATCH_KINDS)}


def batch_sort_key(kind: str) -> tuple[int, int, str]:
    if kind in _CORE_INDEX:
        return (1, _CORE_INDEX[kind], kind)
    return (0, 0, kind)


@dataclass(frozen=True)
class ViewpointObjective:
    focus: str
    activity: str
    domain: str


@dataclass(frozen=True)
class Viewpoint:
    id: str
    actor: str
    focus: str
    domain: str
    competence_level: int
    scope: frozenset[str]
    objective: ViewpointObjective

    def __post_init__(self) -> None:
        object.__setattr__(self, "scope", frozenset(self.scope))


@dataclass(frozen=True)
class ViewpointRelationship:
    from_vp: str
    to_vp: str
    label: str = ""


@dataclass(frozen=True)
class BatchConnexion:
    """Access grant on one batch kind. ``description`` is display text only."""

    batch_kind: str
    level: int
    description: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not self.batch_kind:
            raise InvariantViolation("batch kind must be non-empty")
        if isinstance(self.level, bool) or not isinstance(self.level, int) or self.level < 1:
            raise InvariantViolation(f"level must be an integer >= 1, got {self.level!r}")

    def __str__(self) -> str:
        return f"{self.batch_kind} ({self.level})"


@dataclass(frozen=True)
class BatchAccessProfile:
    """The grants handed to viewpoints of a given (domain, competence level)."""

    domain: str
    competence_level: int
    grants: tuple[BatchConnexion, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "grants", tuple(self.grants))
        _check_one_per_kind(self.grants, f"profile {self.key}")

    @property
    def key(self) -> tuple[str, int]:
        return (self.domain, self.competence_level)


@dataclass(frozen=True)
class InformationSet:
    """Merged connexions for one actor on one artifact.

    ``provenance`` maps each batch kind to the viewpoints whose grant
    reached the final level; ``relationships`` lists the declared links
    among the viewpoints that took part.
    """

    actor: str
    artifact: str
    connexions: tuple[BatchConnexion, ...]
    provenance: Mapping[str, tuple[str, ...]]
    relationships: tuple[ViewpointRelationship, ...] = ()

    def level_of(self, batch_kind: str) -> int | None:
        for conn in self.connexions:
            if conn.batch_kind == batch_kind:
                return conn.level
        return None

    def grants(self, batch_kind: str, max_level: int | None = None) -> bool:
        level = self.level_of(batch_kind)
        return level is not None and (max_level is None or level <= max_level)

    def as_levels(self) -> dict[str, int]:
        return {c.batch_kind: c.level for c in self.connexions}

    def lines(self) -> list[str]:
        return [f"{c.batch_kind} ({c.level}): {c.description}" for c in self.connexions]


def _check_one_per_kind(conns: Iterable[BatchConnexion], where: str) -> None:
    seen: set[str] = set()
    for conn in conns:
        if conn.batch_kind in seen:
            raise InvariantViolation(f"{where}: batch kind {conn.batch_kind!r} granted twice")
        seen.add(conn.batch_kind)


def restitute_viewpoints(store: PPCOStore, actor: str) -> list[Viewpoint]:
    """Every viewpoint held by ``actor``, ordered by viewpoint id."""
    store.get_actor(actor)
    return sorted((vp for vp in store.viewpoints.values() if vp.actor == actor), key=lambda v: v.id)


def filter_viewpoints_for_artifact(
    store: PPCOStore, vps: Sequence[Viewpoint], artifact: str
) -> list[Viewpoint]:
    """Keep viewpoints scoped on ``artifact`` or on one of its ancestors."""
    covering = store.ancestors(artifact) | {artifact}
    return [vp for vp in vps if vp.scope & covering]


def classify_viewpoints(vps: Iterable[Viewpoint]) -> list[Viewpoint]:
    return sorted(vps, key=lambda vp: (-vp.competence_level, vp.id))


def restitute_connexions(
    vp: Viewpoint, profiles: Mapping[tuple[str, int], BatchAccessProfile]
) -> list[BatchConnexion]:
    try:
        profile = profiles[(vp.domain, vp.competence_level)]
    except KeyError:
        raise MissingProfile(
            f"no access profile for domain {vp.domain!r} at level {vp.competence_level}"
        ) from None
    return list(profile.grants)


def optimize_connexions(
    acc: Sequence[BatchConnexion], nxt: Sequence[BatchConnexion]
) -> list[BatchConnexion]:
    """Union of two grant lists keeping the lower level for shared kinds.

    The result is in canonical batch order, so the merge is commutative as
    well as associative and idempotent. On equal levels the description of
    ``acc`` wins.
    """
    _check_one_per_kind(acc, "accumulated connexions")
    _check_one_per_kind(nxt, "next connexions")
    merged: dict[str, BatchConnexion] = {c.batch_kind: c for c in acc}
    for conn in nxt:
        held = merged.get(conn.batch_kind)
        if held is None or conn.level < held.level:
            merged[conn.batch_kind] = conn
    return sorted(merged.values(), key=lambda c: batch_sort_key(c.batch_kind))


def filter_info_artifact(store: PPCOStore, artifact: str, actor: str) -> InformationSet:
    store.get_artifact(artifact)
    candidates = restitute_viewpoints(store, actor)
    applicable = filter_viewpoints_for_artifact(store, candidates, artifact)
    if not applicable:
        raise NoApplicableViewpoint(f"no viewpoint of {actor} covers artifact {artifact}")
    ranked = classify_viewpoints(applicable)

    per_vp = [(vp, restitute_connexions(vp, store.profiles)) for vp in ranked]
    acc = per_vp[0][1]
    for _, conns in per_vp[1:]:
        acc = optimize_connexions(acc, conns)

    provenance = {}
    for conn in acc:
        provenance[conn.batch_kind] = tuple(
            vp.id for vp, conns in per_vp
            if any(c.batch_kind == conn.batch_kind and c.level == conn.level for c in conns)
        )
    ids = {vp.id for vp in ranked}
    rels = tuple(
        r for r in store.viewpoint_relationships if r.from_vp in ids and r.to_vp in ids
    )
    return InformationSet(actor, artifact, tuple(acc), provenance, rels)

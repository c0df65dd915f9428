"""Staged changes: propose, annotate concerned actors, apply on unanimous approval.

A proposal never touches the committed store while pending. Every actor
whose viewpoints cover the target and grant the affected batch must
approve it; a single rejection closes it. Writing requires a level-1
connexion on the batch.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from ppco.errors import (
    AlreadyVoted,
    InsufficientAccess,
    InvalidDecision,
    InvalidPayload,
    InvariantViolation,
    NoApplicableViewpoint,
    NotConcerned,
    NotPending,
    UnknownProposal,
    UnknownTarget,
)
from ppco.model import RECORD_TYPES, ArtifactNode, BatchRecord, PPCOStore, Timestamp, id_sort_key
from ppco.viewpoints import (
    InformationSet,
    filter_info_artifact,
    filter_viewpoints_for_artifact,
    restitute_connexions,
)

log = logging.getLogger(__name__)

WRITE_LEVEL = 1


class ProposalState(str, Enum):
    PENDING = "Pending"
    APPROVED = "Approved"
    REJECTED = "Rejected"


class Decision(str, Enum):
    APPROVE = "approve"
    REJECT = "reject"


@dataclass
class ChangeProposal:
    id: str
    author: str
    target: str
    batch_kind: str
    payload: dict[str, str]
    concerned: frozenset[str]
    state: ProposalState = ProposalState.PENDING
    votes: dict[str, Decision] = field(default_factory=dict)
    created_at: str = ""

    def check_invariants(self) -> None:
        if self.author in self.concerned:
            raise InvariantViolation(f"{self.id}: author listed among concerned actors")
        if not set(self.votes) <= self.concerned:
            raise InvariantViolation(f"{self.id}: vote from an actor outside the concerned set")
        approvals = {a for a, d in self.votes.items() if d is Decision.APPROVE}
        rejected = any(d is Decision.REJECT for d in self.votes.values())
        if self.state is ProposalState.APPROVED and (approvals != self.concerned or rejected):
            raise InvariantViolation(f"{self.id}: approved without unanimous approval")
        if self.state is ProposalState.REJECTED and not rejected:
            raise InvariantViolation(f"{self.id}: rejected without a reject vote")
        if self.state is ProposalState.PENDING and (rejected or (approvals == self.concerned)):
            raise InvariantViolation(f"{self.id}: pending although already decided")


@dataclass(frozen=True)
class Annotation:
    proposal: str
    recipient: str
    timestamp: str
    message: str
    stage: str  # "created" or "resolved"

    def log_line(self) -> str:
        return f"{self.timestamp}\t{self.proposal}\t{self.recipient}\t{self.message}"


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


def concerned_actors(store: PPCOStore, target: str, batch_kind: str) -> set[str]:
    """Actors holding a viewpoint that covers ``target`` and grants ``batch_kind``."""
    if target not in store.artifacts:
        raise UnknownTarget(f"unknown artifact {target}")
    covering = filter_viewpoints_for_artifact(store, list(store.viewpoints.values()), target)
    return {
        vp.actor for vp in covering
        if any(c.batch_kind == batch_kind for c in restitute_connexions(vp, store.profiles))
    }


class Workflow:
    """Drives proposals against one store.

    The store passed in is the committed model: it is only mutated when a
    proposal becomes Approved.
    """

    def __init__(
        self,
        store: PPCOStore,
        clock: Callable[[], datetime] = _utcnow,
        log_path: str | Path | None = None,
    ) -> None:
        self.store = store
        self.clock = clock
        self.log_path = Path(log_path) if log_path is not None else None

    def concerned_actors(self, target: str, batch_kind: str) -> set[str]:
        return concerned_actors(self.store, target, batch_kind)

    def effective_view(self, artifact: str, actor: str) -> InformationSet:
        return filter_info_artifact(self.store, artifact, actor)

    def propose_change(
        self, author: str, target: str, batch_kind: str, payload: Mapping[str, str]
    ) -> ChangeProposal:
        store = self.store
        if target not in store.artifacts:
            raise UnknownTarget(f"unknown artifact {target}")
        store.get_actor(author)
        try:
            view = filter_info_artifact(store, target, author)
        except NoApplicableViewpoint:
            raise InsufficientAccess(f"{author} holds no viewpoint on {target}") from None
        if not view.grants(batch_kind, max_level=WRITE_LEVEL):
            held = view.level_of(batch_kind)
            raise InsufficientAccess(
                f"{author} holds {batch_kind} at level {held}; writing needs level {WRITE_LEVEL}"
            )
        payload = dict(payload)
        # Validate now so approval can never fail half-way.
        self._materialize(target, batch_kind, payload, author, self._stamp())

        concerned = frozenset(self.concerned_actors(target, batch_kind) - {author})
        proposal = ChangeProposal(
            id=self._next_id(),
            author=author,
            target=target,
            batch_kind=batch_kind,
            payload=payload,
            concerned=concerned,
            created_at=self._now_iso(),
        )
        store.proposals[proposal.id] = proposal
        for actor in sorted(concerned, key=id_sort_key):
            self._annotate(
                proposal, actor, "created",
                f"{author} proposes a change to {batch_kind} of artifact {target}; approval requested",
            )
        if not concerned:
            # Nobody else shares the batch: unanimity holds vacuously.
            self._commit(proposal)
        return proposal

    def vote(self, proposal_id: str, actor: str, decision: Decision | str) -> ChangeProposal:
        try:
            proposal = self.store.proposals[proposal_id]
        except KeyError:
            raise UnknownProposal(f"unknown proposal {proposal_id}") from None
        try:
            decision = Decision(decision)
        except ValueError:
            raise InvalidDecision(f"decision must be approve or reject, got {decision!r}") from None
        if proposal.state is not ProposalState.PENDING:
            raise NotPending(f"{proposal_id} is {proposal.state.value}")
        if actor not in proposal.concerned:
            raise NotConcerned(f"{actor} is not concerned by {proposal_id}")
        if actor in proposal.votes:
            raise AlreadyVoted(f"{actor} already voted on {proposal_id}")

        proposal.votes[actor] = decision
        if decision is Decision.REJECT:
            proposal.state = ProposalState.REJECTED
            self._resolve_annotations(proposal, f"rejected by {actor}")
        elif set(proposal.votes) == proposal.concerned:
            self._commit(proposal)
            self._resolve_annotations(proposal, "approved by all concerned actors and applied")
        return proposal

    def _commit(self, proposal: ChangeProposal) -> None:
        node, records = self._materialize(
            proposal.target, proposal.batch_kind, proposal.payload, proposal.author, self._stamp()
        )
        # Everything is built and checked before the first write.
        for record in records:
            self.store.put_batch_record(record)
        self.store.replace_artifact(node)
        proposal.state = ProposalState.APPROVED
        log.info("proposal %s applied to %s", proposal.id, proposal.target)

    def _materialize(
        self, target: str, batch_kind: str, payload: dict[str, str], author: str, stamp: Timestamp
    ) -> tuple[ArtifactNode, list[BatchRecord]]:
        if not payload:
            raise InvalidPayload("empty payload")
        node = self.store.get_artifact(target)
        touched = {"last_update_by": author, "last_update_date": stamp}
        if batch_kind == "Artifact":
            changes = {}
            for key, value in payload.items():
                if key not in ArtifactNode.EDITABLE:
                    raise InvalidPayload(f"field {key!r} is not editable")
                changes[key] = _coerce_field(key, value)
            if "is_complete" in changes and self.store.parents(target):
                raise InvalidPayload("is_complete is only carried by root artifacts")
            try:
                return replace(node, **changes, **touched), []
            except InvariantViolation as exc:
                raise InvalidPayload(str(exc)) from None
        record_type = RECORD_TYPES.get(batch_kind)
        if record_type is None:
            raise InvalidPayload(f"batch {batch_kind!r} carries no editable content")
        records = []
        for record_id, text in payload.items():
            existing = self.store.batch_records.get(record_id)
            if existing is None:
                records.append(record_type(id=record_id, owner=target, payload=text))
            elif type(existing) is not record_type or existing.owner != target:
                raise InvalidPayload(f"record {record_id} is not a {batch_kind} record of {target}")
            else:
                records.append(replace(existing, payload=text))
        return replace(node, **touched), records

    def _resolve_annotations(self, proposal: ChangeProposal, outcome: str) -> None:
        for actor in sorted(proposal.concerned, key=id_sort_key):
            self._annotate(proposal, actor, "resolved", f"proposal {proposal.id} {outcome}")

    def _annotate(self, proposal: ChangeProposal, recipient: str, stage: str, message: str) -> None:
        note = Annotation(proposal.id, recipient, self._now_iso(), message, stage)
        self.store.annotations.append(note)
        if self.log_path is not None:
            with self.log_path.open("a", encoding="utf-8") as fh:
                fh.write(note.log_line() + "\n")

    def _next_id(self) -> str:
        used = [int(p[1:]) for p in self.store.proposals if p[1:].isdigit()]
        return f"P{max(used, default=0) + 1}"

    def _now_iso(self) -> str:
        return self.clock().astimezone(timezone.utc).isoformat(timespec="seconds")

    def _stamp(self) -> Timestamp:
        return Timestamp.from_datetime(self.clock())


def _coerce_field(key: str, value: str):
    if key == "type_code":
        try:
            return int(value)
        except (TypeError, ValueError):
            raise InvalidPayload(f"type_code must be an integer, got {value!r}") from None
    if key == "is_complete":
        if value not in ("Yes", "No"):
            raise InvalidPayload(f"is_complete must be Yes or No, got {value!r}")
        return value == "Yes"
    return str(value)


def annotations_for(store: PPCOStore, actor: str | None = None) -> list[Annotation]:
    return [a for a in store.annotations if actor is None or a.recipient == actor]


__all__ = [
    "Annotation", "ChangeProposal", "Decision", "ProposalState", "Workflow",
    "annotations_for", "concerned_actors",
]

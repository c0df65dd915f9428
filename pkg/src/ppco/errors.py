"""Error vocabulary shared by every module.

Each exception's class name doubles as the wire-level error name used by
the CLI diagnostics and the service responses.
"""

from __future__ import annotations


class PPCOError(Exception):
    """Base class for all domain errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


# product / organization model
class DuplicateId(PPCOError):
    pass


class UnknownId(PPCOError):
    pass


class CycleDetected(PPCOError):
    pass


class SelfInteraction(PPCOError):
    pass


class InvariantViolation(PPCOError):
    """A model invariant other than identity or reference resolution failed."""


# viewpoint engine
class UnknownActor(UnknownId):
    pass


class UnknownArtifact(UnknownId):
    pass


class MissingProfile(PPCOError):
    pass


class NoApplicableViewpoint(PPCOError):
    pass


# DRP XML
class ArtifactBatchNotGranted(PPCOError):
    pass


class MalformedXml(PPCOError):
    pass


class UnknownElement(PPCOError):
    pass


class MissingRequiredField(PPCOError):
    pass


# workflow
class InsufficientAccess(PPCOError):
    pass


class UnknownTarget(UnknownId):
    pass


class UnknownProposal(UnknownId):
    pass


class InvalidPayload(PPCOError):
    pass


class InvalidDecision(PPCOError):
    pass


class NotConcerned(PPCOError):
    pass


class AlreadyVoted(PPCOError):
    pass


class NotPending(PPCOError):
    pass


# persistence
class Io(PPCOError):
    pass


class ParseError(PPCOError):
    pass


class ReferentialIntegrity(PPCOError):
    pass

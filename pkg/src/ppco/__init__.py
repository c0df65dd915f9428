"""Viewpoint-based restitution of product, process and organization metadata."""

from ppco.model import ArtifactNode, InteractionKind, PPCOStore, Timestamp
from ppco.viewpoints import (
    BatchAccessProfile,
    BatchConnexion,
    InformationSet,
    Viewpoint,
    ViewpointObjective,
    ViewpointRelationship,
    classify_viewpoints,
    filter_info_artifact,
    filter_viewpoints_for_artifact,
    optimize_connexions,
    restitute_connexions,
    restitute_viewpoints,
)

__version__ = "0.1.0"

"""DRP XML documents: export of a filtered view, parsing, and field diffs.

A DRP document carries one ``One-Artifact`` record for the requested
artifact and, when the Sub-Artifact batch is granted, one ``Sub-artifact``
record per direct component. Fields hidden at the granted level are
replaced by a generated reference line, so restricted bodies never leave
the store.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, fields, replace
from typing import TYPE_CHECKING

from ppco.errors import (
    ArtifactBatchNotGranted,
    MalformedXml,
    MissingRequiredField,
    UnknownElement,
)
from ppco.model import DEFAULT_SCHEMA_LOCATION, ArtifactNode, Timestamp

if TYPE_CHECKING:
    from ppco.model import PPCOStore
    from ppco.viewpoints import InformationSet

XSI_NS = "http://www.w3.org/2001/XMLSchema-instance"
_SCHEMA_ATTR = f"{{{XSI_NS}}}noNamespaceSchemaLocation"

# Restricted-field placeholders name the hidden field, never its content.
_REFERENCE_LABELS = {
    "properties": "Properties",
    "methods": "Methods",
    "documentation": "Documentation",
    "description": "Description",
}


@dataclass(frozen=True)
class DrpRecord:
    id: str
    name: str
    class_name: str
    properties: str
    methods: str
    documentation: str
    description: str
    created_by: str
    creation_date: str
    last_update_by: str
    last_update_date: str
    type: int
    is_complete: bool | None = None


@dataclass(frozen=True)
class DrpDocument:
    root_artifact: DrpRecord
    sub_artifacts: tuple[DrpRecord, ...] = ()
    schema_location: str = DEFAULT_SCHEMA_LOCATION


@dataclass(frozen=True)
class DrpDifference:
    path: str
    left: object
    right: object


# (record attribute, element name); the id element name depends on the record role.
_BODY_FIELDS = (
    ("name", "name"),
    ("class_name", "class_name"),
    ("properties", "properties"),
    ("methods", "methods"),
    ("documentation", "documentation"),
    ("description", "description"),
    ("created_by", "created_by"),
    ("creation_date", "creation_date"),
    ("last_update_by", "last_update_by"),
    ("last_update_date", "last_update_date"),
    ("type", "type"),
)


def record_from_artifact(
    node: ArtifactNode, level: int, redaction: dict[int, tuple[str, ...]], include_completion: bool
) -> DrpRecord:
    record = DrpRecord(
        id=node.id,
        name=node.name,
        class_name=node.class_name,
        properties=node.properties_ref,
        methods=node.methods_ref,
        documentation=node.documentation_ref,
        description=node.description,
        created_by=node.created_by,
        creation_date=node.creation_date.text,
        last_update_by=node.last_update_by,
        last_update_date=node.last_update_date.text,
        type=node.type_code,
        is_complete=node.is_complete if include_completion else None,
    )
    hidden = hidden_fields(level, redaction)
    if not hidden:
        return record
    return replace(record, **{f: f"See {_REFERENCE_LABELS[f]} of artifact {node.id}" for f in hidden})


def hidden_fields(level: int, redaction: dict[int, tuple[str, ...]]) -> tuple[str, ...]:
    """Fields withheld at ``level``: every threshold at or below it applies."""
    hidden: list[str] = []
    for threshold in sorted(redaction):
        if threshold <= level:
            hidden.extend(f for f in redaction[threshold] if f not in hidden)
    return tuple(hidden)


def build_drp(info: InformationSet, store: PPCOStore) -> DrpDocument:
    artifact_level = info.level_of("Artifact")
    if artifact_level is None:
        raise ArtifactBatchNotGranted(
            f"{info.actor} holds no Artifact batch on {info.artifact}"
        )
    node = store.get_artifact(info.artifact)
    root = record_from_artifact(node, artifact_level, store.redaction, include_completion=True)
    subs: tuple[DrpRecord, ...] = ()
    sub_level = info.level_of("Sub-Artifact")
    if sub_level is not None:
        subs = tuple(
            record_from_artifact(store.get_artifact(c), sub_level, store.redaction, False)
            for c in store.children(info.artifact)
        )
    return DrpDocument(root, subs, store.drp_schema_location)


def export_drp(info: InformationSet, store: PPCOStore) -> str:
    return to_xml(build_drp(info, store))


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _attr(text: str) -> str:
    return _esc(text).replace('"', "&quot;")


def _record_lines(record: DrpRecord, tag: str, id_tag: str) -> list[str]:
    lines = [f"  <{tag}>", f"    <{id_tag}>{_esc(record.id)}</{id_tag}>"]
    for attr, elem in _BODY_FIELDS:
        lines.append(f"    <{elem}>{_esc(str(getattr(record, attr)))}</{elem}>")
    if record.is_complete is not None:
        lines.append(f"    <is_complete>{'Yes' if record.is_complete else 'No'}</is_complete>")
    lines.append(f"  </{tag}>")
    return lines


def to_xml(doc: DrpDocument) -> str:
    lines = [
        '<?xml version="1.0" ?>',
        f'<DRP xmlns:xsi="{XSI_NS}" xsi:noNamespaceSchemaLocation="{_attr(doc.schema_location)}">',
        "<Artifact>",
    ]
    lines += _record_lines(doc.root_artifact, "One-Artifact", "id_artifact")
    for sub in doc.sub_artifacts:
        lines += _record_lines(sub, "Sub-artifact", "id_sub_artifact")
    lines += ["</Artifact>", "</DRP>"]
    return "\n".join(lines) + "\n"


def _container_text_ok(elem: ET.Element) -> None:
    if (elem.text or "").strip():
        raise MalformedXml(f"unexpected text inside <{elem.tag}>")
    for child in elem:
        if (child.tail or "").strip():
            raise MalformedXml(f"unexpected text after <{child.tag}>")


def _parse_record(elem: ET.Element, id_tag: str, completion_allowed: bool) -> DrpRecord:
    _container_text_ok(elem)
    allowed = {id_tag: "id", **{e: a for a, e in _BODY_FIELDS}}
    if completion_allowed:
        allowed["is_complete"] = "is_complete"
    values: dict[str, str] = {}
    for child in elem:
        if child.tag not in allowed:
            raise UnknownElement(f"<{child.tag}> not allowed in <{elem.tag}>")
        if len(child):
            raise MalformedXml(f"<{child.tag}> must not have child elements")
        attr = allowed[child.tag]
        if attr in values:
            raise MalformedXml(f"<{child.tag}> repeated in <{elem.tag}>")
        values[attr] = child.text or ""
    for tag, attr in allowed.items():
        if attr != "is_complete" and attr not in values:
            raise MissingRequiredField(f"<{elem.tag}> lacks <{tag}>")

    try:
        type_code = int(values["type"])
    except ValueError:
        raise MalformedXml(f"<type> is not an integer: {values['type']!r}") from None
    for attr in ("creation_date", "last_update_date"):
        try:
            Timestamp(values[attr])
        except ValueError as exc:
            raise MalformedXml(str(exc)) from None
    completion = values.pop("is_complete", None)
    if completion not in (None, "Yes", "No"):
        raise MalformedXml(f"<is_complete> must be Yes or No, got {completion!r}")
    values["type"] = type_code
    return DrpRecord(**values, is_complete=None if completion is None else completion == "Yes")


def import_drp(text: str | bytes) -> DrpDocument:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from None
    if root.tag != "DRP":
        raise UnknownElement(f"root element must be <DRP>, got <{root.tag}>")
    unknown_attrs = set(root.attrib) - {_SCHEMA_ATTR}
    if unknown_attrs:
        raise UnknownElement(f"unexpected attributes on <DRP>: {sorted(unknown_attrs)}")
    _container_text_ok(root)

    artifacts = list(root)
    for child in artifacts:
        if child.tag != "Artifact":
            raise UnknownElement(f"<{child.tag}> not allowed in <DRP>")
    if not artifacts:
        raise MissingRequiredField("<DRP> lacks <Artifact>")
    if len(artifacts) > 1:
        raise MalformedXml("<DRP> holds more than one <Artifact>")
    artifact = artifacts[0]
    _container_text_ok(artifact)

    one: DrpRecord | None = None
    subs: list[DrpRecord] = []
    for child in artifact:
        if child.tag == "One-Artifact":
            if one is not None:
                raise MalformedXml("<Artifact> holds more than one <One-Artifact>")
            if subs:
                raise MalformedXml("<One-Artifact> must precede <Sub-artifact> records")
            one = _parse_record(child, "id_artifact", completion_allowed=True)
        elif child.tag == "Sub-artifact":
            subs.append(_parse_record(child, "id_sub_artifact", completion_allowed=False))
        else:
            raise UnknownElement(f"<{child.tag}> not allowed in <Artifact>")
    if one is None:
        raise MissingRequiredField("<Artifact> lacks <One-Artifact>")
    return DrpDocument(one, tuple(subs), root.attrib.get(_SCHEMA_ATTR, ""))


def _record_diff(prefix: str, a: DrpRecord, b: DrpRecord, id_tag: str) -> list[DrpDifference]:
    names = {"id": id_tag, **{attr: elem for attr, elem in _BODY_FIELDS}, "is_complete": "is_complete"}
    return [
        DrpDifference(f"{prefix}/{names[f.name]}", getattr(a, f.name), getattr(b, f.name))
        for f in fields(DrpRecord)
        if getattr(a, f.name) != getattr(b, f.name)
    ]


def diff_drp(a: DrpDocument, b: DrpDocument) -> list[DrpDifference]:
    """Field-level differences, each labelled with its element path."""
    out: list[DrpDifference] = []
    if a.schema_location != b.schema_location:
        out.append(DrpDifference("DRP/@xsi:noNamespaceSchemaLocation", a.schema_location, b.schema_location))
    out += _record_diff("Artifact/One-Artifact", a.root_artifact, b.root_artifact, "id_artifact")
    if len(a.sub_artifacts) != len(b.sub_artifacts):
        out.append(DrpDifference("Artifact/Sub-artifact#count", len(a.sub_artifacts), len(b.sub_artifacts)))
    for i, (sa, sb) in enumerate(zip(a.sub_artifacts, b.sub_artifacts), start=1):
        out += _record_diff(f"Artifact/Sub-artifact[{i}]", sa, sb, "id_sub_artifact")
    return out

from dataclasses import fields, replace

import pytest
from hypothesis import given, settings, strategies as st

from ppco import drp
from ppco.errors import ArtifactBatchNotGranted, MalformedXml, MissingRequiredField, UnknownElement
from ppco.model import ArtifactNode, PPCOStore
from ppco.viewpoints import BatchConnexion, InformationSet, filter_info_artifact

from conftest import DATA, ROOT

COMPLETED = (DATA / "drp_published_completed.xml").read_text(encoding="utf-8")
FRAGMENT = (DATA / "drp_published_fragment.txt").read_text(encoding="utf-8").splitlines()


def full_access(actor="ActorX", artifact=ROOT, sub_level=1):
    conns = [BatchConnexion("Artifact", 1)]
    if sub_level is not None:
        conns.append(BatchConnexion("Sub-Artifact", sub_level))
    return InformationSet(actor, artifact, tuple(conns), {c.batch_kind: ("VPT",) for c in conns})


def test_import_published_document():
    doc = drp.import_drp(COMPLETED)
    assert doc.root_artifact.id == ROOT
    assert doc.root_artifact.name == "Cyclone Vessel"
    assert doc.root_artifact.type == -732469182
    assert doc.root_artifact.is_complete is False
    assert [s.id for s in doc.sub_artifacts] == ["3011010", "5010120", "30141280"]
    assert doc.sub_artifacts[2].name == 'Casket 14" '  # trailing space survives
    assert doc.schema_location == "C:\\PPCO\\schema\\DRP.xsd"


def test_export_matches_published_layout(cyclone):
    lines = drp.export_drp(full_access(), cyclone).splitlines()
    assert lines[0] == FRAGMENT[0]
    assert lines[1].startswith(FRAGMENT[1])  # the printed attribute is cut short
    # The last printed record stops after <methods>; everything before it matches exactly.
    body = FRAGMENT[2:-1]
    assert lines[2:2 + len(body)] == body


def test_export_round_trip(cyclone):
    for info in (full_access(), filter_info_artifact(cyclone, ROOT, "ActorX"),
                 filter_info_artifact(cyclone, ROOT, "ActorY")):
        doc = drp.build_drp(info, cyclone)
        assert drp.import_drp(drp.to_xml(doc)) == doc
        assert drp.diff_drp(doc, drp.import_drp(drp.export_drp(info, cyclone))) == []


def test_completed_document_round_trip():
    doc = drp.import_drp(COMPLETED)
    assert drp.to_xml(doc).rstrip("\n") == COMPLETED.rstrip("\n")


def test_actorx_export(cyclone):
    info = filter_info_artifact(cyclone, ROOT, "ActorX")
    doc = drp.build_drp(info, cyclone)
    assert doc.root_artifact == drp.import_drp(COMPLETED).root_artifact
    assert len(doc.sub_artifacts) == len(cyclone.children(ROOT))


def test_unknown_element_rejected():
    bad = COMPLETED.replace("<methods>See Methods N°MT002</methods>",
                            "<methods>See Methods N°MT002</methods><bogus/>")
    with pytest.raises(UnknownElement):
        drp.import_drp(bad)


@pytest.mark.parametrize("text,error", [
    ("<DRP><Artifact>", MalformedXml),
    ("<Other/>", UnknownElement),
    ("<DRP/>", MissingRequiredField),
    ("<DRP><Artifact/></DRP>", MissingRequiredField),
])
def test_import_errors(text, error):
    with pytest.raises(error):
        drp.import_drp(text)


def test_missing_field_rejected():
    with pytest.raises(MissingRequiredField):
        drp.import_drp(COMPLETED.replace("    <type>-732469182</type>\n", ""))
    with pytest.raises(MalformedXml):
        drp.import_drp(COMPLETED.replace("<type>-732469182</type>", "<type>x</type>"))


def _naive_diff(a, b):
    """Oracle: walk every record field by position, no shared code with diff_drp."""
    out = set()
    if a.schema_location != b.schema_location:
        out.add("DRP/@xsi:noNamespaceSchemaLocation")
    pairs = [("Artifact/One-Artifact", a.root_artifact, b.root_artifact, "id_artifact")]
    pairs += [(f"Artifact/Sub-artifact[{i + 1}]", x, y, "id_sub_artifact")
              for i, (x, y) in enumerate(zip(a.sub_artifacts, b.sub_artifacts))]
    for prefix, x, y, id_tag in pairs:
        for f in fields(x):
            if getattr(x, f.name) != getattr(y, f.name):
                out.add(f"{prefix}/{id_tag if f.name == 'id' else f.name}")
    if len(a.sub_artifacts) != len(b.sub_artifacts):
        out.add("Artifact/Sub-artifact#count")
    return out


def test_diff_cases():
    doc = drp.import_drp(COMPLETED)
    assert drp.diff_drp(doc, doc) == []
    renamed = replace(doc, root_artifact=replace(doc.root_artifact, name="Cyclone"))
    d = drp.diff_drp(doc, renamed)
    assert [(x.path, x.left, x.right) for x in d] == [("Artifact/One-Artifact/name", "Cyclone Vessel", "Cyclone")]
    fewer = replace(doc, sub_artifacts=doc.sub_artifacts[:1])
    assert [x.path for x in drp.diff_drp(doc, fewer)] == ["Artifact/Sub-artifact#count"]


_EDITABLE = ("name", "properties", "methods", "description", "created_by", "type")


@settings(max_examples=80)
@given(st.lists(st.tuples(st.integers(0, 3), st.sampled_from(_EDITABLE)), max_size=6),
       st.booleans(), st.booleans())
def test_diff_agrees_with_field_walk(edits, drop_sub, move_schema):
    a = drp.import_drp(COMPLETED)
    records = [a.root_artifact, *a.sub_artifacts]
    for idx, name in edits:
        value = 7 if name == "type" else "changed"
        records[idx] = replace(records[idx], **{name: value})
    b = drp.DrpDocument(records[0], tuple(records[1:3] if drop_sub else records[1:]),
                        "other.xsd" if move_schema else a.schema_location)
    assert {d.path for d in drp.diff_drp(a, b)} == _naive_diff(a, b)


def test_no_artifact_batch(cyclone):
    info = InformationSet("ActorX", ROOT, (BatchConnexion("Group", 1),), {"Group": ("VPT",)})
    with pytest.raises(ArtifactBatchNotGranted):
        drp.build_drp(info, cyclone)


def test_sub_artifacts_need_grant(cyclone):
    doc = drp.build_drp(full_access(sub_level=None), cyclone)
    assert doc.sub_artifacts == ()
    assert "<Sub-artifact>" not in drp.to_xml(doc)


def test_one_node_product():
    s = PPCOStore()
    s.add_artifact(ArtifactNode(id="1", name="Bolt", created_by="Jean",
                                creation_date="Sat Nov 12 07:26:12 EET 2005", is_complete=True))
    doc = drp.build_drp(full_access(artifact="1"), s)
    assert doc.sub_artifacts == ()
    assert doc.root_artifact.is_complete is True
    assert drp.import_drp(drp.to_xml(doc)) == doc


def test_redaction_never_leaks(cyclone):
    info = filter_info_artifact(cyclone, ROOT, "ActorX")
    assert info.level_of("Sub-Artifact") == 2
    text = drp.export_drp(info, cyclone)
    hidden = drp.hidden_fields(2, cyclone.redaction)
    assert hidden == ("properties", "methods", "documentation")
    for child in cyclone.children(ROOT):
        node = cyclone.get_artifact(child)
        for value in (node.properties_ref, node.methods_ref, node.documentation_ref):
            assert f">{value}<" not in text.split("<Sub-artifact>", 1)[1]
    assert "316L Stainless Steel" not in text
    assert "See Properties of artifact 3011010" in text


def test_hidden_fields_accumulate():
    red = {2: ("properties",), 3: ("description",)}
    assert drp.hidden_fields(1, red) == ()
    assert drp.hidden_fields(2, red) == ("properties",)
    assert drp.hidden_fields(4, red) == ("properties", "description")

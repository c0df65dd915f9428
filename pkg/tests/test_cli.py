import pytest

from ppco import cli, drp, store as snapshots

from conftest import ACTORX_MERGED, ROOT


@pytest.fixture
def snap(tmp_path, monkeypatch):
    monkeypatch.delenv("PPCO_SNAPSHOT", raising=False)
    path = tmp_path / "model.snap"
    assert cli.run(["--snapshot", str(path), "load"]) == 0
    return path


def run(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_load_prints_summary(snap, capsys):
    code, out, _ = run(capsys, "--snapshot", str(snap), "show")
    assert code == 0
    assert "artifacts: 19" in out
    assert "interactions: 38 (Space 14, Energy 6, Material 10, Information 8)" in out


def test_filter_text(snap, capsys):
    code, out, _ = run(capsys, "--snapshot", str(snap), "filter", "--actor", "ActorX", "--artifact", ROOT)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "Batch (Level):"
    assert [line.split(":")[0] for line in lines[1:]] == [f"{k} ({v})" for k, v in ACTORX_MERGED]


def test_globals_after_verb(snap, capsys):
    a = run(capsys, "--snapshot", str(snap), "filter", "--actor", "ActorX", "--artifact", ROOT)
    b = run(capsys, "filter", "--actor", "ActorX", "--artifact", ROOT, "--snapshot", str(snap))
    assert a == b


def test_export_xml(snap, capsys, tmp_path):
    out_file = tmp_path / "view.xml"
    code, out, _ = run(capsys, "--snapshot", str(snap), "--output", str(out_file),
                       "export", "--actor", "ActorX", "--artifact", ROOT)
    assert code == 0 and out == ""
    doc = drp.import_drp(out_file.read_text(encoding="utf-8"))
    assert doc.root_artifact.name == "Cyclone Vessel"
    code, text, _ = run(capsys, "--snapshot", str(snap), "--format", "text",
                        "export", "--actor", "ActorX", "--artifact", ROOT)
    assert "Artifact/One-Artifact/name: Cyclone Vessel" in text


def test_propose_vote_log(snap, capsys):
    base = ["--snapshot", str(snap)]
    code, out, _ = run(capsys, *base, "propose", "--actor", "ActorX", "--artifact", "3011010",
                       "--batch", "Geometry-Form", "--set", "GE-02=CAD:rev2")
    assert (code, out) == (0, "P1 Pending concerned=ActorZ\n")
    code, _, err = run(capsys, *base, "vote", "--proposal", "P1", "--actor", "ActorY", "--decision", "approve")
    assert code == 1
    assert err.startswith("ppco: NotConcerned:")
    code, out, _ = run(capsys, *base, "vote", "--proposal", "P1", "--actor", "ActorZ", "--decision", "approve")
    assert (code, out) == (0, "P1 Approved concerned=ActorZ\n")
    assert snapshots.load(snap).batch_records["GE-02"].payload == "CAD:rev2"
    code, out, _ = run(capsys, *base, "log", "--actor", "ActorZ")
    assert len(out.splitlines()) == 2
    assert snap.with_suffix(".log").read_text(encoding="utf-8").count("\n") == 2


def test_error_exit_code(snap, capsys):
    code, _, err = run(capsys, "--snapshot", str(snap), "filter", "--actor", "Ghost", "--artifact", ROOT)
    assert code == 1
    assert "UnknownActor" in err


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["filter", "--actor", "ActorX"],
    ["vote", "--proposal", "P1", "--actor", "ActorY", "--decision", "perhaps"],
    ["propose", "--actor", "ActorX", "--artifact", ROOT, "--batch", "Constraints", "--set", "novalue"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.run(argv)
    assert exc.value.code == 2


def test_output_is_deterministic(snap, capsys):
    argv = ["--snapshot", str(snap), "export", "--actor", "ActorY", "--artifact", ROOT]
    assert run(capsys, *argv) == run(capsys, *argv)


def test_bundled_fallback(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("PPCO_SNAPSHOT", str(tmp_path / "absent.snap"))
    code, out, _ = run(capsys, "show", "viewpoints")
    assert code == 0
    assert [line.split("\t")[0] for line in out.splitlines()] == ["VP01", "VP02", "VP03", "VP04"]
    assert not (tmp_path / "absent.snap").exists()

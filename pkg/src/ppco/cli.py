"""Command line front end: ``ppco [globals] <verb> [options]``.

Global flags may appear before or after the verb. When the snapshot file
does not exist yet, read-only verbs fall back to the bundled cyclone
corpus and mutating verbs seed the file from it.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from ppco import drp, store as snapshots
from ppco.errors import PPCOError
from ppco.model import PPCOStore
from ppco.viewpoints import filter_info_artifact
from ppco.workflow import Workflow, annotations_for

DEFAULT_SNAPSHOT = "ppco.snap"
VERBS = ("load", "show", "filter", "export", "propose", "vote", "log")


def _add_globals(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--snapshot", default=default, help="snapshot file (default: $PPCO_SNAPSHOT or ppco.snap)")
    parser.add_argument("--output", default=default, help="write the result to this file instead of stdout")
    parser.add_argument("--format", choices=("text", "xml"), default=default,
                        help="text or xml (default: xml for export, text otherwise)")
    parser.add_argument("--log", default=default, help="annotation event log (default: <snapshot>.log)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppco", description=__doc__.splitlines()[0])
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="verb", required=True, metavar="{" + ",".join(VERBS) + "}")

    p = sub.add_parser("load", help="validate a snapshot (or the bundled corpus) and store it")
    p.add_argument("--from", dest="source", help="snapshot file to import; default: bundled cyclone corpus")

    p = sub.add_parser("show", help="inspect the model")
    p.add_argument(
        "topic", nargs="?", default="summary",
        choices=("summary", "tree", "interactions", "teams", "viewpoints", "profiles", "proposals"),
    )
    p.add_argument("--artifact", help="root of the tree to print")

    for verb, text in (("filter", "list the batches an actor receives"), ("export", "write the DRP XML view")):
        p = sub.add_parser(verb, help=text)
        p.add_argument("--actor", required=True)
        p.add_argument("--artifact", required=True)

    p = sub.add_parser("propose", help="stage a change for approval")
    p.add_argument("--actor", required=True)
    p.add_argument("--artifact", required=True)
    p.add_argument("--batch", required=True, help="affected batch kind, e.g. Constraints")
    p.add_argument("--set", dest="changes", action="append", required=True, metavar="KEY=VALUE",
                   help="field (Artifact batch) or record id (content batches) and its new value")

    p = sub.add_parser("vote", help="approve or reject a pending proposal")
    p.add_argument("--proposal", required=True)
    p.add_argument("--actor", required=True)
    p.add_argument("--decision", required=True, choices=("approve", "reject"))

    p = sub.add_parser("log", help="print workflow annotations")
    p.add_argument("--actor", help="only annotations addressed to this actor")

    for child in sub.choices.values():
        _add_globals(child, suppress=True)
    return parser


def _snapshot_path(args: argparse.Namespace) -> Path:
    return Path(args.snapshot or os.environ.get("PPCO_SNAPSHOT") or DEFAULT_SNAPSHOT)


def _open_store(args: argparse.Namespace) -> PPCOStore:
    path = _snapshot_path(args)
    if path.exists():
        return snapshots.load(path)
    return snapshots.load_cyclone_fixture()


def _log_path(args: argparse.Namespace) -> Path:
    return Path(args.log) if args.log else _snapshot_path(args).with_suffix(".log")


def _emit(args: argparse.Namespace, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _summary(s: PPCOStore) -> str:
    hist = s.interaction_histogram()
    lines = [
        f"artifacts: {len(s.artifacts)}",
        f"roots: {', '.join(s.roots())}",
        f"interactions: {len(s.interactions)} ("
        + ", ".join(f"{k.value} {v}" for k, v in hist.items()) + ")",
        f"processes: {len(s.processes)}",
        f"teams: {len(s.teams)}",
        f"actors: {len(s.actors)}",
        f"viewpoints: {len(s.viewpoints)}",
        f"profiles: {len(s.profiles)}",
        f"proposals: {len(s.proposals)}",
    ]
    return "\n".join(lines) + "\n"


def _tree(s: PPCOStore, root: str) -> str:
    lines: list[str] = []

    def walk(node: str, depth: int) -> None:
        a = s.get_artifact(node)
        lines.append(f"{'  ' * depth}{a.id} {a.name}")
        for child in s.children(node):
            walk(child, depth + 1)

    walk(root, 0)
    return "\n".join(lines) + "\n"


def _show(s: PPCOStore, args: argparse.Namespace) -> str:
    topic = args.topic
    if topic == "summary" and args.artifact is None:
        return _summary(s)
    if topic in ("summary", "tree"):
        roots = [args.artifact] if args.artifact else s.roots()
        return "".join(_tree(s, r) for r in roots)
    if topic == "interactions":
        return "".join(f"{i.a} {i.b} {i.kind.value}\n" for i in s.interactions.values())
    if topic == "teams":
        order = s.team_ids()
        m = s.team_matrix()
        out = ["team\t" + "\t".join(order)]
        for t, row in zip(order, m):
            out.append(t + "\t" + "\t".join(f"{v:g}" for v in row))
        return "\n".join(out) + "\n"
    if topic == "viewpoints":
        return "".join(
            f"{vp.id}\t{vp.actor}\t{vp.focus}\t{vp.domain}\t{vp.competence_level}\t{','.join(sorted(vp.scope))}\n"
            for vp in sorted(s.viewpoints.values(), key=lambda v: v.id)
        )
    if topic == "profiles":
        out = []
        for prof in s.profiles.values():
            out.append(f"[{prof.domain} / level {prof.competence_level}]")
            out += [f"{g.batch_kind} ({g.level}): {g.description}" for g in prof.grants]
        return "\n".join(out) + "\n"
    return "".join(
        f"{p.id}\t{p.state.value}\t{p.author}\t{p.target}\t{p.batch_kind}\tconcerned={','.join(sorted(p.concerned))}\n"
        for p in s.proposals.values()
    )


def _drp_text(doc: drp.DrpDocument) -> str:
    rows = [f"DRP/@xsi:noNamespaceSchemaLocation: {doc.schema_location}"]
    for prefix, rec in [("Artifact/One-Artifact", doc.root_artifact)] + [
        (f"Artifact/Sub-artifact[{i}]", r) for i, r in enumerate(doc.sub_artifacts, start=1)
    ]:
        for key, value in vars(rec).items():
            if value is not None:
                rows.append(f"{prefix}/{key}: {value}")
    return "\n".join(rows) + "\n"


def _dispatch(args: argparse.Namespace) -> None:
    verb = args.verb
    if verb == "load":
        s = snapshots.load(args.source) if args.source else snapshots.load_cyclone_fixture()
        snapshots.save(s, _snapshot_path(args))
        _emit(args, _summary(s))
        return

    s = _open_store(args)
    if verb == "show":
        _emit(args, _show(s, args))
    elif verb in ("filter", "export"):
        info = filter_info_artifact(s, args.artifact, args.actor)
        if verb == "filter" and args.format == "text":
            _emit(args, "Batch (Level):\n" + "".join(line + "\n" for line in info.lines()))
        elif args.format == "xml":
            _emit(args, drp.export_drp(info, s))
        else:
            _emit(args, _drp_text(drp.build_drp(info, s)))
    elif verb == "log":
        _emit(args, "".join(a.log_line() + "\n" for a in annotations_for(s, args.actor)))
    else:
        flow = Workflow(s, log_path=_log_path(args))
        if verb == "propose":
            proposal = flow.propose_change(args.actor, args.artifact, args.batch, args.payload)
        else:
            proposal = flow.vote(args.proposal, args.actor, args.decision)
        snapshots.save(s, _snapshot_path(args))
        concerned = ",".join(sorted(proposal.concerned)) or "-"
        _emit(args, f"{proposal.id} {proposal.state.value} concerned={concerned}\n")


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = "xml" if args.verb == "export" else "text"
    if args.verb == "propose":
        args.payload = {}
        for item in args.changes:
            key, sep, value = item.partition("=")
            if not sep or not key:
                parser.error(f"--set expects KEY=VALUE, got {item!r}")
            args.payload[key] = value
    try:
        _dispatch(args)
    except PPCOError as exc:
        print(f"ppco: {exc.name}: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()

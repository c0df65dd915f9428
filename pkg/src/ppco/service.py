"""HTTP facade over filtering, export and the proposal workflow.

Reads are served from an immutable published snapshot. Every mutation is
funnelled through a one-thread executor that owns the live store; after a
mutation the executor publishes a fresh copy with a single reference swap,
so concurrent readers always see a committed state.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import uuid
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from starlette.concurrency import run_in_threadpool

from ppco import drp, store as snapshots
from ppco.errors import (
    AlreadyVoted,
    InsufficientAccess,
    NotConcerned,
    NotPending,
    PPCOError,
    UnknownId,
)
from ppco.model import PPCOStore
from ppco.viewpoints import InformationSet, filter_info_artifact
from ppco.workflow import ChangeProposal, Workflow, annotations_for

log = logging.getLogger(__name__)

OPERATIONS = ("filter", "export", "propose", "vote", "view-log")
_READS = ("filter", "export", "view-log")


@dataclass
class ApiRequest:
    op: str
    actor: str | None = None
    params: dict[str, Any] = field(default_factory=dict)
    correlation_id: str = field(default_factory=lambda: uuid.uuid4().hex)


@dataclass
class ApiResponse:
    correlation_id: str
    status: str  # "ok" or "error"
    error: str | None = None
    message: str | None = None
    body: Any = None
    http_status: int = 200

    def to_json(self) -> dict[str, Any]:
        return {
            "correlation_id": self.correlation_id,
            "status": self.status,
            "error": self.error,
            "message": self.message,
            "body": self.body,
        }


class BadRequest(PPCOError):
    """Missing or malformed request parameters."""


def info_to_json(info: InformationSet) -> dict[str, Any]:
    return {
        "actor": info.actor,
        "artifact": info.artifact,
        "connexions": [
            {
                "batch": c.batch_kind,
                "level": c.level,
                "description": c.description,
                "provenance": list(info.provenance[c.batch_kind]),
            }
            for c in info.connexions
        ],
    }


def proposal_to_json(p: ChangeProposal) -> dict[str, Any]:
    return {
        "id": p.id,
        "author": p.author,
        "target": p.target,
        "batch": p.batch_kind,
        "payload": dict(p.payload),
        "state": p.state.value,
        "concerned": sorted(p.concerned),
        "votes": {k: v.value for k, v in sorted(p.votes.items())},
    }


class ServiceCore:
    """Transport-independent request handling with a single writer."""

    def __init__(
        self,
        store: PPCOStore,
        *,
        clock: Callable[[], datetime] | None = None,
        log_path: str | Path | None = None,
        snapshot_path: str | Path | None = None,
    ) -> None:
        self._live = store
        self._workflow = Workflow(store, log_path=log_path)
        if clock is not None:
            self._workflow.clock = clock
        self._snapshot_path = Path(snapshot_path) if snapshot_path is not None else None
        self._published = store.copy()
        self._writer = ThreadPoolExecutor(max_workers=1, thread_name_prefix="ppco-writer")

    @property
    def snapshot(self) -> PPCOStore:
        """The latest committed state; treat as read-only."""
        return self._published

    def close(self) -> None:
        self._writer.shutdown(wait=True)

    def handle(self, req: ApiRequest) -> ApiResponse:
        try:
            if req.op not in OPERATIONS:
                raise BadRequest(f"unknown operation {req.op!r}")
            if req.op in _READS:
                body = self._read(req, self._published)
            else:
                body = self._writer.submit(self._write, req).result()
        except PPCOError as exc:
            return ApiResponse(req.correlation_id, "error", exc.name, str(exc), http_status=_status_for(exc))
        return ApiResponse(req.correlation_id, "ok", body=body)

    def _read(self, req: ApiRequest, snap: PPCOStore) -> Any:
        if req.op == "view-log":
            return [
                {"timestamp": a.timestamp, "proposal": a.proposal, "recipient": a.recipient,
                 "message": a.message, "stage": a.stage}
                for a in annotations_for(snap, req.actor)
            ]
        artifact = _param(req, "artifact")
        info = filter_info_artifact(snap, artifact, _require_actor(req))
        if req.op == "filter":
            return info_to_json(info)
        return drp.export_drp(info, snap)

    def _write(self, req: ApiRequest) -> Any:
        actor = _require_actor(req)
        if req.op == "propose":
            payload = req.params.get("payload")
            if not isinstance(payload, dict) or not all(isinstance(v, str) for v in payload.values()):
                raise BadRequest("payload must be an object of string values")
            proposal = self._workflow.propose_change(
                actor, _param(req, "artifact"), _param(req, "batch"), payload
            )
        else:
            proposal = self._workflow.vote(_param(req, "proposal"), actor, _param(req, "decision"))
        self._publish()
        return proposal_to_json(proposal)

    def _publish(self) -> None:
        self._published = self._live.copy()
        if self._snapshot_path is not None:
            snapshots.save(self._live, self._snapshot_path)


def _require_actor(req: ApiRequest) -> str:
    if not req.actor:
        raise BadRequest("actor is required")
    return req.actor


def _param(req: ApiRequest, name: str) -> str:
    value = req.params.get(name)
    if not isinstance(value, str) or not value:
        raise BadRequest(f"parameter {name!r} is required")
    return value


_HTTP_STATUS = {
    BadRequest: 400,
    InsufficientAccess: 403,
    NotConcerned: 403,
    UnknownId: 404,
    NotPending: 409,
    AlreadyVoted: 409,
}


def _status_for(exc: PPCOError) -> int:
    for cls, code in _HTTP_STATUS.items():
        if isinstance(exc, cls):
            return code
    return 422


def create_app(core: ServiceCore) -> FastAPI:
    app = FastAPI(title="ppco")

    def respond(resp: ApiResponse) -> Response:
        headers = {"X-Correlation-ID": resp.correlation_id}
        if resp.status == "ok" and isinstance(resp.body, str):
            return Response(resp.body, media_type="application/xml", headers=headers)
        return JSONResponse(resp.to_json(), status_code=resp.http_status, headers=headers)

    def correlation(request: Request) -> str:
        return request.headers.get("X-Correlation-ID") or uuid.uuid4().hex

    def read(op: str, request: Request, actor: str | None, artifact: str | None) -> Response:
        params = {"artifact": artifact} if artifact is not None else {}
        return respond(core.handle(ApiRequest(op, actor, params, correlation(request))))

    @app.get("/filter")
    def filter_(request: Request, actor: str | None = None, artifact: str | None = None) -> Response:
        return read("filter", request, actor, artifact)

    @app.get("/export")
    def export(request: Request, actor: str | None = None, artifact: str | None = None) -> Response:
        return read("export", request, actor, artifact)

    @app.get("/log")
    def view_log(request: Request, actor: str | None = None) -> Response:
        return read("view-log", request, actor, None)

    async def write(op: str, request: Request) -> Response:
        cid = correlation(request)
        try:
            data = await request.json()
        except ValueError:
            data = None
        if not isinstance(data, dict):
            return respond(ApiResponse(cid, "error", "BadRequest", "request body must be a JSON object", http_status=400))
        actor = data.pop("actor", None)
        req = ApiRequest(op, actor if isinstance(actor, str) else None, data, cid)
        # The blocking writer hand-off must not stall the event loop.
        return respond(await run_in_threadpool(core.handle, req))

    @app.post("/propose")
    async def propose(request: Request) -> Response:
        return await write("propose", request)

    @app.post("/vote")
    async def vote(request: Request) -> Response:
        return await write("vote", request)

    return app


def load_config(path: str | Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ValueError("config file must hold a JSON object")
    return config


def serve(config: dict[str, Any]) -> None:
    import uvicorn

    snapshot_path = config.get("snapshot")
    store = snapshots.load(snapshot_path) if snapshot_path else snapshots.load_cyclone_fixture()
    core = ServiceCore(store, log_path=config.get("log"), snapshot_path=snapshot_path)
    try:
        uvicorn.run(create_app(core), host=config.get("host", "127.0.0.1"), port=int(config.get("port", 8080)))
    finally:
        core.close()


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(prog="ppco-serve", description="Serve filtering and the proposal workflow over HTTP.")
    parser.add_argument("--config", help="JSON file with snapshot, log, host and port keys")
    parser.add_argument("--snapshot")
    parser.add_argument("--log")
    parser.add_argument("--host")
    parser.add_argument("--port", type=int)
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"ppco-serve: cannot read config: {exc}", file=sys.stderr)
        sys.exit(1)
    config.update({k: v for k, v in vars(args).items() if k != "config" and v is not None})
    try:
        serve(config)
    except PPCOError as exc:
        print(f"ppco-serve: {exc.name}: {exc}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()

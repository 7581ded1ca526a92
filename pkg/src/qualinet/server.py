"""HTTP API over a compiled network for the scenario-exploration UI.

The server is stateless: every response is a pure function of the loaded
network and the request body, scenarios live client-side, and the evidence
wire format is exactly the scenario file format.  Responses reuse the CLI
serializers so that API and CLI numbers agree bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles

from .analysis import (
    AnalysisError,
    explain_target,
    resolve_evidence,
    run_scenario,
    scenario_from_obj,
    sensitivity,
)
from .inference import ImpossibleEvidenceError, UnknownNodeError, mpe
from .network import CompiledNetwork, canonical_json

__all__ = ["create_app"]

_FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>qualinet</title></head>
<body>
<h1>qualinet API</h1>
<p>No UI bundle is configured (start with --ui DIR to serve one).</p>
<ul>
<li>GET /api/network</li>
<li>POST /api/infer {"evidence": {...}}</li>
<li>POST /api/mpe {"evidence": {...}, "restrictTo": [...]}</li>
<li>GET /api/sensitivity?target=ID</li>
</ul>
</body></html>
"""


def _json_response(obj, status: int = 200) -> Response:
    return Response(content=canonical_json(obj), status_code=status,
                    media_type="application/json")


def _error(status: int, message: str) -> Response:
    return _json_response({"error": message}, status=status)


async def _read_json(request: Request):
    body = await request.body()
    if not body:
        return {}
    try:
        return json.loads(body)
    except json.JSONDecodeError as exc:
        raise AnalysisError(f"invalid JSON body: {exc}") from exc


def create_app(net: CompiledNetwork, ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="qualinet", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/api/network")
    async def get_network() -> Response:
        return _json_response(net.to_json_obj())

    @app.post("/api/infer")
    async def post_infer(request: Request) -> Response:
        try:
            scenario = scenario_from_obj(await _read_json(request))
            report = run_scenario(net, scenario)
        except UnknownNodeError as exc:
            return _error(404, str(exc))
        except ImpossibleEvidenceError as exc:
            return _error(409, str(exc))
        except AnalysisError as exc:
            return _error(400, str(exc))
        return _json_response(report.to_json_obj())

    @app.post("/api/mpe")
    async def post_mpe(request: Request) -> Response:
        try:
            obj = await _read_json(request)
            if not isinstance(obj, dict):
                raise AnalysisError("body must be a JSON object")
            unknown = set(obj) - {"name", "evidence", "restrictTo"}
            if unknown:
                raise AnalysisError(f"unknown keys: {', '.join(sorted(unknown))}")
            restrict = obj.pop("restrictTo", None)
            if restrict is not None and (
                not isinstance(restrict, list)
                or any(not isinstance(r, str) for r in restrict)
            ):
                raise AnalysisError("restrictTo must be a list of node ids")
            scenario = scenario_from_obj(obj)
            resolved, _ = resolve_evidence(net, scenario.evidence)
            if restrict is not None:
                for node_id in restrict:
                    net.node(node_id)
            assignment, probability = mpe(net, resolved)
        except UnknownNodeError as exc:
            return _error(404, str(exc))
        except ImpossibleEvidenceError as exc:
            return _error(409, str(exc))
        except AnalysisError as exc:
            return _error(400, str(exc))
        order = {n.id: i for i, n in enumerate(net.nodes)}
        labels = {
            node_id: net.node_map[node_id].states[state]
            for node_id, state in sorted(assignment.items(), key=lambda kv: order[kv[0]])
        }
        if restrict is not None:
            wanted = set(restrict)
            labels = {k: v for k, v in labels.items() if k in wanted}
        return _json_response({"assignment": labels, "jointProbability": probability})

    @app.get("/api/sensitivity")
    async def get_sensitivity(request: Request) -> Response:
        target = request.query_params.get("target")
        state = request.query_params.get("state")
        if not target:
            return _error(400, "missing query parameter 'target'")
        try:
            report = sensitivity(net, target, target_state=state)
        except UnknownNodeError as exc:
            return _error(404, str(exc))
        except ImpossibleEvidenceError as exc:
            return _error(409, str(exc))
        except AnalysisError as exc:
            return _error(400, str(exc))
        return _json_response(report.to_json_obj())

    @app.post("/api/explain")
    async def post_explain(request: Request) -> Response:
        try:
            obj = await _read_json(request)
            if not isinstance(obj, dict):
                raise AnalysisError("body must be a JSON object")
            unknown = set(obj) - {"target", "state", "evidence"}
            if unknown:
                raise AnalysisError(f"unknown keys: {', '.join(sorted(unknown))}")
            target = obj.get("target")
            state = obj.get("state")
            if not isinstance(target, str) or not isinstance(state, (str, int, float)) \
                    or isinstance(state, bool):
                raise AnalysisError("explain needs a 'target' node id and a 'state'")
            evidence = obj.get("evidence", {})
            scenario = scenario_from_obj({"evidence": evidence})
            report = explain_target(net, target, state, scenario.evidence)
        except UnknownNodeError as exc:
            return _error(404, str(exc))
        except ImpossibleEvidenceError as exc:
            return _error(409, str(exc))
        except AnalysisError as exc:
            return _error(400, str(exc))
        return _json_response(report.to_json_obj())

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:

        @app.get("/")
        async def index() -> Response:
            return Response(content=_FALLBACK_PAGE, media_type="text/html")

    return app

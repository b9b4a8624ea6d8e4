"""Local HTTP render service backing the interactive viewer.

All endpoints are GET and stateless: the pair's rectified images and flows
are computed once at startup (through the pipeline cache) and shared
read-only, so any interleaving of concurrent requests renders identically.

Endpoints:
    /api/meta                         pair metadata (JSON)
    /api/view?a=<float>               synthesized viewpoint (PNG)
    /api/closeup?a&z&cx&cy[&tau]      parallax close-up (PNG)
    /api/flow.png?dir=fwd|back        flow color-wheel visualization (PNG)
    /                                 viewer static assets, when available

Errors are JSON ``{"error": code, "message": ...}``. A close-up whose
segmentation degenerated returns 422 with the fallback image base64-embedded
so the client can both warn and display it.
"""

from __future__ import annotations

import base64
import json
import logging
import mimetypes
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .closeup import CloseupParams, closeup_render
from .flow import flow_to_color
from .pipeline import PairConfig, prepare_pair
from .raster import FlowField, Image, encode_png
from .synthesis import synthesize_view

log = logging.getLogger(__name__)

_FALLBACK_PAGE = b"""<!doctype html>
<html><head><title>flowview</title></head>
<body><h1>flowview render service</h1>
<p>No viewer assets installed. Endpoints: /api/meta, /api/view?a=,
/api/closeup?a=&amp;z=&amp;cx=&amp;cy=, /api/flow.png?dir=fwd</p></body></html>
"""


@dataclass(frozen=True)
class SessionState:
    """Immutable per-pair state shared by all request handlers."""

    img1: Image
    img2: Image
    f12: FlowField
    f21: FlowField
    pair_id: str


def build_state(config: PairConfig, workdir: Path | None = None) -> SessionState:
    prep = prepare_pair(config, workdir)
    return SessionState(prep.img1, prep.img2, prep.f12, prep.f21, prep.pair_id)


class BadParameter(ValueError):
    pass


def _parse_float(qs: dict, name: str, lo: float, hi: float) -> float:
    if name not in qs:
        raise BadParameter(f"missing parameter '{name}'")
    try:
        value = float(qs[name][0])
    except ValueError:
        raise BadParameter(f"parameter '{name}' is not a number") from None
    if not lo <= value <= hi:
        raise BadParameter(f"parameter '{name}'={value} outside [{lo}, {hi}]")
    return value


def handle_view(state: SessionState, a: float) -> bytes:
    """PNG of the synthesized viewpoint; byte-identical for identical queries."""
    view = synthesize_view(state.img1, state.img2, state.f12, state.f21, a)
    return encode_png(view.image)


def handle_closeup(
    state: SessionState, a: float, z: float, cx: float, cy: float, tau
) -> tuple[bytes, bool]:
    """PNG of the close-up plus a flag marking the uniform-zoom fallback."""
    params = CloseupParams(zoom=z, center=(cx, cy), tau=tau)
    render = closeup_render(state.img1, state.img2, state.f12, state.f21, a, params)
    return encode_png(render.image), render.degenerate_fallback


def make_handler(state: SessionState, static_dir: Path | None):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            log.debug("%s - %s", self.address_string(), fmt % args)

        def _send(self, code: int, content_type: str, body: bytes) -> None:
            self.send_response(code)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _send_json(self, code: int, payload: dict) -> None:
            self._send(code, "application/json", json.dumps(payload).encode())

        def _send_error_json(self, code: int, error: str, message: str) -> None:
            self._send_json(code, {"error": error, "message": message})

        def do_GET(self):  # noqa: N802 (http.server API)
            url = urlparse(self.path)
            qs = parse_qs(url.query)
            try:
                if url.path == "/api/meta":
                    self._send_json(200, {
                        "width": state.img1.width,
                        "height": state.img1.height,
                        "pair": state.pair_id,
                    })
                elif url.path == "/api/view":
                    a = _parse_float(qs, "a", 0.0, 1.0)
                    self._send(200, "image/png", handle_view(state, a))
                elif url.path == "/api/closeup":
                    a = _parse_float(qs, "a", 0.0, 1.0)
                    z = _parse_float(qs, "z", 1.0, float("inf"))
                    cx = _parse_float(qs, "cx", 0.0, 1.0)
                    cy = _parse_float(qs, "cy", 0.0, 1.0)
                    tau = (
                        _parse_float(qs, "tau", 0.0, float("inf"))
                        if "tau" in qs else "auto"
                    )
                    body, degenerate = handle_closeup(state, a, z, cx, cy, tau)
                    if degenerate:
                        self._send_json(422, {
                            "error": "degenerate_segmentation",
                            "message": "segmentation degenerated; uniform zoom applied",
                            "warning": True,
                            "image_base64": base64.b64encode(body).decode("ascii"),
                        })
                    else:
                        self._send(200, "image/png", body)
                elif url.path == "/api/flow.png":
                    direction = qs.get("dir", ["fwd"])[0]
                    if direction not in ("fwd", "back"):
                        raise BadParameter("dir must be 'fwd' or 'back'")
                    flow = state.f12 if direction == "fwd" else state.f21
                    self._send(200, "image/png", encode_png(flow_to_color(flow)))
                else:
                    self._serve_static(url.path)
            except BadParameter as exc:
                self._send_error_json(400, "bad_parameter", str(exc))
            except Exception as exc:  # pragma: no cover - defensive
                log.exception("request failed")
                self._send_error_json(500, "internal_error", str(exc))

        def _serve_static(self, path: str) -> None:
            if static_dir is None:
                if path in ("/", "/index.html"):
                    self._send(200, "text/html", _FALLBACK_PAGE)
                else:
                    self._send_error_json(404, "not_found", path)
                return
            rel = path.lstrip("/") or "index.html"
            target = (static_dir / rel).resolve()
            if not str(target).startswith(str(static_dir.resolve())) or not target.is_file():
                self._send_error_json(404, "not_found", path)
                return
            ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
            self._send(200, ctype, target.read_bytes())

    return Handler


class _Server(ThreadingHTTPServer):
    daemon_threads = True

    def handle_error(self, request, client_address):
        # clients hanging up mid-request (scrubbing, probes) are routine
        import sys

        exc = sys.exc_info()[1]
        if isinstance(exc, (ConnectionResetError, BrokenPipeError)):
            return
        super().handle_error(request, client_address)


def make_server(
    state: SessionState, port: int, static_dir: Path | None = None
) -> ThreadingHTTPServer:
    """Bind (port 0 picks a free one); caller drives serve_forever()."""
    handler = make_handler(state, static_dir)
    return _Server(("127.0.0.1", port), handler)


def serve(config: PairConfig, port: int, static_dir: Path | None = None) -> None:
    """Prepare the pair (cached), then answer requests until terminated."""
    state = build_state(config)
    if static_dir is None:
        candidate = Path.cwd() / "frontend" / "dist"
        static_dir = candidate if candidate.is_dir() else None
    server = make_server(state, port, static_dir)
    host, bound_port = server.server_address[:2]
    log.info("serving pair %s on http://%s:%d/", state.pair_id, host, bound_port)
    try:
        server.serve_forever()
    finally:
        server.server_close()

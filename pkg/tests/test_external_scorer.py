"""External scorer client tests against an in-process HTTP stub.

The stub here is a minimal Python handler used only to exercise the client;
the standalone stub service lives in its own package and speaks the same
protocol.
"""

import io
import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from recompose.ingest import Image
from recompose.objective import (
    ExternalScorer,
    MeanLuminanceScorer,
    ScorerConnectionError,
    ScorerHTTPError,
    ScorerProtocolError,
    ScorerTimeout,
    external_score,
)

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


class StubHandler(BaseHTTPRequestHandler):
    behavior = {"mode": "constant", "value": 1.25, "delay": 0.0}
    seen = []

    def do_POST(self):
        cfg = type(self).behavior
        if cfg["delay"]:
            time.sleep(cfg["delay"])
        body = self.rfile.read(int(self.headers.get("Content-Length", "0")))
        type(self).seen.append({"path": self.path, "content_type": self.headers.get("Content-Type"),
                                "is_png": body.startswith(PNG_MAGIC)})
        mode = cfg["mode"]
        if mode == "http_error":
            self._reply(503, {"error": "down"})
        elif mode == "not_json":
            self.send_response(200)
            self.send_header("Content-Type", "text/plain")
            self.end_headers()
            self.wfile.write(b"hello")
        elif mode == "missing_field":
            self._reply(200, {"value": 3.0})
        elif mode == "string_score":
            self._reply(200, {"score": "NaN"})
        elif mode == "nan_score":
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.end_headers()
            self.wfile.write(b'{"score": NaN}')
        elif mode == "mean_luminance":
            from PIL import Image as PILImage

            arr = np.asarray(PILImage.open(io.BytesIO(body)).convert("RGB"), dtype=np.float64) / 255.0
            lum = 0.2126 * arr[:, :, 0] + 0.7152 * arr[:, :, 1] + 0.0722 * arr[:, :, 2]
            self._reply(200, {"score": float(lum.mean())})
        else:
            self._reply(200, {"score": cfg["value"]})

    def _reply(self, status, payload):
        data = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


class QuietServer(ThreadingHTTPServer):
    def handle_error(self, request, client_address):
        pass  # timed-out clients hang up mid-reply; not a test failure


@pytest.fixture(scope="module")
def stub():
    server = QuietServer(("127.0.0.1", 0), StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    thread.join(timeout=2)


@pytest.fixture(autouse=True)
def reset_stub():
    StubHandler.behavior = {"mode": "constant", "value": 1.25, "delay": 0.0}
    StubHandler.seen = []


def gray_image(w=8, h=8, value=0.5):
    return Image(np.full((h, w, 3), value))


def test_passthrough_score(stub):
    assert external_score(gray_image(), stub) == 1.25


def test_request_shape_is_png_post_to_score(stub):
    external_score(gray_image(), stub)
    record = StubHandler.seen[-1]
    assert record["path"] == "/score"
    assert record["content_type"] == "image/png"
    assert record["is_png"]


def test_string_score_is_protocol_error(stub):
    StubHandler.behavior = {"mode": "string_score", "delay": 0.0}
    with pytest.raises(ScorerProtocolError, match="finite"):
        external_score(gray_image(), stub)


def test_nan_literal_score_is_protocol_error(stub):
    StubHandler.behavior = {"mode": "nan_score", "delay": 0.0}
    with pytest.raises(ScorerProtocolError):
        external_score(gray_image(), stub)


def test_missing_field_is_protocol_error(stub):
    StubHandler.behavior = {"mode": "missing_field", "delay": 0.0}
    with pytest.raises(ScorerProtocolError, match="missing 'score'"):
        external_score(gray_image(), stub)


def test_non_json_body_is_protocol_error(stub):
    StubHandler.behavior = {"mode": "not_json", "delay": 0.0}
    with pytest.raises(ScorerProtocolError, match="non-JSON"):
        external_score(gray_image(), stub)


def test_http_error_carries_status(stub):
    StubHandler.behavior = {"mode": "http_error", "delay": 0.0}
    with pytest.raises(ScorerHTTPError) as err:
        external_score(gray_image(), stub)
    assert err.value.status == 503


def test_timeout_variant(stub):
    StubHandler.behavior = {"mode": "constant", "value": 1.0, "delay": 0.8}
    with pytest.raises(ScorerTimeout):
        external_score(gray_image(), stub, timeout_s=0.15)


def test_unreachable_endpoint():
    with pytest.raises(ScorerConnectionError):
        external_score(gray_image(), "http://127.0.0.1:9", timeout_s=0.5)


def test_mean_luminance_roundtrip_matches_local(stub):
    StubHandler.behavior = {"mode": "mean_luminance", "delay": 0.0}
    rng = np.random.default_rng(0)
    image = Image(rng.uniform(0, 1, size=(64, 64, 3)))
    # compare against the local statistic on the same 8-bit quantized pixels
    quantized = Image(image.to_uint8() / 255.0)
    local = MeanLuminanceScorer().score(quantized)
    assert abs(external_score(image, stub) - local) <= 1e-6


def test_external_scorer_object_wraps_client(stub):
    scorer = ExternalScorer(stub, timeout_s=5.0)
    assert scorer.score(gray_image()) == 1.25
    assert scorer.deterministic is False
    assert scorer.name == f"external:{stub}"

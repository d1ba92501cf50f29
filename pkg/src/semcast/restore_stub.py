"""Reference server for the restoration wire contract.

Stands in for a real generative restorer during tests and offline runs. The
default mode answers with the bilinearly upsampled color mosaic; the other
modes exist to exercise client-side error handling.

Run standalone:  python -m semcast.restore_stub --port 8700 --mode echo
"""

from __future__ import annotations

import argparse
import base64
import io
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
from PIL import Image

from .imaging import RgbImage, upsample

MODES = ("echo", "wrong_dims", "malformed", "http_error")


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def do_POST(self):
        if self.path != "/restore":
            self.send_error(404)
            return
        mode = self.server.mode
        if mode == "http_error":
            self.send_error(500, "restorer exploded on purpose")
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            req = json.loads(self.rfile.read(length).decode("utf-8"))
            raw = base64.b64decode(req["color_png_b64"])
            with Image.open(io.BytesIO(raw)) as im:
                mosaic = RgbImage(np.asarray(im.convert("RGB"), dtype=np.uint8))
            width = int(req["width"])
            height = int(req["height"])
        except (ValueError, KeyError, TypeError, OSError):
            self.send_error(400, "bad request body")
            return

        if mode == "malformed":
            body = json.dumps({"unexpected": True}).encode("utf-8")
        else:
            if mode == "wrong_dims":
                width += 1
            image = upsample(mosaic, width, height, mode="bilinear")
            buf = io.BytesIO()
            Image.fromarray(image.pixels).save(buf, format="PNG")
            body = json.dumps(
                {"image_png_b64": base64.b64encode(buf.getvalue()).decode("ascii")}
            ).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class StubRestorer:
    """In-process contract server for tests; mode is mutable between calls."""

    def __init__(self, mode: str = "echo", port: int = 0):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self._server = ThreadingHTTPServer(("127.0.0.1", port), _Handler)
        self._server.mode = mode
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def mode(self) -> str:
        return self._server.mode

    @mode.setter
    def mode(self, value: str) -> None:
        if value not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self._server.mode = value

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "StubRestorer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "StubRestorer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--port", type=int, default=8700)
    parser.add_argument("--mode", choices=MODES, default="echo")
    args = parser.parse_args(argv)
    server = ThreadingHTTPServer(("127.0.0.1", args.port), _Handler)
    server.mode = args.mode
    print(f"restorer stub listening on http://127.0.0.1:{args.port} ({args.mode})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

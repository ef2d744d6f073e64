import json
import sys
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from layoutcode.layout import CategoryVocab, Element, Layout  # noqa: E402

VOCAB = CategoryVocab("document", ("text", "title", "list", "table", "figure", "background"),
                      frozenset({"background"}))


@pytest.fixture
def vocab():
    return VOCAB


def random_quantized_layout(rng, n=None, W=None, H=None, vocab=VOCAB, source_id="L"):
    """Layout with one-decimal values whose boxes lie inside the canvas."""
    W = W if W is not None else float(rng.integers(20, 400))
    H = H if H is not None else float(rng.integers(20, 400))
    n = n if n is not None else int(rng.integers(0, 26))
    elements = []
    for _ in range(n):
        # pick edges on the 0.2 grid so the center lands on the 0.1 grid
        l, r = sorted(rng.choice(int(W * 5) + 1, size=2, replace=False))
        t, b = sorted(rng.choice(int(H * 5) + 1, size=2, replace=False))
        elements.append(Element(str(rng.choice(vocab.labels)),
                                round((l + r) / 10, 1), round((t + b) / 10, 1),
                                round((r - l) / 5, 1), round((b - t) / 5, 1)))
    return Layout(W, H, tuple(elements), source_id)


@st.composite
def quantized_layouts(draw, max_elements=25):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(0, max_elements))
    return random_quantized_layout(np.random.default_rng(seed), n=n)


class MockChatServer:
    """Tiny chat-completions endpoint driven by a ``reply(prompt) -> (status, content)`` callable."""

    def __init__(self, reply, delay=0.0):
        self.reply = reply
        self.delay = delay
        self.requests = []
        self.in_flight = 0
        self.max_in_flight = 0
        self._lock = threading.Lock()
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                with outer._lock:
                    outer.requests.append({"path": self.path, "body": body,
                                           "auth": self.headers.get("Authorization")})
                    outer.in_flight += 1
                    outer.max_in_flight = max(outer.max_in_flight, outer.in_flight)
                try:
                    if outer.delay:
                        time.sleep(outer.delay)
                    status, content = outer.reply(body["messages"][0]["content"])
                finally:
                    with outer._lock:
                        outer.in_flight -= 1
                payload = (json.dumps({"choices": [{"message": {"role": "assistant", "content": content}}]})
                           if status == 200 else json.dumps({"error": content}))
                data = payload.encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.server.daemon_threads = True
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self):
        return f"http://127.0.0.1:{self.server.server_address[1]}/v1"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def mock_server():
    servers = []

    def start(reply, delay=0.0):
        s = MockChatServer(reply, delay).__enter__()
        servers.append(s)
        return s

    yield start
    for s in servers:
        s.__exit__()


def write_pipeline(tmp_path, layouts, **sections):
    """Write a dataset plus a YAML config around it; returns the config path."""
    import yaml

    from layoutcode.layout import write_jsonl

    data = tmp_path / "data.jsonl"
    write_jsonl(layouts, data)
    doc = {"data": {"train": str(data)}, "out": str(tmp_path / "out"),
           "domain": {"name": "document", "labels": list(VOCAB.labels), "underlay": ["background"]},
           "quantizer": {"k": 16, "seed": 0}, "tasks": {"K": 2}}
    for name, values in sections.items():
        doc[name] = {**doc.get(name, {}), **values} if isinstance(values, dict) else values
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path

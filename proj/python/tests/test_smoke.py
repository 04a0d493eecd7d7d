import json
import os
import socket
import subprocess
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import jsonschema
import pytest
import requests

import facetforge

FIXTURES = Path(os.environ.get("FACETFORGE_FIXTURES", Path(__file__).resolve().parents[2] / "tests" / "fixtures"))
DOCS = Path(os.environ.get("FACETFORGE_DOCS", Path(__file__).resolve().parents[2] / "docs"))
CLI = os.environ.get("FACETFORGE_CLI", "facetforge")
KB = FIXTURES / "kb" / "fixture_kb.jsonl"


def schema(name):
    return json.loads((DOCS / "schemas" / f"{name}.json").read_text())


def check(name, body):
    jsonschema.Draft202012Validator(schema(name)).validate(body)


@pytest.fixture(scope="module")
def kbs():
    return facetforge.KnowledgeBases({"fixture": KB})


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_schemas_are_valid():
    for path in (DOCS / "schemas").glob("*.json"):
        jsonschema.Draft202012Validator.check_schema(json.loads(path.read_text()))


def test_hac_hand_example():
    d = [[0, 0.1, 0.9], [0.1, 0, 0.8], [0.9, 0.8, 0]]
    assert facetforge.hac(d, "average", 0.5) == [[0, 1], [2]]
    assert facetforge.hac(d, "single", 0.8) == [[0, 1, 2]]
    inf = float("inf")
    assert facetforge.hac([[0, inf], [inf, 0]], "single", 10) == [[0], [1]]
    with pytest.raises(facetforge.InvalidArgument):
        facetforge.hac(d, "ward", 0.5)


def test_cluster_with_python_scorer():
    triples = [
        ("lion", "eat", "zebra", 9),
        ("lion", "prey on", "zebra", 2),
        ("lion", "feed on", "zebra", 1),
        ("lion", "feed upon", "zebra", 1),
        ("lion", "prey upon", "zebra", 1),
        ("lion", "roar", "", 4),
    ]
    same_object = lambda a, b: 1.0 if a[2] == b[2] else 0.0
    clusters = facetforge.cluster(triples, same_object)
    assert [c["frequency"] for c in clusters] == [14, 4]
    assert clusters[0]["representative"] == ("lion", "eat", "zebra")
    assert len(clusters[0]["members"]) == 5


def test_prompts():
    ctx = "Elephants eat roots, grasses, fruit, and bark, and they eat a lot of these things."
    assert facetforge.build_prompt("masked_prediction", "Elephants eat [MASK].", ctx) == (
        "Elephants eat [MASK]. [SEP] " + ctx
    )
    assert facetforge.build_prompt("guided_generation", "What do elephants eat?", ctx, "Elephants eat") == (
        "C: " + ctx + "\nQ: What do elephants eat?\nA: Elephants eat"
    )


def test_dump_round_trip():
    text = KB.read_text()
    again = facetforge.normalize_dump(text)
    assert facetforge.dump_equal(text, again)
    assert facetforge.normalize_dump(again) == again
    with pytest.raises(facetforge.ParseError):
        facetforge.normalize_dump('{"type":"concept"}\n{oops\n')


def test_service_responses_match_schemas(kbs):
    concept = kbs.concept("elephant")
    check("concept", concept)
    first = concept["predicate_groups"][0]["assertions"][0]
    detail = kbs.assertion(first["id"])
    check("assertion", detail)
    assert detail["verbalization"] == kbs.verbalize(first["id"])
    check("search", kbs.search(s="lion"))
    check("autocomplete", kbs.autocomplete("l"))
    check("kbs", kbs.kbs())
    qa = kbs.qa({"setup": "masked_prediction", "question": "Bartenders work in [MASK].", "sources": ["kb:fixture"]})
    check("qa_result", qa)
    assert qa["rows"][0]["answers"][0]["text"] == "bar"


def test_service_errors(kbs):
    with pytest.raises(facetforge.ApiError) as missing:
        kbs.concept("unicorn")
    assert missing.value.status == 404
    check("error", missing.value.body)
    with pytest.raises(facetforge.ApiError) as bad:
        kbs.qa({"setup": "span_prediction", "question": "What?", "sources": ["no_context"]})
    assert bad.value.status == 422
    check("error", bad.value.body)


def test_retrieve_and_span(kbs):
    hits = kbs.retrieve("Bartenders work in [MASK].", k=2)
    assert hits[0][1] == "Bartenders work in bar."
    assert kbs.retrieve("quantum chromodynamics") == []
    context = "Lawyers represent their clients in courts and offices."
    answer, start, end = kbs.span("Where do lawyers represent clients?", context)
    assert context[start:end] == answer


class StubModel(BaseHTTPRequestHandler):
    requests_seen = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        StubModel.requests_seen.append(body)
        if "fail" in json.dumps(body["prompt"]):
            self.send_response(500)
            self.end_headers()
            return
        reply = json.dumps({"answers": [{"text": "pub", "confidence": 0.75}]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(reply)))
        self.end_headers()
        self.wfile.write(reply)

    def log_message(self, *args):
        pass


@pytest.fixture(scope="module")
def server():
    stub = ThreadingHTTPServer(("127.0.0.1", 0), StubModel)
    threading.Thread(target=stub.serve_forever, daemon=True).start()
    port = free_port()
    env = dict(os.environ, FACETFORGE_PORT=str(port),
               FACETFORGE_MODEL_ENDPOINT=f"http://127.0.0.1:{stub.server_address[1]}/complete")
    proc = subprocess.Popen([CLI, "serve", "--kb", f"fixture={KB}", "--host", "127.0.0.1"], env=env,
                            stdout=subprocess.DEVNULL, stderr=subprocess.PIPE)
    base = f"http://127.0.0.1:{port}"
    for _ in range(100):
        try:
            requests.get(base + "/api/kbs", timeout=0.5)
            break
        except requests.ConnectionError:
            if proc.poll() is not None:
                pytest.fail(proc.stderr.read().decode())
            time.sleep(0.05)
    yield base
    proc.terminate()
    proc.wait(timeout=5)
    stub.shutdown()


def test_http_endpoints(server):
    r = requests.get(server + "/api/concepts/lion")
    assert r.status_code == 200
    check("concept", r.json())
    top = r.json()["predicate_groups"][0]["assertions"][0]
    check("assertion", requests.get(server + f"/api/assertions/{top['id']}").json())
    check("search", requests.get(server + "/api/search", params={"s": "lion", "p": "live in"}).json())
    check("autocomplete", requests.get(server + "/api/autocomplete", params={"q": "ele"}).json())
    check("kbs", requests.get(server + "/api/kbs").json())
    missing = requests.get(server + "/api/concepts/unicorn")
    assert missing.status_code == 404
    check("error", missing.json())
    bad = requests.post(server + "/api/qa", data="{not json", headers={"Content-Type": "application/json"})
    assert bad.status_code == 400
    check("error", bad.json())


def test_http_qa_through_model_endpoint(server):
    request = {"setup": "masked_prediction", "question": "Bartenders work in [MASK].",
               "sources": ["no_context", "kb:fixture", "custom:fail here"], "num_answers": 2}
    check("qa_request", request)
    r = requests.post(server + "/api/qa", json=request)
    assert r.status_code == 200
    body = r.json()
    check("qa_result", body)
    no_context, kb, failed = body["rows"]
    assert no_context["answers"] == [{"text": "pub", "confidence": 0.75}]
    assert kb["context"].startswith("Bartenders work in bar.")
    assert failed["error"]["status"] == 502 and failed["answers"] == []
    prompts = {json.dumps(b["prompt"]) for b in StubModel.requests_seen}
    assert json.dumps("Bartenders work in [MASK].") in prompts
    assert all(b["setup"] == "masked_prediction" and b["num_answers"] == 2 for b in StubModel.requests_seen)

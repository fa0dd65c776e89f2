import json
import threading
import time

import httpx
import pytest

from suitevolve import fixtures
from suitevolve.genesis import focal_listing, prepare_program
from suitevolve.llm import (
    AGENTS, AuthError, CompletionRequest, Gateway, LLMError, MockBackend, RemoteBackend,
    RemoteUnavailable, TemplateError, agent, complete, get_template, render, sections,
)
from suitevolve.minilang import parse_decls

TRACE = "ERROR runtime_error at t.test.mini:3:5 in t1"


def gen_request(seed=None, user=None):
    program = prepare_program(fixtures.read("triangle"), "triangle.mini")
    user = user or render("gen_A1", {"focal_methods": focal_listing(program),
                                     "source_code": program.source})
    return CompletionRequest("gen_A1", get_template("gen_A1").instructions, user, 0.3, seed=seed)


def test_agent_matrix():
    assert [(a.agent_id, a.temperature) for a in AGENTS] == [
        ("A1", 0.3), ("A2", 0.6), ("A3", 0.8), ("A4", 0.5), ("A5", 0.4)]
    assert agent("A3").strategy == "'Try hard' creative agent"
    assert agent("A5").system_prompt == "gen_A5"


def test_render_repair_keeps_trace_verbatim():
    out = render("repair", {"stacktrace": TRACE, "test_suite": "test t1() { }",
                            "source_code": "fn f() { return 1; }"})
    assert TRACE in out.splitlines()
    assert TRACE in sections(out)["STACK TRACE"].splitlines()


def test_render_missing_focal_list_raises():
    with pytest.raises(TemplateError) as err:
        render("gen_A2", {"focal_methods": "", "source_code": "fn f() { return 1; }"})
    assert list(err.value.missing) == ["focal_methods"]


def test_render_mutator_contains_method_verbatim():
    method = fixtures.read("triangle", suite=True).split("\n\n")[0].strip()
    out = render("mutator", {"test_method": method, "source_code": "fn f() { return 1; }"})
    assert method in out
    assert sections(out)["HELPERS"] == ""


def test_render_does_not_rewrite_braces_in_values():
    out = render("repair", {"stacktrace": "{x}", "test_suite": "test t() { }",
                            "source_code": "fn f() { return 1; }"})
    assert "{x}" in out and "test t() { }" in out


def test_mock_requires_seed():
    with pytest.raises(ValueError):
        MockBackend(None)


def test_mock_is_deterministic():
    req = gen_request()
    first = complete(req, MockBackend(42)).text
    backend = MockBackend(42)
    assert all(complete(req, backend).text == first for _ in range(100))


def test_mock_reply_is_valid_minilang_mostly():
    backend = MockBackend(3, garbage_rate=0.0, fence_rate=0.0)
    text = complete(gen_request(), backend).text
    decls = parse_decls(text, allow_tests=True)
    assert any(d.is_test for d in decls)


def test_mock_seed_collisions_rare():
    req = gen_request()
    same = sum(complete(req, MockBackend(s)).text == complete(req, MockBackend(s + 1)).text
               for s in range(0, 2000, 2))
    assert same / 1000 < 0.01


def test_mock_response_echoes_temperature_and_zero_tokens():
    r = complete(gen_request(), MockBackend(1))
    assert r.temperature == 0.3 and r.backend == "mock"
    assert (r.prompt_tokens, r.completion_tokens) == (0, 0)


# ------------------------------------------------------------------ remote

def ok_body(text="test t() { }"):
    return {"choices": [{"message": {"content": text}}],
            "usage": {"prompt_tokens": 11, "completion_tokens": 7}}


class Sleeps(list):
    def __call__(self, s):
        self.append(s)


def remote(handler, **kw):
    sleeps = Sleeps()
    backend = RemoteBackend("https://llm.example/v1", "m", api_key="k",
                            transport=httpx.MockTransport(handler), sleep=sleeps, **kw)
    return backend, sleeps


def test_remote_success_payload():
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers["authorization"]
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json=ok_body("hello"))

    backend, _ = remote(handler)
    r = backend.complete(CompletionRequest("gen_A1", "sys", "user", 0.6, seed=9))
    assert r.text == "hello" and r.temperature == 0.6
    assert (r.prompt_tokens, r.completion_tokens) == (11, 7)
    assert seen["url"] == "https://llm.example/v1/chat/completions"
    assert seen["auth"] == "Bearer k"
    assert seen["body"]["temperature"] == 0.6
    assert seen["body"]["messages"][0] == {"role": "system", "content": "sys"}


def test_remote_auth_error_not_retried():
    backend, sleeps = remote(lambda r: httpx.Response(401))
    with pytest.raises(AuthError):
        backend.complete(CompletionRequest("gen_A1", "", "u", 0.3))
    assert backend.http_requests == 1 and sleeps == []


@pytest.mark.parametrize("status", [429, 500, 503])
def test_remote_retry_budget(status):
    backend, sleeps = remote(lambda r: httpx.Response(status))
    with pytest.raises(RemoteUnavailable):
        backend.complete(CompletionRequest("gen_A1", "", "u", 0.3, max_retries=3))
    assert backend.http_requests == 4
    assert len(sleeps) == 3
    for i, s in enumerate(sleeps):
        assert 0.8 * 2**i <= s <= 1.2 * 2**i


def test_remote_recovers_after_transport_error():
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) < 3:
            raise httpx.ConnectError("refused")
        return httpx.Response(200, json=ok_body())

    backend, sleeps = remote(handler)
    backend.complete(CompletionRequest("gen_A1", "", "u", 0.3))
    assert backend.http_requests == 3 and len(sleeps) == 2


def test_remote_requires_key(monkeypatch):
    monkeypatch.delenv("SUITEVOLVE_API_KEY", raising=False)
    with pytest.raises(AuthError):
        RemoteBackend("https://llm.example", "m")


def test_gateway_retry_override():
    backend, _ = remote(lambda r: httpx.Response(500))
    gw = Gateway(backend, max_retries=0)
    with pytest.raises(LLMError):
        gw.complete(CompletionRequest("gen_A1", "", "u", 0.3))
    assert backend.http_requests == 1
    assert (gw.calls, gw.failures) == (1, 1)


def test_gateway_in_flight_cap():
    active, peak, lock = [0], [0], threading.Lock()

    class Slow:
        name = "slow"

        def complete(self, request):
            with lock:
                active[0] += 1
                peak[0] = max(peak[0], active[0])
            time.sleep(0.02)
            with lock:
                active[0] -= 1
            return None

    gw = Gateway(Slow(), in_flight=3)
    threads = [threading.Thread(target=gw.complete,
                                args=(CompletionRequest("gen_A1", "", "u", 0.3),))
               for _ in range(12)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert peak[0] <= 3 and gw.calls == 12

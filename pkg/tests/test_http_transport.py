"""Wire-protocol tests for the HTTP transport, with a stubbed session."""

import pytest
import requests

from hteb.errors import ProtocolError, TransportError
from hteb.gateway import (
    API_KEY_ENV,
    CHAT_URL_ENV,
    EMBED_URL_ENV,
    ChatRequest,
    EmbeddingRequest,
    HttpTransport,
)


class FakeResponse:
    def __init__(self, payload, status=200):
        self._payload = payload
        self.status_code = status

    def raise_for_status(self):
        if self.status_code >= 400:
            raise requests.HTTPError(f"status {self.status_code}")

    def json(self):
        if self._payload is None:
            raise ValueError("not json")
        return self._payload


class FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers})
        response = self.responses.pop(0)
        if isinstance(response, Exception):
            raise response
        return response


def chat_response(content):
    return FakeResponse({"choices": [{"message": {"content": content}}]})


class TestChatWireFormat:
    def test_payload_fields_and_auth_header(self):
        session = FakeSession([chat_response("out")])
        transport = HttpTransport(chat_url="http://x/chat", api_key="secret", session=session)
        req = ChatRequest(model_id="gen-1", prompt="Rephrase this.", input_text="Hello.",
                          max_output_tokens=512, seed=1337)
        assert transport.chat(req) == "out"
        call = session.calls[0]
        assert call["url"] == "http://x/chat"
        assert call["json"] == {
            "model": "gen-1",
            "messages": [{"role": "user", "content": "Rephrase this.\n\nHello."}],
            "temperature": 0.0,
            "top_p": 1.0,
            "max_tokens": 512,
            "seed": 1337,
        }
        assert call["headers"]["Authorization"] == "Bearer secret"

    def test_seed_omitted_when_unset(self):
        session = FakeSession([chat_response("out")])
        transport = HttpTransport(chat_url="http://x/chat", session=session)
        transport.chat(ChatRequest(model_id="g", prompt="p", input_text="t"))
        assert "seed" not in session.calls[0]["json"]
        assert "Authorization" not in session.calls[0]["headers"]

    def test_http_error_becomes_transport_error(self):
        session = FakeSession([FakeResponse({}, status=503)])
        transport = HttpTransport(chat_url="http://x/chat", session=session)
        with pytest.raises(TransportError):
            transport.chat(ChatRequest(model_id="g", prompt="p", input_text="t"))

    def test_connection_error_becomes_transport_error(self):
        session = FakeSession([requests.ConnectionError("refused")])
        transport = HttpTransport(chat_url="http://x/chat", session=session)
        with pytest.raises(TransportError):
            transport.chat(ChatRequest(model_id="g", prompt="p", input_text="t"))

    def test_malformed_body_becomes_protocol_error(self):
        session = FakeSession([FakeResponse({"unexpected": []})])
        transport = HttpTransport(chat_url="http://x/chat", session=session)
        with pytest.raises(ProtocolError):
            transport.chat(ChatRequest(model_id="g", prompt="p", input_text="t"))

    def test_missing_url_is_transport_error(self, monkeypatch):
        monkeypatch.delenv(CHAT_URL_ENV, raising=False)
        transport = HttpTransport(session=FakeSession([]))
        with pytest.raises(TransportError):
            transport.chat(ChatRequest(model_id="g", prompt="p", input_text="t"))


class TestEmbeddingsWireFormat:
    def test_payload_and_index_ordering(self):
        session = FakeSession([
            FakeResponse({"data": [
                {"index": 1, "embedding": [0.0, 1.0]},
                {"index": 0, "embedding": [1.0, 0.0]},
            ]})
        ])
        transport = HttpTransport(embed_url="http://x/emb", session=session)
        vectors = transport.embed(EmbeddingRequest(model_id="e", texts=["a", "b"]))
        assert vectors == [[1.0, 0.0], [0.0, 1.0]]  # reassembled by index
        assert session.calls[0]["json"] == {"model": "e", "input": ["a", "b"]}

    def test_instruction_prefixes_each_text(self):
        session = FakeSession([FakeResponse({"data": [{"index": 0, "embedding": [1.0]}]})])
        transport = HttpTransport(embed_url="http://x/emb", session=session)
        transport.embed(EmbeddingRequest(model_id="e", texts=["query"], instruction="Represent: "))
        assert session.calls[0]["json"]["input"] == ["Represent: query"]

    def test_malformed_embeddings_body(self):
        session = FakeSession([FakeResponse({"data": "nope"})])
        transport = HttpTransport(embed_url="http://x/emb", session=session)
        with pytest.raises(ProtocolError):
            transport.embed(EmbeddingRequest(model_id="e", texts=["a"]))


class TestEnvironmentVariables:
    def test_urls_and_key_from_env(self, monkeypatch):
        monkeypatch.setenv(CHAT_URL_ENV, "http://env/chat")
        monkeypatch.setenv(EMBED_URL_ENV, "http://env/emb")
        monkeypatch.setenv(API_KEY_ENV, "env-key")
        session = FakeSession([chat_response("y")])
        transport = HttpTransport(session=session)
        transport.chat(ChatRequest(model_id="g", prompt="p", input_text="t"))
        assert session.calls[0]["url"] == "http://env/chat"
        assert session.calls[0]["headers"]["Authorization"] == "Bearer env-key"
        assert transport.embed_url == "http://env/emb"

import pytest

from eventbench.llm.client import (
    ChatClient,
    EvalConfig,
    RequestFailed,
    ResponseCache,
    RetryPolicy,
    chat_url,
)

from helpers import grounding_safe_corpus
from mock_server import GoldOracleServer


def make_config(url: str, **kwargs) -> EvalConfig:
    defaults = dict(
        endpoint=url,
        model="mock-model",
        retry=RetryPolicy(max_attempts=3, backoff_base=0.0),
        timeout=5.0,
    )
    defaults.update(kwargs)
    return EvalConfig(**defaults)


class TestChatUrl:
    def test_appends_path(self):
        assert chat_url("http://h/v1") == "http://h/v1/chat/completions"

    def test_keeps_full_path(self):
        assert chat_url("http://h/v1/chat/completions/") == "http://h/v1/chat/completions"


class TestResponseCache:
    def test_round_trip(self, tmp_path):
        cache = ResponseCache(tmp_path)
        key = cache.key("m", "prompt", 0.0)
        assert cache.get(key) is None
        cache.put(key, "m", "prompt", 0.0, "hello")
        assert cache.get(key) == "hello"

    def test_key_depends_on_all_parts(self):
        base = ResponseCache.key("m", "p", 0.0)
        assert ResponseCache.key("m2", "p", 0.0) != base
        assert ResponseCache.key("m", "p2", 0.0) != base
        assert ResponseCache.key("m", "p", 0.5) != base

    def test_corrupt_entry_is_miss(self, tmp_path):
        cache = ResponseCache(tmp_path)
        key = cache.key("m", "p", 0.0)
        (tmp_path / f"{key}.json").write_text("{broken", encoding="utf-8")
        assert cache.get(key) is None


class TestChatClient:
    def test_completion_roundtrip(self, tmp_path):
        corpus = grounding_safe_corpus(3, seed=0)
        with GoldOracleServer(corpus, mode="no") as server:
            client = ChatClient(make_config(server.url), cache=ResponseCache(tmp_path))
            assert client.complete("anything") == "No."
            assert client.n_network_requests == 1

    def test_warm_cache_issues_no_requests(self, tmp_path):
        corpus = grounding_safe_corpus(3, seed=0)
        with GoldOracleServer(corpus, mode="no") as server:
            client = ChatClient(make_config(server.url), cache=ResponseCache(tmp_path))
            client.complete("prompt one")
            assert server.n_requests == 1
        # server is down now; a fresh client on the same cache still answers
            fresh = ChatClient(make_config(server.url), cache=ResponseCache(tmp_path))
        assert fresh.complete("prompt one") == "No."
        assert fresh.n_network_requests == 0 and fresh.n_cache_hits == 1

    def test_retry_recovers_from_transient_failure(self, tmp_path):
        corpus = grounding_safe_corpus(3, seed=0)
        with GoldOracleServer(corpus, mode="flaky") as server:
            client = ChatClient(make_config(server.url), cache=ResponseCache(tmp_path))
            # an unparseable prompt falls through to "No." once the 503 clears
            assert client.complete("p") == "No."
            assert server.n_requests == 2  # first 503, then success
            assert client.n_failures == 0

    def test_exhausted_retries_raise(self, tmp_path):
        corpus = grounding_safe_corpus(3, seed=0)
        with GoldOracleServer(corpus, mode="down") as server:
            client = ChatClient(
                make_config(server.url, retry=RetryPolicy(max_attempts=2, backoff_base=0.0)),
                cache=ResponseCache(tmp_path),
            )
            with pytest.raises(RequestFailed):
                client.complete("p")
            assert server.n_requests == 2
            assert client.n_failures == 1

    def test_unreachable_endpoint_raises(self):
        client = ChatClient(
            make_config("http://127.0.0.1:1/v1", retry=RetryPolicy(max_attempts=2, backoff_base=0.0), timeout=0.5)
        )
        with pytest.raises(RequestFailed):
            client.complete("p")


class TestConfigValidation:
    def test_bad_values_rejected(self):
        with pytest.raises(ValueError):
            EvalConfig(endpoint="e", model="m", sample_docs=0)
        with pytest.raises(ValueError):
            EvalConfig(endpoint="e", model="m", max_in_flight=0)
        with pytest.raises(ValueError):
            RetryPolicy(max_attempts=0)

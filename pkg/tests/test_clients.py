"""Wire-protocol clients against an in-process stub service."""

import math

import pytest

from xlrank.clients import (
    HttpScorer,
    HttpTranslator,
    ServiceEndpoint,
    encode_score_request,
    health_check,
    score_batch,
    translate,
)
from xlrank.errors import ProtocolError, ServiceError, TransportError, ValidationError
from xlrank.rerank import ScorerRequest


def request(i=0):
    return ScorerRequest(
        question_text=f"question {i}",
        question_lang="en",
        passage_text=f"passage {i} body",
        passage_lang="en",
    )


def echo_handler(avg=-1.25, num=7):
    def handler(body):
        return 200, {"items": [
            {"avg_log_likelihood": avg, "num_tokens": num} for _ in body["items"]
        ]}
    return handler


class TestScoreBatch:
    def test_single_request_echo(self, stub_service):
        stub_service.handlers["/v1/score"] = echo_handler(-1.25, 7)
        endpoint = ServiceEndpoint(base_url=stub_service.base_url)
        responses = score_batch(endpoint, [request()])
        assert len(responses) == 1
        assert responses[0].avg_log_likelihood == -1.25
        assert responses[0].num_tokens == 7

    def test_chunking_arithmetic(self, stub_service):
        stub_service.handlers["/v1/score"] = echo_handler()
        endpoint = ServiceEndpoint(base_url=stub_service.base_url, batch_size=128)
        responses = score_batch(endpoint, [request(i) for i in range(300)], parallelism=1)
        assert len(responses) == 300
        sizes = [len(body["items"]) for _, body in stub_service.calls]
        assert sizes == [128, 128, 44]

    def test_positional_alignment_across_chunks(self, stub_service):
        def handler(body):
            items = [
                {"avg_log_likelihood": -float(len(item["question"])), "num_tokens": 1}
                for item in body["items"]
            ]
            return 200, {"items": items}

        stub_service.handlers["/v1/score"] = handler
        endpoint = ServiceEndpoint(base_url=stub_service.base_url, batch_size=3)
        requests_list = [
            ScorerRequest(question_text="q" * (i + 1), question_lang="en",
                          passage_text="p", passage_lang="en")
            for i in range(10)
        ]
        responses = score_batch(endpoint, requests_list, parallelism=4)
        assert [r.avg_log_likelihood for r in responses] == [-float(i + 1) for i in range(10)]

    def test_response_count_mismatch_is_protocol_error(self, stub_service):
        def handler(body):
            return 200, {"items": [{"avg_log_likelihood": -1.0, "num_tokens": 1}] * 2}

        stub_service.handlers["/v1/score"] = handler
        endpoint = ServiceEndpoint(base_url=stub_service.base_url)
        with pytest.raises(ProtocolError, match="2 items for 3"):
            score_batch(endpoint, [request(i) for i in range(3)])

    def test_non_finite_score_is_protocol_error(self, stub_service):
        def handler(body):
            return 200, {"items": [{"avg_log_likelihood": "nan", "num_tokens": 1}]}

        stub_service.handlers["/v1/score"] = handler
        endpoint = ServiceEndpoint(base_url=stub_service.base_url)
        with pytest.raises(ProtocolError, match="non-finite"):
            score_batch(endpoint, [request()])

    def test_error_status_carries_body_excerpt(self, stub_service):
        def handler(body):
            return 503, {"error": "model overloaded"}

        stub_service.handlers["/v1/score"] = handler
        endpoint = ServiceEndpoint(base_url=stub_service.base_url)
        with pytest.raises(ServiceError, match="503") as excinfo:
            score_batch(endpoint, [request()])
        assert "model overloaded" in str(excinfo.value)

    def test_empty_batch_rejected(self, stub_service):
        endpoint = ServiceEndpoint(base_url=stub_service.base_url)
        with pytest.raises(ValidationError):
            score_batch(endpoint, [])

    def test_retries_with_exponential_backoff(self):
        sleeps = []
        endpoint = ServiceEndpoint(
            base_url="http://127.0.0.1:9",  # reserved port: connection refused
            timeout_ms=200,
            max_retries=3,
        )
        with pytest.raises(TransportError, match="4 attempts"):
            score_batch(endpoint, [request()], sleep=sleeps.append)
        assert sleeps == [0.25, 0.5, 1.0]

    def test_request_encoding_is_canonical(self):
        payload = encode_score_request([ScorerRequest(
            question_text="q", question_lang="ko",
            passage_text="p", passage_lang="en",
            prompt_suffix=None, target_lang_tag="ko",
        )])
        assert payload == (
            b'{"items":[{"question":"q","question_lang":"ko","passage":"p",'
            b'"passage_lang":"en","prompt_suffix":null,"target_lang_tag":"ko"}]}'
        )


class TestTranslate:
    def test_identity_stub(self, stub_service):
        stub_service.handlers["/v1/translate"] = lambda body: (200, {"text": body["text"]})
        endpoint = ServiceEndpoint(base_url=stub_service.base_url)
        assert translate(endpoint, "hello", "en", "en") == "hello"

    def test_mapping_stub(self, stub_service):
        table = {"hello": "안녕"}

        def handler(body):
            return 200, {"text": table.get(body["text"], body["text"])}

        stub_service.handlers["/v1/translate"] = handler
        endpoint = ServiceEndpoint(base_url=stub_service.base_url)
        assert translate(endpoint, "hello", "en", "ko") == "안녕"

    def test_und_target_rejected_before_wire(self, stub_service):
        endpoint = ServiceEndpoint(base_url=stub_service.base_url)
        with pytest.raises(ValidationError, match="und"):
            translate(endpoint, "hello", "en", "und")
        assert stub_service.calls == []

    def test_empty_translation_is_protocol_error(self, stub_service):
        stub_service.handlers["/v1/translate"] = lambda body: (200, {"text": ""})
        endpoint = ServiceEndpoint(base_url=stub_service.base_url)
        with pytest.raises(ProtocolError, match="empty"):
            translate(endpoint, "hello", "en", "ko")

    def test_und_source_allowed(self, stub_service):
        stub_service.handlers["/v1/translate"] = lambda body: (200, {"text": "ok"})
        endpoint = ServiceEndpoint(base_url=stub_service.base_url)
        assert translate(endpoint, "hello", "und", "ko") == "ok"


class TestEndpointValidation:
    def test_batch_size_bounds(self):
        with pytest.raises(ValidationError):
            ServiceEndpoint(base_url="http://x", batch_size=0)
        with pytest.raises(ValidationError):
            ServiceEndpoint(base_url="http://x", batch_size=257)

    def test_timeout_positive(self):
        with pytest.raises(ValidationError):
            ServiceEndpoint(base_url="http://x", timeout_ms=0)

    def test_base_url_trailing_slash_stripped(self):
        assert ServiceEndpoint(base_url="http://x/").base_url == "http://x"


class TestHighLevelHandles:
    def test_http_scorer_returns_likelihood_scores(self, stub_service):
        stub_service.handlers["/v1/score"] = stub_service.unigram_score_handler()
        scorer = HttpScorer(ServiceEndpoint(base_url=stub_service.base_url))
        result = scorer.score(ScorerRequest(
            question_text="a c", question_lang="en",
            passage_text="a b a", passage_lang="en",
        ))
        assert math.isclose(result.avg_log_likelihood, -1.2424533248940002, abs_tol=1e-12)
        assert result.num_tokens == 2

    def test_http_translator(self, stub_service):
        stub_service.handlers["/v1/translate"] = lambda body: (
            200, {"text": f"[{body['tgt']}] {body['text']}"}
        )
        translator = HttpTranslator(ServiceEndpoint(base_url=stub_service.base_url))
        assert translator.translate("hello", "en", "ko") == "[ko] hello"

    def test_health_check(self, stub_service):
        endpoint = ServiceEndpoint(base_url=stub_service.base_url)
        assert health_check(endpoint) is True
        assert health_check(ServiceEndpoint(base_url="http://127.0.0.1:9", timeout_ms=200)) is False

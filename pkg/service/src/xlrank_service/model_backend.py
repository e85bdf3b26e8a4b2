"""Optional adapters around pretrained seq2seq models (model mode).

Scoring is teacher-forced: the passage (plus prompt suffix) is encoded,
the question's subword tokens are fed as decoder targets, and the score
is the mean natural-log probability the model assigns to each question
token. Conditioning tokens (passage, prompt, decoder start / language
tag) are excluded from the average; ``num_tokens`` reports the model's
own subword count so callers can detect the convention.

Heavy dependencies load lazily so stub mode never imports them. The
network-facing pieces are thin; the scoring math lives in
:func:`mean_logprob_of_targets` and is unit-testable without weights.
"""

from __future__ import annotations

import numpy as np

# mBART-50-style language codes for the two-letter tags this toolkit uses.
LANG_TAGS = {
    "ar": "ar_AR", "bn": "bn_IN", "de": "de_DE", "en": "en_XX", "es": "es_XX",
    "fi": "fi_FI", "fr": "fr_XX", "hi": "hi_IN", "it": "it_IT", "ja": "ja_XX",
    "ko": "ko_KR", "nl": "nl_XX", "pl": "pl_PL", "pt": "pt_XX", "ru": "ru_RU",
    "sv": "sv_SE", "te": "te_IN", "th": "th_TH", "tr": "tr_TR", "zh": "zh_CN",
}


class SequenceTooLong(ValueError):
    def __init__(self, length: int, limit: int):
        super().__init__(f"input is {length} tokens; the model limit is {limit}")
        self.length = length
        self.limit = limit


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable log-softmax over the last axis."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def mean_logprob_of_targets(
    logits: np.ndarray, full_decoder_ids: list[int], n_prefix: int
) -> float:
    """Average log-probability of the tokens after the decoder prefix.

    ``logits`` has one row per fed decoder position (the full sequence
    minus its final token); row i scores the token at position i + 1.
    Only positions >= n_prefix of the full sequence are averaged.
    """
    if logits.shape[0] != len(full_decoder_ids) - 1:
        raise ValueError(
            f"got {logits.shape[0]} logit rows for {len(full_decoder_ids)} decoder ids"
        )
    n_targets = len(full_decoder_ids) - n_prefix
    if n_targets < 1:
        raise ValueError("no target tokens to score")
    logprobs = log_softmax(logits)
    values = [
        float(logprobs[pos - 1, full_decoder_ids[pos]])
        for pos in range(n_prefix, len(full_decoder_ids))
    ]
    return float(np.mean(values))


class ModelScorer:
    """Teacher-forced question scoring with a pretrained seq2seq model."""

    def __init__(self, model_id: str, max_length: int = 1024):
        self.model_id = model_id
        self.max_length = max_length
        self._model = None
        self._tokenizer = None

    def load(self) -> None:
        if self._model is not None:
            return
        import torch
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

        self._tokenizer = AutoTokenizer.from_pretrained(self.model_id)
        self._model = AutoModelForSeq2SeqLM.from_pretrained(self.model_id)
        self._model.eval()
        torch.set_grad_enabled(False)

    # The encode/forward seams below are overridden in tests with a
    # deterministic fake, keeping the scoring math verifiable offline.

    def _encode_source(self, text: str) -> list[int]:
        return self._tokenizer(text).input_ids

    def _encode_target(self, text: str) -> list[int]:
        return self._tokenizer(text, add_special_tokens=False).input_ids

    def _decoder_prefix(self, target_lang_tag: str | None) -> list[int]:
        start = self._model.config.decoder_start_token_id
        prefix = [start] if start is not None else []
        if target_lang_tag:
            code = LANG_TAGS.get(target_lang_tag)
            mapping = getattr(self._tokenizer, "lang_code_to_id", None)
            if code and mapping and code in mapping:
                prefix.append(mapping[code])
        return prefix

    def _forward(self, input_ids: list[int], decoder_input_ids: list[int]) -> np.ndarray:
        import torch

        output = self._model(
            input_ids=torch.tensor([input_ids]),
            decoder_input_ids=torch.tensor([decoder_input_ids]),
        )
        return output.logits[0].float().cpu().numpy()

    def score(
        self,
        question_text: str,
        passage_text: str,
        prompt_suffix: str | None = None,
        target_lang_tag: str | None = None,
    ) -> tuple[float, int]:
        self.load()
        conditioning = passage_text
        if prompt_suffix:
            conditioning = f"{conditioning} {prompt_suffix}"
        source_ids = self._encode_source(conditioning)
        if len(source_ids) > self.max_length:
            raise SequenceTooLong(len(source_ids), self.max_length)
        target_ids = self._encode_target(question_text)
        if not target_ids:
            raise ValueError("question encodes to no tokens")
        prefix = self._decoder_prefix(target_lang_tag)
        if not prefix:
            raise ValueError("model provides no decoder start token")
        full = prefix + target_ids
        if len(full) > self.max_length:
            raise SequenceTooLong(len(full), self.max_length)
        logits = self._forward(source_ids, full[:-1])
        avg = mean_logprob_of_targets(logits, full, len(prefix))
        return avg, len(target_ids)


class ModelTranslator:
    """Greedy NMT translation via a pretrained seq2seq model."""

    def __init__(self, model_id: str, max_length: int = 1024):
        self.model_id = model_id
        self.max_length = max_length
        self._model = None
        self._tokenizer = None

    def load(self) -> None:
        if self._model is not None:
            return
        import torch
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

        self._tokenizer = AutoTokenizer.from_pretrained(self.model_id)
        self._model = AutoModelForSeq2SeqLM.from_pretrained(self.model_id)
        self._model.eval()
        torch.set_grad_enabled(False)

    def translate(self, text: str, src: str, tgt: str) -> str:
        self.load()
        tokenizer = self._tokenizer
        if hasattr(tokenizer, "src_lang") and src in LANG_TAGS:
            tokenizer.src_lang = LANG_TAGS[src]
        encoded = tokenizer(text, return_tensors="pt")
        kwargs = {}
        mapping = getattr(tokenizer, "lang_code_to_id", None)
        if mapping and tgt in LANG_TAGS and LANG_TAGS[tgt] in mapping:
            kwargs["forced_bos_token_id"] = mapping[LANG_TAGS[tgt]]
        generated = self._model.generate(
            **encoded, num_beams=1, do_sample=False, max_length=self.max_length, **kwargs
        )
        return tokenizer.batch_decode(generated, skip_special_tokens=True)[0]

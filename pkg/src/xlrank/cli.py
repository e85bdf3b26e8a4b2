"""Command-line pipeline driver: search, rerank, evaluate, augment.

Every command is idempotent: identical inputs and configuration produce
byte-identical output files. Exit codes: 0 success, 1 output validation
failure, 2 input/config error, 3 external-service error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys

from .augment import (
    AugmentationConfig,
    augment_corpus,
    read_qa_file,
    write_augment_summary,
    write_qa_file,
)
from .clients import HttpScorer, HttpTranslator, ServiceEndpoint
from .errors import (
    ParseError,
    ProtocolError,
    ServiceError,
    TransportError,
    ValidationError,
    XlrankError,
)
from .metrics import aggregate, gain, recall_row, positives_row, token_f1, AnswerPair
from .models import Question, RetrievalRun, Candidate, Passage, UND
from .rerank import ExperimentMode, rerank_corpus, write_rerank_report
from .reports import (
    gain_machine_records,
    machine_records,
    render_mrr_table,
    render_positives_table,
    render_recall_table,
    write_jsonl,
)
from .runfile import parse_run_file, write_run_file
from .scoring import UnigramScorer
from .search import load_matrix, top_k
from .translators import IdentityTranslator, MappingTranslator

SCORER_URL_ENV = "XLRANK_SCORER_URL"

EXIT_OK = 0
EXIT_OUTPUT_INVALID = 1
EXIT_INPUT_ERROR = 2
EXIT_SERVICE_ERROR = 3

_SERVICE_ERRORS = (ServiceError, TransportError, ProtocolError)


class ConfigError(XlrankError, ValueError):
    pass


class OutputValidationError(XlrankError, RuntimeError):
    """A written artifact failed re-validation."""


def _validate_output_run_file(path: str) -> None:
    try:
        parse_run_file(path)
    except (ParseError, ValidationError) as exc:
        raise OutputValidationError(f"output {path} failed validation: {exc}") from exc


def _exit_code_for(exc: BaseException) -> int:
    seen: BaseException | None = exc
    while seen is not None:
        if isinstance(seen, _SERVICE_ERRORS):
            return EXIT_SERVICE_ERROR
        if isinstance(seen, OutputValidationError):
            return EXIT_OUTPUT_INVALID
        seen = seen.__cause__
    return EXIT_INPUT_ERROR


def _load_config(path: str | None) -> configparser.ConfigParser:
    config = configparser.ConfigParser()
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        config.read(path, encoding="utf-8")
    return config


def _setting(args, config, section: str, key: str, default=None):
    """Flag value if given, else config-file value, else default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    if config.has_option(section, key):
        return config.get(section, key)
    return default


def _require_file(path: str | None, what: str) -> str:
    if not path:
        raise ConfigError(f"missing required input: {what}")
    if not os.path.exists(path):
        raise FileNotFoundError(f"{what} not found: {path}")
    return path


def _resolve_scorer(spec_value: str | None):
    env_url = os.environ.get(SCORER_URL_ENV)
    if env_url:
        spec_value = env_url
    if not spec_value or spec_value == "builtin":
        return UnigramScorer()
    if spec_value.startswith(("http://", "https://")):
        return HttpScorer(ServiceEndpoint(base_url=spec_value))
    raise ConfigError(f"scorer must be 'builtin' or an http(s) URL, got {spec_value!r}")


def _resolve_translator(spec_value: str | None):
    if not spec_value or spec_value == "identity":
        return IdentityTranslator()
    if spec_value.startswith(("http://", "https://")):
        return HttpTranslator(ServiceEndpoint(base_url=spec_value))
    return MappingTranslator.from_file(_require_file(spec_value, "translator mapping file"))


def _out_path(args, config, name: str) -> str:
    out_dir = _setting(args, config, "paths", "output", ".")
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _parse_ks(raw) -> tuple[int, ...]:
    if isinstance(raw, tuple):
        return raw
    try:
        ks = tuple(int(part) for part in str(raw).split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"ks must be a comma-separated integer list, got {raw!r}") from None
    if not ks:
        raise ConfigError("ks must be non-empty")
    return ks


# ---------------------------------------------------------------------------
# Commands


def _load_sidecar(path: str | None, what: str) -> dict[str, dict]:
    """Optional JSONL id -> record metadata (question texts, passage texts)."""
    table: dict[str, dict] = {}
    if not path:
        return table
    with open(_require_file(path, what), encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON in {what}: {exc.msg}", line_no) from None
            if "id" not in record:
                raise ParseError(f"{what} record without 'id'", line_no)
            table[str(record["id"])] = record
    return table


def cmd_search(args, config) -> int:
    embeddings = _require_file(
        _setting(args, config, "paths", "embeddings"), "embeddings file"
    )
    queries = _require_file(_setting(args, config, "paths", "queries"), "queries file")
    k = int(_setting(args, config, "search", "k", 50))
    workers = int(_setting(args, config, "run", "workers", os.cpu_count() or 1))
    questions_meta = _load_sidecar(
        _setting(args, config, "paths", "questions"), "questions file"
    )
    corpus_meta = _load_sidecar(_setting(args, config, "paths", "corpus"), "corpus file")

    matrix = load_matrix(embeddings)
    query_matrix = load_matrix(queries)
    if len(query_matrix) and query_matrix.dim != matrix.dim:
        raise ValidationError(
            f"query dim {query_matrix.dim} does not match corpus dim {matrix.dim}"
        )

    runs = []
    for q_id, q_vec in zip(query_matrix.ids, query_matrix.vectors):
        result = top_k(q_vec, matrix, k, workers=workers)
        q_meta = questions_meta.get(q_id, {})
        question = Question(
            id=q_id,
            text=str(q_meta.get("text") or q_id),
            lang=str(q_meta.get("lang") or UND),
        )
        candidates = []
        for rank, (pid, score_value) in enumerate(result.entries, start=1):
            p_meta = corpus_meta.get(pid, {})
            candidates.append(Candidate(
                passage=Passage(
                    id=pid,
                    title=str(p_meta.get("title") or ""),
                    text=str(p_meta.get("text") or pid),
                    lang=str(p_meta.get("lang") or UND),
                ),
                orig_rank=rank,
                is_positive=False,
                retriever_score=score_value,
            ))
        runs.append(RetrievalRun(question=question, candidates=tuple(candidates)))

    out = _out_path(args, config, "runs.jsonl")
    write_run_file(runs, out)
    _validate_output_run_file(out)
    print(f"wrote {len(runs)} runs to {out}")
    return EXIT_OK


def cmd_rerank(args, config) -> int:
    runs_path = _require_file(_setting(args, config, "paths", "runs"), "run file")
    mode = ExperimentMode(_setting(args, config, "rerank", "mode", "language_tagged"))
    k = int(_setting(args, config, "rerank", "k", 50))
    policy = _setting(args, config, "run", "policy", "fail_fast")
    workers = int(_setting(args, config, "run", "workers", os.cpu_count() or 1))
    scorer = _resolve_scorer(_setting(args, config, "rerank", "scorer"))
    translator = _resolve_translator(_setting(args, config, "rerank", "translator"))

    runs = parse_run_file(runs_path)
    result = rerank_corpus(
        runs, scorer=scorer, mode=mode, translator=translator,
        k=k, policy=policy, workers=workers,
    )
    out_runs = _out_path(args, config, "reranked.jsonl")
    out_report = _out_path(args, config, "rerank_report.jsonl")
    write_run_file(result.runs, out_runs)
    write_rerank_report(result, out_report)
    _validate_output_run_file(out_runs)
    print(
        f"reranked {len(result.runs)} runs ({len(result.failures)} failed) "
        f"to {out_runs}; report at {out_report}"
    )
    return EXIT_OK


def cmd_evaluate(args, config) -> int:
    runs_path = _require_file(_setting(args, config, "paths", "runs"), "run file")
    baseline_path = _setting(args, config, "paths", "baseline")
    ks = _parse_ks(_setting(args, config, "metrics", "ks", "5,15"))
    rerank_k = _setting(args, config, "rerank", "k")
    if rerank_k is not None and int(rerank_k) < max(ks):
        raise ConfigError(f"k ({rerank_k}) must be >= max of metric ks {ks}")
    mrr_mode = _setting(args, config, "metrics", "mrr_mode", "first")
    answers_path = _setting(args, config, "paths", "answers")

    labeled = []
    if baseline_path:
        baseline_runs = parse_run_file(_require_file(baseline_path, "baseline run file"))
        labeled.append(("baseline", aggregate(baseline_runs, ks=ks, mrr_mode=mrr_mode)))
    runs = parse_run_file(runs_path)
    labeled.append(("evaluated", aggregate(runs, ks=ks, mrr_mode=mrr_mode)))

    records: list[dict] = []
    for label, report in labeled:
        records.extend(machine_records(label, report))
        for q_id in report.mrr_excluded:
            records.append({
                "label": label, "lang": None,
                "metric": "mrr_excluded_question", "value": q_id,
            })

    recall_gain = positives_gain = None
    if len(labeled) == 2:
        (_, base_report), (_, eval_report) = labeled
        recall_gain = gain(recall_row(base_report), recall_row(eval_report))
        positives_gain = gain(positives_row(base_report), positives_row(eval_report))
        records.extend(gain_machine_records(recall_gain, "R"))
        records.extend(gain_machine_records(positives_gain, "P"))

    tables = [
        "Positives@K",
        render_positives_table(labeled, positives_gain),
        "",
        "Recall@K (%)",
        render_recall_table(labeled, recall_gain),
        "",
        "MRR (Same / Cross language)",
        render_mrr_table(labeled),
    ]

    if answers_path:
        f1_by_lang: dict[str, list[float]] = {}
        with open(_require_file(answers_path, "answers file"), encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    record = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"invalid JSON in answers file: {exc.msg}", line_no) from None
                pair = AnswerPair(
                    predicted=str(record.get("predicted", "")),
                    gold=tuple(record.get("gold", ())),
                )
                f1_by_lang.setdefault(str(record.get("lang", UND)), []).append(token_f1(pair))
        tables.append("")
        tables.append("Token-level F1")
        for lang in sorted(f1_by_lang):
            mean_f1 = sum(f1_by_lang[lang]) / len(f1_by_lang[lang])
            records.append({
                "label": "answers", "lang": lang, "metric": "token_f1", "value": mean_f1,
            })
            tables.append(f"{lang}  {mean_f1:.4f}")

    out_metrics = _out_path(args, config, "metrics.jsonl")
    out_tables = _out_path(args, config, "tables.txt")
    write_jsonl(records, out_metrics)
    with open(out_tables, "w", encoding="utf-8") as fh:
        fh.write("\n".join(tables))
        if not tables[-1].endswith("\n"):
            fh.write("\n")
    excluded = sum(len(report.mrr_excluded) for _, report in labeled)
    print(f"wrote {out_metrics} and {out_tables} ({excluded} runs excluded from MRR)")
    return EXIT_OK


def cmd_augment(args, config) -> int:
    source_path = _require_file(_setting(args, config, "paths", "source"), "source QA file")
    target_langs = _setting(args, config, "augment", "target_langs")
    if not target_langs:
        raise ConfigError("augment requires target_langs (e.g. --target-langs ko,bn)")
    aug_config = AugmentationConfig(
        target_langs=tuple(str(target_langs).split(",")),
        n_examples=int(_setting(args, config, "augment", "n_examples", 5000)),
        n_pos_paragraphs=int(_setting(args, config, "augment", "n_pos_paragraphs", 3)),
        n_neg_paragraphs=int(_setting(args, config, "augment", "n_neg_paragraphs", 3)),
        max_input_tokens=int(_setting(args, config, "augment", "max_input_tokens", 600)),
    )
    translator = _resolve_translator(_setting(args, config, "augment", "translator"))
    policy = _setting(args, config, "run", "policy", "fail_fast")
    workers = int(_setting(args, config, "run", "workers", os.cpu_count() or 1))

    source = read_qa_file(source_path)
    result = augment_corpus(
        source, aug_config, translator, policy=policy, workers=workers
    )
    out_examples = _out_path(args, config, "augmented.jsonl")
    out_summary = _out_path(args, config, "augment_summary.json")
    write_qa_file(result.kept, out_examples)
    write_augment_summary(result, out_summary)
    print(
        f"kept {len(result.kept)}, dropped {result.dropped}, errors {result.errors}; "
        f"wrote {out_examples} and {out_summary}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="INI config file; flags override it")
    parser.add_argument("--workers", type=int, dest="workers",
                        help="worker threads (default: CPU count)")
    parser.add_argument("--policy", choices=["fail_fast", "skip"], dest="policy",
                        help="per-run failure policy")
    parser.add_argument("--output", dest="output", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlrank",
        description="Cross-lingual retrieval pipeline: search, rerank, evaluate, augment.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_search = sub.add_parser("search", help="exact top-k inner-product retrieval")
    p_search.add_argument("--embeddings", help="passage embedding matrix file")
    p_search.add_argument("--queries", help="query vector matrix file")
    p_search.add_argument("--questions", help="optional JSONL {id,text,lang} per query")
    p_search.add_argument("--corpus", help="optional JSONL {id,title,text,lang} per passage")
    p_search.add_argument("--k", type=int, dest="k")
    _add_common(p_search)

    p_rerank = sub.add_parser("rerank", help="question-generation re-ranking")
    p_rerank.add_argument("--runs", help="input run file")
    p_rerank.add_argument("--mode", dest="mode",
                          choices=[m.value for m in ExperimentMode])
    p_rerank.add_argument("--scorer", dest="scorer",
                          help="'builtin' or scorer service URL")
    p_rerank.add_argument("--translator", dest="translator",
                          help="'identity', a mapping file, or a service URL")
    p_rerank.add_argument("--k", type=int, dest="k")
    _add_common(p_rerank)

    p_eval = sub.add_parser("evaluate", help="retrieval and answer metrics")
    p_eval.add_argument("--runs", help="run file to evaluate")
    p_eval.add_argument("--baseline", help="optional baseline run file (adds gain rows)")
    p_eval.add_argument("--ks", dest="ks", help="comma-separated Ks (default 5,15)")
    p_eval.add_argument("--mrr-mode", dest="mrr_mode", choices=["first", "mean_all"])
    p_eval.add_argument("--answers", help="optional JSONL {predicted,gold,lang} answers")
    _add_common(p_eval)

    p_aug = sub.add_parser("augment", help="translation-based QA augmentation")
    p_aug.add_argument("--source", help="source QA-example or run file (English)")
    p_aug.add_argument("--target-langs", dest="target_langs",
                       help="comma-separated target language codes")
    p_aug.add_argument("--n-examples", type=int, dest="n_examples")
    p_aug.add_argument("--n-pos-paragraphs", type=int, dest="n_pos_paragraphs")
    p_aug.add_argument("--n-neg-paragraphs", type=int, dest="n_neg_paragraphs")
    p_aug.add_argument("--max-input-tokens", type=int, dest="max_input_tokens")
    p_aug.add_argument("--translator", dest="translator")
    _add_common(p_aug)
    return parser


_SETTING_ALIASES = {
    # flag dest -> (section, key)
    "embeddings": ("paths", "embeddings"),
    "queries": ("paths", "queries"),
    "questions": ("paths", "questions"),
    "corpus": ("paths", "corpus"),
    "runs": ("paths", "runs"),
    "baseline": ("paths", "baseline"),
    "answers": ("paths", "answers"),
    "source": ("paths", "source"),
    "output": ("paths", "output"),
    "workers": ("run", "workers"),
    "policy": ("run", "policy"),
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args.config)
        # Map flat flags onto the (section, key) lookup used by commands.
        for dest, (section, key) in _SETTING_ALIASES.items():
            value = getattr(args, dest, None)
            if value is not None:
                if not config.has_section(section):
                    config.add_section(section)
                config.set(section, key, str(value))
        for dest, section in (
            ("k", "search" if args.command == "search" else "rerank"),
            ("mode", "rerank"),
            ("scorer", "rerank"),
            ("ks", "metrics"),
            ("mrr_mode", "metrics"),
            ("target_langs", "augment"),
            ("n_examples", "augment"),
            ("n_pos_paragraphs", "augment"),
            ("n_neg_paragraphs", "augment"),
            ("max_input_tokens", "augment"),
        ):
            value = getattr(args, dest, None)
            if value is not None:
                if not config.has_section(section):
                    config.add_section(section)
                config.set(section, dest, str(value))
        translator_value = getattr(args, "translator", None)
        if translator_value is not None:
            for section in ("rerank", "augment"):
                if not config.has_section(section):
                    config.add_section(section)
                config.set(section, "translator", translator_value)

        handler = {
            "search": cmd_search,
            "rerank": cmd_rerank,
            "evaluate": cmd_evaluate,
            "augment": cmd_augment,
        }[args.command]
        # Flag lookup now goes through the merged config only.
        stripped = argparse.Namespace()
        return handler(stripped, config)
    except (XlrankError, FileNotFoundError, ValueError) as exc:
        print(f"xlrank: {exc}", file=sys.stderr)
        return _exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())

"""Stage pipeline: resumable, content-addressed artifacts under one workdir."""
from __future__ import annotations

import glob as globlib
import hashlib
import json
import logging
import os
import random
import time
from pathlib import Path

from . import metrics, scoring
from .config import PipelineConfig
from .errors import MalformedResponseError, PipelineError
from .feasibility import syntactic_feasible, wordswap_feasible
from .forge import (
    AgreementKind,
    Discard,
    Distance,
    GeneratedSentence,
    Quadruplet,
    Subtask,
    build_agreement_quadruplet,
    normalize_generation,
    locate_target,
    oov_filter,
    pair_inflectionswap,
    pair_wordswap,
    swap,
)
from .gateway import HttpChatBackend, LlmGateway, request_hash
from .ingest import (
    RawCorpus,
    SentenceRef,
    VocabTable,
    dump_index,
    ingest_corpus,
    load_dictionary,
    load_index,
)
from .mockllm import MockBackend
from .morphology import (
    BinScheme,
    HeuristicTagger,
    POS_PHRASE,
    PosTag,
    WordRecord,
    majority_pos,
    read_tags_tsv,
    select_candidates,
    tag_corpus,
)
from .scoring import FileScorerBackend, HttpScorerBackend, JudgeMode, ScoringMode, TokenSumBackend
from .templates import resolve_templates

log = logging.getLogger(__name__)

STAGES = (
    "ingest",
    "candidates",
    "generate",
    "filter",
    "score",
    "report",
    "prefix",
    "blimp-rebin",
    "counts",
)

AGREEMENT_COMBOS = (
    (AgreementKind.SUBJ_VERB, Distance.SHORT, "agreement_sv_short"),
    (AgreementKind.SUBJ_VERB, Distance.LONG, "agreement_sv_long"),
    (AgreementKind.ANAPHORA, Distance.SHORT, "agreement_ana_short"),
    (AgreementKind.ANAPHORA, Distance.LONG, "agreement_ana_long"),
    (AgreementKind.DET_NOUN, Distance.SHORT, "agreement_det_short"),
)

INFLECTION_PHRASE = {
    PosTag.NOUN_PLURAL: "plural noun",
    PosTag.VERB: "third person verb",
    PosTag.VERB_PAST: "past tense verb",
    PosTag.VERB_GERUND: "present continuous verb",
}


# -- file helpers ---------------------------------------------------------------


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_jsonl(path: Path, rows) -> None:
    write_atomic(path, "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in rows))


def read_jsonl(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def _require(path: Path, produced_by: str) -> Path:
    if not path.exists():
        raise PipelineError(f"missing artifact {path}; run stage '{produced_by}' first")
    return path


# -- workdir layout ---------------------------------------------------------------


class Paths:
    def __init__(self, cfg: PipelineConfig):
        self.root = cfg.resolve(cfg.workdir)

    def stage(self, name: str) -> Path:
        return self.root / name

    @property
    def vocab(self):
        return self.stage("ingest") / "vocab.jsonl"

    @property
    def sentences(self):
        return self.stage("ingest") / "sentences.jsonl"

    @property
    def sentences_cased(self):
        return self.stage("ingest") / "sentences_cased.jsonl"

    @property
    def index(self):
        return self.stage("ingest") / "index.bin"

    @property
    def candidates(self):
        return self.stage("candidates") / "candidates.jsonl"

    @property
    def gens(self):
        return self.stage("generate") / "gens.jsonl"

    @property
    def gen_discards(self):
        return self.stage("generate") / "discards.jsonl"

    @property
    def quadruplets(self):
        return self.stage("filter") / "quadruplets.jsonl"

    @property
    def filter_verdicts(self):
        return self.stage("filter") / "verdicts.jsonl"

    @property
    def filter_discards(self):
        return self.stage("filter") / "discards.jsonl"

    @property
    def score_requests(self):
        return self.stage("score") / "requests.jsonl"

    @property
    def score_verdicts(self):
        return self.stage("score") / "verdicts.jsonl"

    @property
    def report_dir(self):
        return self.stage("report")

    @property
    def prefix_report(self):
        return self.stage("prefix") / "prefix_report.json"

    @property
    def blimp_bins(self):
        return self.stage("blimp-rebin") / "bins.jsonl"

    @property
    def counts_csv(self):
        return self.stage("counts") / "counts.csv"

    @property
    def llm_cache(self):
        return self.root / "llm_cache.jsonl"

    @property
    def manifest(self):
        return self.root / "manifest.json"


def corpus_files(cfg: PipelineConfig) -> list[Path]:
    files: list[Path] = []
    for pattern in cfg.corpus.paths:
        resolved = str(cfg.resolve(pattern))
        hits = sorted(globlib.glob(resolved))
        if hits:
            files.extend(Path(h) for h in hits)
        elif Path(resolved).exists():
            files.append(Path(resolved))
        else:
            raise PipelineError(f"corpus path matched nothing: {pattern}")
    if not files:
        raise PipelineError("config lists no corpus paths")
    return files


# -- serde ---------------------------------------------------------------


def _quad_to_row(quad: Quadruplet) -> dict:
    row = {
        "quadruplet_id": quad.quadruplet_id,
        "subtask": quad.subtask.value,
        "bin": quad.bin,
        "pos": quad.pos.value,
        "w1": quad.targets[0],
        "w2": quad.targets[1],
        "i1": quad.positions[0],
        "i2": quad.positions[1],
        "s1": list(quad.s1),
        "s2": list(quad.s2),
        "s1_star": list(quad.s1_star),
        "s2_star": list(quad.s2_star),
        "provenance": {"gen_hashes": list(quad.provenance)},
    }
    if quad.agreement_kind:
        row["agreement_kind"] = quad.agreement_kind.value
    if quad.distance:
        row["distance"] = quad.distance.value
    return row


def _quad_from_row(row: dict) -> Quadruplet:
    return Quadruplet(
        quadruplet_id=row["quadruplet_id"],
        subtask=Subtask(row["subtask"]),
        bin=int(row["bin"]),
        pos=PosTag(row["pos"]),
        s1=tuple(row["s1"]),
        s2=tuple(row["s2"]),
        s1_star=tuple(row["s1_star"]),
        s2_star=tuple(row["s2_star"]),
        targets=(row["w1"], row["w2"]),
        positions=(int(row["i1"]), int(row["i2"])),
        agreement_kind=AgreementKind(row["agreement_kind"]) if row.get("agreement_kind") else None,
        distance=Distance(row["distance"]) if row.get("distance") else None,
        provenance=tuple(row.get("provenance", {}).get("gen_hashes", [])),
    )


def load_quadruplets(paths: Paths) -> list[Quadruplet]:
    return [_quad_from_row(r) for r in read_jsonl(_require(paths.quadruplets, "filter"))]


def _record_to_row(rec: WordRecord) -> dict:
    return {
        "surface": rec.surface,
        "pos": rec.pos.value,
        "count": rec.count,
        "bin": rec.bin,
        "inflections": [{"surface": s, "pos": p.value, "count": c} for s, p, c in rec.inflections],
    }


def _record_from_row(row: dict) -> WordRecord:
    return WordRecord(
        surface=row["surface"],
        pos=PosTag(row["pos"]),
        count=int(row["count"]),
        bin=int(row["bin"]),
        inflections=tuple((i["surface"], PosTag(i["pos"]), int(i["count"])) for i in row["inflections"]),
    )


def load_candidates(paths: Paths) -> list[WordRecord]:
    return [_record_from_row(r) for r in read_jsonl(_require(paths.candidates, "candidates"))]


def load_sentences(paths: Paths) -> list[SentenceRef]:
    rows = read_jsonl(_require(paths.sentences, "ingest"))
    return [
        SentenceRef(sentence_id=int(r["id"]), tokens=tuple(r["tokens"]), char_span=(0, 0))
        for r in rows
    ]


def load_vocab(paths: Paths) -> VocabTable:
    rows = read_jsonl(_require(paths.vocab, "ingest"))
    entries = {r["word"]: int(r["count"]) for r in rows}
    return VocabTable(entries=entries, total_tokens=sum(entries.values()))


def _gen_from_row(row: dict) -> GeneratedSentence:
    return GeneratedSentence(
        gen_id=row["gen_id"],
        tokens=tuple(row["tokens"]),
        target_word=row["word"],
        target_index=int(row["target_index"]),
        base=row["base"],
        pos=PosTag(row["pos"]),
        count=int(row["count"]),
        bin=int(row["bin"]),
        request_hash=row.get("request_hash", ""),
    )


# -- backends ---------------------------------------------------------------


def make_gateway(cfg: PipelineConfig, paths: Paths) -> LlmGateway:
    if cfg.llm.backend == "mock":
        backend = MockBackend(policy=cfg.llm.mock_policy, seed=cfg.seed)
    else:
        backend = HttpChatBackend(
            url=cfg.llm.backend,
            model=cfg.llm.model,
            temperature=cfg.llm.temperature,
            api_key_env=cfg.llm.api_key_env,
        )
    cache = paths.root / cfg.llm.cache if cfg.llm.cache else None
    if cache:
        cache.parent.mkdir(parents=True, exist_ok=True)
    return LlmGateway(
        backend,
        cache_path=cache,
        seed=cfg.seed,
        max_concurrency=cfg.llm.max_concurrency,
        retries=cfg.llm.retries,
    )


def make_scorer(spec: str):
    if spec == "unigram":
        return TokenSumBackend()
    if spec.startswith("file:"):
        return FileScorerBackend(spec[len("file:") :])
    if spec.startswith("http://") or spec.startswith("https://"):
        return HttpScorerBackend(spec)
    raise PipelineError(f"unknown scorer backend: {spec!r}")


# -- stages ---------------------------------------------------------------


def stage_ingest(cfg: PipelineConfig, paths: Paths) -> None:
    files = corpus_files(cfg)
    corpus = RawCorpus(
        documents=tuple(f.read_text(encoding="utf-8") for f in files),
        source_ids=tuple(str(f) for f in files),
    )
    result = ingest_corpus(corpus)
    write_jsonl(
        paths.vocab,
        [{"word": w, "count": c} for w, c in sorted(result.vocab.entries.items())],
    )
    write_jsonl(
        paths.sentences,
        [{"id": s.sentence_id, "tokens": list(s.tokens)} for s in result.sentences],
    )
    write_jsonl(
        paths.sentences_cased,
        [{"id": i, "tokens": list(toks)} for i, toks in enumerate(result.cased)],
    )
    paths.index.parent.mkdir(parents=True, exist_ok=True)
    tmp = paths.index.with_name(paths.index.name + ".tmp")
    dump_index(result.index, tmp)
    os.replace(tmp, paths.index)


def stage_candidates(cfg: PipelineConfig, paths: Paths) -> None:
    sentences = load_sentences(paths)
    vocab = load_vocab(paths)
    cased_rows = read_jsonl(_require(paths.sentences_cased, "ingest"))
    cased = [tuple(r["tokens"]) for r in cased_rows]
    if cfg.tags.import_tsv:
        token_tags = read_tags_tsv(cfg.resolve(cfg.tags.import_tsv))
    else:
        token_tags = tag_corpus(cased, HeuristicTagger())
    word_pos = majority_pos(token_tags, sentences)
    dictionary = load_dictionary(cfg.resolve(cfg.corpus.dictionary_path))
    scheme = BinScheme(cfg.binning.doublings)
    records = select_candidates(vocab, word_pos, dictionary, scheme, cfg.morphology.extended_spelling)
    write_jsonl(paths.candidates, [_record_to_row(r) for r in records])


def stage_generate(cfg: PipelineConfig, paths: Paths) -> None:
    records = load_candidates(paths)
    scheme = BinScheme(cfg.binning.doublings)
    gateway = make_gateway(cfg, paths)
    templates = resolve_templates(cfg.templates)
    usage_tpl = templates["generate_usage"]
    rows = []
    discards = []
    seq = 0

    def emit_usage(surface: str, phrase: str, base: str, pos: PosTag, count: int) -> None:
        nonlocal seq
        bindings = {"w": surface, "pos": phrase}
        try:
            payloads = gateway.generate(usage_tpl, bindings, n=cfg.generation.sentences_per_word)
        except MalformedResponseError as err:
            discards.append({"stage": "generate", "reason": "malformed_response", "detail": str(err)})
            return
        for i, payload in enumerate(payloads):
            rh = request_hash(usage_tpl.name, bindings, gateway.backend.id, cfg.seed, i)
            tokens = normalize_generation(payload)
            target = locate_target(tokens, surface)
            if target is None:
                discards.append({"stage": "generate", "reason": "target_not_unique", "detail": surface})
                continue
            rows.append(
                {
                    "kind": "usage",
                    "gen_id": f"u{seq:05d}",
                    "word": surface,
                    "base": base,
                    "pos": pos.value,
                    "count": count,
                    "bin": scheme.bin_of(count),
                    "tokens": tokens,
                    "target_index": target,
                    "request_hash": rh,
                }
            )
            seq += 1

    aseq = 0
    for rec in sorted(records, key=lambda r: r.surface):
        emit_usage(rec.surface, POS_PHRASE[rec.pos], rec.surface, rec.pos, rec.count)
        for surface, tag, count in rec.inflections:
            emit_usage(surface, INFLECTION_PHRASE[tag], rec.surface, tag, count)
        plural = rec.inflection_pair(PosTag.NOUN_PLURAL)
        if rec.pos == PosTag.NOUN and plural is not None:
            for kind, distance, tpl_name in AGREEMENT_COMBOS:
                tpl = templates[tpl_name]
                bindings = {"sing": rec.surface, "plur": plural[0]}
                rh = request_hash(tpl.name, bindings, gateway.backend.id, cfg.seed, 0)
                try:
                    payload = gateway.generate(tpl, bindings, n=1)[0]
                except MalformedResponseError as err:
                    discards.append({"stage": "generate", "reason": "malformed_response", "detail": str(err)})
                    continue
                rows.append(
                    {
                        "kind": "agreement",
                        "gen_id": f"a{aseq:05d}",
                        "sing": rec.surface,
                        "plur": plural[0],
                        "agreement_kind": kind.value,
                        "distance": distance.value,
                        "payload": payload,
                        "request_hash": rh,
                    }
                )
                aseq += 1
    write_jsonl(paths.gens, rows)
    write_jsonl(paths.gen_discards, discards)


def stage_filter(cfg: PipelineConfig, paths: Paths) -> None:
    scheme = BinScheme(cfg.binning.doublings)
    vocab = load_vocab(paths)
    sentences = load_sentences(paths)
    sentences_by_id = {s.sentence_id: s for s in sentences}
    index = load_index(_require(paths.index, "ingest"))
    records = load_candidates(paths)
    rec_by_surface = {r.surface: r for r in records}
    gen_rows = read_jsonl(_require(paths.gens, "generate"))
    gateway = make_gateway(cfg, paths)
    templates = resolve_templates(cfg.templates)

    discards: list[dict] = []
    usage: list[GeneratedSentence] = []
    for row in gen_rows:
        if row["kind"] != "usage":
            continue
        try:
            gen = _gen_from_row(row)
        except ValueError as err:
            discards.append({"stage": "filter", "reason": "bad_generation", "detail": str(err)})
            continue
        if not oov_filter(gen, vocab):
            discards.append({"stage": "filter", "reason": "oov", "detail": gen.target_word})
            continue
        usage.append(gen)

    rng = random.Random(cfg.seed)
    quads: list[Quadruplet] = []

    ws_pool = [g for g in usage if g.base == g.target_word]
    ws_pairs, ws_discards = pair_wordswap(ws_pool, rng)
    discards.extend({"stage": d.stage, "reason": d.reason, "detail": d.detail} for d in ws_discards)
    for a, b in ws_pairs:
        result = swap(a, b, Subtask.WORDSWAP, a.bin, a.pos)
        if isinstance(result, Discard):
            discards.append({"stage": result.stage, "reason": result.reason, "detail": result.detail})
        else:
            quads.append(result)

    for a, b, bin_label in pair_inflectionswap(usage, records, vocab, scheme, rng):
        pos = rec_by_surface[a.base].pos if a.base in rec_by_surface else a.pos
        result = swap(a, b, Subtask.INFLECTIONSWAP, bin_label, pos)
        if isinstance(result, Discard):
            discards.append({"stage": result.stage, "reason": result.reason, "detail": result.detail})
        else:
            quads.append(result)

    for row in gen_rows:
        if row["kind"] != "agreement":
            continue
        rec = rec_by_surface.get(row["sing"])
        if rec is None:
            discards.append({"stage": "filter", "reason": "unknown_candidate", "detail": row["sing"]})
            continue
        result = build_agreement_quadruplet(
            payload=row["payload"],
            record=rec,
            plural=row["plur"],
            kind=AgreementKind(row["agreement_kind"]),
            distance=Distance(row["distance"]),
            vocab=vocab,
            scheme=scheme,
            request_hash=row.get("request_hash", ""),
        )
        if isinstance(result, Discard):
            discards.append({"stage": result.stage, "reason": result.reason, "detail": result.detail})
        else:
            quads.append(result)

    kept: list[Quadruplet] = []
    verdict_rows: list[dict] = []
    for quad in quads:
        if quad.subtask == Subtask.WORDSWAP:
            verdict = wordswap_feasible(quad, index, sentences_by_id, gateway, templates["wordswap_filter"])
        else:
            verdict = syntactic_feasible(quad, gateway, templates["syntactic_filter"])
        if isinstance(verdict, Discard):
            discards.append({"stage": verdict.stage, "reason": verdict.reason, "detail": verdict.detail})
            continue
        verdict_rows.append(
            {
                "quadruplet_id": verdict.quadruplet_id,
                "subtask": quad.subtask.value,
                "prompts_passed": verdict.prompts_passed,
                "kept": verdict.kept,
                "transcripts": [
                    {"prompt": t.prompt, "answer": t.answer, "expected": t.expected, "raw": t.raw}
                    for t in verdict.transcripts
                ],
            }
        )
        if verdict.kept:
            kept.append(quad)
        else:
            discards.append(
                {"stage": "feasibility", "reason": "filter_failed", "detail": quad.quadruplet_id}
            )
    write_jsonl(paths.quadruplets, [_quad_to_row(q) for q in kept])
    write_jsonl(paths.filter_verdicts, verdict_rows)
    write_jsonl(paths.filter_discards, discards)


def stage_score(cfg: PipelineConfig, paths: Paths) -> None:
    quads = load_quadruplets(paths)
    backend = make_scorer(cfg.scorer.backend)
    mode = ScoringMode(cfg.scorer.mode)
    judge_mode = JudgeMode(cfg.scorer.judge)
    items = []
    for quad in quads:
        items.extend(scoring.quadruplet_items(quad))
    write_jsonl(
        paths.score_requests,
        [{"id": it.id, "text": it.text, **({"prefix": it.prefix} if it.prefix else {})} for it in items],
    )
    verdicts, skipped = scoring.score_quadruplets(quads, backend, mode, judge_mode)
    new_rows = []
    for quad, v in verdicts:
        row = {
            "model": cfg.scorer.model,
            "quadruplet_id": v.quadruplet_id,
            "subtask": quad.subtask.value,
            "bin": quad.bin,
            "pos": quad.pos.value,
            "correct": v.correct,
            "margin": v.margin,
            "judge_mode": v.judge_mode.value,
            "member": v.member,
        }
        if quad.agreement_kind:
            row["agreement_kind"] = quad.agreement_kind.value
        if quad.distance:
            row["distance"] = quad.distance.value
        new_rows.append(row)
    existing = read_jsonl(paths.score_verdicts) if paths.score_verdicts.exists() else []
    merged = [r for r in existing if r.get("model") != cfg.scorer.model] + new_rows
    write_jsonl(paths.score_verdicts, merged)
    if skipped:
        log.warning("score: skipped %d quadruplets with missing scores", len(skipped))


def stage_report(cfg: PipelineConfig, paths: Paths) -> None:
    rows = read_jsonl(_require(paths.score_verdicts, "score"))
    quads = load_quadruplets(paths)
    scheme = BinScheme(cfg.binning.doublings)
    matrix = metrics.per_bin_accuracy(rows)
    summary = metrics.compute_summary(matrix, scheme)
    counts = metrics.counts_table(quads, scheme)
    paths.report_dir.mkdir(parents=True, exist_ok=True)
    metrics.emit_report(matrix, summary, counts, paths.report_dir)


def stage_prefix(cfg: PipelineConfig, paths: Paths) -> None:
    quads = load_quadruplets(paths)
    sentences = load_sentences(paths)
    index = load_index(_require(paths.index, "ingest"))
    backend = make_scorer(cfg.scorer.backend)
    result = scoring.run_prefix_experiment(
        quads,
        backend,
        ScoringMode(cfg.scorer.mode),
        index,
        {s.sentence_id: s for s in sentences},
    )
    result["model"] = cfg.scorer.model
    result["per_bin_delta"] = {str(k): v for k, v in result["per_bin_delta"].items()}
    result["baseline_accuracy"] = {str(k): v for k, v in result["baseline_accuracy"].items()}
    result["prefixed_accuracy"] = {str(k): v for k, v in result["prefixed_accuracy"].items()}
    write_atomic(paths.prefix_report, json.dumps(result, indent=2, sort_keys=True) + "\n")


def stage_blimp(cfg: PipelineConfig, paths: Paths) -> None:
    vocab = load_vocab(paths)
    scheme = BinScheme(cfg.binning.doublings)
    rows = []
    for entry in cfg.blimp.paths:
        path = cfg.resolve(entry)
        pairs = metrics.load_blimp_pairs(path)
        for rec in metrics.blimp_rebin(pairs, vocab, scheme):
            rec["file"] = str(path)
            rows.append(rec)
    write_jsonl(paths.blimp_bins, rows)


def stage_counts(cfg: PipelineConfig, paths: Paths) -> None:
    quads = load_quadruplets(paths)
    scheme = BinScheme(cfg.binning.doublings)
    table = metrics.counts_table(quads, scheme)
    paths.counts_csv.parent.mkdir(parents=True, exist_ok=True)
    tmp = paths.counts_csv.with_name(paths.counts_csv.name + ".tmp")
    metrics.write_counts_csv(table, tmp)
    os.replace(tmp, paths.counts_csv)


_STAGE_FNS = {
    "ingest": stage_ingest,
    "candidates": stage_candidates,
    "generate": stage_generate,
    "filter": stage_filter,
    "score": stage_score,
    "report": stage_report,
    "prefix": stage_prefix,
    "blimp-rebin": stage_blimp,
    "counts": stage_counts,
}


def _stage_inputs(name: str, cfg: PipelineConfig, paths: Paths) -> list[Path]:
    if name == "ingest":
        return corpus_files(cfg)
    if name == "candidates":
        ins = [paths.vocab, paths.sentences, paths.sentences_cased, cfg.resolve(cfg.corpus.dictionary_path)]
        if cfg.tags.import_tsv:
            ins.append(cfg.resolve(cfg.tags.import_tsv))
        return ins
    if name == "generate":
        return [paths.candidates]
    if name == "filter":
        return [paths.gens, paths.vocab, paths.sentences, paths.index, paths.candidates]
    if name == "score":
        ins = [paths.quadruplets]
        if cfg.scorer.backend.startswith("file:"):
            ins.append(cfg.resolve(cfg.scorer.backend[len("file:") :]))
        return ins
    if name == "report":
        return [paths.score_verdicts, paths.quadruplets]
    if name == "prefix":
        return [paths.quadruplets, paths.sentences, paths.index]
    if name == "blimp-rebin":
        return [paths.vocab] + [cfg.resolve(p) for p in cfg.blimp.paths]
    if name == "counts":
        return [paths.quadruplets]
    raise PipelineError(f"unknown stage: {name}")


def _stage_outputs(name: str, paths: Paths) -> list[Path]:
    return {
        "ingest": [paths.vocab, paths.sentences, paths.sentences_cased, paths.index],
        "candidates": [paths.candidates],
        "generate": [paths.gens, paths.gen_discards],
        "filter": [paths.quadruplets, paths.filter_verdicts, paths.filter_discards],
        "score": [paths.score_requests, paths.score_verdicts],
        "report": [
            paths.report_dir / "report.json",
            paths.report_dir / "matrix.csv",
            paths.report_dir / "curves.csv",
            paths.report_dir / "counts.csv",
        ],
        "prefix": [paths.prefix_report],
        "blimp-rebin": [paths.blimp_bins],
        "counts": [paths.counts_csv],
    }[name]


_STAGE_CONFIG_KEYS = {
    "ingest": ("corpus",),
    "candidates": ("corpus", "binning", "morphology", "tags"),
    "generate": ("generation", "llm", "binning", "templates"),
    "filter": ("llm", "binning", "templates"),
    "score": ("scorer",),
    "report": ("binning",),
    "prefix": ("scorer", "binning"),
    "blimp-rebin": ("binning", "blimp"),
    "counts": ("binning",),
}


def _config_hash(name: str, cfg: PipelineConfig) -> str:
    payload = {"seed": cfg.seed}
    for key in _STAGE_CONFIG_KEYS[name]:
        section = getattr(cfg, key)
        payload[key] = section if isinstance(section, dict) else section.__dict__
    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()


class Manifest:
    def __init__(self, path: Path):
        self.path = path
        self.data = {}
        if path.is_file():
            self.data = json.loads(path.read_text(encoding="utf-8"))

    def up_to_date(self, name: str, cfg_hash: str, inputs: list[Path], outputs: list[Path]) -> bool:
        entry = self.data.get(name)
        if not entry or entry.get("config") != cfg_hash:
            return False
        for group, files in (("inputs", inputs), ("outputs", outputs)):
            recorded = entry.get(group, {})
            for f in files:
                if not f.exists() or recorded.get(str(f)) != _sha256(f):
                    return False
        return True

    def update(self, name: str, cfg_hash: str, inputs: list[Path], outputs: list[Path]) -> None:
        self.data[name] = {
            "config": cfg_hash,
            "inputs": {str(f): _sha256(f) for f in inputs},
            "outputs": {str(f): _sha256(f) for f in outputs},
            "time": time.time(),
        }
        write_atomic(self.path, json.dumps(self.data, indent=2, sort_keys=True) + "\n")


def run_stage(name: str, cfg: PipelineConfig, dry_run: bool = False, force: bool = False) -> str:
    """Run one stage; returns 'ran', 'skipped', or 'planned'."""
    if name not in _STAGE_FNS:
        raise PipelineError(f"unknown stage: {name!r} (choose from {', '.join(STAGES)})")
    paths = Paths(cfg)
    paths.root.mkdir(parents=True, exist_ok=True)
    inputs = _stage_inputs(name, cfg, paths)
    outputs = _stage_outputs(name, paths)
    cfg_hash = _config_hash(name, cfg)
    manifest = Manifest(paths.manifest)
    missing = [p for p in inputs if not p.exists()]
    if not force and not missing and manifest.up_to_date(name, cfg_hash, inputs, outputs):
        log.info("stage %s is up to date", name)
        return "skipped"
    if dry_run:
        return "planned"
    for p in missing:
        _require(p, _producer_of(p, paths))
    _STAGE_FNS[name](cfg, paths)
    manifest.update(name, cfg_hash, inputs, outputs)
    return "ran"


def _producer_of(path: Path, paths: Paths) -> str:
    for stage in STAGES:
        if path in _stage_outputs(stage, paths):
            return stage
    return "ingest"


def run_stages(names, cfg: PipelineConfig, dry_run: bool = False, force: bool = False) -> dict[str, str]:
    return {name: run_stage(name, cfg, dry_run=dry_run, force=force) for name in names}

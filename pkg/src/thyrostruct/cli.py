"""Command-line entry points over the library.

Every subcommand is a thin shell around one library operation and is
pipe-friendly: where --in/--out are omitted, stdin and stdout are used.
Exit codes: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import corpus as corpus_mod
from .backends import (
    Backend,
    BackendError,
    LlmConfig,
    TaggerConfig,
    llm_structure,
    normalize_language,
    remote_tag,
    rule_tag,
)
from .bio import decode_spans
from .evaluator import EvalReport, ReportFormat, emit_report
from .model import (
    EntitySpan,
    GoldDocument,
    LanguageMode,
    Transcript,
    record_from_json,
    record_to_json,
)
from .renderer import render_record
from .service import ServiceConfig
from .structurer import LanguagePack, Structurer


class DataError(click.ClickException):
    exit_code = 1


def _read_text(path: str | None) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write_text(path: str | None, data: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(data)
        return
    target = Path(path)
    tmp = target.with_suffix(target.suffix + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    tmp.replace(target)


def _extract_one(
    transcript: Transcript,
    backend: str,
    normalize: bool,
    structurer: Structurer,
    pack: LanguagePack,
    service_config: ServiceConfig | None,
):
    if normalize and transcript.language_mode is LanguageMode.MIXED:
        if not (service_config and service_config.llm_endpoint):
            raise DataError("--normalize needs an llm endpoint in --config")
        llm = LlmConfig(
            endpoint_url=service_config.llm_endpoint,
            api_key_env=service_config.llm_api_key_env,
            model_name=service_config.llm_model,
        )
        transcript = normalize_language(transcript, llm)
    if backend == "rule":
        spans = rule_tag(transcript, pack)
        return structurer.structure(spans, transcript)
    if backend == "remote":
        if not (service_config and service_config.remote_endpoint):
            raise DataError("remote backend needs remote_endpoint in --config")
        tagger = TaggerConfig(
            backend=Backend.REMOTE, endpoint_url=service_config.remote_endpoint
        )
        seq = remote_tag(transcript, tagger)
        spans = decode_spans(seq, transcript.text)
        return structurer.structure(spans, transcript)
    if not (service_config and service_config.llm_endpoint):
        raise DataError("llm backend needs llm_endpoint in --config")
    llm = LlmConfig(
        endpoint_url=service_config.llm_endpoint,
        api_key_env=service_config.llm_api_key_env,
        model_name=service_config.llm_model,
    )
    return llm_structure(transcript, llm)


@click.group()
def main() -> None:
    """Structured operation records from thyroid-surgery narratives."""


@main.command()
@click.option("--backend", type=click.Choice(["rule", "remote", "llm"]), default="rule")
@click.option("--normalize", is_flag=True, help="normalize mixed-language text first")
@click.option("--lang-pack", default="en", show_default=True)
@click.option("--in", "in_path", default=None, help="transcript text file (default stdin)")
@click.option("--out", "out_path", default=None, help="record JSON output (default stdout)")
@click.option("--language-mode", type=click.Choice(["monolingual", "mixed"]),
              default="monolingual")
@click.option("--corpus", "corpus_dir", default=None,
              help="extract a whole corpus directory instead of one file")
@click.option("--out-dir", default=None, help="record output directory for --corpus")
@click.option("--jobs", default=1, show_default=True, help="parallel workers for --corpus")
@click.option("--config", "config_path", default=None, help="service config for endpoints")
def extract(backend, normalize, lang_pack, in_path, out_path, language_mode,
            corpus_dir, out_dir, jobs, config_path):
    """Run the extraction pipeline on one transcript or a corpus."""
    pack = LanguagePack.load(lang_pack)
    structurer = Structurer(pack=pack)
    service_config = ServiceConfig.from_file(config_path) if config_path else None
    try:
        if corpus_dir:
            if not out_dir:
                raise DataError("--corpus requires --out-dir")
            documents = corpus_mod.load_corpus(corpus_dir)
            out_root = Path(out_dir)
            out_root.mkdir(parents=True, exist_ok=True)

            def work(doc: GoldDocument) -> None:
                record = _extract_one(doc.transcript, backend, normalize,
                                      structurer, pack, service_config)
                _write_text(str(out_root / f"{doc.transcript.id}.json"),
                            record_to_json(record, indent=2) + "\n")

            if jobs > 1:
                with ThreadPoolExecutor(max_workers=jobs) as pool:
                    list(pool.map(work, documents))
            else:
                for doc in documents:
                    work(doc)
            click.echo(f"wrote {len(documents)} records to {out_root}", err=True)
            return
        text = _read_text(in_path)
        transcript = Transcript(id="cli", text=text,
                                language_mode=LanguageMode(language_mode))
        record = _extract_one(transcript, backend, normalize, structurer, pack,
                              service_config)
        _write_text(out_path, record_to_json(record, indent=2) + "\n")
    except BackendError as exc:
        raise DataError(str(exc)) from exc
    except (ValueError, OSError) as exc:
        raise DataError(str(exc)) from exc


@main.command()
@click.option("--in", "in_path", default=None,
              help="JSONL of {text, spans:[{tag,start,end}]} (default stdin)")
@click.option("--out", "out_path", default=None)
@click.option("--lang-pack", default="en", show_default=True)
def structure(in_path, out_path, lang_pack):
    """Map already-tagged spans onto records, one JSON line in, one out."""
    pack = LanguagePack.load(lang_pack)
    structurer = Structurer(pack=pack)
    lines_out = []
    try:
        for line in _read_text(in_path).splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            text = obj["text"]
            transcript = Transcript(id=obj.get("id", "cli"), text=text)
            spans = [
                EntitySpan(s["start"], s["end"], s["tag"], text[s["start"]:s["end"]])
                for s in obj["spans"]
            ]
            record = structurer.structure(spans, transcript)
            lines_out.append(record_to_json(record))
    except (ValueError, KeyError) as exc:
        raise DataError(str(exc)) from exc
    _write_text(out_path, "\n".join(lines_out) + "\n")


@main.command()
@click.option("--in", "in_path", default=None, help="record JSON (default stdin)")
@click.option("--out", "out_path", default=None, help="SVG output (default stdout)")
def render(in_path, out_path):
    """Render the anatomy figure for one record."""
    try:
        record = record_from_json(_read_text(in_path))
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _write_text(out_path, render_record(record))


def _load_records_arg(path: str) -> list:
    """Records from a corpus dir, a directory of record .json files, or a
    gold-document .jsonl file."""
    p = Path(path)
    if p.is_dir():
        if (p / "manifest.json").exists():
            return [doc.gold_record for doc in corpus_mod.load_corpus(p)]
        return [
            record_from_json(f.read_text(encoding="utf-8"))
            for f in sorted(p.glob("*.json"))
        ]
    if p.suffix == ".jsonl":
        from .model import gold_from_json
        return [
            gold_from_json(line).gold_record
            for line in p.read_text(encoding="utf-8").splitlines() if line.strip()
        ]
    raise DataError(f"cannot load records from {path}")


def _load_spans_arg(path: str) -> dict:
    p = Path(path)
    if p.is_dir() and (p / "manifest.json").exists():
        return {
            doc.transcript.id: list(doc.gold_spans)
            for doc in corpus_mod.load_corpus(p)
        }
    if p.suffix == ".jsonl":
        from .model import gold_from_json
        docs = [gold_from_json(line)
                for line in p.read_text(encoding="utf-8").splitlines() if line.strip()]
        return {doc.transcript.id: list(doc.gold_spans) for doc in docs}
    raise DataError(f"cannot load spans from {path}")


@main.command("eval")
@click.option("--gold", required=True, help="corpus dir, records dir, or gold .jsonl")
@click.option("--pred", required=True, help="corpus dir, records dir, or gold .jsonl")
@click.option("--kind", type=click.Choice(["records", "spans"]), default="records",
              show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "markdown"]),
              default="json", show_default=True)
@click.option("--out", "out_path", default=None)
def eval_cmd(gold, pred, kind, fmt, out_path):
    """Score predictions against gold and emit a report."""
    try:
        if kind == "records":
            report = EvalReport.from_records(_load_records_arg(gold), _load_records_arg(pred))
        else:
            report = EvalReport.from_spans(_load_spans_arg(gold), _load_spans_arg(pred))
    except (ValueError, OSError) as exc:
        raise DataError(str(exc)) from exc
    _write_text(out_path, emit_report(report, ReportFormat(fmt)))


@main.command("gen-corpus")
@click.option("--seed", default=0, show_default=True)
@click.option("-n", "--n-documents", default=10, show_default=True)
@click.option("--out", "out_dir", required=True)
@click.option("--lang-pack", default="en", show_default=True)
@click.option("--preset", type=click.Choice(sorted(corpus_mod.PROFILE_PRESETS)), default=None)
@click.option("--noise-transliteration", default=0.0, show_default=True)
@click.option("--noise-descriptor-loss", default=0.0, show_default=True)
@click.option("--noise-negated-dissection", default=0.0, show_default=True)
@click.option("--noise-synonym-swap", default=0.0, show_default=True)
def gen_corpus(seed, n_documents, out_dir, lang_pack, preset,
               noise_transliteration, noise_descriptor_loss,
               noise_negated_dissection, noise_synonym_swap):
    """Generate a synthetic gold corpus to disk."""
    try:
        if preset:
            profile = corpus_mod.PROFILE_PRESETS[preset]
        else:
            profile = corpus_mod.GeneratorProfile(
                seed=seed,
                n_documents=n_documents,
                language_pack=lang_pack,
                noise=corpus_mod.NoiseProfile(
                    transliteration_mix=noise_transliteration,
                    descriptor_grouping_loss=noise_descriptor_loss,
                    negated_dissection=noise_negated_dissection,
                    synonym_swap=noise_synonym_swap,
                ),
            )
        documents = corpus_mod.generate(profile)
        corpus_mod.save_corpus(documents, out_dir, profile)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    click.echo(f"wrote {len(documents)} documents to {out_dir}", err=True)


@main.command("split")
@click.argument("ratios", nargs=3, type=float)
@click.option("--corpus", "corpus_dir", required=True)
@click.option("--out", "out_dir", required=True)
@click.option("--seed", default=None, type=int, help="shuffle before splitting")
def split_cmd(ratios, corpus_dir, out_dir, seed):
    """Partition a corpus into train/valid/test sub-corpora."""
    try:
        documents = corpus_mod.load_corpus(corpus_dir)
        train, valid, test = corpus_mod.split(documents, tuple(ratios), seed=seed)
        root = Path(out_dir)
        for name, docs in (("train", train), ("valid", valid), ("test", test)):
            corpus_mod.save_corpus(docs, root / name)
    except (ValueError, OSError) as exc:
        raise DataError(str(exc)) from exc
    click.echo(
        f"split {len(documents)} -> {len(train)}/{len(valid)}/{len(test)} under {out_dir}",
        err=True,
    )


@main.command()
@click.option("--config", "config_path", default=None, help="service config JSON")
@click.option("--storage", default=None, help="storage path (overrides config)")
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
def serve(config_path, storage, host, port):
    """Run the HTTP service."""
    from . import service as service_mod

    if config_path:
        config = ServiceConfig.from_file(config_path)
    elif storage:
        config = ServiceConfig(storage_path=storage)
    else:
        raise click.UsageError("serve needs --config or --storage")
    overrides = {}
    if storage:
        overrides["storage_path"] = storage
    if host:
        overrides["host"] = host
    if port:
        overrides["port"] = port
    if overrides:
        from dataclasses import replace
        config = replace(config, **overrides)
    click.echo(f"listening on http://{config.host}:{config.port}", err=True)
    service_mod.run(config)


if __name__ == "__main__":
    main()

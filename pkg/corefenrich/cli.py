"""
Command line entry point: `corefenrich <subcommand> ...`.

Exit codes: 0 success, 1 usage error, 2 unreadable or unparsable input
(malformed tag blocks included), 3 data breaking an invariant.
"""
import logging
import os
import shutil
import sys
import tempfile
from contextlib import ExitStack, contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import click
from tqdm import tqdm

from corefenrich import __version__
from corefenrich.enrichment import (
    EnrichmentConfig,
    EnrichmentSummary,
    iter_enriched,
    strip_tags,
)
from corefenrich.errors import (
    build_reports,
    category_breakdown,
    load_error_records,
    render_rate,
    report_frame,
)
from corefenrich.evaluation import (
    corpus_bleu,
    evaluation_row,
    evaluation_table,
    read_segments,
    read_subset,
    select_coref_lines,
    select_coref_subset,
    subset_slice,
    write_subset,
)
from corefenrich.formats import guess_format, iter_jsonl, read_corpus, write_corpus
from corefenrich.formats import index_line, read_tagged_text, tagged_line
from corefenrich.model import (
    Document,
    FormatParseError,
    InvariantViolation,
    TagStructureError,
    ensure_valid,
)
from corefenrich.parallel import default_threads
from corefenrich.reports import write_report
from corefenrich.settings import (
    AGGREGATIONS,
    BLEU_DECIMALS,
    EXCLUDED_PRONOUNS,
    HEAD_RULE,
    HEAD_RULES,
    JSONL_SCHEMA_VERSION,
    MAX_HEAD_TOKENS,
    MIN_CHAIN_SIZE,
    REPORT_FORMATS,
    SMOOTHING_METHODS,
    STDOUT_SPOOL_BYTES,
    TAG_CLOSE,
    TAG_OPEN,
)
from corefenrich.stats import (
    aggregate,
    document_stats,
    group_by_genre,
    stats_frame,
    stats_row,
)
from corefenrich.textio import encode_line

logger = logging.getLogger(__name__)

PROG_NAME = "corefenrich"
LOG_HANDLER_NAME = "corefenrich-cli"
DOCUMENT_FORMATS = ("conll", "jsonl")

InputPath = click.Path(exists=True, dir_okay=False, path_type=Path)


@dataclass(frozen=True)
class RunConfig:
    threads: int = 1
    progress: bool = False


def _remove_log_handler() -> None:
    package_logger = logging.getLogger("corefenrich")
    for handler in list(package_logger.handlers):
        if handler.get_name() == LOG_HANDLER_NAME:
            package_logger.removeHandler(handler)


def configure_logging(verbose: bool) -> None:
    """One stderr handler on the package logger, replaced on every call."""
    _remove_log_handler()
    package_logger = logging.getLogger("corefenrich")
    handler = logging.StreamHandler(sys.stderr)
    handler.set_name(LOG_HANDLER_NAME)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    package_logger.addHandler(handler)
    package_logger.setLevel(logging.DEBUG if verbose else logging.WARNING)


@contextmanager
def open_output(path: str) -> Iterator[IO[bytes]]:
    """
    Byte stream replacing `path` only once the block finishes without error.
    "-" spools the output, in memory up to STDOUT_SPOOL_BYTES and on disk
    beyond, and copies it to stdout at the end.
    """
    if path == "-":
        with tempfile.SpooledTemporaryFile(max_size=STDOUT_SPOOL_BYTES) as spool:
            yield spool
            spool.seek(0)
            stdout = click.get_binary_stream("stdout")
            shutil.copyfileobj(spool, stdout)
            stdout.flush()
        return
    target = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as stream:
            yield stream
        os.replace(tmp_name, target)
    finally:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)


def _input_format(path: Path, fmt: Optional[str]) -> str:
    if fmt is not None:
        return fmt
    try:
        return guess_format(path)
    except ValueError as e:
        raise click.UsageError(str(e)) from e


def iter_documents(path: Path, fmt: Optional[str], genre: Optional[str] = None) -> Iterator[Document]:
    """
    Valid documents of a corpus file, JSON lines read lazily.

    Raises:
        InvariantViolation for invalid documents or repeated document ids.
    """
    fmt = _input_format(path, fmt)
    if fmt not in DOCUMENT_FORMATS:
        raise click.UsageError(
            f"'{path}' is {fmt}, expected one of {DOCUMENT_FORMATS} (use `convert` first)"
        )
    seen = set()

    def checked(docs: Iterable[Document]) -> Iterator[Document]:
        for doc in docs:
            if doc.id in seen:
                raise InvariantViolation([f"document id {doc.id} occurs more than once in {path}"])
            seen.add(doc.id)
            yield ensure_valid(doc)

    if fmt == "jsonl":
        with path.open("rb") as stream:
            yield from checked(iter_jsonl(stream))
    else:
        yield from checked(read_corpus(path, fmt, genre=genre).documents)


def enrichment_options(func):
    """Flags mirroring EnrichmentConfig, shared by `enrich` and `subset`."""
    options = [
        click.option(
            "--max-head-tokens",
            type=click.IntRange(min=1),
            default=MAX_HEAD_TOKENS,
            show_default=True,
            help="Longest cleaned chain head prepended to a pronoun.",
        ),
        click.option(
            "--exclude-pronoun",
            "excluded_pronouns",
            multiple=True,
            help="Pronoun never enriched, repeatable. Defaults to 'I'.",
        ),
        click.option(
            "--min-chain-size",
            type=click.IntRange(min=1),
            default=MIN_CHAIN_SIZE,
            show_default=True,
        ),
        click.option(
            "--head-rule", type=click.Choice(HEAD_RULES), default=HEAD_RULE, show_default=True
        ),
        click.option("--tag-open", default=TAG_OPEN, show_default=True),
        click.option("--tag-close", default=TAG_CLOSE, show_default=True),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _enrichment_config(
    max_head_tokens: int = MAX_HEAD_TOKENS,
    excluded_pronouns: Sequence[str] = (),
    min_chain_size: int = MIN_CHAIN_SIZE,
    head_rule: str = HEAD_RULE,
    tag_open: str = TAG_OPEN,
    tag_close: str = TAG_CLOSE,
) -> EnrichmentConfig:
    try:
        return EnrichmentConfig(
            max_head_tokens=max_head_tokens,
            excluded_pronouns=frozenset(excluded_pronouns or EXCLUDED_PRONOUNS),
            min_chain_size=min_chain_size,
            head_rule=head_rule,
            tag_open=tag_open,
            tag_close=tag_close,
        )
    except ValueError as e:
        raise click.UsageError(str(e)) from e


def _tag_config(tag_open: str, tag_close: str) -> EnrichmentConfig:
    return _enrichment_config(tag_open=tag_open, tag_close=tag_close)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option(
    "--threads",
    type=click.IntRange(min=1),
    default=default_threads,
    show_default="COREFENRICH_THREADS or 1",
    help="Worker threads. Output does not depend on it.",
)
@click.option("--verbose", "-v", is_flag=True, help="Debug logging on stderr.")
@click.option("--progress", is_flag=True, help="Progress bar on stderr.")
@click.version_option(
    __version__,
    prog_name=PROG_NAME,
    message=f"%(prog)s %(version)s (jsonl schema {JSONL_SCHEMA_VERSION})",
)
@click.pass_context
def cli(ctx: click.Context, threads: int, verbose: bool, progress: bool):
    """Coreference-chain enrichment of sentence-level MT training data."""
    configure_logging(verbose)
    ctx.obj = RunConfig(threads=threads, progress=progress)


@cli.command()
@click.option("--in", "in_path", required=True, type=InputPath)
@click.option("--in-format", type=click.Choice(("conll", "mmax", "jsonl")))
@click.option("--markables", type=InputPath, help="MMAX2 coreference level file.")
@click.option("--sentences", type=InputPath, help="MMAX2 sentence level file.")
@click.option("--genre", help="Genre of the converted documents.")
@click.option("--out", "out_path", default="-", show_default=True)
@click.option(
    "--out-format", type=click.Choice(DOCUMENT_FORMATS), default="jsonl", show_default=True
)
def convert(in_path, in_format, markables, sentences, genre, out_path, out_format):
    """Converts annotated documents between CoNLL, MMAX2 and JSON lines."""
    in_format = _input_format(in_path, in_format)
    if in_format == "mmax" and markables is None:
        raise click.UsageError("--markables is required for MMAX2 input")
    corpus = read_corpus(in_path, in_format, markables=markables, sentences=sentences, genre=genre)
    docs = [ensure_valid(doc) for doc in corpus.documents]
    with open_output(out_path) as stream:
        write_corpus(docs, stream, out_format)


@cli.command()
@click.option("--docs", "docs_path", required=True, type=InputPath)
@click.option("--in-format", type=click.Choice(DOCUMENT_FORMATS))
@click.option("--out", "out_path", default="-", show_default=True)
@click.option("--index", "index_path", help="Sidecar file with doc id and sentence per line.")
@enrichment_options
@click.pass_obj
def enrich(run: RunConfig, docs_path, in_format, out_path, index_path, **options):
    """Writes tagged training text, one sentence per line."""
    cfg = _enrichment_config(**options)
    summary = EnrichmentSummary()
    with ExitStack() as stack:
        out = stack.enter_context(open_output(out_path))
        index = stack.enter_context(open_output(index_path)) if index_path else None
        results = iter_enriched(iter_documents(docs_path, in_format), cfg, run.threads)
        for enriched in tqdm(results, disable=not run.progress, unit="doc", desc="enrich"):
            summary.add(enriched)
            for sentence in enriched:
                out.write(tagged_line(sentence))
                if index is not None:
                    index.write(index_line(sentence))
    logger.info("%s", summary)


@cli.command()
@click.option("--in", "in_path", required=True, type=InputPath)
@click.option("--out", "out_path", default="-", show_default=True)
@click.option("--tag-open", default=TAG_OPEN, show_default=True)
@click.option("--tag-close", default=TAG_CLOSE, show_default=True)
def strip(in_path, out_path, tag_open, tag_close):
    """Removes every tag block from tagged text."""
    cfg = _tag_config(tag_open, tag_close)
    with open_output(out_path) as out, in_path.open("rb") as stream:
        for line_no, tokens in enumerate(read_tagged_text(stream), start=1):
            try:
                stripped = strip_tags(tokens, cfg)
            except TagStructureError as e:
                raise TagStructureError(f"line {line_no}: {e}", e.position) from e
            out.write(encode_line(" ".join(stripped)))


@cli.command()
@click.option("--docs", "docs_paths", required=True, multiple=True, type=InputPath)
@click.option("--in-format", type=click.Choice(DOCUMENT_FORMATS))
@click.option(
    "--min-chain-size", type=click.IntRange(min=1), default=MIN_CHAIN_SIZE, show_default=True
)
@click.option(
    "--aggregation",
    type=click.Choice(AGGREGATIONS + ("both",)),
    default="both",
    show_default=True,
)
@click.option("--per-document", is_flag=True, help="Add one row per document.")
@click.option(
    "--enriched-tokens",
    is_flag=True,
    help="Count tokens of the enriched text, inserted content included, tags excluded.",
)
@click.option("--format", "fmt", type=click.Choice(REPORT_FORMATS), default="tsv", show_default=True)
@click.option("--corpus", "corpus_names", multiple=True, help="Name per --docs, defaults to the file stem.")
@click.option("--out", "out_path", default="-", show_default=True)
@click.pass_obj
def stats(
    run: RunConfig,
    docs_paths,
    in_format,
    min_chain_size,
    aggregation,
    per_document,
    enriched_tokens,
    fmt,
    corpus_names,
    out_path,
):
    """Chain statistics per corpus and genre."""
    if corpus_names and len(corpus_names) != len(docs_paths):
        raise click.UsageError("give one --corpus name per --docs file")
    cfg = _enrichment_config(min_chain_size=min_chain_size) if enriched_tokens else None
    aggregations = AGGREGATIONS if aggregation == "both" else (aggregation,)
    rows: List[Dict] = []
    for position, path in enumerate(docs_paths):
        name = corpus_names[position] if corpus_names else path.stem
        docs = list(
            tqdm(
                iter_documents(path, in_format),
                disable=not run.progress,
                unit="doc",
                desc=name,
            )
        )
        for genre, genre_docs in group_by_genre(docs).items():
            ordered = sorted(genre_docs, key=lambda d: d.id)
            per_doc = [document_stats(doc, min_chain_size, cfg) for doc in ordered]
            if per_document:
                rows.extend(
                    stats_row(name, genre, doc_stats, doc.id)
                    for doc, doc_stats in zip(ordered, per_doc)
                )
            for mode in aggregations:
                rows.append(stats_row(name, genre, aggregate(per_doc, mode)))
    with open_output(out_path) as out:
        write_report(stats_frame(rows), out, fmt)


def _system_documents(
    ctx: click.Context, param: click.Parameter, values: Tuple[str, ...]
) -> Dict[str, Path]:
    systems: Dict[str, Path] = {}
    for value in values:
        system, sep, path = value.partition("=")
        if not sep or not system or not path:
            raise click.BadParameter(f"expected SYSTEM=PATH, got '{value}'", ctx, param)
        if system in systems:
            raise click.BadParameter(f"system '{system}' given twice", ctx, param)
        if not Path(path).is_file():
            raise click.BadParameter(f"file '{path}' does not exist", ctx, param)
        systems[system] = Path(path)
    return systems


@cli.command()
@click.option("--records", "records_path", required=True, type=InputPath)
@click.option(
    "--docs",
    "system_docs",
    required=True,
    multiple=True,
    callback=_system_documents,
    metavar="SYSTEM=PATH",
    help="Annotated output documents of a system, repeatable.",
)
@click.option("--in-format", type=click.Choice(DOCUMENT_FORMATS))
@click.option("--genre", "genres", multiple=True, help="Restrict to genres, repeatable.")
@click.option("--format", "fmt", type=click.Choice(REPORT_FORMATS), default="tsv", show_default=True)
@click.option("--out", "out_path", default="-", show_default=True)
@click.option("--breakdown", "breakdown_path", help="Also write errors per category here.")
def errors(records_path, system_docs, in_format, genres, fmt, out_path, breakdown_path):
    """Mention error rates and error-type splits per system and genre."""
    with records_path.open("rb") as stream:
        records = load_error_records(stream)
    docs_by_system = {
        system: list(iter_documents(path, in_format)) for system, path in system_docs.items()
    }
    reports = build_reports(records, docs_by_system, genres or None)
    for report in reports:
        logger.info(
            "%s %s: %s", report.system, report.genre, render_rate(report.total_errors, report.total_mentions)
        )
    with ExitStack() as stack:
        out = stack.enter_context(open_output(out_path))
        write_report(report_frame(reports), out, fmt)
        if breakdown_path:
            breakdown = stack.enter_context(open_output(breakdown_path))
            write_report(category_breakdown(reports), breakdown, fmt)


@cli.group("eval")
def evaluate():
    """Automatic evaluation."""


@evaluate.command()
@click.option("--hyp", "hyp_path", required=True, type=InputPath)
@click.option("--ref", "ref_path", required=True, type=InputPath)
@click.option("--subset", "subset_path", type=InputPath, help="Score only these line indices.")
@click.option(
    "--smoothing", type=click.Choice(SMOOTHING_METHODS), default="none", show_default=True
)
@click.option("--system", default="", help="System label for --report.")
@click.option("--genre", default="", help="Genre label for --report.")
@click.option("--meteor", type=float, help="Externally computed METEOR for --report.")
@click.option("--report", "report_path", help="Write an evaluation table here.")
@click.pass_obj
def bleu(run: RunConfig, hyp_path, ref_path, subset_path, smoothing, system, genre, meteor, report_path):
    """Corpus BLEU of pre-tokenized output against one reference."""
    with hyp_path.open("rb") as stream:
        hypotheses = read_segments(stream)
    with ref_path.open("rb") as stream:
        references = read_segments(stream)
    if len(hypotheses) != len(references):
        raise InvariantViolation(
            [f"{len(hypotheses)} hypothesis lines but {len(references)} reference lines"]
        )
    rows = []
    if subset_path is not None:
        with subset_path.open("rb") as stream:
            indices = read_subset(stream)
        hypotheses = subset_slice(hypotheses, indices)
        references = subset_slice(references, indices)
    if not hypotheses:
        raise InvariantViolation(["nothing to score"])
    score = corpus_bleu(hypotheses, references, smoothing=smoothing, threads=run.threads)
    logger.info("%s", score)
    slice_name = "all" if subset_path is None else "coref"
    rows.append(evaluation_row(system, genre, slice_name, score, meteor))
    if report_path:
        with open_output(report_path) as out:
            write_report(evaluation_table(rows), out, "tsv")
    click.echo(f"{round(score.score, BLEU_DECIMALS)}")


@cli.command()
@click.option("--docs", "docs_path", type=InputPath, help="Enrich these documents and select.")
@click.option("--tagged", "tagged_path", type=InputPath, help="Select from tagged text.")
@click.option("--in-format", type=click.Choice(DOCUMENT_FORMATS))
@click.option("--out", "out_path", default="-", show_default=True)
@enrichment_options
@click.pass_obj
def subset(run: RunConfig, docs_path, tagged_path, in_format, out_path, **options):
    """Line indices of the sentences that receive at least one tag block."""
    if (docs_path is None) == (tagged_path is None):
        raise click.UsageError("give exactly one of --docs and --tagged")
    cfg = _enrichment_config(**options)
    if docs_path is not None:
        sentences = (
            sentence
            for enriched in iter_enriched(iter_documents(docs_path, in_format), cfg, run.threads)
            for sentence in enriched
        )
        indices = select_coref_subset(sentences)
    else:
        with tagged_path.open("rb") as stream:
            indices = select_coref_lines(read_tagged_text(stream), cfg)
    logger.info("Selected %d lines", len(indices))
    with open_output(out_path) as out:
        out.write(write_subset(indices))


def _fail(message: str) -> None:
    click.echo(f"{PROG_NAME}: error: {message}", err=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Runs the command line and returns its exit code."""
    try:
        result = cli.main(
            args=list(argv) if argv is not None else None,
            prog_name=PROG_NAME,
            standalone_mode=False,
        )
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.Abort:
        _fail("aborted")
        return 1
    except click.ClickException as e:
        _fail(e.format_message())
        return 1
    except InvariantViolation as e:
        _fail(str(e))
        return 3
    except (FormatParseError, TagStructureError, ValueError, OSError) as e:
        _fail(str(e))
        return 2
    finally:
        _remove_log_handler()
        logging.getLogger("corefenrich").setLevel(logging.NOTSET)
    return result if isinstance(result, int) else 0


def run() -> None:
    sys.exit(main())

"""
Corpus BLEU over pre-tokenized, single-reference segments and selection of
the coreference subset (the lines that received at least one tag block).
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import pandas as pd
from sacrebleu.metrics import BLEU

from corefenrich.enrichment import EnrichedSentence, EnrichmentConfig
from corefenrich.model import FormatParseError, InvariantViolation
from corefenrich.parallel import ordered_map
from corefenrich.settings import BLEU_DECIMALS, BLEU_MAX_ORDER, SMOOTHING_METHODS
from corefenrich.textio import encode_line, text_lines

logger = logging.getLogger(__name__)

SLICES = ("all", "coref")
EVALUATION_COLUMNS = ["system", "genre", "slice", "bleu", "meteor", "mention_errors"]

# smoothing name -> sacrebleu (smooth_method, smooth_value)
SACREBLEU_SMOOTHING = {"none": ("none", None), "add_one": ("add-k", 1)}
# segments whose statistics one worker collects at a time
SEGMENTS_PER_CHUNK = 1000


@dataclass(frozen=True)
class BleuScore:
    """
    Corpus BLEU. Precisions are exact clipped n-gram ratios, the score is
    brevity_penalty * geometric mean of the precisions * 100.
    """

    score: float
    ngram_precisions: Tuple[Fraction, ...]
    brevity_penalty: float
    hyp_length: int
    ref_length: int
    counts: Tuple[int, ...] = ()
    totals: Tuple[int, ...] = ()

    def format(self, width: int = BLEU_DECIMALS) -> str:
        precisions = "/".join(f"{float(p) * 100:.1f}" for p in self.ngram_precisions)
        ratio = self.hyp_length / self.ref_length if self.ref_length else 0.0
        return (
            f"BLEU = {self.score:.{width}f} {precisions} "
            f"(BP = {self.brevity_penalty:.3f} ratio = {ratio:.3f} "
            f"hyp_len = {self.hyp_length} ref_len = {self.ref_length})"
        )

    def __str__(self) -> str:
        return self.format()


def _chunks(
    hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]]
) -> Iterator[Tuple[List[str], List[str]]]:
    for start in range(0, len(hypotheses), SEGMENTS_PER_CHUNK):
        end = start + SEGMENTS_PER_CHUNK
        yield (
            [" ".join(tokens) for tokens in hypotheses[start:end]],
            [" ".join(tokens) for tokens in references[start:end]],
        )


def _chunk_statistics(
    chunk: Tuple[List[str], List[str]], max_order: int = BLEU_MAX_ORDER
) -> Tuple[List[int], List[int], int, int]:
    """Clipped n-gram matches, n-gram totals and lengths of a chunk of segments."""
    hypotheses, references = chunk
    metric = BLEU(
        tokenize="none",
        smooth_method="none",
        max_ngram_order=max_order,
        effective_order=True,
        force=True,
    )
    stats = metric.corpus_score(hypotheses, [references])
    return list(stats.counts), list(stats.totals), stats.sys_len, stats.ref_len


def corpus_bleu(
    hypotheses: Sequence[Sequence[str]],
    references: Sequence[Sequence[str]],
    smoothing: str = "none",
    threads: int = 1,
    max_order: int = BLEU_MAX_ORDER,
) -> BleuScore:
    """
    Corpus-level BLEU with brevity penalty against one reference per segment.

    Segment statistics are collected by sacrebleu per chunk of segments and
    summed over the corpus before scoring, so the score does not depend on
    segment order or on `threads`. Orders for which the whole corpus has no
    n-grams are left out of the geometric mean (sacrebleu's effective
    order), so BLEU(h, h) is 100 for any non-empty h.

    Args:
        hypotheses: Tokenized system output, one list per segment
        references: Tokenized references, aligned with hypotheses
        smoothing: "none", or "add_one" adding 1 to matches and totals of
            orders 2 and up
        threads: Workers collecting chunk statistics

    Raises:
        ValueError for unaligned or empty input or an unknown smoothing.
    """
    if smoothing not in SMOOTHING_METHODS:
        raise ValueError(f"Unknown smoothing '{smoothing}', choose from {SMOOTHING_METHODS}")
    if len(hypotheses) != len(references):
        raise ValueError(
            f"{len(hypotheses)} hypotheses but {len(references)} references, "
            "segments must be aligned"
        )
    if not hypotheses:
        raise ValueError("Cannot score an empty corpus")

    hyp_length = ref_length = 0
    matches = [0] * max_order
    totals = [0] * max_order
    for chunk_matches, chunk_totals, hyp_len, ref_len in ordered_map(
        lambda chunk: _chunk_statistics(chunk, max_order),
        _chunks(hypotheses, references),
        threads=threads,
    ):
        hyp_length += hyp_len
        ref_length += ref_len
        for n in range(max_order):
            matches[n] += chunk_matches[n]
            totals[n] += chunk_totals[n]

    smooth_method, smooth_value = SACREBLEU_SMOOTHING[smoothing]
    # compute_bleu adds the smoothing constant in place, hence the copies
    result = BLEU.compute_bleu(
        list(matches),
        list(totals),
        hyp_length,
        ref_length,
        smooth_method=smooth_method,
        smooth_value=smooth_value,
        effective_order=True,
        max_ngram_order=max_order,
    )

    offset = 1 if smoothing == "add_one" else 0
    precisions = []
    for n in range(max_order):
        extra = offset if n > 0 else 0
        denominator = totals[n] + extra
        precisions.append(
            Fraction(matches[n] + extra, denominator) if denominator else Fraction(0)
        )
    logger.debug(
        "BLEU over %d segments: matches %s, totals %s", len(hypotheses), matches, totals
    )

    return BleuScore(
        score=float(result.score),
        ngram_precisions=tuple(precisions),
        brevity_penalty=float(result.bp),
        hyp_length=hyp_length,
        ref_length=ref_length,
        counts=tuple(matches),
        totals=tuple(totals),
    )


def select_coref_subset(enriched: Iterable[EnrichedSentence]) -> List[int]:
    """Line indices of the sentences with at least one insertion, in corpus order."""
    return [index for index, sentence in enumerate(enriched) if sentence.insertions]


def select_coref_lines(
    tagged_lines: Iterable[Sequence[str]], cfg: Optional[EnrichmentConfig] = None
) -> List[int]:
    """Same selection as select_coref_subset, read back from tagged text."""
    cfg = cfg or EnrichmentConfig()
    return [index for index, tokens in enumerate(tagged_lines) if cfg.tag_open in tokens]


def read_segments(stream: Union[IO[bytes], Iterable[bytes]]) -> List[List[str]]:
    """One pre-tokenized segment per line, empty lines are empty segments."""
    return [line.split() for line in text_lines(stream)]


def read_subset(stream: Union[IO[bytes], Iterable[bytes]]) -> List[int]:
    indices = []
    for line_no, line in enumerate(text_lines(stream), start=1):
        value = line.strip()
        if not value:
            continue
        if not value.isdigit():
            raise FormatParseError(f"expected a line index, found '{value}'", line=line_no)
        indices.append(int(value))
    return indices


def write_subset(indices: Iterable[int]) -> bytes:
    return b"".join(encode_line(str(index)) for index in indices)


def subset_slice(segments: Sequence[Sequence[str]], indices: Sequence[int]) -> List[Sequence[str]]:
    out_of_range = [index for index in indices if index >= len(segments)]
    if out_of_range:
        raise InvariantViolation(
            [f"subset line {index} is beyond the {len(segments)} segments" for index in out_of_range]
        )
    return [segments[index] for index in indices]


def evaluation_row(
    system: str,
    genre: str,
    slice_name: str,
    bleu: BleuScore,
    meteor: Optional[float] = None,
    mention_errors: str = "",
) -> Dict:
    if slice_name not in SLICES:
        raise ValueError(f"Unknown slice '{slice_name}', choose from {SLICES}")
    return {
        "system": system,
        "genre": genre,
        "slice": slice_name,
        "bleu": round(bleu.score, BLEU_DECIMALS),
        "meteor": meteor,
        "mention_errors": mention_errors,
    }


def evaluation_table(rows: Iterable[Dict]) -> pd.DataFrame:
    """Scores per system, genre and slice; meteor is passed through from external tools."""
    return pd.DataFrame(list(rows), columns=EVALUATION_COLUMNS)

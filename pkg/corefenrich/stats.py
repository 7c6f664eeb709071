from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence

import pandas as pd

from corefenrich.enrichment import EnrichmentConfig, content_token_count, enrich_document
from corefenrich.model import Document, MentionCategory
from corefenrich.reports import round_half_up
from corefenrich.settings import AGGREGATIONS, FRACTION_DECIMALS, MIN_CHAIN_SIZE, STATS_DECIMALS

SCOPES = ("per_document", "corpus_micro", "corpus_macro")
STATS_COLUMNS = [
    "corpus",
    "genre",
    "document",
    "tokens",
    "mentions",
    "chains",
    "avg_len",
    "max_len",
    "pronoun_ratio",
    "aggregation",
]


@dataclass(frozen=True)
class ChainStats:
    """
    Chain-feature profile of a document or corpus.

    Args:
        tokens: Token count, of the enriched text when stats were taken with an
            EnrichmentConfig
        mentions: Mentions in counted chains
        chains: Chains with at least min_chain_size mentions
        avg_chain_length: Mentions per chain
        max_chain_length: Longest chain, a mean over documents for macro scope
        scope: per_document, corpus_micro or corpus_macro
        pronoun_mentions: Pronominal mentions among the counted ones
    """

    tokens: int
    mentions: int
    chains: int
    avg_chain_length: Fraction
    max_chain_length: Fraction
    scope: str = "per_document"
    pronoun_mentions: int = 0

    def __post_init__(self):
        if self.scope not in SCOPES:
            raise ValueError(f"Unknown scope '{self.scope}', choose from {SCOPES}")

    @property
    def pronoun_ratio(self) -> Fraction:
        return Fraction(self.pronoun_mentions, self.mentions) if self.mentions else Fraction(0)


def document_stats(
    doc: Document,
    min_chain_size: int = MIN_CHAIN_SIZE,
    cfg: Optional[EnrichmentConfig] = None,
) -> ChainStats:
    """
    Chain features of one document. With `cfg` the token count is taken after
    enrichment: inserted content tokens count, the tag literals do not.
    """
    if min_chain_size < 1:
        raise ValueError("min_chain_size must be at least 1")
    sizes = []
    pronouns = 0
    for chain in doc.chains:
        if len(chain.mention_ids) < min_chain_size:
            continue
        sizes.append(len(chain.mention_ids))
        pronouns += sum(
            doc.mentions[m].category == MentionCategory.PRONOUN for m in chain.mention_ids
        )
    mentions = sum(sizes)
    tokens = doc.token_count
    if cfg is not None:
        tokens = content_token_count(enrich_document(doc, cfg))
    return ChainStats(
        tokens=tokens,
        mentions=mentions,
        chains=len(sizes),
        avg_chain_length=Fraction(mentions, len(sizes)) if sizes else Fraction(0),
        max_chain_length=Fraction(max(sizes, default=0)),
        scope="per_document",
        pronoun_mentions=pronouns,
    )


def _mean(values: Sequence[Fraction]) -> Fraction:
    return sum(values, Fraction(0)) / len(values) if values else Fraction(0)


def aggregate(per_document: Sequence[ChainStats], aggregation: str = "micro") -> ChainStats:
    """
    Folds per-document stats. Counts are summed in both modes; micro divides
    total mentions by total chains and takes the global longest chain, macro
    averages the per-document average and longest chain over the documents
    that have at least one counted chain.
    """
    if aggregation not in AGGREGATIONS:
        raise ValueError(f"Unknown aggregation '{aggregation}', choose from {AGGREGATIONS}")
    tokens = sum(s.tokens for s in per_document)
    mentions = sum(s.mentions for s in per_document)
    chains = sum(s.chains for s in per_document)
    pronouns = sum(s.pronoun_mentions for s in per_document)
    if aggregation == "micro":
        avg = Fraction(mentions, chains) if chains else Fraction(0)
        longest = max((s.max_chain_length for s in per_document), default=Fraction(0))
    else:
        with_chains = [s for s in per_document if s.chains]
        avg = _mean([s.avg_chain_length for s in with_chains])
        longest = _mean([s.max_chain_length for s in with_chains])
    return ChainStats(
        tokens=tokens,
        mentions=mentions,
        chains=chains,
        avg_chain_length=avg,
        max_chain_length=longest,
        scope=f"corpus_{aggregation}",
        pronoun_mentions=pronouns,
    )


def corpus_stats(
    docs: Sequence[Document],
    min_chain_size: int = MIN_CHAIN_SIZE,
    aggregation: str = "micro",
    cfg: Optional[EnrichmentConfig] = None,
) -> ChainStats:
    """
    Corpus-level chain features, folded in document-id order.

    Raises:
        ValueError for an empty corpus.
    """
    if not docs:
        raise ValueError("corpus_stats needs at least one document")
    ordered = sorted(docs, key=lambda d: d.id)
    return aggregate([document_stats(doc, min_chain_size, cfg) for doc in ordered], aggregation)


def group_by_genre(docs: Iterable[Document]) -> Dict[str, List[Document]]:
    groups: Dict[str, List[Document]] = defaultdict(list)
    for doc in docs:
        groups[doc.genre].append(doc)
    return dict(sorted(groups.items()))


def stats_row(corpus: str, genre: str, stats: ChainStats, document: str = "") -> Dict:
    return {
        "corpus": corpus,
        "genre": genre,
        "document": document,
        "tokens": stats.tokens,
        "mentions": stats.mentions,
        "chains": stats.chains,
        "avg_len": round_half_up(stats.avg_chain_length, STATS_DECIMALS),
        "max_len": round_half_up(stats.max_chain_length, STATS_DECIMALS),
        "pronoun_ratio": round_half_up(stats.pronoun_ratio, FRACTION_DECIMALS),
        "aggregation": {"corpus_micro": "micro", "corpus_macro": "macro"}.get(
            stats.scope, "document"
        ),
    }


def stats_frame(rows: Iterable[Dict]) -> pd.DataFrame:
    """Report table from stats_row dicts, header only when there are none."""
    return pd.DataFrame(list(rows), columns=STATS_COLUMNS)

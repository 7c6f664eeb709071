import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

from corefenrich.model import (
    NOMINAL_CATEGORIES,
    Animacy,
    Chain,
    Document,
    Gender,
    InvariantViolation,
    Mention,
    MentionCategory,
    NumberAttr,
    TagStructureError,
    chain_head,
)
from corefenrich.parallel import ordered_map
from corefenrich.settings import (
    ARTICLES,
    EXCLUDED_PRONOUNS,
    GENITIVE_MARKERS,
    HEAD_RULE,
    HEAD_RULES,
    MAX_HEAD_TOKENS,
    MIN_CHAIN_SIZE,
    TAG_CLOSE,
    TAG_OPEN,
)

logger = logging.getLogger(__name__)


def _lowered(values: Iterable[str]) -> FrozenSet[str]:
    return frozenset(value.lower() for value in values)


@dataclass(frozen=True)
class EnrichmentConfig:
    """
    Settings of the enrichment heuristics.

    Args:
        max_head_tokens: Longest cleaned head prepended to a pronoun
        excluded_pronouns: Lowercased pronoun surfaces never enriched
        article_set: Lowercased tokens removed from heads
        genitive_markers: Saxon genitive clitics removed from heads
        tag_open: Token opening an inserted block
        tag_close: Token closing an inserted block
        min_chain_size: Mentions of smaller chains are not enriched
        head_rule: "explicit" or "computed", see model.chain_head
    """

    max_head_tokens: int = MAX_HEAD_TOKENS
    excluded_pronouns: FrozenSet[str] = EXCLUDED_PRONOUNS
    article_set: FrozenSet[str] = ARTICLES
    genitive_markers: FrozenSet[str] = GENITIVE_MARKERS
    tag_open: str = TAG_OPEN
    tag_close: str = TAG_CLOSE
    min_chain_size: int = MIN_CHAIN_SIZE
    head_rule: str = HEAD_RULE

    def __post_init__(self):
        if self.max_head_tokens < 1:
            raise ValueError("max_head_tokens must be at least 1")
        if self.min_chain_size < 1:
            raise ValueError("min_chain_size must be at least 1")
        if not self.tag_open or not self.tag_close or self.tag_open == self.tag_close:
            raise ValueError("tag_open and tag_close must be distinct non-empty tokens")
        if self.head_rule not in HEAD_RULES:
            raise ValueError(f"Unknown head rule '{self.head_rule}', choose from {HEAD_RULES}")
        object.__setattr__(self, "excluded_pronouns", _lowered(self.excluded_pronouns))
        object.__setattr__(self, "article_set", _lowered(self.article_set))
        object.__setattr__(self, "genitive_markers", _lowered(self.genitive_markers))


class Insertion(NamedTuple):
    # index in EnrichedSentence.tokens where the tag block starts
    position: int
    tokens: Tuple[str, ...]
    mention_id: str
    heuristic: int


@dataclass(frozen=True)
class EnrichedSentence:
    doc_id: str
    sent_index: int
    tokens: Tuple[str, ...]
    insertions: Tuple[Insertion, ...] = field(default=())

    def original_tokens(self) -> List[str]:
        skipped = set()
        for insertion in self.insertions:
            skipped.update(range(insertion.position, insertion.position + len(insertion.tokens)))
        return [token for index, token in enumerate(self.tokens) if index not in skipped]

    @property
    def content_token_count(self) -> int:
        """Tokens without the tag literals, inserted content included."""
        return len(self.tokens) - 2 * len(self.insertions)


def clean_head(head_tokens: Sequence[str], cfg: EnrichmentConfig) -> Optional[List[str]]:
    """
    Removes articles and Saxon genitive clitics from a chain head.

    Returns:
        The cleaned head, or None when nothing is left or it is longer than
        cfg.max_head_tokens.
    """
    removed = cfg.article_set | cfg.genitive_markers
    cleaned = [token for token in head_tokens if token.lower() not in removed]
    if not cleaned or len(cleaned) > cfg.max_head_tokens:
        return None
    return cleaned


def select_pronoun(gender: Gender, number: NumberAttr, animacy: Animacy) -> Optional[str]:
    """English pronoun for a head's attributes, None when it would be a guess."""
    if number == NumberAttr.PLURAL:
        return "they"
    if gender == Gender.FEMALE:
        return "she"
    if gender == Gender.MALE:
        return "he"
    if gender == Gender.NEUTRAL or animacy == Animacy.INANIMATE:
        return "it"
    return None


def check_reserved_tokens(doc: Document, cfg: EnrichmentConfig) -> None:
    reserved = {cfg.tag_open, cfg.tag_close}
    for sent_index, sentence in enumerate(doc.sentences):
        if reserved.isdisjoint(sentence):
            continue
        tok_index, surface = next(
            (index, token) for index, token in enumerate(sentence) if token in reserved
        )
        raise InvariantViolation(
            [
                f"corpus contains reserved tag token '{surface}' in document "
                f"{doc.id}, sentence {sent_index}, token {tok_index}"
            ]
        )


class _ChainHead(NamedTuple):
    mention: Mention
    # cleaned head for pronouns, None when heuristic 1 does not apply
    content: Optional[Tuple[str, ...]]
    pronoun: Optional[str]


def _chain_head(chain: Chain, doc: Document, cfg: EnrichmentConfig) -> _ChainHead:
    head = chain_head(chain, doc, cfg.head_rule)
    content = None
    if head.category in NOMINAL_CATEGORIES:
        cleaned = clean_head(doc.mention_tokens(head), cfg)
        content = None if cleaned is None else tuple(cleaned)
    return _ChainHead(head, content, select_pronoun(head.gender, head.number, head.animacy))


def _candidate(
    mention: Mention, head: _ChainHead, doc: Document, cfg: EnrichmentConfig
) -> Optional[Tuple[Sequence[str], int]]:
    """Content tokens and heuristic number for one mention, None to skip."""
    is_head = mention.id == head.mention.id
    if mention.category == MentionCategory.PRONOUN:
        if is_head or head.content is None:
            return None
        surface = " ".join(doc.mention_tokens(mention)).lower()
        if surface in cfg.excluded_pronouns:
            return None
        return head.content, 1
    if mention.category in NOMINAL_CATEGORIES:
        if head.pronoun is None:
            return None
        return [head.pronoun], 3 if is_head else 2
    return None


def enrich_document(doc: Document, cfg: Optional[EnrichmentConfig] = None) -> List[EnrichedSentence]:
    """
    Inserts coreference tag blocks into the sentences of a document.

    Pronouns (except cfg.excluded_pronouns) get the cleaned chain head,
    non-head nominal mentions get a pronoun for the head's gender and the
    nominal head gets a pronoun for its own gender. Blocks go immediately
    before the mention; a mention overlapping an already enriched mention of
    the same sentence is skipped, visiting mentions outermost-first.

    Raises:
        InvariantViolation if a corpus token equals one of the tag literals.
    """
    cfg = cfg or EnrichmentConfig()
    check_reserved_tokens(doc, cfg)

    heads: Dict[str, _ChainHead] = {}
    for chain in doc.chains:
        if len(chain.mention_ids) < cfg.min_chain_size:
            continue
        heads[chain.id] = _chain_head(chain, doc, cfg)
        head = heads[chain.id].mention
        conflicting = False
        for mention in doc.chain_mentions(chain):
            if (
                not conflicting
                and mention.category in NOMINAL_CATEGORIES
                and Gender.UNKNOWN not in (mention.gender, head.gender)
                and mention.gender != head.gender
            ):
                conflicting = True
                logger.warning(
                    "Document %s chain %s: mention %s is %s but the head is %s, using the head",
                    doc.id,
                    chain.id,
                    mention.id,
                    mention.gender.value,
                    head.gender.value,
                )

    by_sentence = defaultdict(list)
    for mention in doc.mentions.values():
        if mention.chain_id in heads:
            by_sentence[mention.sent_index].append(mention)

    enriched = []
    for sent_index, sentence in enumerate(doc.sentences):
        mentions = by_sentence.get(sent_index)
        if not mentions:
            enriched.append(EnrichedSentence(doc.id, sent_index, tuple(sentence)))
            continue
        accepted: List[Tuple[Mention, Sequence[str], int]] = []
        # end of the last enriched span, mentions come in start order
        covered_until = 0
        # outermost first; equal spans keep the document order of doc.mentions
        for mention in sorted(mentions, key=lambda m: (m.start, -m.end)):
            if mention.start < covered_until:
                logger.debug("Skipping %s/%s: overlaps an enriched mention", doc.id, mention.id)
                continue
            candidate = _candidate(mention, heads[mention.chain_id], doc, cfg)
            if candidate is None:
                logger.debug("Skipping %s/%s: no enrichment applies", doc.id, mention.id)
                continue
            accepted.append((mention, *candidate))
            covered_until = mention.end

        tokens: List[str] = []
        insertions = []
        cursor = 0
        for mention, content, heuristic in accepted:
            tokens.extend(sentence[cursor : mention.start])
            block = (cfg.tag_open, *content, cfg.tag_close)
            insertions.append(Insertion(len(tokens), block, mention.id, heuristic))
            tokens.extend(block)
            cursor = mention.start
        tokens.extend(sentence[cursor:])
        enriched.append(EnrichedSentence(doc.id, sent_index, tuple(tokens), tuple(insertions)))
    return enriched


def iter_enriched(
    docs: Iterable[Document], cfg: Optional[EnrichmentConfig] = None, threads: int = 1
) -> Iterator[List[EnrichedSentence]]:
    """Enriches documents on `threads` workers, yielding results in input order."""
    cfg = cfg or EnrichmentConfig()
    return ordered_map(lambda doc: enrich_document(doc, cfg), docs, threads=threads)


def strip_tags(line: Sequence[str], cfg: Optional[EnrichmentConfig] = None) -> List[str]:
    """
    Removes every tag block (tag_open ... tag_close inclusive) from a line.

    Raises:
        TagStructureError for nested, unopened or unclosed tags.
    """
    cfg = cfg or EnrichmentConfig()
    out = []
    opened_at = None
    for position, token in enumerate(line):
        if token == cfg.tag_open:
            if opened_at is not None:
                raise TagStructureError(
                    f"nested '{token}' at token {position} (block opened at token {opened_at})",
                    position,
                )
            opened_at = position
        elif token == cfg.tag_close:
            if opened_at is None:
                raise TagStructureError(f"unbalanced '{token}' at token {position}", position)
            opened_at = None
        elif opened_at is None:
            out.append(token)
    if opened_at is not None:
        raise TagStructureError(f"unclosed '{cfg.tag_open}' at token {opened_at}", opened_at)
    return out


@dataclass
class EnrichmentSummary:
    sentences: int = 0
    enriched_sentences: int = 0
    insertions: Counter = field(default_factory=Counter)

    def add(self, enriched: Iterable[EnrichedSentence]) -> None:
        for sentence in enriched:
            self.sentences += 1
            if sentence.insertions:
                self.enriched_sentences += 1
            self.insertions.update(insertion.heuristic for insertion in sentence.insertions)

    def __str__(self) -> str:
        per_heuristic = ", ".join(
            f"heuristic {h}: {self.insertions[h]}" for h in sorted(self.insertions)
        )
        return (
            f"{self.enriched_sentences} of {self.sentences} sentences enriched"
            + (f" ({per_heuristic})" if per_heuristic else "")
        )


def content_token_count(enriched: Iterable[EnrichedSentence]) -> int:
    """Token count including inserted content tokens but not the tags."""
    return sum(sentence.content_token_count for sentence in enriched)

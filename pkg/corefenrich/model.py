import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Tuple

from corefenrich.settings import HEAD_RULE, HEAD_RULES, VOCABULARY_ALIASES

logger = logging.getLogger(__name__)


class CorefEnrichError(Exception):
    pass


class FormatParseError(CorefEnrichError, ValueError):
    """Input could not be parsed. Carries the 1-based line and/or field when known."""

    def __init__(
        self, message: str, line: Optional[int] = None, field: Optional[str] = None
    ):
        self.line = line
        self.field = field
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvariantViolation(CorefEnrichError):
    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class TagStructureError(CorefEnrichError, ValueError):
    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(message)


class _Vocabulary(str, Enum):
    @classmethod
    def lookup(cls, value: Optional[str], vocabulary: str, default=None):
        """
        Maps a raw annotation value onto the enumeration via
        settings.VOCABULARY_ALIASES, returning `default` for anything unknown.
        """
        if value is None:
            return default
        key = re.sub(r"[\s-]+", "_", value.strip().lower())
        canonical = VOCABULARY_ALIASES[vocabulary].get(key)
        return default if canonical is None else cls(canonical)


class Gender(_Vocabulary):
    MALE = "male"
    FEMALE = "female"
    NEUTRAL = "neutral"
    UNKNOWN = "unknown"


class NumberAttr(_Vocabulary):
    SINGULAR = "singular"
    PLURAL = "plural"
    UNKNOWN = "unknown"


class Animacy(_Vocabulary):
    ANIMATE = "animate"
    INANIMATE = "inanimate"
    UNKNOWN = "unknown"


class MentionCategory(_Vocabulary):
    PRONOUN = "pronoun"
    NOMINAL_PHRASE = "nominal_phrase"
    PROPER_NAME = "proper_name"
    VERB_PHRASE = "verb_phrase"
    CLAUSE = "clause"


class CohesiveFunction(_Vocabulary):
    ANTECEDENT = "antecedent"
    ANAPHORIC = "anaphoric"
    CATAPHORIC = "cataphoric"
    COMPARATIVE = "comparative"
    SUBSTITUTION = "substitution"
    ELLIPSIS = "ellipsis"
    APPOSITION = "apposition"


class PronounType(_Vocabulary):
    PERSONAL = "personal"
    POSSESSIVE = "possessive"
    DEMONSTRATIVE = "demonstrative"
    REFLEXIVE = "reflexive"
    RELATIVE = "relative"


class Modifier(_Vocabulary):
    POSSESSIVE = "possessive"
    DEMONSTRATIVE = "demonstrative"
    DEFINITE_ARTICLE = "definite_article"
    NONE = "none"


# proper names are nominal for the enrichment heuristics
NOMINAL_CATEGORIES = frozenset(
    {MentionCategory.NOMINAL_PHRASE, MentionCategory.PROPER_NAME}
)


class Token(NamedTuple):
    surface: str
    sent_index: int
    tok_index: int


@dataclass(frozen=True)
class Mention:
    """
    A token span participating in a coreference chain.

    Args:
        id: Mention identifier, unique within its document
        chain_id: Identifier of the chain the mention belongs to
        sent_index: 0-based sentence index
        start: First token of the span (0-based, inclusive)
        end: End of the span (exclusive)
    """

    id: str
    chain_id: str
    sent_index: int
    start: int
    end: int
    category: MentionCategory = MentionCategory.NOMINAL_PHRASE
    gender: Gender = Gender.UNKNOWN
    number: NumberAttr = NumberAttr.UNKNOWN
    animacy: Animacy = Animacy.UNKNOWN
    function: Optional[CohesiveFunction] = None
    pronoun_type: Optional[PronounType] = None
    modifier: Optional[Modifier] = None

    @property
    def span(self) -> Tuple[int, int, int]:
        return self.sent_index, self.start, self.end

    @property
    def sort_key(self) -> Tuple:
        # document order, outermost first for spans starting on the same token
        return self.sent_index, self.start, -self.end, natural_key(self.id)

    def overlaps(self, other: "Mention") -> bool:
        return (
            self.sent_index == other.sent_index
            and self.start < other.end
            and other.start < self.end
        )


@dataclass(frozen=True)
class Chain:
    id: str
    mention_ids: Tuple[str, ...]
    # None when the input data designates no head
    head_mention_id: Optional[str] = None


@dataclass(frozen=True)
class Document:
    id: str
    genre: str
    sentences: Tuple[Tuple[str, ...], ...]
    chains: Tuple[Chain, ...] = ()
    mentions: Dict[str, Mention] = field(default_factory=dict)

    @property
    def token_count(self) -> int:
        return sum(len(sentence) for sentence in self.sentences)

    def iter_tokens(self) -> Iterator[Token]:
        for sent_index, sentence in enumerate(self.sentences):
            for tok_index, surface in enumerate(sentence):
                yield Token(surface, sent_index, tok_index)

    def mention_tokens(self, mention: Mention) -> Tuple[str, ...]:
        return self.sentences[mention.sent_index][mention.start : mention.end]

    def chain_mentions(self, chain: Chain) -> List[Mention]:
        return [self.mentions[mention_id] for mention_id in chain.mention_ids]


_DIGIT_RUNS = re.compile(r"(\d+)")


@lru_cache(maxsize=65536)
def natural_key(value: str) -> Tuple:
    """Sort key ordering "set_2" before "set_10"."""
    return tuple(
        (0, int(part), "") if part.isdigit() else (1, 0, part)
        for part in _DIGIT_RUNS.split(value)
        if part
    )


def build_document(
    doc_id: str,
    genre: str,
    sentences: Iterable[Iterable[str]],
    mentions: Iterable[Mention],
    heads: Optional[Dict[str, str]] = None,
) -> Document:
    """
    Assembles a Document in canonical form: mentions grouped into chains by
    their chain_id, mention ids in document order and chains sorted by id.

    Args:
        doc_id: Document identifier
        genre: Genre label, e.g. "news" or "ted"
        sentences: Tokenized sentences
        mentions: All mentions of the document
        heads: Optional chain id -> head mention id mapping
    """
    heads = heads or {}
    ordered = sorted(mentions, key=lambda m: m.sort_key)
    members: Dict[str, List[str]] = defaultdict(list)
    for mention in ordered:
        members[mention.chain_id].append(mention.id)
    chains = tuple(
        Chain(id=chain_id, mention_ids=tuple(ids), head_mention_id=heads.get(chain_id))
        for chain_id, ids in sorted(members.items(), key=lambda kv: natural_key(kv[0]))
    )
    return Document(
        id=doc_id,
        genre=genre,
        sentences=tuple(tuple(sentence) for sentence in sentences),
        chains=chains,
        mentions={mention.id: mention for mention in ordered},
    )


def validate_document(doc: Document) -> List[str]:
    """
    Checks the structural invariants of a document.

    Returns:
        List of violation descriptions, each naming the offending id and rule.
        Empty when the document is well-formed.
    """
    violations = []

    seen_tokens = set()
    for token in doc.iter_tokens():
        location = f"sentence {token.sent_index} token {token.tok_index}"
        if (token.sent_index, token.tok_index) in seen_tokens:
            violations.append(f"{location}: duplicate token position")
        seen_tokens.add((token.sent_index, token.tok_index))
        if not token.surface:
            violations.append(f"{location}: empty token")
        elif any(char.isspace() for char in token.surface):
            violations.append(f"{location}: token contains whitespace")

    for key, mention in doc.mentions.items():
        if key != mention.id:
            violations.append(f"mention {key}: keyed under a different id {mention.id}")
        if not 0 <= mention.sent_index < len(doc.sentences):
            violations.append(
                f"mention {mention.id}: sentence {mention.sent_index} out of range"
            )
        elif mention.start >= mention.end:
            violations.append(f"mention {mention.id}: empty span")
        elif mention.start < 0 or mention.end > len(doc.sentences[mention.sent_index]):
            violations.append(
                f"mention {mention.id}: span {mention.start}..{mention.end} out of range"
            )
        if (
            mention.pronoun_type is not None
            and mention.category != MentionCategory.PRONOUN
        ):
            violations.append(
                f"mention {mention.id}: pronoun type on a {mention.category.value} mention"
            )

    owner: Dict[str, str] = {}
    chain_ids = set()
    for chain in doc.chains:
        if chain.id in chain_ids:
            violations.append(f"chain {chain.id}: duplicate chain id")
        chain_ids.add(chain.id)
        if not chain.mention_ids:
            violations.append(f"chain {chain.id}: no mentions")
            continue
        if len(chain.mention_ids) == 1:
            logger.warning(
                "Document %s: chain %s is a singleton", doc.id, chain.id
            )
        for mention_id in chain.mention_ids:
            if mention_id in owner:
                violations.append(
                    f"mention {mention_id}: listed in chains {owner[mention_id]} and {chain.id}"
                )
                continue
            owner[mention_id] = chain.id
            mention = doc.mentions.get(mention_id)
            if mention is None:
                violations.append(f"chain {chain.id}: missing mention {mention_id}")
            elif mention.chain_id != chain.id:
                violations.append(
                    f"mention {mention_id}: chain_id {mention.chain_id} but listed in chain {chain.id}"
                )
        present = [doc.mentions[m] for m in chain.mention_ids if m in doc.mentions]
        keys = [(m.sent_index, m.start, -m.end) for m in present]
        if keys != sorted(keys):
            violations.append(f"chain {chain.id}: mentions not in document order")
        if (
            chain.head_mention_id is not None
            and chain.head_mention_id not in chain.mention_ids
        ):
            violations.append(
                f"chain {chain.id}: head {chain.head_mention_id} is not a chain member"
            )

    for mention_id in doc.mentions:
        if mention_id not in owner:
            violations.append(f"mention {mention_id}: not in any chain")

    return violations


def chain_head(chain: Chain, doc: Document, head_rule: str = HEAD_RULE) -> Mention:
    """
    Returns the head (main noun phrase) of a chain.

    The head designated in the data is used unless `head_rule` is "computed"
    or the data designates none; otherwise the first nominal phrase or proper
    name in document order is the head, falling back to the first mention.
    """
    if head_rule not in HEAD_RULES:
        raise ValueError(f"Unknown head rule '{head_rule}', choose from {HEAD_RULES}")
    if head_rule == "explicit" and chain.head_mention_id is not None:
        return doc.mentions[chain.head_mention_id]
    # chain members are stored in document order
    mentions = doc.chain_mentions(chain)
    for mention in mentions:
        if mention.category in NOMINAL_CATEGORIES:
            return mention
    return mentions[0]


def ensure_valid(doc: Document) -> Document:
    """Returns `doc` unchanged, raising InvariantViolation if it breaks an invariant."""
    violations = validate_document(doc)
    if violations:
        raise InvariantViolation([f"document {doc.id}: {v}" for v in violations])
    return doc

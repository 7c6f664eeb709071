"""
Reader for the coreference subset of MMAX2: a words file, one markables level
and optionally a sentence level file.
"""
import logging
import re
from dataclasses import dataclass, field
from typing import IO, Dict, List, Optional, Tuple

from lxml import etree

from corefenrich.model import (
    Animacy,
    CohesiveFunction,
    Document,
    FormatParseError,
    Gender,
    Mention,
    MentionCategory,
    Modifier,
    NumberAttr,
    PronounType,
    build_document,
)
from corefenrich.settings import MMAX_ATTRIBUTES, MMAX_EMPTY_CLASSES

logger = logging.getLogger(__name__)

FRAGMENT_RE = re.compile(r"^([^.,\s]+)(?:\.\.([^.,\s]+))?$")


@dataclass(frozen=True)
class MmaxAttributes:
    """
    Attribute names read from markables and words, see settings.MMAX_ATTRIBUTES.
    """

    names: Dict[str, str] = field(default_factory=lambda: dict(MMAX_ATTRIBUTES))

    def __getitem__(self, key: str) -> str:
        return self.names[key]


def _parse_xml(stream: IO[bytes], what: str, allow_empty: bool = False):
    data = stream.read()
    if allow_empty and not data.strip():
        return None
    try:
        return etree.fromstring(data)
    except etree.XMLSyntaxError as e:
        raise FormatParseError(f"malformed {what} XML: {e}", line=e.lineno) from e


def _elements(root, localname: str):
    # MMAX2 level files carry a per-level default namespace
    return [
        el
        for el in root.iter()
        if isinstance(el.tag, str) and etree.QName(el).localname == localname
    ]


def parse_span(span: str, word_index: Dict[str, int]) -> List[Tuple[int, int]]:
    """
    Resolves an MMAX2 span such as "word_2..word_4" or "word_7" (optionally
    several fragments joined by ",") into inclusive word-position ranges.

    Raises:
        FormatParseError on malformed syntax or unknown word ids.
    """
    ranges = []
    for fragment in span.split(","):
        match = FRAGMENT_RE.match(fragment.strip())
        if not match:
            raise FormatParseError(f"malformed span '{span}'", field="span")
        first, last = match.group(1), match.group(2) or match.group(1)
        for word_id in (first, last):
            if word_id not in word_index:
                raise FormatParseError(
                    f"span '{span}' references missing word id '{word_id}'", field="span"
                )
        if word_index[first] > word_index[last]:
            raise FormatParseError(f"malformed span '{span}': reversed range", field="span")
        ranges.append((word_index[first], word_index[last]))
    return ranges


def _sentence_ids(
    words, word_index: Dict[str, int], sentences_file: Optional[IO[bytes]], attribute: str
) -> List[int]:
    """Sentence index for every word position."""
    if sentences_file is not None:
        assigned: List[Optional[int]] = [None] * len(words)
        sentence_markables = _elements(_parse_xml(sentences_file, "sentence level"), "markable")
        spans = []
        for markable in sentence_markables:
            ranges = parse_span(markable.get("span", ""), word_index)
            spans.append((min(r[0] for r in ranges), max(r[1] for r in ranges)))
        for sent_index, (first, last) in enumerate(sorted(spans)):
            for position in range(first, last + 1):
                assigned[position] = sent_index
        for position, sent_index in enumerate(assigned):
            if sent_index is None:
                raise FormatParseError(
                    f"word '{words[position].get('id')}' lies outside every sentence"
                )
        return assigned  # type: ignore

    sent_ids: List[int] = []
    previous = None
    for word in words:
        value = word.get(attribute)
        if not sent_ids:
            sent_ids.append(0)
        elif value is not None and value != previous:
            sent_ids.append(sent_ids[-1] + 1)
        else:
            sent_ids.append(sent_ids[-1])
        if value is not None:
            previous = value
    return sent_ids


def parse_mmax(
    words_file: IO[bytes],
    markables_file: IO[bytes],
    doc_id: str = "",
    genre: str = "",
    sentences_file: Optional[IO[bytes]] = None,
    attributes: Optional[MmaxAttributes] = None,
) -> Document:
    """
    Parses an MMAX2 words file and coreference markables into a Document.

    Sentence boundaries come from `sentences_file` (a sentence level with one
    markable per sentence) when given, otherwise from a change in the word
    attribute named by attributes["sentence"]; words without either form a
    single sentence. Markables are grouped into chains by their coreference
    class, markables without a class become singleton chains.

    Args:
        words_file: Byte stream of the *_words.xml file
        markables_file: Byte stream of the coreference level file
        doc_id: Document id, defaults to the words root "id" attribute
        genre: Genre label
        sentences_file: Optional byte stream of the sentence level file
        attributes: Attribute-name table, defaults to settings.MMAX_ATTRIBUTES
    """
    attributes = attributes or MmaxAttributes()
    words_root = _parse_xml(words_file, "words")
    words = _elements(words_root, "word")
    word_index: Dict[str, int] = {}
    for position, word in enumerate(words):
        word_id = word.get("id")
        if word_id is None:
            raise FormatParseError(f"word element {position + 1} has no id", line=word.sourceline)
        word_index[word_id] = position

    sent_ids = _sentence_ids(words, word_index, sentences_file, attributes["sentence"])
    sentences: List[List[str]] = []
    tok_index: List[int] = []
    for word, sent_index in zip(words, sent_ids):
        surface = (word.text or "").strip()
        if not surface or any(char.isspace() for char in surface):
            raise FormatParseError(
                f"word '{word.get('id')}' is not a single token: '{surface}'",
                line=word.sourceline,
            )
        while len(sentences) <= sent_index:
            sentences.append([])
        tok_index.append(len(sentences[sent_index]))
        sentences[sent_index].append(surface)

    mentions = []
    markables_root = _parse_xml(markables_file, "markables", allow_empty=True)
    markables = [] if markables_root is None else _elements(markables_root, "markable")
    for markable in markables:
        markable_id = markable.get("id") or f"markable_{len(mentions) + 1}"
        try:
            ranges = parse_span(markable.get("span", ""), word_index)
        except FormatParseError as e:
            raise FormatParseError(
                f"markable {markable_id}: {e}", line=markable.sourceline, field="span"
            ) from e
        first = min(r[0] for r in ranges)
        last = max(r[1] for r in ranges)
        if len(ranges) > 1:
            logger.warning(
                "Markable %s has a discontinuous span, using its hull", markable_id
            )
        if sent_ids[first] != sent_ids[last]:
            raise FormatParseError(
                f"markable {markable_id} crosses a sentence boundary",
                line=markable.sourceline,
            )
        chain_id = (markable.get(attributes["chain"]) or "").strip()
        if chain_id.lower() in MMAX_EMPTY_CLASSES:
            chain_id = f"single_{markable_id}"
        category = MentionCategory.lookup(
            markable.get(attributes["category"]), "category", MentionCategory.NOMINAL_PHRASE
        )
        pronoun_type = PronounType.lookup(markable.get(attributes["pronoun_type"]), "pronoun_type")
        mentions.append(
            Mention(
                id=markable_id,
                chain_id=chain_id,
                sent_index=sent_ids[first],
                start=tok_index[first],
                end=tok_index[last] + 1,
                category=category,
                gender=Gender.lookup(markable.get(attributes["gender"]), "gender", Gender.UNKNOWN),
                number=NumberAttr.lookup(
                    markable.get(attributes["number"]), "number", NumberAttr.UNKNOWN
                ),
                animacy=Animacy.lookup(
                    markable.get(attributes["animacy"]), "animacy", Animacy.UNKNOWN
                ),
                function=CohesiveFunction.lookup(markable.get(attributes["function"]), "function"),
                pronoun_type=pronoun_type if category == MentionCategory.PRONOUN else None,
                modifier=Modifier.lookup(markable.get(attributes["modifier"]), "modifier"),
            )
        )

    doc = build_document(doc_id or words_root.get("id", ""), genre, sentences, mentions)
    logger.info(
        "Parsed MMAX2 document %s: %d tokens, %d mentions, %d chains",
        doc.id,
        doc.token_count,
        len(doc.mentions),
        len(doc.chains),
    )
    return doc

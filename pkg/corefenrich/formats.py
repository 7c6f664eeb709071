import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Dict, Iterable, Iterator, List, Optional, Union

from corefenrich.conll import ConllColumns, parse_conll, write_conll
from corefenrich.enrichment import EnrichedSentence
from corefenrich.mmax import MmaxAttributes, parse_mmax
from corefenrich.model import (
    Animacy,
    Chain,
    CohesiveFunction,
    Document,
    FormatParseError,
    Gender,
    InvariantViolation,
    Mention,
    MentionCategory,
    Modifier,
    NumberAttr,
    PronounType,
    natural_key,
)
from corefenrich.textio import encode_line, text_lines

logger = logging.getLogger(__name__)

FORMATS = ("conll", "mmax", "jsonl", "tagged_text")
EXTENSIONS = {
    ".jsonl": "jsonl",
    ".conll": "conll",
    ".gold_conll": "conll",
    ".auto_conll": "conll",
    ".xml": "mmax",
    ".txt": "tagged_text",
}

DOCUMENT_FIELDS = ("id", "genre", "sentences", "mentions", "chains")
MENTION_FIELDS = ("chain_id", "span", "category", "gender", "number", "animacy")
OPTIONAL_MENTION_FIELDS = ("function", "pronoun_type", "modifier")
CHAIN_FIELDS = ("id", "mention_ids")


@dataclass
class CorpusFile:
    path: str
    format: str
    documents: List[Document] = field(default_factory=list)

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValueError(f"Unknown format '{self.format}', choose from {FORMATS}")
        seen = set()
        duplicates = []
        for doc in self.documents:
            if doc.id in seen:
                duplicates.append(f"document id {doc.id} occurs more than once in {self.path}")
            seen.add(doc.id)
        if duplicates:
            raise InvariantViolation(duplicates)


def guess_format(path: Union[str, Path]) -> str:
    suffix = Path(path).suffix.lower()
    try:
        return EXTENSIONS[suffix]
    except KeyError:
        raise ValueError(f"Cannot guess the format of '{path}', please specify it") from None


def document_to_json(doc: Document) -> Dict[str, Any]:
    mentions = {}
    for mention in sorted(doc.mentions.values(), key=lambda m: m.sort_key):
        mentions[mention.id] = {
            "chain_id": mention.chain_id,
            "span": [mention.sent_index, mention.start, mention.end],
            "category": mention.category.value,
            "gender": mention.gender.value,
            "number": mention.number.value,
            "animacy": mention.animacy.value,
            "function": mention.function.value if mention.function else None,
            "pronoun_type": mention.pronoun_type.value if mention.pronoun_type else None,
            "modifier": mention.modifier.value if mention.modifier else None,
        }
    chains = [
        {
            "id": chain.id,
            "mention_ids": list(chain.mention_ids),
            "head_mention_id": chain.head_mention_id,
        }
        for chain in sorted(doc.chains, key=lambda c: natural_key(c.id))
    ]
    return {
        "id": doc.id,
        "genre": doc.genre,
        "sentences": [list(sentence) for sentence in doc.sentences],
        "mentions": mentions,
        "chains": chains,
    }


def _require(obj: Dict[str, Any], name: str, kind: type, line: int, where: str = "") -> Any:
    if name not in obj:
        raise FormatParseError(f"missing field: {where}{name}", line=line, field=name)
    value = obj[name]
    if not isinstance(value, kind):
        raise FormatParseError(
            f"field {where}{name} must be of type {kind.__name__}", line=line, field=name
        )
    return value


def _enum(enum_cls, value: Any, name: str, line: int, optional: bool = False):
    if value is None and optional:
        return None
    try:
        return enum_cls(value)
    except ValueError:
        raise FormatParseError(f"invalid value for {name}: {value!r}", line=line, field=name) from None


def document_from_json(obj: Any, line: int = 0) -> Document:
    """
    Builds a Document from its JSON-lines object.

    Raises:
        FormatParseError naming the field and line of a schema violation.
    """
    if not isinstance(obj, dict):
        raise FormatParseError("expected a JSON object", line=line)
    doc_id = _require(obj, "id", str, line)
    genre = _require(obj, "genre", str, line)
    sentences = _require(obj, "sentences", list, line)
    raw_mentions = _require(obj, "mentions", dict, line)
    raw_chains = _require(obj, "chains", list, line)

    for sentence in sentences:
        if not isinstance(sentence, list) or not all(isinstance(t, str) for t in sentence):
            raise FormatParseError("sentences must be lists of strings", line=line, field="sentences")

    mentions = {}
    for mention_id, raw in raw_mentions.items():
        where = f"mentions.{mention_id}."
        if not isinstance(raw, dict):
            raise FormatParseError(f"mention {mention_id} must be an object", line=line, field="mentions")
        for name in MENTION_FIELDS:
            if name not in raw:
                raise FormatParseError(f"missing field: {where}{name}", line=line, field=name)
        span = raw["span"]
        if not (
            isinstance(span, list) and len(span) == 3 and all(isinstance(v, int) for v in span)
        ):
            raise FormatParseError(
                f"field {where}span must be [sentence, start, end]", line=line, field="span"
            )
        mentions[mention_id] = Mention(
            id=mention_id,
            chain_id=_require(raw, "chain_id", str, line, where),
            sent_index=span[0],
            start=span[1],
            end=span[2],
            category=_enum(MentionCategory, raw["category"], "category", line),
            gender=_enum(Gender, raw["gender"], "gender", line),
            number=_enum(NumberAttr, raw["number"], "number", line),
            animacy=_enum(Animacy, raw["animacy"], "animacy", line),
            function=_enum(CohesiveFunction, raw.get("function"), "function", line, optional=True),
            pronoun_type=_enum(
                PronounType, raw.get("pronoun_type"), "pronoun_type", line, optional=True
            ),
            modifier=_enum(Modifier, raw.get("modifier"), "modifier", line, optional=True),
        )

    chains = []
    for raw in raw_chains:
        if not isinstance(raw, dict):
            raise FormatParseError("chains must be objects", line=line, field="chains")
        chain_id = _require(raw, "id", str, line, "chains.")
        mention_ids = _require(raw, "mention_ids", list, line, f"chains.{chain_id}.")
        head = raw.get("head_mention_id")
        if head is not None and not isinstance(head, str):
            raise FormatParseError(
                f"field chains.{chain_id}.head_mention_id must be a string", line=line
            )
        chains.append(Chain(id=chain_id, mention_ids=tuple(mention_ids), head_mention_id=head))
    chains.sort(key=lambda c: natural_key(c.id))

    return Document(
        id=doc_id,
        genre=genre,
        sentences=tuple(tuple(sentence) for sentence in sentences),
        chains=tuple(chains),
        mentions=mentions,
    )


def iter_jsonl(stream: Union[IO[bytes], Iterable[bytes]]) -> Iterator[Document]:
    """Lazily parses one document per non-empty line."""
    for line_no, line in enumerate(text_lines(stream), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatParseError(f"invalid JSON ({e.msg})", line=line_no) from e
        yield document_from_json(obj, line_no)


def parse_jsonl(stream: Union[IO[bytes], Iterable[bytes]]) -> List[Document]:
    return list(iter_jsonl(stream))


def document_to_line(doc: Document) -> bytes:
    return encode_line(json.dumps(document_to_json(doc), ensure_ascii=False))


def write_jsonl(docs: Iterable[Document]) -> bytes:
    return b"".join(document_to_line(doc) for doc in docs)


def tagged_line(sentence: EnrichedSentence) -> bytes:
    return encode_line(" ".join(sentence.tokens))


def index_line(sentence: EnrichedSentence) -> bytes:
    return encode_line(f"{sentence.doc_id}\t{sentence.sent_index}")


def write_tagged_text(enriched: Iterable[EnrichedSentence]) -> bytes:
    """One space-joined sentence per line."""
    return b"".join(tagged_line(sentence) for sentence in enriched)


def write_line_index(enriched: Iterable[EnrichedSentence]) -> bytes:
    """Sidecar mapping every tagged-text line to its document id and sentence index."""
    return b"".join(index_line(sentence) for sentence in enriched)


def read_tagged_text(stream: Union[IO[bytes], Iterable[bytes]]) -> Iterator[List[str]]:
    for line in text_lines(stream):
        yield line.split()


def read_corpus(
    path: Union[str, Path],
    fmt: Optional[str] = None,
    markables: Optional[Union[str, Path]] = None,
    sentences: Optional[Union[str, Path]] = None,
    genre: Optional[str] = None,
    columns: Optional[ConllColumns] = None,
    attributes: Optional[MmaxAttributes] = None,
) -> CorpusFile:
    """
    Reads an annotated corpus file.

    Args:
        path: Input file, the words file for MMAX2
        fmt: One of conll, mmax, jsonl. Guessed from the extension if None.
        markables: MMAX2 coreference level file
        sentences: Optional MMAX2 sentence level file
        genre: Genre for CoNLL/MMAX2 documents
        columns: CoNLL column layout
        attributes: MMAX2 attribute-name table
    """
    fmt = fmt or guess_format(path)
    path = Path(path)
    if fmt == "jsonl":
        with path.open("rb") as stream:
            docs = parse_jsonl(stream)
    elif fmt == "conll":
        with path.open("rb") as stream:
            docs = parse_conll(stream, columns=columns, genre=genre)
    elif fmt == "mmax":
        if markables is None:
            raise ValueError("MMAX2 input needs a markables file")
        doc_id = path.name
        for suffix in ("_words.xml", ".xml"):
            if doc_id.endswith(suffix):
                doc_id = doc_id[: -len(suffix)]
                break
        with path.open("rb") as words_file, Path(markables).open("rb") as markables_file:
            if sentences is not None:
                with Path(sentences).open("rb") as sentences_file:
                    doc = parse_mmax(
                        words_file, markables_file, doc_id, genre or "", sentences_file, attributes
                    )
            else:
                doc = parse_mmax(words_file, markables_file, doc_id, genre or "", None, attributes)
        docs = [doc]
    else:
        raise ValueError(f"Cannot read documents from format '{fmt}'")
    logger.info("Read %d documents from %s", len(docs), path)
    return CorpusFile(path=str(path), format=fmt, documents=docs)


def write_corpus(docs: Iterable[Document], stream: IO[bytes], fmt: str) -> None:
    if fmt == "jsonl":
        for doc in docs:
            stream.write(document_to_line(doc))
    elif fmt == "conll":
        stream.write(write_conll(docs))
    else:
        raise ValueError(f"Cannot write documents in format '{fmt}'")

"""
CoNLL-2012 style coreference columns.

Rows are whitespace separated; blank lines end sentences and
`#begin document` / `#end document` delimit documents. The coreference column
holds `-` or `|`-joined markers `(id`, `id)` and `(id)`.
"""
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import IO, Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

from corefenrich.model import (
    Document,
    FormatParseError,
    Mention,
    MentionCategory,
    build_document,
)
from corefenrich.settings import CONLL_COLUMNS, PRONOUN_POS_TAGS
from corefenrich.textio import encode_line, text_lines

logger = logging.getLogger(__name__)

BEGIN_RE = re.compile(r"^#begin document\s*\(?([^);]*)\)?\s*(?:;\s*part\s+(\d+))?")
OPEN_RE = re.compile(r"^\(([^()|]+)$")
CLOSE_RE = re.compile(r"^([^()|]+)\)$")
SINGLE_RE = re.compile(r"^\(([^()|]+)\)$")


@dataclass(frozen=True)
class ConllColumns:
    """
    Column layout of a CoNLL export.

    Args:
        word: Index of the word column
        pos: Index of the POS column, None if the export has none
        coref: Index of the coreference column, defaults to the last one
        pronoun_tags: POS tags marking single-token mentions as pronouns
    """

    word: int = CONLL_COLUMNS["word"]
    pos: Optional[int] = CONLL_COLUMNS["pos"]
    coref: int = CONLL_COLUMNS["coref"]
    pronoun_tags: FrozenSet[str] = field(default=PRONOUN_POS_TAGS)


def parse_coref_field(value: str) -> Tuple[List[str], List[str], List[str]]:
    """
    Splits a coreference cell into opened, single-token and closed chain ids.

    Raises:
        ValueError for malformed markers.
    """
    opens: List[str] = []
    singles: List[str] = []
    closes: List[str] = []
    if value == "-":
        return opens, singles, closes
    for part in value.split("|"):
        if match := SINGLE_RE.match(part):
            singles.append(match.group(1))
        elif match := OPEN_RE.match(part):
            opens.append(match.group(1))
        elif match := CLOSE_RE.match(part):
            closes.append(match.group(1))
        else:
            raise ValueError(f"malformed coreference marker '{part}'")
    return opens, singles, closes


class _DocumentBuilder:
    def __init__(self, doc_id: str, genre: str, begin_line: int):
        self.doc_id = doc_id
        self.genre = genre
        self.begin_line = begin_line
        self.sentences: List[List[str]] = []
        self.sentence: List[str] = []
        # chain id -> stack of (start token, line of the opening marker)
        self.open: Dict[str, List[Tuple[int, int]]] = defaultdict(list)
        self.spans: List[Tuple[str, int, int, int]] = []
        self.seen_spans = set()
        self.pronoun_spans = set()

    def add_token(self, word: str, pos: str, coref: str, line_no: int, columns):
        tok_index = len(self.sentence)
        sent_index = len(self.sentences)
        self.sentence.append(word)
        try:
            opens, singles, closes = parse_coref_field(coref)
        except ValueError as e:
            raise FormatParseError(str(e), line=line_no) from e
        for chain_id in opens:
            self.open[chain_id].append((tok_index, line_no))
        for chain_id in singles:
            self._add_span(chain_id, tok_index, tok_index + 1, line_no)
        for chain_id in closes:
            if not self.open[chain_id]:
                raise FormatParseError(
                    f"unbalanced chain bracket '{chain_id})' without opening marker",
                    line=line_no,
                )
            start, _ = self.open[chain_id].pop()
            self._add_span(chain_id, start, tok_index + 1, line_no)
        if pos in columns.pronoun_tags:
            self.pronoun_spans.add((sent_index, tok_index, tok_index + 1))

    def _add_span(self, chain_id: str, start: int, end: int, line_no: int):
        span = (chain_id, len(self.sentences), start, end)
        if span in self.seen_spans:
            raise FormatParseError(
                f"duplicate mention of chain {chain_id} over tokens {start}..{end}",
                line=line_no,
            )
        self.spans.append(span)
        self.seen_spans.add(span)

    def end_sentence(self, line_no: int):
        for chain_id, stack in self.open.items():
            if stack:
                raise FormatParseError(
                    f"mention of chain {chain_id} opened on line {stack[-1][1]} "
                    "crosses a sentence boundary",
                    line=line_no,
                )
        if self.sentence:
            self.sentences.append(self.sentence)
        self.sentence = []

    def build(self) -> Document:
        mentions = []
        for chain_id, sent_index, start, end in self.spans:
            category = (
                MentionCategory.PRONOUN
                if (sent_index, start, end) in self.pronoun_spans
                else MentionCategory.NOMINAL_PHRASE
            )
            mentions.append(
                Mention(
                    id="",
                    chain_id=chain_id,
                    sent_index=sent_index,
                    start=start,
                    end=end,
                    category=category,
                )
            )
        mentions.sort(key=lambda m: (m.sent_index, m.start, -m.end, m.chain_id))
        mentions = [
            replace(m, id=f"m{index}")
            for index, m in enumerate(mentions, start=1)
        ]
        return build_document(self.doc_id, self.genre, self.sentences, mentions)


def parse_conll(
    stream: Union[IO[bytes], Iterable[bytes]],
    columns: Optional[ConllColumns] = None,
    genre: Optional[str] = None,
) -> List[Document]:
    """
    Parses CoNLL-2012 style coreference rows into documents.

    Mentions are numbered m1, m2, ... in document order. A single-token mention
    whose POS tag is in `columns.pronoun_tags` is a pronoun, every other
    mention a nominal phrase; gender, number and animacy are unknown.

    Args:
        stream: UTF-8 byte stream
        columns: Column layout, defaults to word=3, pos=4, coref=last
        genre: Genre of all documents. Defaults to the first path component of
            the document name, e.g. "nw" for "nw/wsj/00/wsj_0001".
    """
    columns = columns or ConllColumns()
    docs = []
    builder: Optional[_DocumentBuilder] = None
    line_no = 0
    for line_no, line in enumerate(text_lines(stream), start=1):
        stripped = line.strip()
        if stripped.startswith("#begin document"):
            if builder is not None:
                raise FormatParseError(
                    f"document '{builder.doc_id}' is not closed before a new one begins",
                    line=line_no,
                )
            match = BEGIN_RE.match(stripped)
            name = match.group(1).strip() if match else ""
            part = match.group(2) if match else None
            if not name:
                raise FormatParseError("document without a name", line=line_no)
            doc_id = name if part is None or int(part) == 0 else f"{name}/part_{int(part)}"
            doc_genre = genre if genre is not None else (name.split("/")[0] if "/" in name else "")
            builder = _DocumentBuilder(doc_id, doc_genre, line_no)
        elif stripped.startswith("#end document"):
            if builder is None:
                raise FormatParseError("#end document without #begin document", line=line_no)
            builder.end_sentence(line_no)
            docs.append(builder.build())
            builder = None
        elif not stripped:
            if builder is not None:
                builder.end_sentence(line_no)
        elif stripped.startswith("#"):
            continue
        else:
            if builder is None:
                raise FormatParseError("token row outside of a document", line=line_no)
            cols = stripped.split()
            try:
                word = cols[columns.word]
                coref = cols[columns.coref]
                pos = cols[columns.pos] if columns.pos is not None else ""
            except IndexError as e:
                raise FormatParseError(
                    f"expected at least {max(columns.word, columns.pos or 0) + 1} columns, "
                    f"found {len(cols)}",
                    line=line_no,
                ) from e
            builder.add_token(word, pos, coref, line_no, columns)
    if builder is not None:
        raise FormatParseError(
            f"document '{builder.doc_id}' begun on line {builder.begin_line} is never closed",
            line=line_no,
        )
    logger.info(
        "Parsed %d CoNLL documents with %d mentions",
        len(docs),
        sum(len(doc.mentions) for doc in docs),
    )
    return docs


def _coref_cells(doc: Document) -> Dict[Tuple[int, int], str]:
    opens = defaultdict(list)
    singles = defaultdict(list)
    closes = defaultdict(list)
    for mention in doc.mentions.values():
        first = (mention.sent_index, mention.start)
        last = (mention.sent_index, mention.end - 1)
        if mention.end - mention.start == 1:
            singles[first].append(mention)
        else:
            opens[first].append(mention)
            closes[last].append(mention)
    cells = {}
    for position in set(opens) | set(singles) | set(closes):
        # outer spans open first so that the per-chain stacks nest correctly
        parts = [f"({m.chain_id}" for m in sorted(opens[position], key=lambda m: -m.end)]
        parts += [f"({m.chain_id})" for m in singles[position]]
        parts += [f"{m.chain_id})" for m in sorted(closes[position], key=lambda m: -m.start)]
        cells[position] = "|".join(parts)
    return cells


def write_conll(docs: Iterable[Document]) -> bytes:
    """
    Emits documents in the default column layout read by parse_conll:
    document id, part, token index, word, POS, coreference. Pronoun mentions
    are marked with a PRP tag on their token, every other POS cell is "-".
    """
    out = []
    for doc in docs:
        cells = _coref_cells(doc)
        pronouns = {
            (m.sent_index, m.start)
            for m in doc.mentions.values()
            if m.category == MentionCategory.PRONOUN and m.end - m.start == 1
        }
        out.append(encode_line(f"#begin document ({doc.id}); part 000"))
        for sent_index, sentence in enumerate(doc.sentences):
            for tok_index, word in enumerate(sentence):
                position = (sent_index, tok_index)
                pos = "PRP" if position in pronouns else "-"
                row = [doc.id, "0", str(tok_index), word, pos, cells.get(position, "-")]
                out.append(encode_line("\t".join(row)))
            out.append(encode_line(""))
        out.append(encode_line("#end document"))
    return b"".join(out)

import io
import json
from pathlib import Path

import pytest

from corefenrich.enrichment import EnrichedSentence, Insertion
from corefenrich.formats import (
    CorpusFile,
    document_to_json,
    guess_format,
    iter_jsonl,
    parse_jsonl,
    read_corpus,
    read_tagged_text,
    write_corpus,
    write_jsonl,
    write_line_index,
    write_tagged_text,
)
from corefenrich.model import FormatParseError, InvariantViolation, MentionCategory
from corefenrich.tests.generators import random_documents

MOCK_DATA = Path(__file__).parent / "mock_data"


def _lines(data: bytes):
    return io.BytesIO(data)


def test_jsonl_empty():
    assert write_jsonl([]) == b""
    assert parse_jsonl(_lines(b"")) == []


def test_jsonl_random_documents_round_trip():
    docs = random_documents(seed=7, count=1000)
    assert parse_jsonl(_lines(write_jsonl(docs))) == docs


def test_jsonl_fixture():
    with (MOCK_DATA / "salt.jsonl").open("rb") as stream:
        (doc,) = parse_jsonl(stream)
    assert doc.id == "salt"
    assert doc.chains[1].head_mention_id == "m2"
    assert doc.mentions["m4"].category == MentionCategory.PRONOUN
    with (MOCK_DATA / "salt.jsonl").open("rb") as stream:
        assert json.loads(write_jsonl([doc])) == json.loads(stream.read())


def test_jsonl_missing_field():
    obj = document_to_json(random_documents(seed=1, count=1)[0])
    del obj["chains"]
    line = json.dumps(obj).encode("utf-8")
    with pytest.raises(FormatParseError, match="line 2: missing field: chains"):
        parse_jsonl(_lines(b"\n" + line + b"\n"))


def test_jsonl_invalid_value():
    obj = document_to_json(random_documents(seed=3, count=1)[0])
    obj["mentions"] = {
        "m1": {
            "chain_id": "c",
            "span": [0, 0, 1],
            "category": "adverb",
            "gender": "unknown",
            "number": "unknown",
            "animacy": "unknown",
        }
    }
    with pytest.raises(FormatParseError, match="invalid value for category"):
        parse_jsonl(_lines(json.dumps(obj).encode("utf-8")))


def test_jsonl_invalid_json_and_bom():
    with pytest.raises(FormatParseError, match="line 1: invalid JSON"):
        parse_jsonl(_lines(b"{not json"))
    with (MOCK_DATA / "biles.jsonl").open("rb") as stream:
        data = stream.read()
    (doc,) = parse_jsonl(_lines(b"\xef\xbb\xbf" + data))
    assert doc.id == "biles"


def test_iter_jsonl_is_lazy():
    stream = iter([b'{"id": "x"}\n', b"{broken\n"])
    docs = iter_jsonl(stream)
    with pytest.raises(FormatParseError, match="line 1: missing field: genre"):
        next(docs)


def _enriched():
    return [
        EnrichedSentence(
            "salt",
            1,
            ("I", "never", "cook", "with", "<b_crf>", "salt", "<e_crf>", "it", "."),
            (Insertion(4, ("<b_crf>", "salt", "<e_crf>"), "m4", 1),),
        ),
        EnrichedSentence("biles", 0, ("The", "gymnast", "won", ".")),
    ]


def test_write_tagged_text_and_index():
    assert write_tagged_text(_enriched()) == (
        b"I never cook with <b_crf> salt <e_crf> it .\nThe gymnast won .\n"
    )
    assert write_line_index(_enriched()) == b"salt\t1\nbiles\t0\n"


def test_read_tagged_text():
    lines = list(read_tagged_text(_lines(b"a <b_crf> b <e_crf>\r\n\nc\n")))
    assert lines == [["a", "<b_crf>", "b", "<e_crf>"], [], ["c"]]


def test_guess_format():
    assert guess_format("x/train.jsonl") == "jsonl"
    assert guess_format("x/train.gold_conll") == "conll"
    with pytest.raises(ValueError):
        guess_format("train.csv")


def test_corpus_file_rejects_duplicate_ids():
    doc = random_documents(seed=2, count=1)[0]
    with pytest.raises(InvariantViolation, match="occurs more than once"):
        CorpusFile(path="x.jsonl", format="jsonl", documents=[doc, doc])
    with pytest.raises(ValueError):
        CorpusFile(path="x.csv", format="csv")


def test_read_corpus_dispatch():
    corpus = read_corpus(MOCK_DATA / "sample.conll")
    assert corpus.format == "conll"
    assert corpus.documents[0].id == "nw/sample"

    mmax = read_corpus(
        MOCK_DATA / "sample_words.xml",
        "mmax",
        markables=MOCK_DATA / "sample_coref_level.xml",
        sentences=MOCK_DATA / "sample_sentence_level.xml",
        genre="news",
    )
    assert mmax.documents[0].id == "sample"
    assert mmax.documents[0].genre == "news"
    assert len(mmax.documents[0].sentences) == 2

    with pytest.raises(ValueError, match="markables"):
        read_corpus(MOCK_DATA / "sample_words.xml", "mmax")


def test_write_corpus_conll_then_jsonl():
    docs = read_corpus(MOCK_DATA / "sample.conll").documents
    out = io.BytesIO()
    write_corpus(docs, out, "jsonl")
    assert parse_jsonl(_lines(out.getvalue())) == docs
    with pytest.raises(ValueError):
        write_corpus(docs, io.BytesIO(), "tagged_text")

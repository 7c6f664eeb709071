from pathlib import Path

import pytest

from corefenrich.conll import ConllColumns, parse_conll, parse_coref_field, write_conll
from corefenrich.model import FormatParseError, MentionCategory

MOCK_DATA = Path(__file__).parent / "mock_data"


def _rows(*rows):
    return [f"{row}\n".encode("utf-8") for row in rows]


def _parse(*rows, **kwargs):
    return parse_conll(
        _rows("#begin document (test/doc); part 000", *rows, "#end document"), **kwargs
    )


def test_parse_coref_field():
    assert parse_coref_field("-") == ([], [], [])
    assert parse_coref_field("(3)") == ([], ["3"], [])
    assert parse_coref_field("(1|(0)|2)") == (["1"], ["0"], ["2"])
    with pytest.raises(ValueError):
        parse_coref_field("((3")


def test_parse_single_token_mention():
    (doc,) = _parse("d 0 0 salt NN (3)")
    assert len(doc.mentions) == 1
    mention = doc.mentions["m1"]
    assert (mention.chain_id, mention.span) == ("3", (0, 0, 1))
    assert mention.category == MentionCategory.NOMINAL_PHRASE


def test_parse_multi_token_mention():
    (doc,) = _parse("d 0 0 the DT (7", "d 0 1 current JJ -", "d 0 2 wage NN 7)")
    assert doc.mentions["m1"].span == (0, 0, 3)
    assert doc.chains[0].id == "7"


def test_parse_without_markers():
    (doc,) = _parse("d 0 0 Hello UH -", "d 0 1 . . -", "", "d 0 0 Bye UH -")
    assert doc.mentions == {}
    assert doc.chains == ()
    assert doc.sentences == (("Hello", "."), ("Bye",))


def test_parse_fixture():
    with (MOCK_DATA / "sample.conll").open("rb") as stream:
        (doc,) = parse_conll(stream)
    assert doc.id == "nw/sample"
    assert doc.genre == "nw"
    assert [chain.id for chain in doc.chains] == ["0", "1"]
    assert doc.chains[0].mention_ids == ("m1", "m2", "m4")
    assert doc.mentions["m2"].category == MentionCategory.PRONOUN
    assert doc.mentions["m3"].span == (1, 2, 4)
    assert doc.mentions["m3"].category == MentionCategory.NOMINAL_PHRASE
    assert doc.mentions["m4"].span == (1, 2, 3)


def test_parse_genre_override_and_parts():
    docs = parse_conll(
        _rows(
            "#begin document (bc/talk); part 001",
            "d 0 0 x - -",
            "#end document",
        ),
        genre="ted",
    )
    assert docs[0].id == "bc/talk/part_1"
    assert docs[0].genre == "ted"


def test_parse_custom_columns():
    (doc,) = parse_conll(
        _rows("#begin document (x)", "She PRP (0)", "#end document"),
        columns=ConllColumns(word=0, pos=1, coref=2),
    )
    assert doc.mentions["m1"].category == MentionCategory.PRONOUN


def test_parse_unbalanced_bracket_has_line_number():
    with pytest.raises(FormatParseError, match="line 3"):
        _parse("d 0 0 the DT -", "d 0 1 salt NN 4)")


def test_parse_mention_crossing_sentence_boundary():
    with pytest.raises(FormatParseError, match="crosses a sentence boundary"):
        _parse("d 0 0 the DT (4", "", "d 0 0 salt NN 4)")


def test_parse_unclosed_document():
    with pytest.raises(FormatParseError, match="never closed"):
        parse_conll(_rows("#begin document (x)", "d 0 0 a - -"))


def test_parse_row_outside_document():
    with pytest.raises(FormatParseError, match="line 1"):
        parse_conll(_rows("d 0 0 a - -"))


def test_write_conll():
    with (MOCK_DATA / "sample.conll").open("rb") as stream:
        docs = parse_conll(stream)
    lines = write_conll(docs).decode("utf-8").split("\n")
    assert lines[0] == "#begin document (nw/sample); part 000"
    assert lines[1] == "nw/sample\t0\t0\tThe\t-\t(0"
    assert lines[8] == "nw/sample\t0\t2\ther\tPRP\t(1|(0)"
    assert lines[9] == "nw/sample\t0\t3\tcoach\t-\t1)"
    assert lines[-2] == "#end document"
    assert parse_conll(write_conll(docs).splitlines(keepends=True)) == docs

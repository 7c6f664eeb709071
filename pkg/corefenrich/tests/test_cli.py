import os
import tempfile
from pathlib import Path

import pytest
from mock import patch

from corefenrich import __version__
from corefenrich.cli import main, open_output
from corefenrich.formats import write_jsonl
from corefenrich.tests.generators import random_documents

MOCK_DATA = Path(__file__).parent / "mock_data"
SALT = str(MOCK_DATA / "salt.jsonl")


def _read(path: Path) -> str:
    return path.read_bytes().decode("utf-8")


def _error_line(capsys) -> str:
    captured = capsys.readouterr()
    assert captured.out == ""
    assert captured.err.count("\n") == 1
    assert captured.err.startswith("corefenrich: error: ")
    return captured.err


@pytest.fixture
def corpus(tmp_path) -> Path:
    path = tmp_path / "random.jsonl"
    path.write_bytes(write_jsonl(random_documents(seed=21, count=300)))
    return path


def test_version(capsys):
    assert main(["--version"]) == 0
    assert capsys.readouterr().out == f"corefenrich {__version__} (jsonl schema 1)\n"


def test_enrich_salt(tmp_path):
    out = tmp_path / "t.txt"
    index = tmp_path / "t.idx"
    assert main(["enrich", "--docs", SALT, "--out", str(out), "--index", str(index)]) == 0
    assert _read(out).splitlines() == [
        "Pass me <b_crf> it <e_crf> the salt .",
        "I never cook with <b_crf> salt <e_crf> it .",
    ]
    assert _read(index) == "salt\t0\nsalt\t1\n"


def test_enrich_to_stdout(capsys):
    assert main(["enrich", "--docs", SALT, "--tag-open", "<c>", "--tag-close", "</c>"]) == 0
    assert capsys.readouterr().out.splitlines()[1] == "I never cook with <c> salt </c> it ."


def test_enrich_output_independent_of_threads(tmp_path, corpus):
    outputs = []
    for threads in ("1", "4"):
        out = tmp_path / f"out{threads}.txt"
        assert main(["--threads", threads, "enrich", "--docs", str(corpus), "--out", str(out)]) == 0
        outputs.append(out.read_bytes())

    out = tmp_path / "env.txt"
    with patch.dict(os.environ, {"COREFENRICH_THREADS": "3"}):
        assert main(["--progress", "enrich", "--docs", str(corpus), "--out", str(out)]) == 0
    outputs.append(out.read_bytes())

    assert outputs[0] == outputs[1] == outputs[2]
    assert outputs[0].count(b"\n") == sum(len(d.sentences) for d in random_documents(21, 300))


def test_enrich_then_strip_restores_text(tmp_path, corpus):
    tagged = tmp_path / "tagged.txt"
    stripped = tmp_path / "stripped.txt"
    assert main(["enrich", "--docs", str(corpus), "--out", str(tagged)]) == 0
    assert main(["strip", "--in", str(tagged), "--out", str(stripped)]) == 0
    expected = "".join(
        " ".join(sentence) + "\n"
        for doc in random_documents(seed=21, count=300)
        for sentence in doc.sentences
    )
    assert _read(stripped) == expected


def test_convert_conll(tmp_path):
    out = tmp_path / "sample.jsonl"
    assert main(["convert", "--in", str(MOCK_DATA / "sample.conll"), "--out", str(out)]) == 0
    assert _read(out).startswith('{"id": "nw/sample"')

    tagged = tmp_path / "sample.txt"
    assert main(["enrich", "--docs", str(out), "--out", str(tagged)]) == 0
    assert len(_read(tagged).splitlines()) == 2


def test_convert_mmax_needs_markables(capsys):
    code = main(["convert", "--in", str(MOCK_DATA / "sample_words.xml"), "--in-format", "mmax"])
    assert code == 1
    assert "--markables" in _error_line(capsys)


def test_stats_empty_corpus(capsys):
    assert main(["stats", "--docs", str(MOCK_DATA / "empty.jsonl")]) == 0
    assert capsys.readouterr().out == (
        "corpus\tgenre\tdocument\ttokens\tmentions\tchains\tavg_len\tmax_len\t"
        "pronoun_ratio\taggregation\n"
    )


def test_stats_salt(capsys):
    assert main(["stats", "--docs", SALT, "--corpus", "src", "--per-document"]) == 0
    assert capsys.readouterr().out.splitlines()[1:] == [
        "src\tnews\tsalt\t11\t4\t2\t2.0\t2.0\t0.75\tdocument",
        "src\tnews\t\t11\t4\t2\t2.0\t2.0\t0.75\tmicro",
        "src\tnews\t\t11\t4\t2\t2.0\t2.0\t0.75\tmacro",
    ]


def test_stats_enriched_tokens(capsys):
    assert main(["stats", "--docs", SALT, "--aggregation", "micro", "--enriched-tokens"]) == 0
    assert capsys.readouterr().out.splitlines()[1] == (
        "salt\tnews\t\t13\t4\t2\t2.0\t2.0\t0.75\tmicro"
    )


def test_stats_corpus_names_must_match(capsys):
    assert main(["stats", "--docs", SALT, "--corpus", "a", "--corpus", "b"]) == 1
    _error_line(capsys)


def test_eval_bleu_identity(tmp_path, capsys):
    hyp = tmp_path / "h.txt"
    hyp.write_bytes(b"the cat sat on the mat\nhello world\n")
    assert main(["eval", "bleu", "--hyp", str(hyp), "--ref", str(hyp)]) == 0
    assert capsys.readouterr().out == "100.0\n"


def test_eval_bleu_subset_report(tmp_path, capsys):
    hyp = tmp_path / "h.txt"
    ref = tmp_path / "r.txt"
    subset = tmp_path / "subset.txt"
    report = tmp_path / "report.tsv"
    hyp.write_bytes(b"completely wrong\nthe cat sat on\n")
    ref.write_bytes(b"nothing alike here\nthe cat sat on\n")
    subset.write_bytes(b"1\n")
    args = ["eval", "bleu", "--hyp", str(hyp), "--ref", str(ref), "--subset", str(subset)]
    args += ["--system", "S1", "--genre", "ted", "--report", str(report)]
    assert main(args) == 0
    assert capsys.readouterr().out == "100.0\n"
    assert _read(report).splitlines() == [
        "system\tgenre\tslice\tbleu\tmeteor\tmention_errors",
        "S1\tted\tcoref\t100.0\t\t",
    ]


def test_eval_bleu_line_mismatch(tmp_path, capsys):
    hyp = tmp_path / "h.txt"
    ref = tmp_path / "r.txt"
    hyp.write_bytes(b"a\nb\n")
    ref.write_bytes(b"a\n")
    assert main(["eval", "bleu", "--hyp", str(hyp), "--ref", str(ref)]) == 3
    assert "2 hypothesis lines but 1 reference lines" in _error_line(capsys)


def test_subset(tmp_path, capsys):
    assert main(["subset", "--docs", SALT]) == 0
    assert capsys.readouterr().out == "0\n1\n"

    tagged = tmp_path / "tagged.txt"
    tagged.write_bytes(b"no tags\nI cook with <b_crf> salt <e_crf> it .\n")
    assert main(["subset", "--tagged", str(tagged)]) == 0
    assert capsys.readouterr().out == "1\n"


def test_subset_needs_exactly_one_source(tmp_path, capsys):
    tagged = tmp_path / "tagged.txt"
    tagged.write_bytes(b"x\n")
    assert main(["subset", "--docs", SALT, "--tagged", str(tagged)]) == 1
    _error_line(capsys)
    assert main(["subset"]) == 1
    _error_line(capsys)


def test_errors_report(tmp_path, capsys):
    records = tmp_path / "records.tsv"
    records.write_bytes(
        b"doc_id\tsystem\tmention_id\tcorrect\tcategory\n"
        b"salt\tS1\tm4\tfalse\tgender\n"
        b"salt\tS1\tm3\ttrue\t\n"
    )
    breakdown = tmp_path / "breakdown.tsv"
    args = ["errors", "--records", str(records), "--docs", f"S1={SALT}"]
    assert main(args + ["--breakdown", str(breakdown)]) == 0
    assert capsys.readouterr().out.splitlines()[1] == (
        "S1\tnews\t4\t1\t25.0%\t1 (25.0%)\t0.00\t1.00\t0.00\t1.00\t0\t1.00\t0.00"
    )
    assert _read(breakdown).splitlines()[1] == "gender\tS1\tnews\t1\t1.00"


def test_errors_unresolvable_mention(tmp_path, capsys):
    records = tmp_path / "records.tsv"
    records.write_bytes(
        b"doc_id\tsystem\tmention_id\tcorrect\tcategory\nsalt\tS1\tm9\tfalse\tgender\n"
    )
    assert main(["errors", "--records", str(records), "--docs", f"S1={SALT}"]) == 3
    assert "unresolvable mention salt/m9" in _error_line(capsys)


def test_errors_records_for_unknown_system(tmp_path, capsys):
    records = tmp_path / "records.tsv"
    records.write_bytes(
        b"doc_id\tsystem\tmention_id\tcorrect\tcategory\nsalt\tS2\tm4\tfalse\tgender\n"
    )
    assert main(["errors", "--records", str(records), "--docs", f"S1={SALT}"]) == 3
    assert "no documents for system S2" in _error_line(capsys)


def test_errors_bad_system_argument(tmp_path, capsys):
    records = tmp_path / "records.tsv"
    records.write_bytes(b"doc_id\tsystem\tmention_id\tcorrect\tcategory\n")
    assert main(["errors", "--records", str(records), "--docs", SALT]) == 1
    assert "SYSTEM=PATH" in _error_line(capsys)


def test_usage_errors(tmp_path, capsys):
    assert main(["frobnicate"]) == 1
    _error_line(capsys)
    assert main(["enrich", "--docs", str(tmp_path / "missing.jsonl")]) == 1
    _error_line(capsys)
    assert main(["enrich", "--docs", SALT, "--max-head-tokens", "0"]) == 1
    _error_line(capsys)


def test_parse_error_leaves_no_output(tmp_path, capsys):
    docs = tmp_path / "broken.jsonl"
    docs.write_bytes((MOCK_DATA / "salt.jsonl").read_bytes() + b"{broken\n")
    out = tmp_path / "out.txt"
    assert main(["enrich", "--docs", str(docs), "--out", str(out)]) == 2
    assert "line 2: invalid JSON" in _error_line(capsys)
    assert not out.exists()
    assert list(tmp_path.iterdir()) == [docs]

    assert main(["enrich", "--docs", str(docs)]) == 2
    _error_line(capsys)


def test_duplicate_document_ids(tmp_path, capsys):
    docs = tmp_path / "twice.jsonl"
    docs.write_bytes((MOCK_DATA / "salt.jsonl").read_bytes() * 2)
    assert main(["stats", "--docs", str(docs)]) == 3
    assert "document id salt occurs more than once" in _error_line(capsys)


def test_strip_malformed_line(tmp_path, capsys):
    tagged = tmp_path / "tagged.txt"
    tagged.write_bytes(b"fine line\nx <b_crf> y\n")
    assert main(["strip", "--in", str(tagged)]) == 2
    assert "line 2: " in _error_line(capsys)


def test_stdout_output_is_spooled(capsys):
    with patch("corefenrich.cli.STDOUT_SPOOL_BYTES", 4):
        with open_output("-") as stream:
            assert isinstance(stream, tempfile.SpooledTemporaryFile)
            stream.write(b"longer than the spool\n")
    assert capsys.readouterr().out == "longer than the spool\n"

    with pytest.raises(ValueError):
        with open_output("-") as stream:
            stream.write(b"partial\n")
            raise ValueError("bad input")
    assert capsys.readouterr().out == ""

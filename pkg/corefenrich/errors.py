"""
Mention-level error judgments of MT output and their aggregate reports.
"""
import csv
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import pandas as pd

from corefenrich.model import (
    NOMINAL_CATEGORIES,
    CohesiveFunction,
    Document,
    FormatParseError,
    InvariantViolation,
    MentionCategory,
)
from corefenrich.reports import render_pair, render_percent, round_half_up
from corefenrich.settings import (
    CLOSED_ERROR_CATEGORIES,
    ERROR_CATEGORIES,
    ERROR_RECORD_COLUMNS,
    FALSE_VALUES,
    FRACTION_DECIMALS,
    TRUE_VALUES,
)

REPORT_COLUMNS = [
    "system",
    "genre",
    "total_mentions",
    "total_errors",
    "rate",
    "mention_errors",
    "antecedent",
    "anaphor",
    "np",
    "pronoun",
    "other_type_errors",
    "closed",
    "open",
]
BREAKDOWN_COLUMNS = ["category", "system", "genre", "count", "fraction"]


@dataclass(frozen=True)
class ErrorCategory:
    """
    One of settings.ERROR_CATEGORIES, or "other" with a free label added by
    an annotator.
    """

    name: str
    label: str = ""

    def __post_init__(self):
        if self.name == "other":
            if not self.label:
                raise ValueError("other error category needs a non-empty label")
        elif self.name not in ERROR_CATEGORIES:
            raise ValueError(f"Unknown error category '{self.name}'")

    @classmethod
    def parse(cls, value: str) -> "ErrorCategory":
        """
        "wrong named entity" -> wrong_named_entity, "other:foo" -> other("foo"),
        any unknown string -> other(string).
        """
        value = value.strip()
        key = re.sub(r"[\s-]+", "_", value.lower())
        if key in ERROR_CATEGORIES:
            return cls(key)
        if key.startswith("other:"):
            return cls("other", value.split(":", 1)[1].strip() or "other")
        return cls("other", value)

    @property
    def key(self) -> str:
        return self.label if self.name == "other" else self.name

    @property
    def is_closed(self) -> bool:
        return self.name in CLOSED_ERROR_CATEGORIES


@dataclass(frozen=True)
class ErrorRecord:
    doc_id: str
    system: str
    mention_id: str
    correct: bool
    category: Optional[ErrorCategory] = None
    note: str = ""

    def __post_init__(self):
        if self.correct and self.category is not None:
            raise ValueError(f"mention {self.mention_id} is correct but has an error category")
        if not self.correct and self.category is None:
            raise ValueError(f"mention {self.mention_id} is incorrect but has no error category")


@dataclass(frozen=True)
class ErrorReport:
    system: str
    genre: str
    total_mentions: int
    total_errors: int
    rate: Fraction
    per_category: Dict[str, int] = field(default_factory=dict)
    antecedent_fraction: Optional[Fraction] = None
    anaphor_fraction: Optional[Fraction] = None
    np_fraction: Optional[Fraction] = None
    pronoun_fraction: Optional[Fraction] = None
    other_type_errors: int = 0
    closed_errors: int = 0

    @property
    def closed_fraction(self) -> Optional[Fraction]:
        return Fraction(self.closed_errors, self.total_errors) if self.total_errors else None

    @property
    def open_fraction(self) -> Optional[Fraction]:
        closed = self.closed_fraction
        return None if closed is None else 1 - closed


def _parse_correct(value: str, line: int) -> bool:
    lowered = value.strip().lower()
    if lowered in TRUE_VALUES:
        return True
    if lowered in FALSE_VALUES:
        return False
    raise FormatParseError(f"invalid value for correct: '{value}'", line=line, field="correct")


def load_error_records(stream: IO[bytes]) -> List[ErrorRecord]:
    """
    Reads error judgments from a TSV with header
    doc_id, system, mention_id, correct, category and an optional note column.

    Raises:
        FormatParseError with the line number for bad rows, e.g. an incorrect
        mention without category.
    """
    try:
        df = pd.read_csv(
            stream,
            sep="\t",
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            quoting=csv.QUOTE_NONE,
            index_col=False,
            encoding="utf-8-sig",
        )
    except pd.errors.EmptyDataError:
        return []
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise FormatParseError(f"malformed error records: {e}") from e
    df = df.fillna("")
    df.columns = [column.strip() for column in df.columns]
    for column in ERROR_RECORD_COLUMNS:
        if column not in df.columns:
            raise FormatParseError(f"missing column: {column}", line=1, field=column)

    records = []
    for index, row in df.iterrows():
        line = int(index) + 2  # type: ignore
        if not any(str(value).strip() for value in row.values):
            continue
        correct = _parse_correct(row["correct"], line)
        category_value = row["category"].strip()
        if not correct and not category_value:
            raise FormatParseError(
                "incorrect mention without error category", line=line, field="category"
            )
        if correct and category_value:
            raise FormatParseError(
                "correct mention with an error category", line=line, field="category"
            )
        for column in ("doc_id", "system", "mention_id"):
            if not row[column].strip():
                raise FormatParseError(f"empty {column}", line=line, field=column)
        records.append(
            ErrorRecord(
                doc_id=row["doc_id"].strip(),
                system=row["system"].strip(),
                mention_id=row["mention_id"].strip(),
                correct=correct,
                category=ErrorCategory.parse(category_value) if category_value else None,
                note=row["note"].strip() if "note" in df.columns else "",
            )
        )
    return records


def _category_order(key: str) -> Tuple[int, str]:
    if key in ERROR_CATEGORIES:
        return ERROR_CATEGORIES.index(key), ""
    return len(ERROR_CATEGORIES), key


def build_report(
    records: Iterable[ErrorRecord],
    docs_by_system: Mapping[str, Sequence[Document]],
    genre: Optional[str] = None,
    system: Optional[str] = None,
) -> ErrorReport:
    """
    Aggregates the judgments of one system's output over one genre.

    Mentions without a judgment count as correct. Errors on antecedents
    (cohesive function antecedent) are split from errors on all other mentions,
    and errors on nominal mentions from errors on pronouns; verb phrase and
    clause mentions are left out of the second split and counted separately.

    Args:
        records: Error judgments, possibly of several systems
        docs_by_system: System label -> its annotated output documents
        genre: Only documents of this genre, all documents if None
        system: System to report, may be omitted when records cover one system

    Raises:
        InvariantViolation naming every record whose document or mention does
        not resolve, or mentions judged more than once.
    """
    records = list(records)
    if system is None:
        systems = {record.system for record in records} or set(docs_by_system)
        if len(systems) != 1:
            raise ValueError(f"records cover systems {sorted(systems)}, choose one")
        system = systems.pop()
    if system not in docs_by_system:
        raise InvariantViolation([f"no documents for system {system}"])

    docs = {doc.id: doc for doc in docs_by_system[system]}
    selected = [doc for doc in docs.values() if genre is None or doc.genre == genre]
    selected_ids = {doc.id for doc in selected}

    judgments: Dict[Tuple[str, str], ErrorRecord] = {}
    problems = []
    for record in records:
        if record.system != system:
            continue
        doc = docs.get(record.doc_id)
        if doc is None:
            problems.append(
                f"unresolvable mention {record.doc_id}/{record.mention_id}: "
                f"no document {record.doc_id} for system {system}"
            )
        elif record.mention_id not in doc.mentions:
            problems.append(
                f"unresolvable mention {record.doc_id}/{record.mention_id} for system {system}"
            )
        elif (record.doc_id, record.mention_id) in judgments:
            problems.append(f"mention {record.doc_id}/{record.mention_id} is judged twice")
        else:
            judgments[(record.doc_id, record.mention_id)] = record
    if problems:
        raise InvariantViolation(sorted(problems))

    per_category: Counter = Counter()
    antecedents = anaphors = nominal = pronouns = other_types = closed = 0
    for (doc_id, mention_id), record in judgments.items():
        if record.correct or doc_id not in selected_ids:
            continue
        mention = docs[doc_id].mentions[mention_id]
        assert record.category is not None
        per_category[record.category.key] += 1
        closed += record.category.is_closed
        if mention.function == CohesiveFunction.ANTECEDENT:
            antecedents += 1
        else:
            anaphors += 1
        if mention.category == MentionCategory.PRONOUN:
            pronouns += 1
        elif mention.category in NOMINAL_CATEGORIES:
            nominal += 1
        else:
            other_types += 1

    total_errors = sum(per_category.values())
    total_mentions = sum(len(doc.mentions) for doc in selected)
    split = nominal + pronouns
    return ErrorReport(
        system=system,
        genre=genre if genre is not None else "",
        total_mentions=total_mentions,
        total_errors=total_errors,
        rate=Fraction(total_errors, total_mentions) if total_mentions else Fraction(0),
        per_category=dict(sorted(per_category.items(), key=lambda kv: _category_order(kv[0]))),
        antecedent_fraction=Fraction(antecedents, total_errors) if total_errors else None,
        anaphor_fraction=Fraction(anaphors, total_errors) if total_errors else None,
        np_fraction=Fraction(nominal, split) if split else None,
        pronoun_fraction=Fraction(pronouns, split) if split else None,
        other_type_errors=other_types,
        closed_errors=closed,
    )


def build_reports(
    records: Iterable[ErrorRecord],
    docs_by_system: Mapping[str, Sequence[Document]],
    genres: Optional[Sequence[str]] = None,
) -> List[ErrorReport]:
    """
    One report per (system, genre), genres taken from the documents if not given.

    Raises:
        InvariantViolation if records name a system without documents.
    """
    records = list(records)
    missing = sorted({record.system for record in records} - set(docs_by_system))
    if missing:
        raise InvariantViolation([f"no documents for system {system}" for system in missing])
    reports = []
    for system in sorted(docs_by_system):
        system_genres = genres or sorted({doc.genre for doc in docs_by_system[system]})
        for genre in system_genres:
            reports.append(build_report(records, docs_by_system, genre, system))
    return reports


def render_rate(total_errors: int, total_mentions: int) -> str:
    """E.g. 117 errors over 1216 mentions -> "117 (9.6%)"."""
    rate = Fraction(total_errors, total_mentions) if total_mentions else Fraction(0)
    return f"{total_errors} ({render_percent(rate)})"


def report_row(report: ErrorReport) -> Dict:
    antecedent, anaphor = render_pair(report.antecedent_fraction)
    nominal, pronoun = render_pair(report.np_fraction)
    closed, opened = render_pair(report.closed_fraction)
    return {
        "system": report.system,
        "genre": report.genre,
        "total_mentions": report.total_mentions,
        "total_errors": report.total_errors,
        "rate": render_percent(report.rate),
        "mention_errors": render_rate(report.total_errors, report.total_mentions),
        "antecedent": antecedent,
        "anaphor": anaphor,
        "np": nominal,
        "pronoun": pronoun,
        "other_type_errors": report.other_type_errors,
        "closed": closed,
        "open": opened,
    }


def report_frame(reports: Iterable[ErrorReport]) -> pd.DataFrame:
    return pd.DataFrame([report_row(report) for report in reports], columns=REPORT_COLUMNS)


def category_breakdown(reports: Iterable[ErrorReport]) -> pd.DataFrame:
    """Errors per category, system and genre, the data behind a per-system error chart."""
    rows = []
    for report in reports:
        for category, count in report.per_category.items():
            rows.append(
                {
                    "category": category,
                    "system": report.system,
                    "genre": report.genre,
                    "count": count,
                    "fraction": round_half_up(
                        Fraction(count, report.total_errors), FRACTION_DECIMALS
                    ),
                }
            )
    return pd.DataFrame(rows, columns=BREAKDOWN_COLUMNS)

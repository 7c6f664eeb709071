import math
from decimal import Decimal
from fractions import Fraction
from typing import IO, Optional, Tuple, Union

import pandas as pd

from corefenrich.settings import FRACTION_DECIMALS, RATE_DECIMALS, REPORT_FORMATS

Number = Union[int, Fraction]


def round_half_up(value: Number, places: int) -> Decimal:
    """
    Rounds an exact value half-up to `places` decimals.

    Rounding happens on the exact rational, so 0.125 becomes 0.13 and 6.45
    becomes 6.5, which float formatting does not guarantee.
    """
    scaled = Fraction(value) * 10**places
    if scaled >= 0:
        rounded = math.floor(scaled + Fraction(1, 2))
    else:
        rounded = -math.floor(-scaled + Fraction(1, 2))
    return Decimal(rounded).scaleb(-places)


def render_percent(rate: Number, places: int = RATE_DECIMALS) -> str:
    """E.g. Fraction(117, 1216) -> "9.6%"."""
    return f"{round_half_up(rate * 100, places)}%"


def render_pair(
    first: Optional[Fraction], places: int = FRACTION_DECIMALS
) -> Tuple[Optional[Decimal], Optional[Decimal]]:
    """
    Renders a two-way split (first, 1 - first), deriving the second value
    from the rounded first so that the pair always sums to exactly 1.
    """
    if first is None:
        return None, None
    rounded = round_half_up(first, places)
    return rounded, Decimal(1).quantize(rounded) - rounded


def write_report(frame: pd.DataFrame, stream: IO[bytes], fmt: str = "tsv") -> None:
    """
    Writes a report table as TSV (header + one row per line) or as a JSON
    array of records. Decimal cells keep their rounding in TSV and become
    numbers in JSON.
    """
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"Unknown report format '{fmt}', choose from {REPORT_FORMATS}")
    if fmt == "tsv":
        text = frame.to_csv(sep="\t", index=False, lineterminator="\n")
    else:
        frame = frame.astype(object).map(
            lambda v: float(v) if isinstance(v, Decimal) else v
        )
        text = frame.to_json(orient="records", force_ascii=False) + "\n"
    stream.write(text.encode("utf-8"))

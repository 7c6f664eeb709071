from typing import IO, Iterable, Iterator, Union

from corefenrich.model import FormatParseError

BOM = "\ufeff"


def text_lines(stream: Union[IO[bytes], Iterable[bytes]]) -> Iterator[str]:
    """
    Decodes a UTF-8 byte stream line by line, without line terminators.
    A leading byte order mark is dropped.
    """
    for line_no, raw in enumerate(stream, start=1):
        try:
            line = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatParseError(f"invalid UTF-8 ({e.reason})", line=line_no) from e
        if line_no == 1 and line.startswith(BOM):
            line = line[1:]
        yield line.rstrip("\r\n")


def encode_line(line: str) -> bytes:
    return (line + "\n").encode("utf-8")

import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Iterator, TypeVar

from corefenrich.settings import THREADS_ENV_VAR

T = TypeVar("T")
R = TypeVar("R")

# pending tasks per worker; bounds memory when streaming large corpora
WINDOW_PER_THREAD = 8


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV_VAR, "")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def ordered_map(
    func: Callable[[T], R], items: Iterable[T], threads: int = 1
) -> Iterator[R]:
    """
    Lazily maps `func` over `items` on up to `threads` workers.

    Results are yielded in input order, so output does not depend on the
    number of workers. At most threads * WINDOW_PER_THREAD items are in flight.
    """
    if threads <= 1:
        yield from map(func, items)
        return
    with ThreadPoolExecutor(max_workers=threads) as executor:
        pending: deque = deque()
        for item in items:
            pending.append(executor.submit(func, item))
            if len(pending) >= threads * WINDOW_PER_THREAD:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()

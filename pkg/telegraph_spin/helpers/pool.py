"""Worker pool."""

import logging
import os
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from ..const import ENV_THREADS

_LOGGER = logging.getLogger(__name__)

_T = TypeVar("_T")
_R = TypeVar("_R")


def worker_count() -> int:
    """Return the worker cap from the environment, else the CPU count."""
    default = os.cpu_count() or 1
    value = os.environ.get(ENV_THREADS)
    if not value:
        return default
    try:
        count = int(value)
    except ValueError:
        _LOGGER.warning("Ignoring %s=%s, expected an integer", ENV_THREADS, value)
        return default
    return max(1, count)


def ordered_map(func: Callable[[_T], _R], items: Sequence[_T]) -> list[_R]:
    """Apply func to every item on the pool, returning results in input order."""
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))

"""
Replica mapping contract shared by the experiment harnesses.

A mapper takes a module-level function and a list of argument tuples and
returns the results in argument order. Replica functions only receive and
return plain JSON values so the same call can run in a thread pool or on a
Celery worker.
"""
from typing import Any, Callable, List, Optional, Sequence, Tuple

Mapper = Callable[[Callable[..., Any], Sequence[Tuple[Any, ...]]], List[Any]]


def serial_map(function: Callable[..., Any], arguments: Sequence[Tuple[Any, ...]]) -> List[Any]:
    return [function(*args) for args in arguments]


def resolve_mapper(mapper: Optional[Mapper]) -> Mapper:
    return mapper if mapper is not None else serial_map

"""
Deterministic task pool.

Tasks are mapped in task-ID order; callers hand each task its own
SeedSequence child, so results do not depend on the worker count. Warnings
raised inside a task are captured and re-issued in the parent in task order,
for inline and process execution alike.

Workers are spawned, never forked: the parent may already hold numba
OpenMP threads.
"""

import logging
import multiprocessing
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence, Tuple

START_METHOD = "spawn"


@dataclass
class _Recorded:
    func: Callable[[Any], Any]

    def __call__(self, task: Any) -> Tuple[Any, List[Tuple[str, type]]]:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = self.func(task)
        return result, [(str(w.message), w.category) for w in caught]


class TaskPool:
    """Map picklable functions over task descriptors, preserving order"""

    def __init__(self, workers: int = 1, logger: Optional[logging.Logger] = None):
        self.workers = max(1, int(workers))
        self.logger = logger or logging.getLogger(__name__)

    def map(self, func: Callable[[Any], Any], tasks: Sequence[Any]) -> List[Any]:
        tasks = list(tasks)
        wrapped = _Recorded(func)
        if self.workers == 1 or len(tasks) <= 1:
            outputs = [wrapped(task) for task in tasks]
        else:
            self.logger.debug(f"Dispatching {len(tasks)} tasks to {self.workers} workers")
            context = multiprocessing.get_context(START_METHOD)
            with ProcessPoolExecutor(max_workers=self.workers, mp_context=context) as executor:
                outputs = list(executor.map(wrapped, tasks))

        for _, caught in outputs:
            for message, category in caught:
                warnings.warn(message, category)
        return [result for result, _ in outputs]

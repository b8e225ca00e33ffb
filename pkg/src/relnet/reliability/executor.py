"""Scenario executor - runs independent subproblems in a worker pool."""

from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import Any

import structlog

logger = structlog.get_logger()

DEFAULT_WORKERS = 1


class ScenarioEvaluationError(RuntimeError):
    """Raised when evaluating scenario `k` fails; the original error is the cause."""

    def __init__(self, k: int, message: str):
        self.k = k
        self.message = message
        super().__init__(f"Scenario {k} failed: {message}")

    def __reduce__(self):
        return type(self), (self.k, self.message)


class TaskResult:
    """Result of one subproblem evaluation."""

    def __init__(
        self,
        index: int,
        success: bool,
        value: Any = None,
        error: BaseException | None = None,
    ):
        self.index = index
        self.success = success
        self.value = value
        self.error = error

    def __str__(self) -> str:
        if self.success:
            return f"task {self.index}: {self.value}"
        return f"task {self.index}: Error: {self.error}"


class ScenarioExecutor:
    """Evaluate subproblems in order, in-process or across worker processes."""

    def __init__(self, workers: int = DEFAULT_WORKERS):
        if workers < 1:
            raise ValueError("workers must be at least 1")
        self.workers = workers

    def run(self, fn: Callable[[Any], Any], tasks: Sequence[Any]) -> list[TaskResult]:
        """Apply `fn` to every task; results keep task order whatever the pool size.

        `fn` and the tasks must be picklable when more than one worker is used.
        """
        logger.debug("Evaluating tasks", tasks=len(tasks), workers=self.workers)
        if self.workers == 1 or len(tasks) <= 1:
            return [self._call(fn, i, task) for i, task in enumerate(tasks)]

        results: list[TaskResult] = []
        with ProcessPoolExecutor(max_workers=min(self.workers, len(tasks))) as pool:
            futures = [pool.submit(fn, task) for task in tasks]
            for i, future in enumerate(futures):
                try:
                    results.append(TaskResult(i, True, future.result()))
                except Exception as e:
                    logger.error("Task failed in worker", task=i, error=str(e))
                    results.append(TaskResult(i, False, error=e))
        return results

    def _call(self, fn: Callable[[Any], Any], index: int, task: Any) -> TaskResult:
        try:
            return TaskResult(index, True, fn(task))
        except Exception as e:
            logger.error("Task failed", task=index, error=str(e))
            return TaskResult(index, False, error=e)

import logging
import multiprocessing
import os
from typing import Callable, List, Optional, Sequence, TypeVar

from .errors import TanglegramError

logger = logging.getLogger(__name__)

JOBS_ENV = "TGL_JOBS"

T = TypeVar("T")
R = TypeVar("R")


def resolve_jobs(jobs: Optional[int] = None) -> int:
    """
    None -> $TGL_JOBS or 1. 0 -> one worker per core, leaving one free, at most 8.
    """
    if jobs is None:
        raw = os.environ.get(JOBS_ENV, "").strip()
        try:
            jobs = int(raw) if raw else 1
        except ValueError as e:
            raise TanglegramError(f"{JOBS_ENV}={raw!r} is not an integer") from e
    if jobs < 0:
        raise TanglegramError(f"job count must be non-negative, not {jobs}")
    if jobs == 0:
        cpu_count = multiprocessing.cpu_count()
        jobs = max(1, min(cpu_count - 1, 8))
    return jobs


def run_tasks(func: Callable[[T], R], tasks: Sequence[T], jobs: Optional[int] = None) -> List[R]:
    """Map func over tasks; results come back in task order whatever the worker count."""
    workers = min(resolve_jobs(jobs), len(tasks))
    if workers > 1:
        logger.debug("running %d tasks on %d workers", len(tasks), workers)
        with multiprocessing.Pool(processes=workers) as pool:
            return pool.map(func, tasks)
    # Serial fallback
    return [func(task) for task in tasks]

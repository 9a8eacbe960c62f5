"""Run independent trials across worker processes."""

import logging
from collections.abc import Callable, Sequence
from multiprocessing import Pool

from lmcot.utils.progress import SilentTaskStatus, TaskStatus


def run_trials(
    fn: Callable,
    jobs: Sequence,
    threads: int = 1,
    task_status: TaskStatus | None = None,
) -> list:
    """Apply `fn` to every job and return the results in job order.

    `fn` must be picklable (a module-level function or a `functools.partial`
    of one) when `threads` > 1.

    :param threads: number of worker processes; 1 runs in-process.
    """
    task_status = task_status or SilentTaskStatus()
    total = len(jobs)
    results = []
    if threads <= 1 or total <= 1:
        for i, job in enumerate(jobs):
            results.append(fn(job))
            task_status.progress(i + 1, total)
        return results

    logging.debug(f"Running {total} trials on {threads} processes.")
    with Pool(processes=threads) as pool:
        # imap preserves job order, so reductions are deterministic.
        for i, result in enumerate(pool.imap(fn, jobs)):
            results.append(result)
            task_status.progress(i + 1, total)
    return results

import operator
from functools import partial

from lmcot.experiments.runner import run_trials
from lmcot.utils.progress import TaskStatus


class _RecordingStatus(TaskStatus):
    def __init__(self):
        self.calls = []

    def progress(self, current: int, total: int):
        self.calls.append((current, total))


def test_run_trials__in_process():
    status = _RecordingStatus()
    assert run_trials(partial(operator.mul, 3), [1, 2, 3], task_status=status) == [3, 6, 9]
    assert status.calls == [(1, 3), (2, 3), (3, 3)]


def test_run_trials__empty():
    assert run_trials(abs, []) == []


def test_run_trials__processes_keep_job_order():
    jobs = list(range(20, 0, -1))
    status = _RecordingStatus()
    results = run_trials(partial(operator.pow, 2), jobs, threads=2, task_status=status)
    assert results == [2**j for j in jobs]
    assert status.calls[-1] == (20, 20)

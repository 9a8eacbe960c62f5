import logging


class TaskStatus:
    """Helper class to track progress on a long-running task.

    - For command-line runs, use LocalTaskStatus.
    - For unit tests and library calls, use SilentTaskStatus.
    """

    def progress(self, current: int, total: int):
        """Update the task's progress.

        :param current: progress numerator
        :param total: progress denominator
        """
        raise NotImplementedError

    def success(self, message: str):
        """Mark the task as a success."""
        raise NotImplementedError

    def failure(self, message: str):
        """Mark the task as failed."""
        raise NotImplementedError


class LocalTaskStatus(TaskStatus):
    """Helper class to report progress on a task through the logger."""

    def __init__(self, name: str = "task"):
        self.name = name

    def progress(self, current: int, total: int):
        logging.info(f"[{self.name}] {current} / {total} complete")

    def success(self, message: str):
        logging.info(f"[{self.name}] Succeeded. ({message})")

    def failure(self, message: str):
        logging.error(f"[{self.name}] Failed. ({message})")


class SilentTaskStatus(TaskStatus):
    def progress(self, current: int, total: int):
        pass

    def success(self, message: str):
        pass

    def failure(self, message: str):
        pass

from __future__ import annotations

import dataclasses
import logging
import time

import psutil

from hyperpose.models.registry import Registry

BANNER_WIDTH = 78


@dataclasses.dataclass
class Verbosity:
    verbosity_level: str
    log_level: str

    @property
    def name(self) -> str:
        return self.verbosity_level


class VerbosityRegistry(Registry[Verbosity]):
    _item_class = Verbosity
    LOW = Verbosity("LOW", "INFO")
    HIGH = Verbosity("HIGH", "DEBUG")
    SILENT = Verbosity("SILENT", "ERROR")

    @staticmethod
    def get_item_aliases(item: Verbosity) -> list[str]:
        return [item.verbosity_level.upper()]


class HyperposeLogger:
    """
    Singleton to display and control logs in hyperpose library.
    """

    __instance = None
    verbosity: Verbosity = VerbosityRegistry.LOW

    @staticmethod
    def get_instance(verbosity: Verbosity = VerbosityRegistry.LOW):
        if HyperposeLogger.__instance is None:
            HyperposeLogger(verbosity)
        return HyperposeLogger.__instance

    def __init__(self, verbosity: Verbosity):
        if HyperposeLogger.__instance is not None:
            raise Exception(
                "This class is a singleton! Use HyperposeLogger.get_instance()."
            )
        HyperposeLogger.__instance = self
        self.verbosity = verbosity
        self._logger = logging.getLogger("hyperpose")
        logging.basicConfig(level=verbosity.log_level, format="%(asctime)s %(message)s")

    def set_verbosity(self, verbosity: str | Verbosity):
        if isinstance(verbosity, str):
            verbosity = VerbosityRegistry.lookup(verbosity)
        self.verbosity = verbosity
        logging.root.setLevel(verbosity.log_level)
        self._logger.setLevel(verbosity.log_level)

    def start_message(self, command: str):
        from hyperpose import __version__ as hyperpose_version

        if self.verbosity == VerbosityRegistry.SILENT:
            return
        if self.verbosity == VerbosityRegistry.LOW:
            self._logger.info(f"--- hyperpose {hyperpose_version}")
            self._logger.info(f"--- BEGIN {command.upper()}")
            return
        self._banner(
            f"hyperpose {hyperpose_version}",
            time.asctime(time.gmtime()),
            f"BEGIN {command.upper()}",
        )

    def ending_message(self, command: str, time_cpu: float):
        from hyperpose import __version__ as hyperpose_version

        if self.verbosity == VerbosityRegistry.SILENT:
            return
        rss_mb = psutil.Process().memory_info().rss / 2**20
        if self.verbosity == VerbosityRegistry.LOW:
            self._logger.info(f"--- hyperpose {hyperpose_version}")
            self._logger.info(
                "--- CPU SECS = %-10.3f RSS MB = %-10.1f", time_cpu, rss_mb
            )
            self._logger.info(f"--- END {command.upper()}")
            return
        self._banner(
            f"hyperpose {hyperpose_version}",
            time.asctime(time.gmtime()),
            f"END {command.upper()}",
            f"CP SECS = {time_cpu:.3f}",
            f"RSS MB = {rss_mb:.1f}",
        )

    def _banner(self, *lines: str) -> None:
        inner = BANNER_WIDTH - 4
        self._logger.info("   " + "*" * BANNER_WIDTH)
        for line in lines:
            self._logger.info("   *" + " " * inner + "*")
            self._logger.info("   *  " + line.ljust(inner - 2) + "*")
        self._logger.info("   *" + " " * inner + "*")
        self._logger.info("   " + "*" * BANNER_WIDTH)

    def info(self, *args):
        self._logger.info(" ".join(str(a) for a in args))

    def debug(self, *args):
        self._logger.debug(" ".join(str(a) for a in args))

    def warning(self, *args):
        self._logger.warning(" ".join(str(a) for a in args))

    def epoch_summary(self, row: dict) -> None:
        self._logger.info(
            "epoch %3d | lr %.3e | loss %.4f | mpjpe %.3f | omega %.3f | drift %.2e",
            row["epoch"],
            row["lr"],
            row["loss_total"],
            row["loss_mpjpe"],
            row["omega"],
            row["drift"],
        )

    def callback(self, percent) -> None:
        self._logger.info(f"Processing: {percent}%")

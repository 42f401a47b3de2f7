# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

from __future__ import annotations

import logging
import os
import typing as t

DEFAULT_LOG_FORMAT = "%(asctime)s | %(name)s | %(filename)s:%(lineno)s %(funcName)s() %(message)s"

LOG_LEVELS = {
    "info": logging.INFO,
    "debug": logging.DEBUG,
    "warning": logging.WARNING,
    "error": logging.ERROR,
}


def configure_logging(
    file: t.Union[str, os.PathLike],
    level: str = "info",
    format: str = DEFAULT_LOG_FORMAT,
) -> logging.Handler:
    """Attach a file handler to the hybridloco logger.

    Args:
        file: The path to write the log entries to, truncated on open.
        level: One of info, debug, warning, or error.
        format: The logging format string for each record.

    Returns:
        logging.Handler: The handler that was added, so callers can remove it
        again when a run completes.
    """
    log_level = LOG_LEVELS[level]

    fh = logging.FileHandler(file, mode="w", encoding="utf-8")
    fh.setLevel(log_level)
    fh.setFormatter(logging.Formatter(format))

    package_logger = logging.getLogger("hybridloco")
    package_logger.setLevel(log_level)
    package_logger.addHandler(fh)

    return fh


def remove_logging(handler: logging.Handler) -> None:
    package_logger = logging.getLogger("hybridloco")
    package_logger.removeHandler(handler)
    handler.close()

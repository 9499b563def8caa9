"""
Logging setup
One place that installs the console handler used by the command-line entry points
"""

import logging
from typing import Union

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(level: Union[str, int] = 'INFO'):
    """
    Configure the root logger once for a command-line process

    Args:
        level: Logging level name or number
    """
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.INFO)
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)
    # Keep HTTP client chatter out of run logs
    logging.getLogger('urllib3').setLevel(logging.WARNING)

"""Utils module exports"""

from .constants import format_float, parse_float_list, parse_int_list
from .log import logger, setup_logging

__all__ = ["format_float", "logger", "parse_float_list", "parse_int_list", "setup_logging"]

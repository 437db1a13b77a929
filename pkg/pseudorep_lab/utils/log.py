"""包级日志"""

import logging

logger = logging.getLogger("pseudorep_lab")


def setup_logging(verbose: bool = False) -> None:
    """初始化命令行日志输出（stderr）

    Args:
        verbose: 是否输出 DEBUG 级别
    """
    level = logging.DEBUG if verbose else logging.INFO
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(message)s"))
        logger.addHandler(handler)
    logger.setLevel(level)

"""伪表示数值实验室

Poisson 括号的 C⁰ 行为、伪表示亏量与其反例画廊的可复现数值实验。
"""

__version__ = "0.1.0"

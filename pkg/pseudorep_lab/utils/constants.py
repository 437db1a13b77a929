"""常量和工具函数"""

import math

# 括号符号约定：{H,K} = dH(X_K)，dH = ι_{X_H}ω。
# 取 +1 时，极坐标样例 {F_n, G_n} = +1，且 {q, p} = +1。
BRACKET_SIGN = 1.0

# 网格
DEFAULT_POLAR_RMIN = 0.05
MIN_AXIS_POINTS = 4
DEFAULT_FD_ORDER = 2
FD_ORDERS = (2, 4)

# 有限差分探针
DEFAULT_FD_STEP = 1e-5
PULLBACK_FD_STEP = 1e-4
GRADIENT_CHECK_COUNT = 100
GRADIENT_CHECK_TOL = 1e-6

# 积分器
DEFAULT_DT_INIT = 1e-2
DEFAULT_INTEGRATOR_TOL = 1e-10
DEFAULT_MAX_STEPS = 200_000
SIMPSON_PANELS = 64

# 逃逸区域（每种坐标卡）
ESCAPE_S_MAX = 12.0
ESCAPE_R_MIN = 0.01
ESCAPE_R_MAX = 50.0
ESCAPE_CARTESIAN_MAX = 1e3

# 李代数
DEFAULT_NORM = "max"
NORM_SAMPLE_PAIRS = 10_000
VERTEX_ENUMERATION_MAX_DIM = 8
BRACKET_SAFETY_FACTOR = 2.0
STRUCTURE_TOL = 1e-12

# 伪表示
DEFECT_SAMPLE_PAIRS = 256
DEFAULT_SLACK = 1.5
DEFAULT_ATOL = 1e-4
DEFAULT_DEFECT_TOL = 1e-8
MONOTONE_SLACK = 0.10

# 试验函数与 χ
CHI_SCAN_POINTS = 1_000_000
DEFAULT_CHI_RADIUS = 1.0
SUPPORT_LEAK_RATIO = 1e-9

# 实验与输出
DEFAULT_SEED = 20070720
DEFAULT_N_SET = (1, 4, 16, 64)
OUTPUT_DIR_ENV = "PSEUDOREP_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "pseudorep_output"
GOLDEN_FILE = "goldens.json"
GOLDEN_TOL = 1e-9

# 退出码
EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

# 流与增长证书
ENERGY_DRIFT_FACTOR = 100.0
GROWTH_RADII = 64
GROWTH_ANGLES = 256
SUPERLINEAR_RATIO = 1.25
SEPARABILITY_TOL = 1e-8
GROWTH_A_MAX = 2.2
GROWTH_B_MAX = 0.6

# 极限判定
VERDICTS = (
    "representation_limit",
    "noncompact_caveat",
    "naive_limit_counterexample",
    "not_a_pseudo_representation",
    "inconclusive",
)

# 附录实验
DEGENERATE_JACOBIAN_TOL = 1e-8
COMMUTATOR_TOL = 1e-4
GENERATOR_STEP_TOL = 1e-9

# 分布配对
PAIRING_GRID_POINTS = 481
PROP6_MIN_DECREASE = 2.0


def format_float(value: float) -> str:
    """格式化浮点数（CSV/JSON 使用，保证可复现）

    Args:
        value: 浮点数

    Returns:
        最短往返表示，如 "0.25"、"1e-12"
    """
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def parse_int_list(text: str) -> tuple[int, ...]:
    """解析逗号分隔的整数列表，如 "1,4,16" """
    parts = [p.strip() for p in text.split(",") if p.strip()]
    return tuple(int(p) for p in parts)


def parse_float_list(text: str) -> tuple[float, ...]:
    """解析逗号分隔的浮点列表"""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    return tuple(float(p) for p in parts)

"""异常定义"""


class LabError(Exception):
    """所有数值实验异常的基类"""


class ChartError(LabError, ValueError):
    """坐标卡错误：未知类型、维数非法、坐标卡/网格不匹配、极点奇异"""


class FieldError(LabError, ValueError):
    """场错误：非有限采样值、梯度与差分不一致"""


class FlowEscapeError(LabError):
    """轨道离开逃逸区域（可能不完备）

    Attributes:
        count: 逃逸的起点数量
        point: 第一个逃逸点
        time: 逃逸发生时刻
    """

    def __init__(self, message: str, count: int = 0, point=None, time: float = 0.0):
        super().__init__(message)
        self.count = count
        self.point = point
        self.time = time


class StepUnderflowError(LabError):
    """步长下溢或超过最大步数"""


class AlgebraError(LabError, ValueError):
    """李代数错误：代数不匹配、未知内置代数、结构常数不满足反对称或 Jacobi"""


class GrowthFitError(LabError):
    """检测到超线性增长，无法给出线性增长证书（并不证明不完备）"""


class ConfigError(LabError, ValueError):
    """配置解析或校验失败"""


class SupportLeakWarning(UserWarning):
    """被积函数在非周期边界上不可忽略"""


class DegenerateJacobianWarning(UserWarning):
    """映射的 Jacobi 行列式接近零"""


class UnknownIndexError(LabError, KeyError):
    """序列指标 n 不在配置的 n 序列中"""

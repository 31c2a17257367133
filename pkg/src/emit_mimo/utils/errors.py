"""
錯誤類別 - Error Hierarchy

所有函式庫錯誤皆繼承 EmitError；exit_code 供 CLI 對應結束碼:
2 配置/幾何錯誤, 3 輸入輸出錯誤, 4 數值條件錯誤。
"""


class EmitError(Exception):
    """EMIT 工具箱錯誤基底類別 Base class of toolkit errors"""

    exit_code = 1


class ConfigError(EmitError):
    """場景或配置無效 Invalid scenario or configuration"""

    exit_code = 2


class GeometryError(ConfigError):
    """幾何不變量被違反 Geometric invariant violated (overlap, point inside a disk)"""


class DomainError(EmitError, ValueError):
    """數值參數超出定義域 Numeric argument outside the function domain"""

    exit_code = 2


class SingularityError(DomainError):
    """場點與源點重合 Field point coincides with the source point"""


class FramingError(DomainError):
    """影像位元流與符號框架不符 Bitstream framing does not match the link"""


class UnsupportedRangeError(DomainError):
    """參考解不支援的範圍 Request outside the oracle's supported range"""


class ScenarioIOError(EmitError):
    """檔案無法讀寫或格式錯誤 Unreadable file or malformed format"""

    exit_code = 3


class NumericalError(EmitError):
    """數值計算失敗 Numerical failure"""

    exit_code = 4


class ConditioningError(NumericalError):
    """線性系統病態或殘差過大 Ill-conditioned system or residual above tolerance"""


class DegenerateChannelError(NumericalError):
    """通道或模態場為零 All-zero channel or mode field"""

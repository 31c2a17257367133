"""
工具模組 - Utilities Module

包含配置管理、日誌系統與錯誤類別。
"""

from emit_mimo.utils.config import Config, get_config, update_config
from emit_mimo.utils.errors import (
    ConditioningError,
    ConfigError,
    DegenerateChannelError,
    DomainError,
    EmitError,
    FramingError,
    GeometryError,
    NumericalError,
    ScenarioIOError,
    SingularityError,
    UnsupportedRangeError,
)
from emit_mimo.utils.logger import (
    LoggerMixin,
    get_logger,
    log_execution_time,
    log_matrix_info,
    setup_logger,
)

__all__ = [
    "Config",
    "get_config",
    "update_config",
    "get_logger",
    "setup_logger",
    "LoggerMixin",
    "log_execution_time",
    "log_matrix_info",
    "EmitError",
    "ConfigError",
    "GeometryError",
    "DomainError",
    "SingularityError",
    "FramingError",
    "UnsupportedRangeError",
    "ScenarioIOError",
    "NumericalError",
    "ConditioningError",
    "DegenerateChannelError",
]

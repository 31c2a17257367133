"""
日誌系統模組 - Logging System Module

loguru 為唯一日誌器；控制台輸出經由 Rich 寫到 stderr，stdout 留給 CLI 表格。
"""

import sys
import time
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Dict, Optional, TypeVar

import numpy as np
from loguru import logger
from rich.console import Console

from emit_mimo.utils.config import get_config

F = TypeVar("F", bound=Callable[..., Any])

_console = Console(stderr=True)

_FORMATS: Dict[str, str] = {
    "rich": (
        "<green>{time:HH:mm:ss.SSS}</green> | "
        "<level>{level: <8}</level> | "
        "<cyan>{extra[name]}</cyan> | "
        "<level>{message}</level>"
    ),
    "plain": (
        "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | "
        "{extra[name]}:{function}:{line} | {message}"
    ),
}


def setup_logger(
    level: str = "INFO",
    log_file: Optional[str] = None,
    rotation: str = "10 MB",
    retention: str = "1 week",
    enable_rich: bool = True,
) -> None:
    """
    設置日誌系統

    Args:
        level: 日誌級別
        log_file: 日誌檔案路徑，None 時使用配置中的 log_file
        rotation: 日誌輪轉設定
        retention: 日誌保留時間
        enable_rich: False 時改用純文字 stderr 輸出 (除錯模式)
    """
    logger.remove()
    logger.configure(extra={"name": "emit_mimo"})

    if enable_rich:
        logger.add(
            lambda msg: _console.print(msg, end="", markup=False, highlight=False),
            level=level,
            format=_FORMATS["rich"],
            colorize=False,
        )
    else:
        logger.add(
            sys.stderr,
            level=level,
            format=_FORMATS["plain"],
            colorize=True,
            backtrace=True,
            diagnose=True,
        )

    target = log_file or get_config().log_file
    if target:
        log_path = Path(target)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        # 檔案一律完整記錄，不受控制台級別影響
        logger.add(
            log_path,
            level="DEBUG",
            format=_FORMATS["plain"],
            rotation=rotation,
            retention=retention,
            encoding="utf-8",
        )
        logger.debug(f"日誌檔案設定完成 Log file configured: {log_path}")


def get_logger(name: Optional[str] = None) -> Any:
    """
    獲取綁定名稱的日誌器

    Args:
        name: 通常為 __name__
    """
    return logger.bind(name=name) if name else logger


class LoggerMixin:
    """為其他類別提供 self.logger 的混入類別"""

    @property
    def logger(self) -> Any:
        return get_logger(self.__class__.__name__)


def log_execution_time(func: F) -> F:
    """
    裝飾器：記錄函數執行時間

    最後一次耗時 (秒) 存於 wrapper.last_elapsed，供 CLI 的求解時間與測試使用。
    """
    bound = get_logger(func.__module__)

    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        start = time.perf_counter()
        bound.debug(f"開始執行 Starting: {func.__qualname__}")
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            elapsed = time.perf_counter() - start
            bound.error(
                f"❌ 執行失敗 Failed: {func.__qualname__} after {elapsed:.4f}s - {e}"
            )
            raise
        elapsed = time.perf_counter() - start
        wrapper.last_elapsed = elapsed  # type: ignore[attr-defined]
        bound.info(f"⏱️ 執行完成 Completed: {func.__qualname__} ({elapsed:.4f}s)")
        return result

    wrapper.last_elapsed = 0.0  # type: ignore[attr-defined]
    return wrapper  # type: ignore[return-value]


def log_matrix_info(matrix: np.ndarray, name: str = "matrix") -> None:
    """
    記錄矩陣的形狀、Frobenius 範數與非有限值

    Args:
        matrix: 任意 numpy 陣列
        name: 顯示名稱
    """
    bad = int(np.count_nonzero(~np.isfinite(matrix)))
    if bad:
        logger.warning(f"⚠️ {name} 含 {bad} 個非有限值 {name} has {bad} non-finite entries")
        return
    logger.debug(
        f"{name}: shape {matrix.shape}, dtype {matrix.dtype}, "
        f"‖·‖_F = {np.linalg.norm(matrix):.6g}"
    )


def init_logging() -> None:
    """依全域配置初始化日誌系統"""
    config = get_config()
    setup_logger(
        level=config.log_level, log_file=config.log_file, enable_rich=not config.debug
    )
    logger.debug(f"🚀 EMIT 工具箱啟動 EMIT toolkit started (version {config.version})")


# 自動初始化
if __name__ != "__main__":
    init_logging()

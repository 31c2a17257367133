"""
配置管理模組 - Configuration Management Module

提供 EMIT 工具箱的執行期配置，支援從環境變數、.env 與設定檔載入。
場景幾何 (scenario) 不屬於此處，見 emit_mimo.data.scenario。
"""

from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseSettings, Field, validator

_LOG_LEVELS = ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL")


class Config(BaseSettings):
    """
    專案配置類別

    使用 Pydantic 進行配置驗證和管理，支援從環境變數載入配置。
    數值容差 (cond_limit, residual_tol) 由求解器讀取。
    """

    # 專案基本設定
    project_name: str = Field(
        default="EMIT MIMO Characterization Toolkit", env="PROJECT_NAME"
    )
    version: str = Field(default="1.0.0", env="VERSION")
    debug: bool = Field(default=False, env="DEBUG")

    # 路徑設定
    results_dir: Path = Field(default=Path("results"), env="RESULTS_DIR")
    golden_dir: Path = Field(default=Path("golden"), env="GOLDEN_DIR")
    scenarios_dir: Path = Field(default=Path("scenarios"), env="SCENARIOS_DIR")

    # 輸出設定
    encoding: str = Field(default="utf-8", env="ENCODING")

    # 日誌設定
    log_level: str = Field(default="INFO", env="LOG_LEVEL")
    log_file: Optional[str] = Field(default=None, env="LOG_FILE")

    # 效能設定
    n_jobs: int = Field(default=1, env="N_JOBS", description="並行執行緒數量 worker threads")
    batch_size: int = Field(
        default=65536, env="BATCH_SIZE", description="每個亂數串流的符號數 symbols per RNG stream"
    )
    probe_chunk: int = Field(
        default=1024, env="PROBE_CHUNK", description="場量評估的分塊大小 probe rows per chunk"
    )

    # 數值設定
    cond_limit: float = Field(default=1e12, env="COND_LIMIT", description="條件數上限")
    residual_tol: float = Field(
        default=1e-10, env="RESIDUAL_TOL", description="線性系統殘差上限"
    )
    nmax_floor: int = Field(default=6, env="NMAX_FLOOR", description="截斷階數下限")
    crosstalk_oversampling: int = Field(
        default=8, env="CROSSTALK_OVERSAMPLING", description="串擾取樣倍率"
    )

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = False

    @validator("log_level")
    def _check_log_level(cls, value: str) -> str:
        value = value.upper()
        if value not in _LOG_LEVELS:
            raise ValueError(f"未知的日誌級別 Unknown log level: {value}")
        return value

    @validator(
        "n_jobs", "batch_size", "probe_chunk", "nmax_floor", "crosstalk_oversampling"
    )
    def _check_positive_int(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"必須為正整數 Must be a positive integer: {value}")
        return value

    @validator("cond_limit", "residual_tol")
    def _check_positive_float(cls, value: float) -> float:
        if not value > 0:
            raise ValueError(f"必須為正數 Must be positive: {value}")
        return value

    def get_output_path(self, filename: str, output_type: str = "results") -> Path:
        """
        獲取輸出檔案的完整路徑

        Args:
            filename: 檔案名稱
            output_type: 輸出類型 ('results', 'golden')

        Returns:
            Path: 檔案的完整路徑
        """
        if output_type == "results":
            return self.results_dir / filename
        elif output_type == "golden":
            return self.golden_dir / filename
        else:
            raise ValueError(f"Unknown output type: {output_type}")

    def to_dict(self) -> Dict[str, Any]:
        """將配置轉換為字典"""
        return self.dict()

    @classmethod
    def from_file(cls, config_file: Path) -> "Config":
        """從配置檔案載入配置"""
        config_file = Path(config_file)
        if config_file.suffix == ".json":
            import json

            with open(config_file, "r", encoding="utf-8") as f:
                config_data = json.load(f)
        elif config_file.suffix in [".yml", ".yaml"]:
            import yaml

            with open(config_file, "r", encoding="utf-8") as f:
                config_data = yaml.safe_load(f) or {}
        else:
            raise ValueError(f"Unsupported config file format: {config_file.suffix}")

        return cls(**config_data)


# 全域配置實例
config = Config()


def get_config() -> Config:
    """獲取全域配置實例"""
    return config


def update_config(**kwargs: Any) -> None:
    """更新全域配置"""
    global config
    for key, value in kwargs.items():
        if hasattr(config, key):
            setattr(config, key, value)
        else:
            raise ValueError(f"Unknown config key: {key}")


def load_config_file(config_file: Path) -> Config:
    """以設定檔內容取代全域配置 Replace the global config with a file's contents"""
    global config
    config = Config.from_file(config_file)
    return config

"""共用測試夾具 Shared fixtures"""

from pathlib import Path
from typing import List

import numpy as np
import pytest
from loguru import logger

from emit_mimo.utils import config as config_module
from emit_mimo.utils.config import Config

SMALL_SCENARIO = """\
name: small_pair
description: "two PEC cylinders between 3-element arrays"
frequency_hz: 915.0e6
space: cylinders
tx: {count: [3, 1], pitch_m: 0.1, center_m: [0.0, -0.4]}
rx: {count: [3, 1], pitch_m: 0.1, center_m: [0.0, 0.4]}
scatterer_grid: {rows: 1, cols: 2, pitch_m: 0.1, radius_m: 0.015}
probes:
  grid: {x_range_m: [-0.2, 0.2], y_range_m: [-0.2, 0.2], nx: 11, ny: 11}
chi: 0.5
p0: 1.0
seed: 7
mode_count: 2
"""

FREE_SPACE_SCENARIO = """\
name: free_pair
frequency_hz: 3.0e9
space: free_space_3d
tx: {count: [3, 3], pitch_m: 0.05, center_m: [0.0, 0.0, 0.0]}
rx: {count: [3, 3], pitch_m: 0.05, center_m: [0.0, 0.0, 0.5]}
"""


@pytest.fixture(autouse=True)
def restore_config():
    """每個測試後還原全域配置"""
    saved = config_module.config.dict()
    yield
    config_module.config = Config(**saved)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20231)


@pytest.fixture
def log_messages() -> List[str]:
    """收集 WARNING 以上的日誌訊息"""
    messages: List[str] = []
    handler_id = logger.add(
        lambda message: messages.append(message.record["message"]), level="WARNING"
    )
    yield messages
    logger.remove(handler_id)


@pytest.fixture
def small_scenario_file(tmp_path: Path) -> Path:
    path = tmp_path / "small_pair.yaml"
    path.write_text(SMALL_SCENARIO, encoding="utf-8")
    return path


@pytest.fixture
def free_space_scenario_file(tmp_path: Path) -> Path:
    path = tmp_path / "free_pair.yaml"
    path.write_text(FREE_SPACE_SCENARIO, encoding="utf-8")
    return path

"""
輸出模組 - Artifact Exporters

CSV (UTF-8、表頭、'.' 小數點、LF 換行) 與二進位 PGM (P5, maxval 255) 讀寫。
"""

from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from emit_mimo.physics.fieldmap import FieldMap
from emit_mimo.utils.config import get_config
from emit_mimo.utils.errors import ScenarioIOError
from emit_mimo.utils.logger import LoggerMixin

PathLike = Union[str, Path]

PGM_MAGIC = b"P5"
PGM_MAXVAL = 255


def write_csv(
    frame: pd.DataFrame, path: PathLike, encoding: Optional[str] = None
) -> Path:
    """寫出 CSV，不含索引欄"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(
            path,
            index=False,
            encoding=encoding or get_config().encoding,
            lineterminator="\n",
        )
    except OSError as exc:
        raise ScenarioIOError(f"無法寫入 Cannot write {path}: {exc}") from exc
    return path


def read_csv(path: PathLike, encoding: Optional[str] = None) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise ScenarioIOError(f"找不到檔案 File not found: {path}")
    return pd.read_csv(path, encoding=encoding or get_config().encoding)


def write_pgm(image: np.ndarray, path: PathLike) -> Path:
    """
    寫出二進位 PGM

    Args:
        image: (rows, cols) uint8
    """
    image = np.asarray(image)
    if image.ndim != 2 or image.dtype != np.uint8:
        raise ScenarioIOError(
            f"PGM 需要二維 uint8 影像 PGM needs a 2-D uint8 image, "
            f"got {image.dtype} {image.shape}"
        )
    path = Path(path)
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n{PGM_MAXVAL}\n".encode("ascii")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(header + np.ascontiguousarray(image).tobytes())
    except OSError as exc:
        raise ScenarioIOError(f"無法寫入 Cannot write {path}: {exc}") from exc
    return path


def _tokens(data: bytes, count: int) -> Tuple[List[bytes], int]:
    """讀取 count 個以空白分隔的表頭欄位 (支援 # 註解)"""
    tokens: List[bytes] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ScenarioIOError("PGM 表頭不完整 Truncated PGM header")
        tokens.append(data[start:pos])
    # 表頭後恰好一個空白字元
    return tokens, pos + 1


def read_pgm(path: PathLike) -> np.ndarray:
    """
    讀取二進位 PGM (P5, maxval ≤ 255)

    Raises:
        ScenarioIOError: 檔案不存在、格式錯誤或資料長度不符
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ScenarioIOError(f"無法讀取影像 Cannot read image {path}: {exc}") from exc

    tokens, offset = _tokens(data, 4)
    magic, width, height, maxval = tokens
    if magic != PGM_MAGIC:
        raise ScenarioIOError(f"不是二進位 PGM Not a binary PGM (magic {magic!r}): {path}")
    try:
        cols, rows, depth = int(width), int(height), int(maxval)
    except ValueError as exc:
        raise ScenarioIOError(f"PGM 表頭無效 Invalid PGM header in {path}") from exc
    if cols < 1 or rows < 1 or not (0 < depth <= PGM_MAXVAL):
        raise ScenarioIOError(
            f"不支援的 PGM 尺寸或深度 Unsupported PGM {cols}×{rows}, maxval {depth}"
        )
    payload = data[offset : offset + rows * cols]
    if len(payload) != rows * cols:
        raise ScenarioIOError(
            f"PGM 資料長度不符 PGM payload too short: "
            f"{len(payload)} of {rows * cols} bytes"
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(rows, cols).copy()


class ArtifactWriter(LoggerMixin):
    """
    將一次執行的結果寫入輸出目錄 Writes one run's artifacts into an output directory

    記錄已寫出的檔案，供 CLI 摘要表使用。
    """

    def __init__(self, out_dir: PathLike, encoding: Optional[str] = None):
        self.out_dir = Path(out_dir)
        self.encoding = encoding or get_config().encoding
        self.written: Dict[str, Path] = {}

    def _target(self, name: str) -> Path:
        return self.out_dir / name

    def csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = write_csv(frame, self._target(name), self.encoding)
        self.written[name] = path
        self.logger.info(f"💾 已寫出 Saved {path} ({len(frame)} rows)")
        return path

    def pgm(self, name: str, image: np.ndarray) -> Path:
        path = write_pgm(image, self._target(name))
        self.written[name] = path
        self.logger.info(f"🖼️ 已寫出 Saved {path} ({image.shape[1]}×{image.shape[0]})")
        return path

    def field_map(self, stem: str, field_map: FieldMap) -> Dict[str, Path]:
        """場分布：CSV 一定寫出，網格取樣另寫 PGM"""
        paths = {"csv": self.csv(f"{stem}.csv", field_map.to_frame())}
        if field_map.grid_shape is not None:
            paths["pgm"] = self.pgm(f"{stem}.pgm", field_map.to_gray())
        return paths

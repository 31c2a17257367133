"""
資料模組 - Data Module

負責場景檔的載入驗證，以及 CSV / PGM 輸出。
"""

from emit_mimo.data.exporters import ArtifactWriter, read_pgm, write_csv, write_pgm

__all__ = ["ArtifactWriter", "read_pgm", "write_csv", "write_pgm"]

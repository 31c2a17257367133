"""
驗證模組 - Validation Module

與生產路徑獨立的參考解，產生 golden/ 下的參考檔。
"""

"""
異常處理模組
"""
from typing import Optional


class RQControlError(Exception):
    """Base class for all rate-control errors."""
    pass

class DomainError(RQControlError, ValueError):
    """數值超出定義域 (non-positive rate, quality out of range, non-invertible params)."""
    pass

class DegenerateFitError(RQControlError):
    """Least-squares fit has fewer than two distinct rates or a degenerate slope."""
    pass

class UndefinedScoreError(RQControlError):
    """Goodness-of-fit is undefined (zero quality variance)."""
    pass

class TrainingError(RQControlError):
    """迴歸器訓練失敗"""
    pass

class ContractError(RQControlError):
    """An operation was called outside its contract."""
    pass

class ConfigError(RQControlError):
    """實驗設定錯誤"""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)

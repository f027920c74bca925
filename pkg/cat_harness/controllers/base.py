"""
コントローラーの基底クラス
"""
from abc import ABC, abstractmethod

from ..models.harness_settings import HarnessConfig
from ..services.error_handling import ErrorHandlingService
from ..services.logging_config import get_harness_logger


class BaseController(ABC):
    """設定・ロガー・エラーサービスを持つコントローラーの基底クラス

    サブクラスは _setup() を実装する。initialize() は一度だけ _setup() を呼び、
    失敗した場合はエラーサービスに記録して再送出する。
    """

    def __init__(self, config: HarnessConfig, logger_name: str = "controller"):
        self.config = config
        self.error_service = ErrorHandlingService()
        self.logger = get_harness_logger(logger_name)
        self._initialized = False

    @abstractmethod
    def _setup(self) -> None:
        """コントローラー固有の初期化"""

    def initialize(self) -> None:
        if self._initialized:
            return
        name = type(self).__name__
        try:
            self._setup()
        except Exception as e:
            self.error_service.handle_general_error(e, f"{name} initialization")
            raise
        self._initialized = True
        self.logger.debug(f"{name} を初期化しました")

    @property
    def is_initialized(self) -> bool:
        return self._initialized

    def _require_initialized(self) -> None:
        if not self._initialized:
            self.initialize()

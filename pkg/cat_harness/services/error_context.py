"""
エラーハンドリングのコンテキスト管理とヘルパー関数
"""
import functools
from contextlib import contextmanager
from typing import Any, Callable

from .error_handling import (
    ConfigurationError,
    DatabaseValidationError,
    ErrorHandlingService,
    HarnessError,
    IoFailure,
    PolicyFault,
    PolicyLoadError,
    ScenarioSyntaxError,
    UnknownToken,
)


class ErrorContext:
    """ハーネス操作ごとのエラーコンテキスト"""

    def __init__(self):
        self.error_service = ErrorHandlingService()

    @contextmanager
    def scenario_simulation(self, scenario_id: str = ""):
        """1シナリオのシミュレーション

        PolicyFaultはそのまま再送出し、それ以外の例外は記録して再送出する。
        """
        try:
            yield
        except PolicyFault as e:
            self.error_service.handle_policy_fault(e)
            raise
        except Exception as e:
            self.error_service.handle_scenario_error(e, scenario_id)
            raise

    @contextmanager
    def scenario_language(self):
        """シナリオ記述言語の処理"""
        try:
            yield
        except (ScenarioSyntaxError, UnknownToken) as e:
            self.error_service.handle_language_error(e)
            raise

    @contextmanager
    def database_operation(self, file_path: str = ""):
        """シナリオデータベースの読み書き"""
        try:
            yield
        except DatabaseValidationError as e:
            self.error_service.handle_database_error(e)
            raise
        except (OSError, ValueError, KeyError, TypeError) as e:
            db_error = DatabaseValidationError(f"データベース操作エラー: {e}", file_path=file_path)
            self.error_service.handle_database_error(db_error)
            raise db_error from e

    @contextmanager
    def report_export(self, file_path: str = "", format_type: str = ""):
        """レポート成果物の書き出し"""
        try:
            yield
        except IoFailure as e:
            self.error_service.handle_io_failure(e)
            raise
        except (OSError, ValueError) as e:
            io_error = IoFailure(str(e), file_path, format_type)
            self.error_service.handle_io_failure(io_error)
            raise io_error from e

    @contextmanager
    def policy_operation(self, policy_name: str = "", plugin_path: str = ""):
        """ポリシー・プラグインの読み込み"""
        try:
            yield
        except PolicyLoadError as e:
            self.error_service.handle_policy_error(e)
            raise
        except Exception as e:
            policy_error = PolicyLoadError(str(e), policy_name, plugin_path)
            self.error_service.handle_policy_error(policy_error)
            raise policy_error from e

    @contextmanager
    def config_loading(self, key: str = ""):
        """設定ファイルの読み込み"""
        try:
            yield
        except ConfigurationError as e:
            self.error_service.handle_configuration_error(e)
            raise
        except (OSError, ValueError, KeyError, TypeError) as e:
            config_error = ConfigurationError(f"設定の読み込みに失敗しました: {e}", key)
            self.error_service.handle_configuration_error(config_error)
            raise config_error from e

    @contextmanager
    def general_operation(self, context: str = ""):
        """一般的な操作のエラーコンテキスト"""
        try:
            yield
        except Exception as e:
            self.error_service.handle_general_error(e, context)
            raise


# グローバルなエラーコンテキストインスタンス
error_context = ErrorContext()


def handle_database_errors(file_path: str = ""):
    """データベースエラーを処理するデコレータ"""
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            with error_context.database_operation(file_path):
                return func(*args, **kwargs)
        return wrapper
    return decorator


def handle_export_errors(format_type: str = ""):
    """成果物出力エラーを処理するデコレータ"""
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            with error_context.report_export(format_type=format_type):
                return func(*args, **kwargs)
        return wrapper
    return decorator


def safe_execute(func: Callable, *args, default_return=None, context: str = "", **kwargs) -> Any:
    """関数を実行し、ハーネスエラーが発生した場合はデフォルト値を返す"""
    try:
        with error_context.general_operation(context):
            return func(*args, **kwargs)
    except HarnessError:
        return default_return

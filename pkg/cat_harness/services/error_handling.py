"""
評価ハーネス用のエラーハンドリングサービス
"""
import logging
import threading
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence, Tuple


class HarnessError(Exception):
    """ハーネスで発生する全ての例外の基底クラス"""
    pass


class ScenarioSyntaxError(HarnessError):
    """シナリオ記述言語の構文エラー"""

    def __init__(self, message: str, source: str = "<string>", line: int = 0, column: int = 0):
        super().__init__(f"{source}:{line}:{column}: {message}")
        self.reason = message
        self.source = source
        self.line = line
        self.column = column


class UnknownToken(HarnessError):
    """語彙に存在しないトークン"""

    def __init__(self, token: str, category: str, source: str = "<string>",
                 line: int = 0, column: int = 0):
        super().__init__(f"{source}:{line}:{column}: unknown {category} token '{token}'")
        self.token = token
        self.category = category
        self.source = source
        self.line = line
        self.column = column


class UnmappedConflict(HarnessError):
    """(conflict_type, partner) に対応するセーフティグループが無い"""

    def __init__(self, conflict_type: str, partner: str):
        super().__init__(f"no safety group rule for ({conflict_type}, {partner})")
        self.conflict_type = conflict_type
        self.partner = partner


class UnmappedPair(HarnessError):
    """実現可能性ルール表に存在しない組み合わせ"""

    def __init__(self, ego_maneuver: str, actor_maneuver: str, placement: str):
        super().__init__(
            f"feasibility rule missing for ({ego_maneuver}, {actor_maneuver}, {placement})")
        self.ego_maneuver = ego_maneuver
        self.actor_maneuver = actor_maneuver
        self.placement = placement


class EmptyRange(HarnessError):
    """パラメータ範囲が空、またはステップが不正"""

    def __init__(self, parameter: str, minimum: float, maximum: float, step: float):
        super().__init__(
            f"parameter '{parameter}' has an empty range: min={minimum}, max={maximum}, step={step}")
        self.parameter = parameter
        self.minimum = minimum
        self.maximum = maximum
        self.step = step


class LayoutUnavailable(HarnessError):
    """レイアウトライブラリに存在しないレイアウトクラス"""

    def __init__(self, layout_class: str):
        super().__init__(f"layout class '{layout_class}' is not in the layout library")
        self.layout_class = layout_class


class PolicyFault(HarnessError):
    """ポリシーが非有限のコマンドを返した"""

    def __init__(self, scenario_id: str, time: float, command: Any = None):
        super().__init__(f"policy returned a non-finite command in '{scenario_id}' at t={time:.3f}s")
        self.scenario_id = scenario_id
        self.time = time
        self.command = command


class PointOutsideFootprint(HarnessError):
    """接触点が自車フットプリントの外側にある"""

    def __init__(self, point: Tuple[float, float]):
        super().__init__(f"contact point {point} lies outside the ego footprint")
        self.point = point


class DegenerateSpeed(HarnessError):
    """速度ゼロでは回避操舵を計画できない"""

    def __init__(self, speed: float = 0.0):
        super().__init__(f"swerve planning requires a positive speed, got {speed}")
        self.speed = speed


class NonPositiveIntercept(HarnessError):
    """応答時間モデルの切片が正でない"""

    def __init__(self, intercept: float, delta: float):
        super().__init__(f"intercept {intercept} + delta {delta} is not positive")
        self.intercept = intercept
        self.delta = delta


class SeparatingBodies(HarnessError):
    """接触法線方向の接近速度が正でない"""

    def __init__(self, closing_speed: float):
        super().__init__(f"bodies are separating (closing speed {closing_speed:.6g} m/s)")
        self.closing_speed = closing_speed


class NotVruClass(HarnessError):
    """VRUリスク曲線に車両クラスが渡された"""

    def __init__(self, kind: Any):
        super().__init__(f"{kind} is not a VRU or motorcyclist class")
        self.kind = kind


class DegenerateGroup(HarnessError):
    """z検定が定義できないグループ"""

    def __init__(self, group_id: str, reason: str):
        super().__init__(f"group '{group_id}' is degenerate: {reason}")
        self.group_id = group_id
        self.reason = reason


class UnmatchedScenario(HarnessError):
    """シミュレーションとテストトラックの記録が対応しない"""

    def __init__(self, scenario_ids: Sequence[str]):
        ids = sorted(scenario_ids)
        super().__init__(f"unmatched scenario ids: {', '.join(ids)}")
        self.scenario_ids = ids


class DatabaseMismatch(HarnessError):
    """異なるデータベース版のレポートを比較しようとした"""

    def __init__(self, hash_a: str, hash_b: str):
        if hash_a and hash_b:
            message = f"reports use different scenario databases ({hash_a[:12]} vs {hash_b[:12]})"
        else:
            message = "report has no scenario database hash; cannot compare releases"
        super().__init__(message)
        self.hash_a = hash_a
        self.hash_b = hash_b


class IoFailure(HarnessError):
    """成果物の書き込みに失敗した"""

    def __init__(self, message: str, file_path: str = "", format_type: str = ""):
        super().__init__(message)
        self.file_path = file_path
        self.format_type = format_type


class ConfigurationError(HarnessError):
    """設定値が不正"""

    def __init__(self, message: str, key: str = ""):
        super().__init__(message)
        self.key = key


class DatabaseValidationError(HarnessError):
    """シナリオデータベースの検証に失敗した"""

    def __init__(self, message: str, violations: Optional[List[Any]] = None, file_path: str = ""):
        super().__init__(message)
        self.violations = list(violations or [])
        self.file_path = file_path


class PolicyLoadError(HarnessError):
    """ポリシーまたはプラグインの読み込みに失敗した"""

    def __init__(self, message: str, policy_name: str = "", plugin_path: str = ""):
        super().__init__(message)
        self.policy_name = policy_name
        self.plugin_path = plugin_path


class ErrorHandlingService:
    """ハーネスのエラーを記録・ログ出力するサービス"""

    _instance = None
    _instance_lock = threading.Lock()

    def __new__(cls):
        """シングルトンパターンの実装"""
        with cls._instance_lock:
            if cls._instance is None:
                cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        """エラーハンドリングサービスを初期化"""
        if hasattr(self, '_initialized'):
            return
        self._initialized = True

        self.logger = logging.getLogger('cat_harness.error_handling')
        self.error_count = 0
        self.error_history: List[Dict[str, Any]] = []
        self._lock = threading.Lock()

    def _record_error(self, error_type: str, message: str, details: Dict[str, Any] = None) -> None:
        """エラーを記録"""
        with self._lock:
            self.error_count += 1
            self.error_history.append({
                'timestamp': datetime.now(),
                'type': error_type,
                'message': message,
                'details': details or {},
                'count': self.error_count
            })

            # 履歴を最新100件に制限
            if len(self.error_history) > 100:
                self.error_history = self.error_history[-100:]

    def handle_policy_fault(self, ex: PolicyFault) -> None:
        """ポリシー異常を処理（シナリオは判定不能として扱う）"""
        details = {'scenario_id': ex.scenario_id, 'time': ex.time}
        self.logger.error(f"ポリシー異常 - シナリオ: {ex.scenario_id}, 時刻: {ex.time:.3f}s")
        self._record_error('PolicyFault', str(ex), details)

    def handle_scenario_error(self, ex: Exception, scenario_id: str = "") -> None:
        """シナリオ処理中のエラーを処理"""
        details = {'scenario_id': scenario_id, 'exception_type': type(ex).__name__}
        self.logger.error(f"シナリオエラー - シナリオ: {scenario_id}, エラー: {ex}")
        self._record_error('Scenario', str(ex), details)

    def handle_language_error(self, ex: HarnessError) -> None:
        """シナリオ記述言語のエラーを処理"""
        error_type = 'ScenarioSyntax' if isinstance(ex, ScenarioSyntaxError) else 'UnknownToken'
        self.logger.error(f"シナリオ言語エラー ({error_type}): {ex}")
        self._record_error(error_type, str(ex))

    def handle_database_error(self, ex: DatabaseValidationError) -> None:
        """データベース検証エラーを処理"""
        details = {'file_path': ex.file_path, 'violations': len(ex.violations)}
        self.logger.error(f"データベースエラー - パス: {ex.file_path}, 違反数: {len(ex.violations)}, エラー: {ex}")
        self._record_error('Database', str(ex), details)

    def handle_policy_error(self, ex: PolicyLoadError) -> None:
        """ポリシー読み込みエラーを処理"""
        details = {'policy_name': ex.policy_name, 'plugin_path': ex.plugin_path}
        self.logger.error(f"ポリシーエラー - 名前: {ex.policy_name}, パス: {ex.plugin_path}, エラー: {ex}")
        self._record_error('PolicyLoad', str(ex), details)

    def handle_io_failure(self, ex: IoFailure) -> None:
        """成果物出力エラーを処理"""
        details = {'file_path': ex.file_path, 'format_type': ex.format_type}
        self.logger.error(f"出力エラー - ファイル: {ex.file_path}, 形式: {ex.format_type}, エラー: {ex}")
        self._record_error('IoFailure', str(ex), details)

    def handle_configuration_error(self, ex: ConfigurationError) -> None:
        """設定エラーを処理"""
        self.logger.error(f"設定エラー - キー: {ex.key}, エラー: {ex}")
        self._record_error('Configuration', str(ex), {'key': ex.key})

    def handle_general_error(self, ex: Exception, context: str = "") -> None:
        """一般的なエラーを処理"""
        details = {'context': context, 'exception_type': type(ex).__name__}
        self.logger.error(f"一般エラー - コンテキスト: {context}, エラー: {ex}", exc_info=True)
        self._record_error('General', str(ex), details)

    def get_error_statistics(self) -> Dict[str, Any]:
        """エラー統計を取得"""
        with self._lock:
            if not self.error_history:
                return {'total_errors': 0, 'error_types': {}}

            error_types: Dict[str, int] = {}
            for error in self.error_history:
                error_types[error['type']] = error_types.get(error['type'], 0) + 1

            return {
                'total_errors': self.error_count,
                'error_types': error_types,
                'recent_errors': list(self.error_history[-10:])
            }

    def clear_error_history(self) -> None:
        """エラー履歴をクリア"""
        with self._lock:
            self.error_history.clear()
            self.error_count = 0
        self.logger.info("エラー履歴がクリアされました")

    def export_error_log(self, file_path: str) -> bool:
        """エラーログをファイルにエクスポート"""
        try:
            with open(file_path, 'w', encoding='utf-8') as f:
                f.write("cat-harness error report\n")
                f.write(f"generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n")
                f.write(f"total errors: {self.error_count}\n\n")

                for i, error in enumerate(self.error_history, 1):
                    f.write(f"error #{i}\n")
                    f.write(f"time: {error['timestamp'].strftime('%Y-%m-%d %H:%M:%S')}\n")
                    f.write(f"type: {error['type']}\n")
                    f.write(f"message: {error['message']}\n")
                    if error['details']:
                        f.write(f"details: {error['details']}\n")
                    f.write("-" * 50 + "\n")

            self.logger.info(f"エラーログが {file_path} にエクスポートされました")
            return True
        except OSError as e:
            self.logger.error(f"エラーログのエクスポートに失敗: {e}")
            return False

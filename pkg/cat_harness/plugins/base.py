"""
ポリシープラグインの基底クラスとマネージャー。
外部の .py ファイルから評価対象ポリシーを読み込み、ポリシーレジストリに登録します。
"""
import importlib.util
import sys
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Set

from ..policies.base import EgoPolicy, PolicyRegistry, policy_registry
from ..services.error_context import error_context
from ..services.error_handling import PolicyLoadError
from ..services.logging_config import get_harness_logger


@dataclass
class PluginMetadata:
    """ポリシープラグインのメタデータ。"""
    name: str
    version: str
    author: str
    description: str
    dependencies: List[str] = field(default_factory=list)


class PolicyPlugin(ABC):
    """ポリシープラグインの抽象基底クラス。"""

    @property
    @abstractmethod
    def metadata(self) -> PluginMetadata:
        """このプラグインのメタデータを取得。"""
        pass

    @property
    @abstractmethod
    def policy_class(self) -> type:
        """このプラグインが提供する EgoPolicy のサブクラス。"""
        pass

    def initialize(self) -> bool:
        """
        プラグインを初期化。読み込み時に呼び出される。

        Returns:
            初期化が成功した場合True
        """
        return True

    def cleanup(self) -> None:
        """アンロード時にリソースを解放。"""
        pass


class PluginManager:
    """ポリシープラグインの発見・読み込み・アンロードを管理。"""

    def __init__(self, registry: Optional[PolicyRegistry] = None):
        self.registry = registry or policy_registry
        self.logger = get_harness_logger("plugins")
        self._loaded_plugins: Dict[str, PolicyPlugin] = {}
        self._policy_names: Dict[str, str] = {}
        self._plugin_paths: List[str] = []
        self._disabled_plugins: Set[str] = set()
        self._plugin_errors: Dict[str, str] = {}

    def add_plugin_path(self, path: str) -> None:
        """プラグインを検索するディレクトリを追加。"""
        if path not in self._plugin_paths:
            self._plugin_paths.append(path)

    def discover_plugins(self) -> List[str]:
        """
        プラグインパスから .py ファイルを発見（名前順）。

        Returns:
            発見されたプラグインファイルのパスのリスト
        """
        plugin_files = []
        for plugin_path in self._plugin_paths:
            path_obj = Path(plugin_path)
            if not path_obj.is_dir():
                self.logger.warning(f"プラグインディレクトリが見つかりません: {plugin_path}")
                continue
            plugin_files.extend(str(p) for p in sorted(path_obj.glob("*.py")) if p.name != "__init__.py")
        return plugin_files

    def load_plugin_from_file(self, file_path: str) -> bool:
        """
        ファイルからプラグインを読み込み。

        Returns:
            読み込みに成功した場合True（失敗は記録してFalse）
        """
        try:
            with error_context.policy_operation(plugin_path=file_path):
                path = Path(file_path)
                module_name = f"cat_harness_plugin_{path.stem}"
                spec = importlib.util.spec_from_file_location(module_name, path)
                if spec is None or spec.loader is None:
                    raise PolicyLoadError(f"cannot read plugin spec: {file_path}", plugin_path=file_path)

                module = importlib.util.module_from_spec(spec)
                sys.modules[module_name] = module
                spec.loader.exec_module(module)

                plugin_classes = [
                    attr for attr in vars(module).values()
                    if isinstance(attr, type) and issubclass(attr, PolicyPlugin) and attr is not PolicyPlugin
                ]
                if not plugin_classes:
                    raise PolicyLoadError(f"no PolicyPlugin subclass in {file_path}", plugin_path=file_path)

                for plugin_class in plugin_classes:
                    self.load_plugin(plugin_class, file_path)
            self._plugin_errors.pop(file_path, None)
            return True
        except PolicyLoadError as e:
            self._plugin_errors[file_path] = str(e)
            return False

    def load_all_plugins(self) -> Dict[str, bool]:
        """
        すべてのプラグインパスから読み込み。

        Returns:
            ファイルパスと読み込み結果の辞書
        """
        return {path: self.load_plugin_from_file(path) for path in self.discover_plugins()}

    def load_plugin(self, plugin_class: type, plugin_path: str = "") -> bool:
        """
        プラグインクラスを検証・初期化し、ポリシーをレジストリに登録。

        Returns:
            登録した場合True、無効化済み・読み込み済みの場合False

        Raises:
            PolicyLoadError: 検証または初期化に失敗した場合
        """
        plugin = plugin_class()
        metadata = plugin.metadata
        if metadata.name in self._disabled_plugins or metadata.name in self._loaded_plugins:
            return False

        policy_name = self._validate_plugin(plugin, plugin_path)
        if not plugin.initialize():
            raise PolicyLoadError(f"plugin initialization failed: {metadata.name}", policy_name, plugin_path)

        self.registry.register(plugin.policy_class)
        self._loaded_plugins[metadata.name] = plugin
        self._policy_names[metadata.name] = policy_name
        self.logger.info(f"プラグインを読み込みました: {metadata.name} v{metadata.version} (policy '{policy_name}')")
        return True

    def _validate_plugin(self, plugin: PolicyPlugin, plugin_path: str) -> str:
        """メタデータとポリシークラスを検証し、ポリシー名を返す"""
        metadata = plugin.metadata
        for key in ("name", "version", "author"):
            if not getattr(metadata, key, "").strip():
                raise PolicyLoadError(f"plugin metadata '{key}' is empty", plugin_path=plugin_path)

        policy_class = plugin.policy_class
        if not (isinstance(policy_class, type) and issubclass(policy_class, EgoPolicy)):
            raise PolicyLoadError(f"{metadata.name}: policy_class must be an EgoPolicy subclass",
                                  plugin_path=plugin_path)
        try:
            name = policy_class().name
        except Exception as e:
            raise PolicyLoadError(f"{metadata.name}: policy cannot be instantiated: {e}",
                                  plugin_path=plugin_path) from e
        if name in self.registry and name not in self._policy_names.values():
            raise PolicyLoadError(f"policy name '{name}' is already registered", name, plugin_path)
        return name

    def unload_plugin(self, plugin_name: str) -> bool:
        """名前でプラグインをアンロードし、ポリシーの登録を解除。"""
        plugin = self._loaded_plugins.pop(plugin_name, None)
        if plugin is None:
            return False
        self.registry.unregister(self._policy_names.pop(plugin_name))
        plugin.cleanup()
        self.logger.info(f"プラグインをアンロードしました: {plugin_name}")
        return True

    def get_loaded_plugins(self) -> List[str]:
        return sorted(self._loaded_plugins)

    def get_plugin_info(self, plugin_name: str) -> Optional[PluginMetadata]:
        plugin = self._loaded_plugins.get(plugin_name)
        return plugin.metadata if plugin is not None else None

    def get_plugin_errors(self) -> Dict[str, str]:
        """ファイルパスとエラーメッセージの辞書"""
        return self._plugin_errors.copy()

    def disable_plugin(self, plugin_name: str) -> None:
        """プラグインを無効化（読み込み済みならアンロード）。"""
        self._disabled_plugins.add(plugin_name)
        self.unload_plugin(plugin_name)

    def enable_plugin(self, plugin_name: str) -> None:
        self._disabled_plugins.discard(plugin_name)


# グローバルプラグインマネージャー
plugin_manager = PluginManager()

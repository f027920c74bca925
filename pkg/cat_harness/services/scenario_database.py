"""
シナリオデータベースの保存・読み込み

データベースはディレクトリで、concrete シナリオをセーフティグループごとのサブディレクトリに
1シナリオ1ファイル（JSON）で保存する。テストリクエストは test_requests.json に保存する。
"""

import hashlib
import json
from pathlib import Path
from typing import Dict, Iterable, List, Optional

from ..models.data_models import ConcreteScenario, TestRequest, ValidationReport
from ..models.taxonomy import SafetyGroupRegistry
from .error_context import error_context
from .error_handling import DatabaseValidationError
from .logging_config import get_harness_logger
from .scenario_validation import validate_concrete


class ScenarioDatabase:
    """ディレクトリ形式のシナリオデータベース"""

    SCENARIO_FILE_EXTENSION = ".json"
    TEST_REQUESTS_FILE = "test_requests.json"
    DATABASE_VERSION = "1.0"

    def __init__(self, root: str):
        """
        Args:
            root: データベースのディレクトリ
        """
        self.root = Path(root)
        self.logger = get_harness_logger("database")

    def scenario_path(self, scenario: ConcreteScenario) -> Path:
        group = scenario.safety_group or "_unassigned"
        return self.root / group / f"{scenario.id}{self.SCENARIO_FILE_EXTENSION}"

    def write(self, scenarios: Iterable[ConcreteScenario], test_requests: Iterable[TestRequest] = (),
              append: bool = False) -> int:
        """シナリオとテストリクエストを書き込む

        append が False の場合は前回生成したシナリオとテストリクエストを消してから書く。
        True の場合は既存の内容に追加する（同じ id は上書き）。

        Returns:
            書き込んだシナリオ数

        Raises:
            DatabaseValidationError: id が重複している、または書き込みに失敗した場合
        """
        with error_context.database_operation(str(self.root)):
            scenarios = list(scenarios)
            ids = [s.id for s in scenarios]
            duplicates = sorted({i for i in ids if ids.count(i) > 1})
            if duplicates:
                raise DatabaseValidationError(f"duplicate scenario ids: {duplicates}", duplicates, str(self.root))

            if not append:
                self.clear()
            self.root.mkdir(parents=True, exist_ok=True)
            for scenario in scenarios:
                path = self.scenario_path(scenario)
                path.parent.mkdir(parents=True, exist_ok=True)
                data = {"version": self.DATABASE_VERSION, **scenario.to_dict()}
                with open(path, 'w', encoding='utf-8') as f:
                    json.dump(data, f, indent=2, ensure_ascii=False, sort_keys=True)

            requests = {r.id: r for r in self.load_test_requests()}
            requests.update({r.id: r for r in test_requests})
            with open(self.root / self.TEST_REQUESTS_FILE, 'w', encoding='utf-8') as f:
                json.dump([requests[k].to_dict() for k in sorted(requests)], f, indent=2, ensure_ascii=False)

        self.logger.info(f"{len(scenarios)} 件のシナリオを保存しました: {self.root}")
        return len(scenarios)

    def clear(self) -> int:
        """シナリオファイルとテストリクエストを削除する（それ以外のファイルは残す）

        Returns:
            削除したシナリオ数
        """
        files = self.scenario_files()
        with error_context.database_operation(str(self.root)):
            for path in files:
                path.unlink()
            for group_dir in {path.parent for path in files}:
                if not any(group_dir.iterdir()):
                    group_dir.rmdir()
            (self.root / self.TEST_REQUESTS_FILE).unlink(missing_ok=True)
        if files:
            self.logger.info(f"前回のシナリオ {len(files)} 件を削除しました: {self.root}")
        return len(files)

    def scenario_files(self) -> List[Path]:
        if not self.root.is_dir():
            return []
        return sorted(p for p in self.root.glob(f"*/*{self.SCENARIO_FILE_EXTENSION}") if p.is_file())

    def load(self) -> List[ConcreteScenario]:
        """全シナリオを id 順で読み込む

        Raises:
            DatabaseValidationError: ディレクトリが無い、ファイルが壊れている、または id が重複する場合
        """
        if not self.root.is_dir():
            raise DatabaseValidationError(f"scenario database not found: {self.root}", file_path=str(self.root))

        scenarios: Dict[str, ConcreteScenario] = {}
        for path in self.scenario_files():
            with error_context.database_operation(str(path)):
                with open(path, 'r', encoding='utf-8') as f:
                    scenario = ConcreteScenario.from_dict(json.load(f))
            if scenario.id in scenarios:
                raise DatabaseValidationError(f"duplicate scenario id '{scenario.id}'", [scenario.id], str(path))
            scenarios[scenario.id] = scenario
        return [scenarios[key] for key in sorted(scenarios)]

    def load_test_requests(self) -> List[TestRequest]:
        path = self.root / self.TEST_REQUESTS_FILE
        if not path.exists():
            return []
        with error_context.database_operation(str(path)):
            with open(path, 'r', encoding='utf-8') as f:
                return [TestRequest.from_dict(item) for item in json.load(f)]

    def content_hash(self) -> str:
        """データベース内容の SHA-256（相対パスとファイル内容から計算）"""
        digest = hashlib.sha256()
        files = self.scenario_files()
        requests = self.root / self.TEST_REQUESTS_FILE
        if requests.exists():
            files.append(requests)
        for path in files:
            digest.update(path.relative_to(self.root).as_posix().encode("utf-8"))
            digest.update(b"\0")
            digest.update(path.read_bytes())
        return digest.hexdigest()

    def validate(self, registry: SafetyGroupRegistry,
                 scenarios: Optional[List[ConcreteScenario]] = None) -> List[ConcreteScenario]:
        """全シナリオを検証し、問題が無ければシナリオを返す

        Raises:
            DatabaseValidationError: 空のデータベース、違反、またはディレクトリとグループの不一致がある場合
        """
        scenarios = self.load() if scenarios is None else scenarios
        if not scenarios:
            raise DatabaseValidationError(f"scenario database is empty: {self.root}", file_path=str(self.root))

        request_ids = {r.id for r in self.load_test_requests()}
        failed: List[ValidationReport] = []
        for scenario in scenarios:
            report = validate_concrete(scenario, registry, request_ids)
            if not report.is_valid:
                failed.append(report)
        if failed:
            for report in failed[:20]:
                self.logger.error(f"検証違反 {report.scenario_id}: {', '.join(report.invariants())}")
            raise DatabaseValidationError(f"{len(failed)} scenarios failed validation", failed, str(self.root))
        return scenarios

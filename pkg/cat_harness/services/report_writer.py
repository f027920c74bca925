"""
評価レポートの出力

スコア表（CSV）、受け入れ判定の構造化ドキュメント（JSON）、グループ別の棒グラフ（SVG）、
シナリオごとの軌跡ダンプ（CSV）を書き出す。同じレポートからは同じバイト列を出力する。
"""

import csv
import json
from pathlib import Path
from typing import Any, Iterable, List, Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..models.data_models import EvaluationReport, SimTrace  # noqa: E402
from .error_context import error_context  # noqa: E402
from .error_handling import IoFailure  # noqa: E402
from .logging_config import get_harness_logger  # noqa: E402


logger = get_harness_logger("report")

CSV_COLUMNS = ("group_id", "road_user_group", "n", "ads_collisions", "nieon_collisions",
               "ads_serious", "nieon_serious", "pass")
SUPPORTED_FORMATS = ("csv", "json", "svg")
SVG_HASH_SALT = "cat-harness"


class ReportExporter:
    """評価レポートを各形式のファイルに書き出す"""

    def __init__(self, output_dir: str, basename: str = "report"):
        """
        Args:
            output_dir: 出力先ディレクトリ（無ければ作成）
            basename: 出力ファイル名の共通部分
        """
        self.output_dir = Path(output_dir)
        self.basename = basename

    def _path(self, suffix: str) -> Path:
        return self.output_dir / f"{self.basename}{suffix}"

    def _prepare(self) -> None:
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def export_csv(self, report: EvaluationReport) -> Path:
        """セーフティグループごとに1行、最後に道路利用者グループの2行"""
        path = self._path(".csv")
        with error_context.report_export(str(path), "csv"):
            self._prepare()
            with open(path, 'w', encoding='utf-8', newline='') as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(CSV_COLUMNS)
                for row in report.score_table.all_rows():
                    writer.writerow([row.group_id, row.road_user_group, row.n_scenarios,
                                     row.ads_collisions, row.nieon_collisions, row.ads_serious,
                                     row.nieon_serious, str(row.passes(report.slack)).lower()])
        return path

    def export_json(self, report: EvaluationReport) -> Path:
        path = self._path(".json")
        with error_context.report_export(str(path), "json"):
            self._prepare()
            write_document(report.to_dict(), path)
        return path

    def export_svg(self, report: EvaluationReport) -> Path:
        """ADS と参照ドライバの件数をグループごとに並べた棒グラフ"""
        path = self._path(".svg")
        rows = report.score_table.groups
        labels = [row.group_id for row in rows]
        x = np.arange(len(rows))
        width = 0.38

        with error_context.report_export(str(path), "svg"):
            self._prepare()
            with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
                fig, axes = plt.subplots(2, 1, figsize=(max(6.0, 0.6 * len(rows) + 2.0), 7.0), sharex=True)
                panels = (("collisions", "ads_collisions", "nieon_collisions"),
                          ("serious injury events", "ads_serious", "nieon_serious"))
                for ax, (title, ads_key, nieon_key) in zip(axes, panels):
                    ads = [getattr(row, ads_key) for row in rows]
                    nieon = [getattr(row, nieon_key) for row in rows]
                    ax.bar(x - width / 2, ads, width, label=f"ADS ({report.policy})", color="#1f77b4")
                    ax.bar(x + width / 2, nieon, width, label="NIEON", color="#7f7f7f")
                    ax.set_ylabel("count")
                    ax.set_title(title)
                    ax.legend(loc="upper right")
                axes[-1].set_xticks(x)
                axes[-1].set_xticklabels(labels, rotation=45, ha="right")
                fig.tight_layout()
                fig.savefig(path, format="svg", metadata={"Date": None})
                plt.close(fig)
        return path

    def export(self, report: EvaluationReport, formats: Sequence[str]) -> List[Path]:
        """指定された形式をすべて書き出す（空なら何もしない）

        Raises:
            IoFailure: 未対応の形式、または書き込みに失敗した場合
        """
        exporters = {"csv": self.export_csv, "json": self.export_json, "svg": self.export_svg}
        paths = []
        for fmt in dict.fromkeys(formats):
            if fmt not in exporters:
                raise IoFailure(f"unsupported report format '{fmt}'", str(self.output_dir), fmt)
            paths.append(exporters[fmt](report))
        if paths:
            logger.info(f"レポートを出力しました: {', '.join(str(p) for p in paths)}")
        return paths


def emit_report(report: EvaluationReport, formats: Sequence[str], output_dir: str,
                basename: str = "report") -> List[Path]:
    return ReportExporter(output_dir, basename).export(report, formats)


def write_document(document: Mapping[str, Any], path: Path) -> None:
    """構造化ドキュメントをキー順のJSONで書く"""
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(document, f, indent=2, ensure_ascii=False, sort_keys=True)
        f.write("\n")


def export_document(document: Mapping[str, Any], output_dir: str, name: str) -> Path:
    """診断結果などのドキュメントを <output_dir>/<name>.json に書く"""
    path = Path(output_dir) / f"{name}.json"
    with error_context.report_export(str(path), "json"):
        path.parent.mkdir(parents=True, exist_ok=True)
        write_document(document, path)
    return path


def load_report(path: str) -> Mapping[str, Any]:
    with error_context.report_export(path, "json"):
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)


def export_traces(traces: Iterable[SimTrace], output_dir: str) -> List[Path]:
    """シナリオごとの自車・アクター軌跡を <id>.csv に書く"""
    directory = Path(output_dir)
    paths = []
    for trace in traces:
        path = directory / f"{trace.scenario_id}.csv"
        with error_context.report_export(str(path), "trace"):
            directory.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', encoding='utf-8', newline='') as f:
                writer = csv.writer(f, lineterminator="\n")
                header = ["t", "ego_x", "ego_y", "ego_heading", "ego_speed", "ego_accel", "ego_odometer"]
                for index in range(len(trace.actor_states)):
                    header += [f"actor{index + 1}_{k}" for k in ("x", "y", "heading", "speed")]
                writer.writerow(header)
                for k, (t, ego) in enumerate(zip(trace.times, trace.ego_states)):
                    row = [t, ego.x, ego.y, ego.heading, ego.speed, ego.accel, ego.odometer]
                    for states in trace.actor_states:
                        s = states[k]
                        row += [s.x, s.y, s.heading, s.speed]
                    writer.writerow([f"{v:.6f}" for v in row])
        paths.append(path)
    return paths

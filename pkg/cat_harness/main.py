"""
衝突回避評価ハーネスのコマンドライン

サブコマンドは評価の段階に対応する:
validate（検証）, generate（生成）, run（評価）, ztest（識別力検定）,
repeat（再現性）, diff（差分）, track-compare（テストコース比較）, report（再出力）
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Sequence, Tuple

from .controllers.evaluation_controller import EvaluationController
from .models.data_models import EvaluationReport, ParameterRange, SamplingMode, SamplingPlan
from .models.harness_settings import HarnessConfig, SettingsManager, apply_environment
from .services.error_context import error_context
from .services.error_handling import (
    DatabaseMismatch,
    DatabaseValidationError,
    ErrorHandlingService,
    HarnessError,
    IoFailure,
    UnmatchedScenario,
)
from .services.logging_config import LoggingConfig, get_harness_logger
from .services.report_writer import SUPPORTED_FORMATS, emit_report, export_document, export_traces, load_report
from .services.scenario_parser import parse_file
from .services.vocabulary import load_vocabulary


EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_DATABASE = 3
EXIT_IO = 4

BUNDLED_SCENARIOS = Path(__file__).resolve().parent / "data" / "scenarios"

logger = get_harness_logger("cli")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON設定ファイル（無ければデフォルト設定）")
    common.add_argument("--db", help="シナリオデータベースのディレクトリ")
    common.add_argument("--policy", help="評価するポリシー名")
    common.add_argument("--out", help="成果物の出力ディレクトリ")
    common.add_argument("--seed", type=int, help="乱数シード")
    common.add_argument("--parallelism", type=int, help="ワーカープロセス数")
    common.add_argument("--format", dest="formats", action="append", choices=SUPPORTED_FORMATS,
                        help="レポート形式（複数指定可）")
    common.add_argument("--variant", help="条件バリアント名（例: light_fog）")
    common.add_argument("--plugin-dir", dest="plugin_dirs", action="append", default=[],
                        help="ポリシープラグインのディレクトリ（複数指定可）")
    common.add_argument("--vocabulary", dest="vocabularies", action="append", default=[],
                        help="追加の語彙レジストリ（JSON）")
    common.add_argument("--log-level", choices=("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"))
    common.add_argument("--log-dir", default="logs")
    common.add_argument("--no-log-file", action="store_true", help="ログファイルを書かない")
    return common


def build_parser() -> argparse.ArgumentParser:
    """サブコマンド付きの引数パーサーを作成"""
    common = _common_options()
    parser = argparse.ArgumentParser(prog="cat-harness",
                                     description="NIEON参照ドライバを基準とする衝突回避テストハーネス")
    sub = parser.add_subparsers(dest="command", required=True)

    validate = sub.add_parser("validate", parents=[common],
                              help=".scn ファイルを検証する（ファイル指定が無ければシナリオデータベースを検証）")
    validate.add_argument("paths", nargs="*")

    generate = sub.add_parser("generate", parents=[common],
                              help=".scn ファイルから concrete シナリオを生成してデータベースに書く")
    generate.add_argument("paths", nargs="*", help="シナリオファイル（省略時は同梱のデモスイート）")
    generate.add_argument("--sampling", choices=[m.value for m in SamplingMode], default=SamplingMode.GRID.value)
    generate.add_argument("--samples", type=int, default=10, help="ラテン超方格のサンプル数")
    generate.add_argument("--override", dest="overrides", action="append", default=[],
                          metavar="NAME=MIN:MAX:STEP", help="パラメータ範囲の上書き")
    generate.add_argument("--author", default="cat-harness", help="テストリクエストの作成者")
    generate.add_argument("--append", action="store_true",
                          help="既存のシナリオを消さずに追加する（既定では前回の生成分を置き換える）")

    run = sub.add_parser("run", parents=[common], help="データベース全体でポリシーを評価する")
    run.add_argument("--dump-traces", metavar="DIR", help="シナリオごとの軌跡CSVを書き出す")

    ztest = sub.add_parser("ztest", parents=[common], help="NIEONの厳しさを変えたときの識別力のz検定")
    ztest.add_argument("--deltas", type=float, nargs="+", help="応答時間の切片のずらし幅 [s]")
    ztest.add_argument("--alpha", type=float, help="有意水準")

    repeat = sub.add_parser("repeat", parents=[common], help="シードを変えた k 回の評価による再現性")
    repeat.add_argument("-k", type=int, default=10, help="評価の回数")
    repeat.add_argument("--no-jitter", action="store_true", help="作動遅延のジッタを無効のままにする")

    diff = sub.add_parser("diff", parents=[common], help="リリース間差分、またはODD変更時のカバレッジ差分")
    diff.add_argument("--baseline-report", help="前回リリースのJSONレポート")
    diff.add_argument("--candidate-report", help="今回のJSONレポート")
    diff.add_argument("--old-odd", help="変更前のODDプロファイル名")
    diff.add_argument("--new-odd", help="変更後のODDプロファイル名")

    track = sub.add_parser("track-compare", parents=[common],
                           help="シミュレーションとテストコースの結果を比較する")
    track.add_argument("--track-index", required=True, help="テストコース結果の索引CSV")

    report = sub.add_parser("report", parents=[common], help="保存済みのレポートを別の形式で出力し直す")
    report.add_argument("--from-report", required=True, help="run が書いたJSONレポート")
    report.add_argument("--basename", default="report", help="出力ファイル名の共通部分")
    return parser


def parse_override(text: str) -> Tuple[str, ParameterRange]:
    """NAME=MIN:MAX:STEP 形式のパラメータ範囲"""
    try:
        name, bounds = text.split("=", 1)
        minimum, maximum, step = (float(v) for v in bounds.split(":"))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid override '{text}', expected NAME=MIN:MAX:STEP") from e
    return name.strip(), ParameterRange(minimum, maximum, step)


def load_config(args: argparse.Namespace) -> HarnessConfig:
    """設定ファイル、環境変数、コマンドライン引数の順に適用した設定"""
    with error_context.config_loading(args.config or ""):
        config = SettingsManager(args.config).load()
        config = apply_environment(config)

        overrides: Dict[str, Any] = {}
        for flag, key in (("db", "database_path"), ("policy", "policy"), ("out", "output_dir"),
                          ("seed", "seed"), ("parallelism", "parallelism")):
            value = getattr(args, flag, None)
            if value is not None:
                overrides[key] = value
        if args.formats:
            overrides["formats"] = list(args.formats)
        if getattr(args, "command", "") == "repeat" and not args.no_jitter:
            overrides["jitter"] = {"enabled": True}
        if overrides:
            config = config.with_overrides(overrides)
        if args.variant:
            config = config.with_variant(args.variant)
        config.validate()
    return config


def _print(document: Mapping[str, Any]) -> None:
    print(json.dumps(document, indent=2, ensure_ascii=False, sort_keys=True))


def cmd_validate(args: argparse.Namespace, config: HarnessConfig, controller: EvaluationController) -> int:
    """構文チェック、またはデータベースの検証"""
    if args.paths:
        vocabulary = load_vocabulary(args.vocabularies)
        total = 0
        for path in args.paths:
            with error_context.scenario_language():
                logical = parse_file(path, vocabulary)
            total += len(logical)
            print(f"{path}: {len(logical)} 件の論理シナリオ")
        print(f"構文チェック完了: {total} 件")
        return EXIT_OK

    database, scenarios = controller.load_database()
    print(f"データベース検証完了: {len(scenarios)} 件 ({database.content_hash()})")
    return EXIT_OK


def cmd_generate(args: argparse.Namespace, config: HarnessConfig, controller: EvaluationController) -> int:
    """concrete シナリオを生成してデータベースに書く"""
    paths = args.paths or sorted(str(p) for p in BUNDLED_SCENARIOS.glob("*.scn"))
    overrides = dict(parse_override(text) for text in args.overrides)
    plan = SamplingPlan(SamplingMode(args.sampling), config.seed, args.samples, overrides)
    vocabulary = load_vocabulary(args.vocabularies)
    with error_context.scenario_language():
        count = controller.generate(paths, plan=plan, vocabulary=vocabulary, author=args.author,
                                    append=args.append)
    print(f"{count} 件の concrete シナリオを生成しました: {config.database_path}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace, config: HarnessConfig, controller: EvaluationController) -> int:
    """評価してレポートを出力する（不合格なら終了コード1）"""
    report, traces = controller.run_evaluation(keep_traces=bool(args.dump_traces))
    for path in emit_report(report, config.formats, config.output_dir):
        print(f"出力: {path}")
    if args.dump_traces:
        export_traces(traces, args.dump_traces)
    _print(controller.summary(report))
    return EXIT_OK if report.acceptance.overall_pass else EXIT_FAILED


def cmd_ztest(args: argparse.Namespace, config: HarnessConfig, controller: EvaluationController) -> int:
    """識別力のz検定（識別できないグループがあれば終了コード1）"""
    results = controller.run_ztest(args.deltas, args.alpha)
    document = {"groups": [r.to_dict() for r in results]}
    print(f"出力: {export_document(document, config.output_dir, 'ztest')}")
    failing = [r.group_id for r in results if not r.degenerate and not r.discriminative]
    _print({"groups": len(results), "not_discriminative": failing,
            "degenerate": [r.group_id for r in results if r.degenerate]})
    return EXIT_FAILED if failing else EXIT_OK


def cmd_repeat(args: argparse.Namespace, config: HarnessConfig, controller: EvaluationController) -> int:
    """再現性の分析結果を出力する"""
    result = controller.run_repeatability(args.k)
    print(f"出力: {export_document(result.to_dict(), config.output_dir, 'repeatability')}")
    _print(result.to_dict())
    return EXIT_OK


def cmd_diff(args: argparse.Namespace, config: HarnessConfig, controller: EvaluationController) -> int:
    """リリース間差分（回帰があれば終了コード1）またはODD差分"""
    if args.baseline_report and args.candidate_report:
        diff = controller.diff_reports(args.baseline_report, args.candidate_report)
        print(f"出力: {export_document(diff.to_dict(), config.output_dir, 'release_diff')}")
        _print({"regressions": diff.regressions})
        return EXIT_FAILED if diff.regressions else EXIT_OK
    if args.old_odd and args.new_odd:
        coverage = controller.diff_odd(args.old_odd, args.new_odd, load_vocabulary(args.vocabularies))
        print(f"出力: {export_document(coverage.to_dict(), config.output_dir, 'coverage_diff')}")
        _print({"carried_over": len(coverage.carried_over), "excluded": len(coverage.excluded),
                "gap_categories": len(coverage.gap_categories)})
        return EXIT_OK
    print("diff には --baseline-report/--candidate-report または --old-odd/--new-odd が必要です",
          file=sys.stderr)
    return EXIT_USAGE


def cmd_track_compare(args: argparse.Namespace, config: HarnessConfig, controller: EvaluationController) -> int:
    """テストコースとの比較（不合格なら終了コード1）"""
    comparison = controller.run_track_comparison(args.track_index)
    print(f"出力: {export_document(comparison.to_dict(), config.output_dir, 'track_comparison')}")
    _print(comparison.to_dict())
    return EXIT_OK if comparison.passed else EXIT_FAILED


def cmd_report(args: argparse.Namespace, config: HarnessConfig, controller: EvaluationController) -> int:
    """保存済みのJSONレポートを別の形式で出力し直す"""
    document = load_report(args.from_report)
    try:
        report = EvaluationReport.from_dict(document)
    except (KeyError, TypeError, ValueError) as e:
        raise IoFailure(f"not an evaluation report: {e}", args.from_report, "json") from e
    for path in emit_report(report, config.formats, config.output_dir, args.basename):
        print(f"出力: {path}")
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace, HarnessConfig, EvaluationController], int]] = {
    "validate": cmd_validate,
    "generate": cmd_generate,
    "run": cmd_run,
    "ztest": cmd_ztest,
    "repeat": cmd_repeat,
    "diff": cmd_diff,
    "track-compare": cmd_track_compare,
    "report": cmd_report,
}


def exit_code_for(error: BaseException) -> int:
    """例外から終了コードを決める"""
    if isinstance(error, (DatabaseValidationError, DatabaseMismatch, UnmatchedScenario)):
        return EXIT_DATABASE
    if isinstance(error, IoFailure):
        return EXIT_IO
    if isinstance(error, (HarnessError, argparse.ArgumentTypeError)):
        return EXIT_USAGE
    return EXIT_FAILED


def main(argv: Optional[Sequence[str]] = None) -> int:
    """コマンドラインのエントリーポイント（終了コードを返す）"""
    args = build_parser().parse_args(argv)
    LoggingConfig.setup_logging(log_level=args.log_level, log_dir=args.log_dir,
                                file_logging=not args.no_log_file)
    try:
        config = load_config(args)
        controller = EvaluationController(config, args.plugin_dirs)
        controller.initialize()
        return COMMANDS[args.command](args, config, controller)
    except Exception as e:
        code = exit_code_for(e)
        if code == EXIT_FAILED:
            ErrorHandlingService().handle_general_error(e, f"cat-harness {args.command}")
        else:
            logger.debug(f"{args.command} が終了コード {code} で失敗しました", exc_info=True)
        print(f"エラー: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())

"""
コマンドライン
binary / multiclass / transform / invariant の各サブコマンドを実験ランナーにつなぐ
"""

import argparse
import json
import logging
import sys
from collections.abc import Sequence

from diffinfo.errors import ConfigError, DiffInfoError
from diffinfo.experiments import make_config, run_binary, run_invariant, run_multiclass, run_transform
from diffinfo.models import ExperimentConfig, InvariantConfig, TransformConfig
from diffinfo.presets import PRESETS
from diffinfo.report import emit_report, render_csv
from diffinfo.settings import Settings, get_settings

logger = logging.getLogger(__name__)

ARITY = {"binary": 2, "multiclass": 3}


class _ArgumentParser(argparse.ArgumentParser):
    """引数エラーを終了ではなくConfigErrorとして送出する"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise ConfigError(f"引数が不正です: {message}")


def _add_classification_arguments(parser: argparse.ArgumentParser, settings: Settings) -> None:
    parser.add_argument("--data-dir", default=settings.data_dir, help="MNISTファイルのディレクトリ")
    parser.add_argument("--classes", action="append", help="クラスの組（例: 1,0）。繰り返し指定可")
    parser.add_argument("--features", action="append", help="特徴量仕様またはテンプレート。繰り返し指定可")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="結果表と同じクラスの組と特徴量列")
    parser.add_argument("--k", type=int, default=3)
    parser.add_argument("--ridge", type=float, default=1e-3)
    parser.add_argument("--subsample", type=int, default=0, help="クラスごとの学習サンプル数（0なら全件）")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--report", help="出力先（.csv または .md）。省略時は標準出力にCSV")
    parser.add_argument("--route", choices=["cholesky", "whitening"], default="cholesky")
    parser.add_argument("--eig-solver", choices=["jacobi", "lapack"], default=settings.eig_solver)
    parser.add_argument("--centering", choices=["pooled", "reference", "none"], default="pooled")
    parser.add_argument("--projection", choices=["euclidean", "b_inner"], default="euclidean")
    parser.add_argument("--energy", type=float, default=1.0)
    parser.add_argument("--unbiased", action="store_true", help="共分散を 1/(N−1) で正規化")
    parser.add_argument("--workers", type=int, default=settings.workers)
    parser.add_argument("--no-timing", action="store_true", help="秒数列を0.00にする")


def build_parser(settings: Settings | None = None) -> argparse.ArgumentParser:
    """サブコマンド付きの引数パーサを作成"""
    settings = settings or get_settings()
    parser = _ArgumentParser(prog="diffinfo", description="行列ペンシルによる差分情報の実験")
    parser.add_argument("--log-level", default=None, help="ログレベル（既定はDIFFINFO_LOG_LEVEL）")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, description in (("binary", "二値分類"), ("multiclass", "3クラス分類")):
        _add_classification_arguments(commands.add_parser(name, help=description), settings)

    transform = commands.add_parser("transform", help="パターン変換")
    transform.add_argument("--data-dir", default=settings.data_dir)
    transform.add_argument("--from", dest="source_class", type=int, required=True)
    transform.add_argument("--to", dest="target_class", type=int, required=True)
    transform.add_argument("--out-dir", required=True)
    transform.add_argument("--count", type=int, default=5)
    transform.add_argument("--noise-count", type=int, default=5)
    transform.add_argument("--ridge", type=float, default=1e-3)
    transform.add_argument("--subsample", type=int, default=0)
    transform.add_argument("--seed", type=int, default=42)
    transform.add_argument("--no-restore-mean", action="store_true", help="変換先の平均を足さない")
    transform.add_argument("--eig-solver", choices=["jacobi", "lapack"], default=settings.eig_solver)

    invariant = commands.add_parser("invariant", help="変換に依存しない基底の評価")
    invariant.add_argument("--length", type=int, default=32)
    invariant.add_argument("--seed", type=int, default=42)
    invariant.add_argument("--data-dir", default=None, help="指定時は--image-indexのMNISTテスト画像を使う")
    invariant.add_argument("--image-index", type=int, default=None)
    invariant.add_argument("--max-offset", type=int, default=None)
    invariant.add_argument("--energy", type=float, default=0.95)
    invariant.add_argument("--condition-limit", type=float, default=100.0)
    invariant.add_argument("--eig-solver", choices=["jacobi", "lapack"], default=settings.eig_solver)
    return parser


def parse_classes(text: str) -> tuple[int, ...]:
    """"1,0" や "0 2 8" をラベルのタプルにする"""
    parts = [part for part in text.replace(",", " ").split() if part]
    try:
        return tuple(int(part) for part in parts)
    except ValueError as e:
        raise ConfigError(f"クラスの組を解釈できません: '{text}'") from e


def _classification_config(args: argparse.Namespace) -> ExperimentConfig:
    classes = [parse_classes(text) for text in args.classes or []]
    features = list(args.features or [])
    titles = None
    if args.preset:
        preset = PRESETS[args.preset]
        if preset.arity != ARITY[args.command]:
            raise ConfigError(f"プリセット {preset.name} は{preset.arity}クラス用です（{args.command}）")
        classes = classes or list(preset.classes)
        if not features:
            features = preset.templates
            titles = preset.titles
    if not classes or not features:
        raise ConfigError("--classes と --features（または --preset）を指定してください")

    return make_config(
        ExperimentConfig,
        data_dir=args.data_dir,
        classes=classes,
        features=features,
        feature_titles=titles,
        k=args.k,
        ridge=args.ridge,
        subsample=args.subsample,
        seed=args.seed,
        route=args.route,
        eig_solver=args.eig_solver,
        centering=args.centering,
        projection=args.projection,
        energy=args.energy,
        unbiased=args.unbiased,
        workers=args.workers,
    )


def _run_classification(args: argparse.Namespace) -> None:
    config = _classification_config(args)
    runner = run_binary if args.command == "binary" else run_multiclass
    rows = runner(config)
    if args.report:
        emit_report(rows, args.report, include_timing=not args.no_timing)
    else:
        sys.stdout.write(render_csv(rows, include_timing=not args.no_timing))


def _run_transform(args: argparse.Namespace) -> None:
    config = make_config(
        TransformConfig,
        data_dir=args.data_dir,
        source_class=args.source_class,
        target_class=args.target_class,
        out_dir=args.out_dir,
        count=args.count,
        noise_count=args.noise_count,
        ridge=args.ridge,
        subsample=args.subsample,
        seed=args.seed,
        restore_mean=not args.no_restore_mean,
        eig_solver=args.eig_solver,
    )
    print(run_transform(config).model_dump_json(indent=2))


def _run_invariant(args: argparse.Namespace) -> None:
    config = make_config(
        InvariantConfig,
        length=args.length,
        seed=args.seed,
        data_dir=args.data_dir,
        image_index=args.image_index,
        max_offset=args.max_offset,
        energy=args.energy,
        condition_limit=args.condition_limit,
        eig_solver=args.eig_solver,
    )
    print(run_invariant(config).model_dump_json(indent=2))


COMMANDS = {
    "binary": _run_classification,
    "multiclass": _run_classification,
    "transform": _run_transform,
    "invariant": _run_invariant,
}


def main(argv: Sequence[str] | None = None) -> int:
    """
    CLIのエントリーポイント

    Args:
        argv: コマンドライン引数（省略時はsys.argv）

    Returns:
        int: 終了コード（0: 成功, 2: 既知のエラー, 1: 想定外の例外）
    """
    try:
        settings = get_settings()
        args = build_parser(settings).parse_args(argv)
        level = (args.log_level or settings.log_level).upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ConfigError(f"未知のログレベルです: {level}")
        logging.basicConfig(level=level)
        COMMANDS[args.command](args)
    except DiffInfoError as e:
        logger.error(f"実験エラー: {e.message}")
        sys.stderr.write(json.dumps(e.to_dict(), ensure_ascii=False) + "\n")
        return 2
    except Exception as e:
        logger.error(f"想定外のエラー: {e}")
        sys.stderr.write(json.dumps({"error": "internal_error", "message": str(e)}, ensure_ascii=False) + "\n")
        return 1
    return 0

"""
実験ランナー
二値・多クラス分類、パターン変換、不変基底の評価を設定モデルから実行する
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TypeVar

import numpy as np
from pydantic import BaseModel, ValidationError

from diffinfo.covariance import estimate_class_model
from diffinfo.errors import ConfigError, DataIOError, InvalidArgumentError, NoMatchingSamplesError
from diffinfo.feature_spec import FeatureSpec, LabelGroup, parse_feature_spec, render_template
from diffinfo.invariant_basis import analyze_invariance, cyclic_shifts, cyclic_translations
from diffinfo.knn import LabeledSet, accuracy, knn_classify_batch
from diffinfo.mnist_io import (
    MnistData,
    load_mnist,
    locate_mnist,
    read_idx_images,
    subsample_per_class,
    vectorize,
)
from diffinfo.models import (
    ExperimentConfig,
    InvariantConfig,
    InvariantReport,
    ReportRow,
    TransformConfig,
    TransformReport,
)
from diffinfo.pencil import ModelBank, build_feature_map, extract_features_batch, whitening_operator
from diffinfo.transform import (
    covariance_transport_error,
    generate_from_noise,
    sample_white_noise,
    target_covariance,
    transform_pattern,
    write_pgm,
    write_triptych,
)

logger = logging.getLogger(__name__)

ConfigT = TypeVar("ConfigT", bound=BaseModel)


def make_config(model: type[ConfigT], **values) -> ConfigT:
    """
    設定モデルを作成し、検証エラーをConfigErrorに変換

    Args:
        model: ExperimentConfig, TransformConfig, InvariantConfig のいずれか
        **values: フィールド値

    Returns:
        検証済みの設定
    """
    try:
        return model(**values)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"設定が不正です ({location}): {first['msg']}") from e


@dataclass(frozen=True)
class _Split:
    """1つのクラスの組に対する学習・テストデータ"""

    classes: LabelGroup
    bank: ModelBank
    train: LabeledSet
    test_samples: np.ndarray
    test_labels: np.ndarray


def _check_classes(classes: LabelGroup, arity: int) -> None:
    if len(classes) != arity:
        raise ConfigError(f"クラスの組 {classes} は{arity}個のラベルである必要があります")
    if len(set(classes)) != len(classes):
        raise ConfigError(f"クラスの組 {classes} に同じラベルが含まれています")


def _resolve_specs(config: ExperimentConfig, classes: LabelGroup) -> list[FeatureSpec]:
    specs = []
    for template in config.features:
        spec = parse_feature_spec(render_template(template, classes), config.centering)
        outside = spec.labels() - set(classes)
        if outside:
            raise ConfigError(f"特徴量仕様 '{spec.canonical()}' に実験のクラス {classes} 以外のラベル {sorted(outside)} があります")
        specs.append(spec)
    return specs


def _prepare_split(config: ExperimentConfig, data: MnistData, classes: LabelGroup) -> _Split:
    train_samples, train_labels = vectorize(data.train, classes)
    missing = [label for label in classes if not np.any(train_labels == label)]
    if missing:
        raise NoMatchingSamplesError(f"学習データにクラス {missing} のサンプルがありません")
    train_samples, train_labels = subsample_per_class(train_samples, train_labels, config.subsample, config.seed)
    test_samples, test_labels = vectorize(data.test, classes)
    bank = ModelBank(
        {label: train_samples[train_labels == label] for label in classes},
        ridge=config.ridge,
        unbiased=config.unbiased,
        solver=config.eig_solver,
    )
    logger.info(f"データ準備完了: クラス {classes}, 学習 {len(train_labels)}件, テスト {len(test_labels)}件")
    return _Split(classes, bank, LabeledSet(train_samples, train_labels), test_samples, test_labels)


def _evaluate(config: ExperimentConfig, split: _Split, spec: FeatureSpec, title: str | None) -> ReportRow:
    started = time.perf_counter()
    feature_map = build_feature_map(
        spec, split.bank, route=config.route, projection=config.projection, energy=config.energy
    )
    train_features = extract_features_batch(feature_map, split.train.features)
    test_features = extract_features_batch(feature_map, split.test_samples)
    predicted = knn_classify_batch(LabeledSet(train_features, split.train.labels), test_features, config.k)
    score = accuracy(predicted, split.test_labels)
    seconds = time.perf_counter() - started

    logger.info(f"評価完了: クラス {split.classes}, {spec.canonical()} → 正解率 {score:.2f}% ({seconds:.1f}秒)")
    return ReportRow(
        classes=split.classes,
        feature_spec=spec.canonical(),
        k=config.k,
        ridge=config.ridge,
        n_train=len(split.train),
        n_test=int(split.test_labels.shape[0]),
        accuracy_pct=score,
        seconds=seconds,
        feature_title=title,
    )


def _run_classification(config: ExperimentConfig, arity: int, data: MnistData | None) -> list[ReportRow]:
    titles = config.feature_titles or [None] * len(config.features)
    if len(titles) != len(config.features):
        raise ConfigError(f"列見出しの数 {len(titles)} が特徴量の数 {len(config.features)} と一致しません")

    resolved = []
    for classes in config.classes:
        _check_classes(classes, arity)
        resolved.append((classes, _resolve_specs(config, classes)))

    data = data if data is not None else load_mnist(config.data_dir)
    splits = [_prepare_split(config, data, classes) for classes, _ in resolved]
    jobs = [
        (split, spec, title)
        for split, (_, specs) in zip(splits, resolved)
        for spec, title in zip(specs, titles)
    ]
    logger.info(f"分類実験開始: {len(jobs)}行, ワーカー数 {config.workers}")

    # mapは入力順に結果を返す
    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        return list(executor.map(lambda job: _evaluate(config, *job), jobs))


def run_binary(config: ExperimentConfig, data: MnistData | None = None) -> list[ReportRow]:
    """
    二値分類実験（クラスの組 × 特徴量仕様ごとに1行）

    Args:
        config: 実験設定。classesの各要素は (c1, c2)
        data: 読み込み済みのMNIST。省略時はconfig.data_dirから読み込む

    Returns:
        list[ReportRow]: 入力順のレポート行

    Raises:
        ConfigError: c1 == c2、特徴量仕様の構文誤りなど
    """
    return _run_classification(config, 2, data)


def run_multiclass(config: ExperimentConfig, data: MnistData | None = None) -> list[ReportRow]:
    """3クラス分類実験。classesの各要素は (c1, c2, c3)"""
    return _run_classification(config, 3, data)


def _pick(count: int, available: int, rng: np.random.Generator) -> np.ndarray:
    return np.sort(rng.choice(available, size=min(count, available), replace=False))


def run_transform(config: TransformConfig, data: MnistData | None = None) -> TransformReport:
    """
    パターン変換実験

    学習データから両クラスのモデルを推定し、テストデータの変換元パターンを変換先クラスへ写す。
    transform_XX.pgm, triptych_XX.pgm, noise_XX.pgm を出力ディレクトリに書き出す。

    Args:
        config: 変換実験の設定
        data: 読み込み済みのMNIST。省略時はconfig.data_dirから読み込む

    Returns:
        TransformReport: 共分散輸送誤差・条件数・出力ファイル
    """
    data = data if data is not None else load_mnist(config.data_dir)
    rows, cols = data.train.shape

    def train_model(label: int):
        samples, labels = vectorize(data.train, [label])
        samples, _ = subsample_per_class(samples, labels, config.subsample, config.seed)
        return samples, estimate_class_model(samples, label, config.ridge, solver=config.eig_solver)

    source_samples, source_model = train_model(config.source_class)
    _, target_model = train_model(config.target_class)
    source = whitening_operator(source_model)
    target = whitening_operator(target_model)

    transported = transform_pattern(source_samples, source, target)
    error = covariance_transport_error(transported, target_covariance(target))

    try:
        config.out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataIOError(f"出力ディレクトリを作成できません: {config.out_dir} ({e})") from e

    rng = np.random.default_rng(config.seed)
    test_source, _ = vectorize(data.test, [config.source_class])
    test_target, _ = vectorize(data.test, [config.target_class])
    inputs = test_source[_pick(config.count, test_source.shape[0], rng)]
    exemplars = test_target[_pick(inputs.shape[0], test_target.shape[0], rng)]
    outputs = transform_pattern(inputs, source, target, restore_mean=config.restore_mean)

    files: list[Path] = []
    for index, (x, exemplar, y) in enumerate(zip(inputs, exemplars, outputs)):
        files.append(config.out_dir / f"transform_{index:02d}.pgm")
        write_pgm(y, rows, cols, files[-1])
        files.append(config.out_dir / f"triptych_{index:02d}.pgm")
        write_triptych(x, exemplar, y, rows, cols, files[-1])

    if config.noise_count:
        noise = sample_white_noise(config.noise_count, target.dim, config.seed)
        for index, y in enumerate(generate_from_noise(noise, target, restore_mean=config.restore_mean)):
            files.append(config.out_dir / f"noise_{index:02d}.pgm")
            write_pgm(y, rows, cols, files[-1])

    report = TransformReport(
        source_class=config.source_class,
        target_class=config.target_class,
        n_source=source_model.sample_count,
        n_target=target_model.sample_count,
        dimension=source.dim,
        transport_error=error,
        source_condition=source_model.condition_number,
        target_condition=target_model.condition_number,
        files=[str(path) for path in files],
    )
    logger.info(f"変換実験完了: {config.source_class}→{config.target_class}, 輸送誤差 {error:.3e}, {len(files)}ファイル")
    return report


def run_invariant(config: InvariantConfig) -> InvariantReport:
    """
    不変基底の評価

    image_indexを指定した場合はMNISTテスト画像の巡回平行移動、
    それ以外は長さlengthの乱数信号の巡回シフトで評価する。

    Args:
        config: 評価設定

    Returns:
        InvariantReport: 係数グラムの直交性の評価
    """
    if config.image_index is None:
        signal = np.random.default_rng(config.seed).standard_normal(config.length)
        if config.max_offset is not None and config.max_offset >= config.length:
            raise ConfigError(f"max_offset {config.max_offset} は信号長 {config.length} 未満である必要があります")
        transformations = cyclic_shifts(config.length, config.max_offset)
    else:
        if config.data_dir is None:
            raise ConfigError("image_indexを使うにはdata_dirが必要です")
        images = read_idx_images(locate_mnist(config.data_dir)["test_images"])
        if config.image_index >= images.shape[0]:
            raise InvalidArgumentError(f"画像番号 {config.image_index} が範囲外です（{images.shape[0]}枚）")
        rows, cols = images.shape[1:]
        if config.max_offset is not None and config.max_offset >= min(rows, cols):
            raise ConfigError(f"max_offset {config.max_offset} は画像の辺 {min(rows, cols)} 未満である必要があります")
        signal = images[config.image_index].astype(np.float64).ravel() / 255.0
        transformations = cyclic_translations(rows, cols, config.max_offset)

    logger.info(f"不変基底の評価開始: {transformations.kind}, 変換数 {len(transformations)}")
    return analyze_invariance(
        signal,
        transformations,
        energy=config.energy,
        condition_limit=config.condition_limit,
        solver=config.eig_solver,
    )

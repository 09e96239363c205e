"""
白色化作用素と行列ペンシル
L = Λ^(−1/2)Φᵀ の構成、A ψ̃ = μ B ψ̃ の求解（白色化経由 / Cholesky経由）、
および特徴量仕様から射影行列（FeatureMap）を組み立てる処理
"""

import logging
import threading
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Literal

import numpy as np
import numpy.typing as npt

from diffinfo.covariance import DEFAULT_RIDGE, ClassModel, estimate_class_model, pool_classes
from diffinfo.dense_linalg import (
    EigenSolver,
    Matrix,
    Vector,
    cholesky,
    frozen,
    normalize_signs,
    solve_triangular,
    sym_eig,
)
from diffinfo.errors import (
    DimensionMismatchError,
    InvalidArgumentError,
    NotPositiveDefiniteError,
    SingularModelError,
    UnknownLabelError,
)
from diffinfo.feature_spec import EigenBlock, FeatureSpec, LabelGroup, PencilBlock, Projection

logger = logging.getLogger(__name__)

PencilRoute = Literal["cholesky", "whitening"]

SINGULAR_THRESHOLD = 1e-12


@dataclass(frozen=True, eq=False)
class WhiteningOperator:
    """
    白色化作用素 L = Λ^(−1/2)Φᵀ と着色作用素 L⁻¹ = ΦΛ^(1/2)

    inverseの列はスケールした基底 u_k = √λ_k φ_k。
    """

    forward: Matrix
    inverse: Matrix
    model: ClassModel

    def __post_init__(self):
        object.__setattr__(self, "forward", frozen(self.forward))
        object.__setattr__(self, "inverse", frozen(self.inverse))

    @property
    def mean(self) -> Vector:
        return self.model.mean

    @property
    def dim(self) -> int:
        return int(self.forward.shape[0])


def whitening_operator(model: ClassModel) -> WhiteningOperator:
    """
    クラスモデルから白色化作用素を構成

    forwardの行は固有値降順に φ_kᵀ/√λ_k。

    Args:
        model: 正定値の共分散を持つクラスモデル

    Returns:
        WhiteningOperator: L·cov·Lᵀ = I を満たす作用素

    Raises:
        SingularModelError: λ_k <= 1e−12·λ_max の固有値がある場合
    """
    eig = model.eig
    eigenvalues = eig.eigenvalues
    largest = eigenvalues[0]
    if not largest > 0 or np.any(eigenvalues <= SINGULAR_THRESHOLD * largest):
        raise SingularModelError(
            f"クラス {model.label} の共分散は白色化できません: 最小固有値 {eigenvalues[-1]:.3e}, 最大固有値 {largest:.3e}"
        )
    roots = np.sqrt(eigenvalues)
    forward = eig.eigenvectors.T / roots[:, None]
    inverse = eig.eigenvectors * roots
    return WhiteningOperator(forward=forward, inverse=inverse, model=model)


def _as_samples(samples: npt.ArrayLike, dim: int) -> np.ndarray:
    array = np.asarray(samples, dtype=np.float64)
    if array.ndim not in (1, 2) or array.shape[-1] != dim:
        raise DimensionMismatchError(f"サンプルの次元 {array.shape} が作用素の次元 {dim} と一致しません")
    return array


def whiten(op: WhiteningOperator, samples: npt.ArrayLike) -> np.ndarray:
    """平均を引いてLを掛ける。ベクトル1本でも行に並べたサンプルでもよい"""
    array = _as_samples(samples, op.dim)
    return (array - op.mean) @ op.forward.T


def color(op: WhiteningOperator, samples: npt.ArrayLike) -> np.ndarray:
    """L⁻¹を掛けて平均を戻す（whitenの逆）"""
    array = _as_samples(samples, op.dim)
    return array @ op.inverse.T + op.mean


@dataclass(frozen=True, eq=False)
class PencilBasis:
    """
    行列ペンシル (A, B) の一般化固有値 μ_k（降順）とB正規直交な固有ベクトル ψ̃_k（列）
    """

    eigenvalues: Vector
    vectors: Matrix
    a_model: ClassModel
    b_model: ClassModel
    route: PencilRoute = "cholesky"

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", frozen(self.eigenvalues))
        object.__setattr__(self, "vectors", frozen(self.vectors))

    @property
    def size(self) -> int:
        return int(self.eigenvalues.shape[0])

    def residuals(self) -> Vector:
        """各kについて ‖Aψ̃_k − μ_k Bψ̃_k‖₂ / (‖A‖_F + μ_k‖B‖_F)"""
        a = self.a_model.cov
        b = self.b_model.cov
        diff = a @ self.vectors - (b @ self.vectors) * self.eigenvalues
        scale = np.linalg.norm(a) + np.abs(self.eigenvalues) * np.linalg.norm(b)
        return np.linalg.norm(diff, axis=0) / scale

    def b_gram(self) -> Matrix:
        """Ψ̃ᵀBΨ̃（単位行列になるはず）"""
        return self.vectors.T @ self.b_model.cov @ self.vectors

    def truncate(self, energy: float) -> "PencilBasis":
        """
        μ_kの累積和が energy·Σμ_k に達する最小の先頭集合だけを残す

        Args:
            energy: 0 < energy <= 1

        Returns:
            PencilBasis: 切り詰めた基底（energy=1なら全て）
        """
        count = energy_count(self.eigenvalues, energy)
        return PencilBasis(
            eigenvalues=self.eigenvalues[:count],
            vectors=self.vectors[:, :count],
            a_model=self.a_model,
            b_model=self.b_model,
            route=self.route,
        )

    def whitened_frame(self) -> Matrix:
        """ψ_k = (Lᵀ)⁻¹ψ̃_k、つまり基準クラスで白色化した空間でのLYのKL基底"""
        op = whitening_operator(self.b_model)
        return op.inverse.T @ self.vectors

    def information_profile(self) -> dict[str, float]:
        """
        差分情報の要約。同一クラスなら全てのμ_kが1となりmean_abs_log_muは0

        Returns:
            dict: max_mu, min_mu, mean_abs_log_mu
        """
        positive = np.clip(self.eigenvalues, np.finfo(np.float64).tiny, None)
        return {
            "max_mu": float(self.eigenvalues[0]),
            "min_mu": float(self.eigenvalues[-1]),
            "mean_abs_log_mu": float(np.mean(np.abs(np.log(positive)))),
        }


def energy_count(eigenvalues: npt.ArrayLike, energy: float) -> int:
    """
    降順の固有値から、累積和が energy·総和 以上となる最小の個数を求める

    Args:
        eigenvalues: 降順の固有値
        energy: 0 < energy <= 1

    Returns:
        int: 保持する個数
    """
    if not 0.0 < energy <= 1.0:
        raise InvalidArgumentError(f"energyは0より大きく1以下である必要があります: {energy}")
    values = np.clip(np.asarray(eigenvalues, dtype=np.float64), 0.0, None)
    if energy == 1.0:
        return int(values.shape[0])
    total = float(values.sum())
    if total <= 0.0:
        return int(values.shape[0])
    cumulative = np.cumsum(values)
    target = energy * total * (1.0 - 1e-12)
    return int(np.searchsorted(cumulative, target, side="left") + 1)


def _whitening_route(a_model: ClassModel, b_model: ClassModel, solver: EigenSolver) -> tuple[Vector, Matrix]:
    # L A Lᵀ の固有ベクトル ψ_k から ψ̃_k = Lᵀψ_k
    op = whitening_operator(b_model)
    reduced = op.forward @ a_model.cov @ op.forward.T
    eig = sym_eig(0.5 * (reduced + reduced.T), solver=solver)
    return eig.eigenvalues, op.forward.T @ eig.eigenvectors


def _cholesky_route(a_model: ClassModel, b_model: ClassModel, solver: EigenSolver) -> tuple[Vector, Matrix]:
    # B = GGᵀ として G⁻¹AG⁻ᵀ の固有ベクトル v_k から ψ̃_k = G⁻ᵀv_k
    try:
        factor = cholesky(b_model.cov)
    except NotPositiveDefiniteError as e:
        raise SingularModelError(f"基準クラス {b_model.label} の共分散が正定値ではありません: {e.message}") from e
    left = solve_triangular(factor, a_model.cov, "lower")
    reduced = solve_triangular(factor, left.T, "lower")
    eig = sym_eig(0.5 * (reduced + reduced.T), solver=solver)
    return eig.eigenvalues, solve_triangular(factor, eig.eigenvectors, "lower_transpose")


def pencil_eigenbasis(
    a_model: ClassModel,
    b_model: ClassModel,
    route: PencilRoute = "cholesky",
    solver: EigenSolver | None = None,
) -> PencilBasis:
    """
    行列ペンシル A ψ̃ = μ B ψ̃ を解く

    Args:
        a_model: 対象クラス（共分散A）
        b_model: 基準クラス（共分散B、正定値）
        route: "cholesky"（B = GGᵀ による簡約）または "whitening"（L A Lᵀ の固有値分解）
        solver: 固有値ソルバ。省略時はb_modelのソルバ

    Returns:
        PencilBasis: 降順のμ_kとB正規直交なψ̃_k

    Raises:
        SingularModelError: Bが正定値でない場合
        NoConvergenceError: 固有値分解が収束しない場合
    """
    if a_model.dim != b_model.dim:
        raise DimensionMismatchError(f"ペンシルの次元が一致しません: {a_model.dim} と {b_model.dim}")
    solver = solver or b_model.solver

    if route == "cholesky":
        eigenvalues, vectors = _cholesky_route(a_model, b_model, solver)
    elif route == "whitening":
        eigenvalues, vectors = _whitening_route(a_model, b_model, solver)
    else:
        raise InvalidArgumentError(f"未知のルートです: {route}")

    vectors = normalize_signs(vectors)
    if np.any(eigenvalues <= 0):
        logger.warning(f"ペンシル ({a_model.label}, {b_model.label}) に正でない固有値があります: 最小 {eigenvalues[-1]:.3e}")
    logger.info(
        f"ペンシル求解完了: A={a_model.label}, B={b_model.label}, route={route}, "
        f"μ_max={eigenvalues[0]:.4g}, μ_min={eigenvalues[-1]:.4g}"
    )
    return PencilBasis(eigenvalues=eigenvalues, vectors=vectors, a_model=a_model, b_model=b_model, route=route)


class ModelBank(Mapping):
    """
    ラベル群からクラスモデルを必要に応じて作るキャッシュ付きの対応表

    単一ラベルはestimate_class_model、複数ラベルはpool_classesで作る。
    """

    def __init__(
        self,
        samples_by_label: Mapping[int, npt.ArrayLike],
        ridge: float = DEFAULT_RIDGE,
        unbiased: bool = False,
        solver: EigenSolver = "jacobi",
    ):
        self.samples_by_label = {label: np.asarray(samples, dtype=np.float64) for label, samples in samples_by_label.items()}
        self.ridge = ridge
        self.unbiased = unbiased
        self.solver = solver
        self._models: dict[LabelGroup, ClassModel] = {}
        self._lock = threading.Lock()

    def _normalize(self, key: int | LabelGroup) -> LabelGroup:
        group = (key,) if isinstance(key, (int, np.integer)) else tuple(key)
        unknown = [label for label in group if label not in self.samples_by_label]
        if unknown:
            raise UnknownLabelError(f"学習データにないクラスです: {unknown}（利用可能: {sorted(self.samples_by_label)}）")
        return group

    def __getitem__(self, key: int | LabelGroup) -> ClassModel:
        group = self._normalize(key)
        with self._lock:
            if group not in self._models:
                if len(group) == 1:
                    model = estimate_class_model(
                        self.samples_by_label[group[0]], group[0], self.ridge, self.unbiased, self.solver
                    )
                else:
                    model = pool_classes(
                        [(label, self.samples_by_label[label]) for label in group],
                        self.ridge,
                        self.unbiased,
                        self.solver,
                    )
                self._models[group] = model
            return self._models[group]

    def __iter__(self):
        return iter((label,) for label in self.samples_by_label)

    def __len__(self) -> int:
        return len(self.samples_by_label)

    def pooled_mean(self) -> Vector:
        """全クラスの学習データを結合した平均"""
        return np.vstack(list(self.samples_by_label.values())).mean(axis=0)


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """
    学習済みモデルに対して具体化した特徴量仕様

    projectionの行は各ブロックの基底ベクトルを連結したもの。
    block_boundariesは2番目以降の各ブロックの開始行。
    """

    projection: Matrix
    center: Vector
    block_boundaries: tuple[int, ...]
    spec: FeatureSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "projection", frozen(self.projection))
        object.__setattr__(self, "center", frozen(self.center))

    @property
    def dim(self) -> int:
        return int(self.projection.shape[1])

    @property
    def width(self) -> int:
        return int(self.projection.shape[0])


def _model(models: Mapping, group: LabelGroup) -> ClassModel:
    try:
        return models[group]
    except KeyError as e:
        if isinstance(e, UnknownLabelError):
            raise
        raise UnknownLabelError(f"モデルが登録されていないクラスです: {group}") from e


def _center(spec: FeatureSpec, models: Mapping, dim: int) -> Vector:
    if spec.centering == "none":
        return np.zeros(dim)
    if spec.centering == "reference":
        return _model(models, spec.reference_group()).mean
    if isinstance(models, ModelBank):
        return models.pooled_mean()
    # 単一クラスのモデルだけが渡された場合はサンプル数で重み付けした平均
    singles = [_model(models, (label,)) for label in sorted(spec.labels())]
    weights = np.array([model.sample_count for model in singles], dtype=np.float64)
    return np.average(np.vstack([model.mean for model in singles]), axis=0, weights=weights)


def _pencil_rows(
    block: PencilBlock,
    models: Mapping,
    route: PencilRoute,
    projection: Projection,
    energy: float,
) -> Matrix:
    basis = pencil_eigenbasis(_model(models, block.target), _model(models, block.reference), route=route)
    if energy < 1.0:
        basis = basis.truncate(energy)
    vectors = basis.vectors
    if projection == "euclidean":
        return (vectors / np.linalg.norm(vectors, axis=0)).T
    if projection == "b_inner":
        # ⟨x, ψ̃_k⟩_B = xᵀBψ̃_k
        return (basis.b_model.cov @ vectors).T
    raise InvalidArgumentError(f"未知の射影方法です: {projection}")


def build_feature_map(
    spec: FeatureSpec,
    models: Mapping,
    route: PencilRoute = "cholesky",
    projection: Projection = "euclidean",
    energy: float = 1.0,
) -> FeatureMap:
    """
    特徴量仕様から射影行列を組み立てる

    Pencilブロックは正規化したψ̃_k、ClassEigenブロックは共分散の固有ベクトルを行に並べる。

    Args:
        spec: 特徴量仕様
        models: ラベル群 → ClassModel の対応（通常はModelBank）
        route: ペンシルの解法
        projection: "euclidean" または "b_inner"
        energy: Pencilブロックの固有値エネルギーによる切り詰め比率

    Returns:
        FeatureMap: 射影行列・中心・ブロック境界

    Raises:
        UnknownLabelError: 対応表にないラベルがある場合
    """
    blocks = []
    for block in spec.blocks:
        if isinstance(block, PencilBlock):
            blocks.append(_pencil_rows(block, models, route, projection, energy))
        elif isinstance(block, EigenBlock):
            blocks.append(_model(models, block.group).eig.eigenvectors.T)
        else:
            raise InvalidArgumentError(f"未知のブロックです: {block!r}")

    widths = [rows.shape[0] for rows in blocks]
    boundaries = tuple(int(offset) for offset in np.cumsum(widths)[:-1])
    projection_matrix = np.vstack(blocks)
    center = _center(spec, models, projection_matrix.shape[1])
    logger.info(f"特徴量マップ構築完了: {spec.canonical()} → {sum(widths)}次元, 境界 {boundaries}")
    return FeatureMap(projection=projection_matrix, center=center, block_boundaries=boundaries, spec=spec)


def extract_features(feature_map: FeatureMap, x: npt.ArrayLike) -> Vector:
    """
    1サンプルの特徴量 projection·(x − center)

    Args:
        feature_map: 特徴量マップ
        x: 入力ベクトル

    Returns:
        Vector: 特徴量
    """
    vector = np.asarray(x, dtype=np.float64)
    if vector.ndim != 1 or vector.shape[0] != feature_map.dim:
        raise DimensionMismatchError(f"入力の次元 {vector.shape} が特徴量マップの次元 {feature_map.dim} と一致しません")
    return feature_map.projection @ (vector - feature_map.center)


def extract_features_batch(feature_map: FeatureMap, samples: npt.ArrayLike, chunk_size: int = 4096) -> Matrix:
    """行に並べたサンプルの特徴量を、入力順を保ったまま分割して計算"""
    matrix = np.asarray(samples, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != feature_map.dim:
        raise DimensionMismatchError(f"入力の次元 {matrix.shape} が特徴量マップの次元 {feature_map.dim} と一致しません")
    output = np.empty((matrix.shape[0], feature_map.width))
    for start in range(0, matrix.shape[0], chunk_size):
        chunk = matrix[start:start + chunk_size]
        output[start:start + chunk_size] = (chunk - feature_map.center) @ feature_map.projection.T
    return output

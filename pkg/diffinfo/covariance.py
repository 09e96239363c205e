"""
クラスモデルの推定
クラスごとの平均・正則化共分散と、その固有値分解を保持するClassModel
"""

import logging
import threading
from collections.abc import Hashable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from diffinfo.dense_linalg import EigenDecomposition, EigenSolver, Matrix, Vector, frozen, sym_eig
from diffinfo.errors import DimensionMismatchError, InvalidArgumentError, TooFewSamplesError

logger = logging.getLogger(__name__)

DEFAULT_RIDGE = 1e-3


@dataclass(frozen=True, eq=False)
class ClassModel:
    """
    1クラス（または結合したクラス群）の統計モデル

    covは正則化済みの共分散。固有値分解eigは初回アクセス時に一度だけ計算して保持する（スレッド間で共有可）。
    """

    label: Hashable
    mean: Vector
    cov: Matrix
    sample_count: int
    ridge: float = DEFAULT_RIDGE
    solver: EigenSolver = "jacobi"

    def __post_init__(self):
        object.__setattr__(self, "mean", frozen(self.mean))
        object.__setattr__(self, "cov", frozen(self.cov))
        if self.cov.shape != (self.dim, self.dim):
            raise DimensionMismatchError(f"平均 {self.mean.shape} と共分散 {self.cov.shape} の次元が一致しません")
        object.__setattr__(self, "_eig_lock", threading.Lock())
        object.__setattr__(self, "_eig", None)

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    @property
    def eig(self) -> EigenDecomposition:
        with self._eig_lock:
            if self._eig is None:
                logger.info(f"クラス {self.label} の共分散を固有値分解中: n={self.dim}, solver={self.solver}")
                object.__setattr__(self, "_eig", sym_eig(self.cov, solver=self.solver))
            return self._eig

    @property
    def condition_number(self) -> float:
        """正則化後の共分散の条件数 λ_max / λ_min"""
        eigenvalues = self.eig.eigenvalues
        smallest = eigenvalues[-1]
        return float(eigenvalues[0] / smallest) if smallest > 0 else float("inf")


def stack_samples(samples: npt.ArrayLike | Sequence[npt.ArrayLike]) -> Matrix:
    """
    サンプル列を (N, n) の行列にまとめる

    Args:
        samples: ベクトルのリスト、または行にサンプルを並べた配列

    Returns:
        Matrix: float64の行列

    Raises:
        DimensionMismatchError: 次元がそろっていない場合
    """
    if isinstance(samples, np.ndarray):
        matrix = np.asarray(samples, dtype=np.float64)
    else:
        rows = [np.asarray(sample, dtype=np.float64).ravel() for sample in samples]
        dims = {row.shape[0] for row in rows}
        if len(dims) > 1:
            raise DimensionMismatchError(f"サンプルの次元がそろっていません: {sorted(dims)}")
        matrix = np.vstack(rows) if rows else np.empty((0, 0))
    if matrix.ndim == 1:
        matrix = matrix[None, :]
    if matrix.ndim != 2:
        raise DimensionMismatchError(f"サンプルは2次元配列である必要があります: shape={matrix.shape}")
    return matrix


def estimate_class_model(
    samples: npt.ArrayLike | Sequence[npt.ArrayLike],
    label: Hashable,
    ridge: float = DEFAULT_RIDGE,
    unbiased: bool = False,
    solver: EigenSolver = "jacobi",
) -> ClassModel:
    """
    サンプルから平均と正則化共分散を推定

    cov = (1/N)·Σ(x−μ)(x−μ)ᵀ + ridge·s·I, s = trace(生の共分散)/n。
    生の共分散のトレースが0のときはs = 1とする。

    Args:
        samples: 同じ次元のサンプル（2個以上）
        label: クラス識別子
        ridge: 正則化係数
        unbiased: Trueなら 1/(N−1) で正規化
        solver: 固有値分解に使うソルバ

    Returns:
        ClassModel: 推定したクラスモデル
    """
    matrix = stack_samples(samples)
    count = matrix.shape[0]
    if count < 2:
        raise TooFewSamplesError(f"クラス {label} のサンプルが{count}個しかありません（2個以上必要）")
    if ridge < 0:
        raise InvalidArgumentError(f"ridgeは0以上である必要があります: {ridge}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidArgumentError(f"クラス {label} のサンプルにNaNまたはInfが含まれています")

    dim = matrix.shape[1]
    mean = matrix.mean(axis=0)
    centered = matrix - mean
    raw = centered.T @ centered / (count - 1 if unbiased else count)
    raw = 0.5 * (raw + raw.T)

    scale = float(np.trace(raw)) / dim
    if scale <= 0.0:
        scale = 1.0
    cov = raw + ridge * scale * np.eye(dim)

    logger.info(f"クラスモデル推定完了: label={label}, N={count}, n={dim}, ridge={ridge}")
    return ClassModel(label=label, mean=mean, cov=cov, sample_count=count, ridge=ridge, solver=solver)


def pool_classes(
    models_samples: Iterable[tuple[Hashable, npt.ArrayLike | Sequence[npt.ArrayLike]]],
    ridge: float = DEFAULT_RIDGE,
    unbiased: bool = False,
    solver: EigenSolver = "jacobi",
) -> ClassModel:
    """
    複数クラスのサンプルを連結して1つのモデルを推定（クラス別共分散の平均ではない）

    Args:
        models_samples: (ラベル, サンプル) の列
        ridge: 正則化係数
        unbiased: Trueなら 1/(N−1) で正規化
        solver: 固有値分解に使うソルバ

    Returns:
        ClassModel: ラベルが構成ラベルのタプルになったモデル
    """
    labels = []
    blocks = []
    for label, samples in models_samples:
        labels.append(label)
        blocks.append(stack_samples(samples))
    if not blocks:
        raise TooFewSamplesError("結合するクラスがありません")

    dims = {block.shape[1] for block in blocks}
    if len(dims) > 1:
        raise DimensionMismatchError(f"結合するクラスの次元がそろっていません: {sorted(dims)}")

    return estimate_class_model(np.vstack(blocks), tuple(labels), ridge=ridge, unbiased=unbiased, solver=solver)

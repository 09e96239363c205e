"""
k近傍分類
抽出した特徴量に対する総当たりのユークリッド距離k-NNと正解率
"""

import logging
from collections.abc import Hashable, Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from diffinfo.dense_linalg import Matrix, frozen
from diffinfo.errors import DimensionMismatchError, EmptyTrainingSetError, InvalidArgumentError, LengthMismatchError

logger = logging.getLogger(__name__)

DEFAULT_K = 3
ROUNDING_SLACK = 1e-10


@dataclass(frozen=True, eq=False)
class LabeledSet:
    """特徴量（行がサンプル）とラベル"""

    features: Matrix
    labels: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim == 1:
            features = features[:, None]
        labels = np.asarray(self.labels)
        labels = labels.copy()
        labels.setflags(write=False)
        if features.ndim != 2 or features.shape[0] != labels.shape[0]:
            raise LengthMismatchError(f"特徴量の行数 {features.shape} とラベル数 {labels.shape} が一致しません")
        object.__setattr__(self, "features", frozen(features))
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])


def _check_query(train: LabeledSet, dim: int, k: int) -> None:
    if len(train) == 0:
        raise EmptyTrainingSetError("学習データが空です")
    if dim != train.dim:
        raise DimensionMismatchError(f"クエリの次元 {dim} が学習データの次元 {train.dim} と一致しません")
    if not 1 <= k <= len(train):
        raise InvalidArgumentError(f"kは1以上{len(train)}以下である必要があります: {k}")


def _nearest(squared: np.ndarray, k: int) -> np.ndarray:
    # k番目の距離と同値のものは添字の小さい順に採用する
    kth = np.partition(squared, k - 1)[k - 1]
    candidates = np.flatnonzero(squared <= kth)
    order = np.lexsort((candidates, squared[candidates]))
    return candidates[order[:k]]


def _nearest_exact(features: np.ndarray, query: np.ndarray, expanded: np.ndarray, slack: float, k: int) -> tuple[np.ndarray, np.ndarray]:
    # 展開式の距離で候補を絞り、候補だけ差の二乗和で計算し直す
    kth = np.partition(expanded, k - 1)[k - 1]
    pool = np.flatnonzero(expanded <= kth + slack)
    squared = np.sum((features[pool] - query) ** 2, axis=1)
    nearest = _nearest(squared, k)
    return pool[nearest], squared[nearest]


def _vote(labels: np.ndarray, distances: np.ndarray) -> Hashable:
    # 多数決。同票なら距離の合計が小さい方、さらに同じならラベルの小さい方
    tally: dict = {}
    for label, distance in zip(labels.tolist(), distances.tolist()):
        count, total = tally.get(label, (0, 0.0))
        tally[label] = (count + 1, total + distance)
    return min(tally, key=lambda label: (-tally[label][0], tally[label][1], label))


def knn_classify(train: LabeledSet, query: npt.ArrayLike, k: int = DEFAULT_K) -> Hashable:
    """
    1件のクエリをk-NNで分類

    Args:
        train: 学習データ
        query: クエリの特徴量
        k: 近傍数

    Returns:
        Hashable: 予測ラベル
    """
    vector = np.asarray(query, dtype=np.float64).ravel()
    _check_query(train, vector.shape[0], k)
    squared = np.sum((train.features - vector) ** 2, axis=1)
    nearest = _nearest(squared, k)
    return _vote(train.labels[nearest], np.sqrt(squared[nearest]))


def knn_classify_batch(
    train: LabeledSet,
    queries: npt.ArrayLike,
    k: int = DEFAULT_K,
    chunk_size: int = 256,
) -> np.ndarray:
    """
    複数のクエリをまとめて分類

    距離は ‖q‖² + ‖t‖² − 2q·t で分割計算し、k番目付近の候補だけ差から計算し直す。
    そのため近傍の選び方・投票・同値処理はknn_classifyと一致する。

    Args:
        train: 学習データ
        queries: 行にクエリを並べた行列
        k: 近傍数
        chunk_size: 一度に距離を計算するクエリ数

    Returns:
        np.ndarray: 予測ラベル（入力順）
    """
    matrix = np.asarray(queries, dtype=np.float64)
    if matrix.ndim != 2:
        raise DimensionMismatchError(f"クエリは2次元配列である必要があります: shape={matrix.shape}")
    _check_query(train, matrix.shape[1], k)

    train_norms = np.einsum("ij,ij->i", train.features, train.features)
    max_train_norm = float(train_norms.max())
    predictions = []
    for start in range(0, matrix.shape[0], chunk_size):
        chunk = matrix[start:start + chunk_size]
        chunk_norms = np.einsum("ij,ij->i", chunk, chunk)
        squared = chunk_norms[:, None] + train_norms[None, :] - 2.0 * (chunk @ train.features.T)
        np.maximum(squared, 0.0, out=squared)
        for query, query_norm, row in zip(chunk, chunk_norms, squared):
            slack = ROUNDING_SLACK * (query_norm + max_train_norm)
            nearest, exact = _nearest_exact(train.features, query, row, slack, k)
            predictions.append(_vote(train.labels[nearest], np.sqrt(exact)))
        logger.debug(f"k-NN分類: {min(start + chunk_size, matrix.shape[0])}/{matrix.shape[0]}件完了")
    return np.array(predictions, dtype=train.labels.dtype)


def accuracy(predicted: Sequence | np.ndarray, truth: Sequence | np.ndarray) -> float:
    """
    正解率（パーセント）

    Args:
        predicted: 予測ラベル
        truth: 正解ラベル

    Returns:
        float: 100·一致数/総数
    """
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.size == 0:
        raise LengthMismatchError(f"予測 {predicted.shape} と正解 {truth.shape} の長さが一致しないか空です")
    return 100.0 * float(np.count_nonzero(predicted == truth)) / predicted.size

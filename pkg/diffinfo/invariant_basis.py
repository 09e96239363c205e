"""
変換に依存しない基底（決定論的信号）
有限個の巡回シフト／平行移動にわたる相関行列 R を作り、その固有基底で
射影係数 a_k(τ) が互いに直交することを確かめる
"""

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import numpy.typing as npt

from diffinfo.dense_linalg import EigenDecomposition, EigenSolver, Matrix, as_matrix, frozen, sym_eig
from diffinfo.errors import GeometryMismatchError, InvalidArgumentError
from diffinfo.models import InvariantReport
from diffinfo.pencil import energy_count

logger = logging.getLogger(__name__)

TransformKind = Literal["cyclic-shift-1d", "cyclic-translate-2d"]
Offset = int | tuple[int, int]

DEFAULT_ENERGY = 0.95
DEFAULT_CONDITION_LIMIT = 100.0


@dataclass(frozen=True)
class TransformationSet:
    """
    恒等変換を含む有限個の変換

    1次元ではオフセットは整数、2次元では (dy, dx)。2次元はshapeに (rows, cols) が必要。
    """

    kind: TransformKind
    elements: tuple[Offset, ...]
    shape: tuple[int, int] | None = field(default=None)

    def __post_init__(self):
        if not self.elements:
            raise InvalidArgumentError("変換集合が空です")
        if len(set(self.elements)) != len(self.elements):
            raise InvalidArgumentError(f"変換集合に重複があります: {self.elements}")
        identity = 0 if self.kind == "cyclic-shift-1d" else (0, 0)
        if identity not in self.elements:
            raise InvalidArgumentError("変換集合に恒等変換が含まれていません")
        if self.kind == "cyclic-translate-2d" and self.shape is None:
            raise InvalidArgumentError("2次元の平行移動には画像の形 (rows, cols) が必要です")

    def __len__(self) -> int:
        return len(self.elements)

    def _check_geometry(self, length: int) -> None:
        if self.kind == "cyclic-shift-1d":
            bad = [offset for offset in self.elements if not -length < offset < length]
        else:
            rows, cols = self.shape
            if rows * cols != length:
                raise GeometryMismatchError(f"信号長 {length} が画像の形 {rows}x{cols} と一致しません")
            bad = [offset for offset in self.elements if not (-rows < offset[0] < rows and -cols < offset[1] < cols)]
        if bad:
            raise GeometryMismatchError(f"信号の形に合わないオフセットがあります: {bad}")
        reduced = {self._reduce(offset, length) for offset in self.elements}
        if len(reduced) != len(self.elements):
            raise GeometryMismatchError(f"巡回で同じ変換になるオフセットがあります: {self.elements} (信号長 {length})")

    def _reduce(self, offset: Offset, length: int) -> Offset:
        if self.kind == "cyclic-shift-1d":
            return offset % length
        rows, cols = self.shape
        return offset[0] % rows, offset[1] % cols

    def apply(self, x: npt.ArrayLike, offset: Offset) -> np.ndarray:
        """1つの変換 τ.x を適用"""
        vector = np.asarray(x, dtype=np.float64).ravel()
        if self.kind == "cyclic-shift-1d":
            return np.roll(vector, offset)
        rows, cols = self.shape
        return np.roll(vector.reshape(rows, cols), offset, axis=(0, 1)).ravel()

    def orbit(self, x: npt.ArrayLike) -> np.ndarray:
        """全変換を適用した信号を行に並べた行列 (変換数, n)"""
        vector = np.asarray(x, dtype=np.float64).ravel()
        self._check_geometry(vector.shape[0])
        return np.vstack([self.apply(vector, offset) for offset in self.elements])


def _centered_span(max_offset: int) -> list[int]:
    # 0, -1, 1, -2, 2, ... の順
    return sorted(range(-max_offset, max_offset + 1), key=lambda s: (abs(s), s))


def _distinct(offsets, key) -> tuple:
    # 巡回で同じになるオフセットは絶対値の小さいものだけ残す
    seen = set()
    kept = []
    for offset in offsets:
        if key(offset) not in seen:
            seen.add(key(offset))
            kept.append(offset)
    return tuple(kept)


def cyclic_shifts(length: int, max_offset: int | None = None) -> TransformationSet:
    """長さlengthの信号の巡回シフト。max_offsetを与えると |s| <= max_offset のシフトのみ（巡回で重なるものは1つ）"""
    if max_offset is None:
        return TransformationSet("cyclic-shift-1d", tuple(range(length)))
    offsets = _distinct(_centered_span(max_offset), lambda s: s % length)
    return TransformationSet("cyclic-shift-1d", offsets)


def cyclic_translations(rows: int, cols: int, max_offset: int | None = None) -> TransformationSet:
    """
    画像の巡回平行移動

    Args:
        rows: 画像の行数
        cols: 画像の列数
        max_offset: |dy|, |dx| の上限。Noneなら全ての平行移動

    Returns:
        TransformationSet: 2次元の変換集合
    """
    if max_offset is None:
        offsets = tuple((dy, dx) for dy in range(rows) for dx in range(cols))
    else:
        span = _centered_span(max_offset)
        offsets = _distinct(((dy, dx) for dy in span for dx in span), lambda o: (o[0] % rows, o[1] % cols))
    return TransformationSet("cyclic-translate-2d", offsets, shape=(rows, cols))


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """射影係数 a_k(τ_p)。行が基底番号k、列が変換番号p"""

    entries: Matrix

    def __post_init__(self):
        object.__setattr__(self, "entries", frozen(self.entries))

    def gram(self) -> Matrix:
        """G(k, l) = Σ_p a_k(τ_p)·a_l(τ_p)"""
        return self.entries @ self.entries.T


def transformation_correlation(x: npt.ArrayLike, ts: TransformationSet) -> Matrix:
    """
    変換集合にわたる相関行列 R(i, j) = Σ_p (τ_p.x)(i)·(τ_p.x)(j)

    Args:
        x: 信号
        ts: 変換集合

    Returns:
        Matrix: 対称半正定値の相関行列
    """
    orbit = ts.orbit(x)
    correlation = orbit.T @ orbit
    return 0.5 * (correlation + correlation.T)


def invariant_eigenbasis(
    r: npt.ArrayLike,
    energy: float = 1.0,
    solver: EigenSolver = "jacobi",
) -> EigenDecomposition:
    """
    相関行列を固有値分解し、エネルギー比で先頭の固有対を残す

    Args:
        r: 対称半正定値の相関行列
        energy: 0 < energy <= 1。固有値の累積和が energy·trace(r) に達する最小集合を残す
        solver: 固有値ソルバ

    Returns:
        EigenDecomposition: 切り詰めた（energy=1なら完全な）固有値分解
    """
    decomposition = sym_eig(r, solver=solver)
    count = energy_count(decomposition.eigenvalues, energy)
    return decomposition.truncate(count)


def _basis_matrix(basis: EigenDecomposition | npt.ArrayLike) -> Matrix:
    if isinstance(basis, EigenDecomposition):
        return basis.eigenvectors
    return as_matrix(basis, "basis")


def coefficient_table(
    x: npt.ArrayLike,
    ts: TransformationSet,
    basis: EigenDecomposition | npt.ArrayLike,
) -> CoefficientTable:
    """a_k(τ_p) = ⟨τ_p.x, φ_k⟩ の表を作る。basisは列に基底を並べたもの"""
    vectors = _basis_matrix(basis)
    orbit = ts.orbit(x)
    if vectors.shape[0] != orbit.shape[1]:
        raise GeometryMismatchError(f"基底の次元 {vectors.shape[0]} が信号長 {orbit.shape[1]} と一致しません")
    return CoefficientTable(vectors.T @ orbit.T)


def coefficient_gram(
    x: npt.ArrayLike,
    ts: TransformationSet,
    basis: EigenDecomposition | npt.ArrayLike,
) -> Matrix:
    """
    射影係数関数どうしの内積 G(k, l) = Σ_p a_k(τ_p)·a_l(τ_p)

    basisがRの固有基底なら G = diag(λ_k) となる。

    Args:
        x: 信号
        ts: 変換集合
        basis: 基底（EigenDecompositionまたは列に基底を並べた行列）

    Returns:
        Matrix: 係数のグラム行列
    """
    return coefficient_table(x, ts, basis).gram()


def off_diagonal_ratio(gram: npt.ArrayLike) -> float:
    """非対角成分の最大絶対値 / 対角成分の最大値"""
    matrix = np.asarray(gram, dtype=np.float64)
    diagonal = np.abs(np.diag(matrix))
    off = np.abs(matrix - np.diag(np.diag(matrix)))
    peak = diagonal.max() if diagonal.size else 0.0
    return float(off.max() / peak) if peak > 0 else float("inf")


def normalized_gram(gram: npt.ArrayLike) -> Matrix:
    """対角を1にそろえたグラム行列 G(k,l)/√(G(k,k)G(l,l))"""
    matrix = np.asarray(gram, dtype=np.float64)
    scale = np.sqrt(np.clip(np.diag(matrix), np.finfo(np.float64).tiny, None))
    return matrix / np.outer(scale, scale)


def analyze_invariance(
    x: npt.ArrayLike,
    ts: TransformationSet,
    energy: float = DEFAULT_ENERGY,
    condition_limit: float = DEFAULT_CONDITION_LIMIT,
    solver: EigenSolver = "jacobi",
) -> InvariantReport:
    """
    相関行列の固有基底で係数グラムの直交性を評価

    条件数 λ_max/λ_min がcondition_limitを超える場合は、energyの比率で固有値を切り詰める。

    Args:
        x: 信号
        ts: 変換集合
        energy: 悪条件のときに使うエネルギー比
        condition_limit: 切り詰めを行う条件数の閾値
        solver: 固有値ソルバ

    Returns:
        InvariantReport: 評価結果
    """
    correlation = transformation_correlation(x, ts)
    full = sym_eig(correlation, solver=solver)
    largest = float(full.eigenvalues[0])
    smallest = float(full.eigenvalues[-1])
    ratio = largest / smallest if smallest > 0 else float("inf")

    truncated = ratio > condition_limit
    basis = invariant_eigenbasis(correlation, energy, solver) if truncated else full
    if truncated:
        logger.warning(f"相関行列が悪条件です (比 {ratio:.3e})。エネルギー {energy:.0%} で {basis.size}/{full.size} 個に切り詰めます")

    gram = coefficient_gram(x, ts, basis)
    projected = basis.eigenvectors.T @ correlation @ basis.eigenvectors
    diagonal = np.diag(gram)
    eigen_gap = np.abs(diagonal - basis.eigenvalues) / max(abs(largest), np.finfo(np.float64).tiny)

    normalized = normalized_gram(gram)
    report = InvariantReport(
        kind=ts.kind,
        signal_length=int(correlation.shape[0]),
        transformation_count=len(ts),
        condition_ratio=ratio,
        truncated=truncated,
        retained=basis.size,
        off_diagonal_ratio=off_diagonal_ratio(gram),
        normalized_off_diagonal_max=float(np.max(np.abs(normalized - np.diag(np.diag(normalized))))),
        eigenvalue_gap=float(eigen_gap.max()),
        projection_gap=float(np.max(np.abs(gram - projected)) / max(abs(largest), np.finfo(np.float64).tiny)),
    )
    logger.info(f"不変基底の評価完了: 保持 {report.retained}, 非対角比 {report.off_diagonal_ratio:.3e}")
    return report

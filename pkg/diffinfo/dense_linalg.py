"""
密行列の実数線形代数
対称固有値分解（巡回Jacobi法）、Cholesky分解、三角行列の求解と基本演算
"""

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
import numpy.typing as npt

from diffinfo.errors import (
    DimensionMismatchError,
    InvalidArgumentError,
    NoConvergenceError,
    NonSymmetricError,
    NotPositiveDefiniteError,
)

logger = logging.getLogger(__name__)

Matrix = npt.NDArray[np.float64]
Vector = npt.NDArray[np.float64]
EigenSolver = Literal["jacobi", "lapack"]
TriangularSide = Literal["lower", "lower_transpose"]

_EPS = np.finfo(np.float64).eps


def frozen(values: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """float64の読み取り専用コピーを返す"""
    array = np.array(values, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


def as_matrix(values: npt.ArrayLike, name: str = "matrix") -> Matrix:
    """
    入力を検証してfloat64の2次元配列に変換

    Args:
        values: 行列とみなせる入力
        name: エラーメッセージに使う名前

    Returns:
        Matrix: 検証済みの行列（入力とは別の配列）
    """
    matrix = np.array(values, dtype=np.float64, copy=True)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise DimensionMismatchError(f"{name}は1行1列以上の2次元配列である必要があります: shape={matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidArgumentError(f"{name}にNaNまたはInfが含まれています")
    return matrix


def max_abs(matrix: npt.ArrayLike) -> float:
    """最大値ノルム"""
    array = np.asarray(matrix)
    return float(np.max(np.abs(array))) if array.size else 0.0


def _require_square(matrix: Matrix, name: str) -> None:
    if matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(f"{name}は正方行列である必要があります: shape={matrix.shape}")


def _require_symmetric(matrix: Matrix, tol: float, name: str) -> None:
    scale = max_abs(matrix)
    asymmetry = max_abs(matrix - matrix.T)
    if asymmetry > tol * scale:
        raise NonSymmetricError(f"{name}が対称ではありません: max|m_ij - m_ji| = {asymmetry:.3e}")


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """
    対称行列の固有値分解

    eigenvaluesは降順、eigenvectorsの第k列が第k固有値に対応する単位ベクトル。
    切り詰めた分解では列数が行数より少なくなる。
    """

    eigenvalues: Vector
    eigenvectors: Matrix

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", frozen(self.eigenvalues))
        object.__setattr__(self, "eigenvectors", frozen(self.eigenvectors))
        if self.eigenvectors.ndim != 2 or self.eigenvectors.shape[1] != self.eigenvalues.shape[0]:
            raise DimensionMismatchError(
                f"固有ベクトル {self.eigenvectors.shape} と固有値 {self.eigenvalues.shape} の個数が一致しません"
            )

    @property
    def dim(self) -> int:
        return int(self.eigenvectors.shape[0])

    @property
    def size(self) -> int:
        return int(self.eigenvalues.shape[0])

    def reconstruct(self) -> Matrix:
        """V Λ Vᵀ を返す"""
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T

    def truncate(self, count: int) -> "EigenDecomposition":
        """先頭count組の固有対だけを残す"""
        if not 1 <= count <= self.size:
            raise InvalidArgumentError(f"保持数は1以上{self.size}以下である必要があります: {count}")
        return EigenDecomposition(self.eigenvalues[:count], self.eigenvectors[:, :count])


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """下三角のCholesky因子 (m = lower · lowerᵀ)"""

    lower: Matrix

    def __post_init__(self):
        object.__setattr__(self, "lower", frozen(self.lower))

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    def reconstruct(self) -> Matrix:
        return self.lower @ self.lower.T


def normalize_signs(vectors: Matrix) -> Matrix:
    """
    各列の絶対値最大の成分を正にそろえる（同値の場合は添字の小さい成分）

    Args:
        vectors: 列ベクトルを並べた行列

    Returns:
        Matrix: 符号を揃えた新しい行列
    """
    result = np.array(vectors, dtype=np.float64, copy=True)
    if result.size == 0:
        return result
    magnitudes = np.abs(result)
    # 丸め誤差程度の差は同値とみなし、添字の小さい成分を基準にする
    near_max = magnitudes >= magnitudes.max(axis=0) * (1.0 - 1e-10)
    pivots = np.argmax(near_max, axis=0)
    signs = np.sign(result[pivots, np.arange(result.shape[1])])
    signs[signs == 0] = 1.0
    return result * signs


def _sorted_decomposition(eigenvalues: Vector, eigenvectors: Matrix) -> EigenDecomposition:
    order = np.argsort(-eigenvalues, kind="stable")
    vectors = eigenvectors[:, order]
    vectors = vectors / np.linalg.norm(vectors, axis=0)
    return EigenDecomposition(eigenvalues[order], normalize_signs(vectors))


def _round_robin_pairs(size: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # 総当たり表の並べ方: 各ラウンドのsize/2組は互いに素で、size-1ラウンドで全組を一巡する
    players = list(range(size))
    half = size // 2
    rounds = []
    for _ in range(size - 1):
        top = np.array(players[:half])
        bottom = np.array(players[half:][::-1])
        rounds.append((top, bottom))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _off_diagonal_norm(matrix: Matrix) -> float:
    off = matrix.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def _jacobi(matrix: Matrix, max_sweeps: int) -> tuple[Vector, Matrix]:
    """並列順序の巡回Jacobi法。各ステップで互いに素なn/2個の回転をまとめて適用する"""
    n = matrix.shape[0]
    size = n + (n % 2)
    work = np.zeros((size, size))
    work[:n, :n] = matrix
    vectors = np.eye(size)

    if n == 1:
        return np.diag(work)[:n].copy(), vectors[:n, :n]

    rounds = _round_robin_pairs(size)
    scale = float(np.linalg.norm(matrix))
    tolerance = n * _EPS * scale
    previous = np.inf

    for sweep in range(max_sweeps + 1):
        off = _off_diagonal_norm(work)
        logger.debug(f"Jacobiスイープ {sweep}: 非対角ノルム {off:.3e}")
        if off <= tolerance or (off >= previous and off <= 1e-10 * scale):
            # 回転で埋めた零は丸め誤差で再び現れるため、停滞した時点も収束とみなす
            return np.diag(work)[:n].copy(), vectors[:n, :n]
        if sweep == max_sweeps:
            break
        previous = off

        for p, q in rounds:
            app = work[p, p]
            aqq = work[q, q]
            apq = work[p, q]
            active = apq != 0.0
            tau = np.divide(aqq - app, 2.0 * apq, out=np.zeros_like(apq), where=active)
            sign = np.where(tau >= 0.0, 1.0, -1.0)
            t = np.where(active, sign / (np.abs(tau) + np.hypot(1.0, tau)), 0.0)
            c = 1.0 / np.hypot(1.0, t)
            s = t * c

            col_p = work[:, p]
            col_q = work[:, q]
            work[:, p] = c * col_p - s * col_q
            work[:, q] = s * col_p + c * col_q

            row_p = work[p, :]
            row_q = work[q, :]
            work[p, :] = c[:, None] * row_p - s[:, None] * row_q
            work[q, :] = s[:, None] * row_p + c[:, None] * row_q
            work[p, q] = 0.0
            work[q, p] = 0.0

            vec_p = vectors[:, p]
            vec_q = vectors[:, q]
            vectors[:, p] = c * vec_p - s * vec_q
            vectors[:, q] = s * vec_p + c * vec_q

    raise NoConvergenceError(f"Jacobi法が{max_sweeps}スイープ以内に収束しませんでした (n={n})")


def sym_eig(
    m: npt.ArrayLike,
    tol: float = 1e-10,
    max_sweeps: int = 100,
    solver: EigenSolver = "jacobi",
) -> EigenDecomposition:
    """
    対称行列の固有値分解

    Args:
        m: 対称行列
        tol: 対称性の許容誤差 (max|m_ij - m_ji| <= tol * max|m|)
        max_sweeps: Jacobi法のスイープ上限
        solver: "jacobi"（自前の巡回Jacobi法）または "lapack"（numpy.linalg.eigh）

    Returns:
        EigenDecomposition: 降順の固有値と符号を揃えた単位固有ベクトル

    Raises:
        NonSymmetricError: 対称でない場合
        NoConvergenceError: スイープ上限を超えた場合
    """
    matrix = as_matrix(m, "m")
    _require_square(matrix, "m")
    _require_symmetric(matrix, tol, "m")
    matrix = 0.5 * (matrix + matrix.T)

    if solver == "jacobi":
        eigenvalues, eigenvectors = _jacobi(matrix, max_sweeps)
    elif solver == "lapack":
        eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    else:
        raise InvalidArgumentError(f"未知の固有値ソルバです: {solver}")

    return _sorted_decomposition(eigenvalues, eigenvectors)


def cholesky(m: npt.ArrayLike, tol: float = 1e-10) -> CholeskyFactor:
    """
    対称正定値行列のCholesky分解（左向き列順）

    Args:
        m: 対称正定値行列
        tol: 対称性の許容誤差

    Returns:
        CholeskyFactor: lower · lowerᵀ = m を満たす下三角因子

    Raises:
        NotPositiveDefiniteError: ピボットが正でない場合
    """
    matrix = as_matrix(m, "m")
    _require_square(matrix, "m")
    _require_symmetric(matrix, tol, "m")

    n = matrix.shape[0]
    lower = np.zeros_like(matrix)
    for j in range(n):
        row = lower[j, :j]
        pivot = matrix[j, j] - row @ row
        if not pivot > 0.0:
            raise NotPositiveDefiniteError(f"第{j}ピボットが正ではありません: {pivot:.3e}")
        lower[j, j] = np.sqrt(pivot)
        lower[j + 1:, j] = (matrix[j + 1:, j] - lower[j + 1:, :j] @ row) / lower[j, j]
    return CholeskyFactor(lower)


def solve_triangular(f: CholeskyFactor, b: npt.ArrayLike, side: TriangularSide = "lower") -> Matrix:
    """
    Cholesky因子による三角方程式の求解

    Args:
        f: Cholesky因子
        b: 右辺（ベクトルまたは行列）
        side: "lower" なら lower·x = b、"lower_transpose" なら lowerᵀ·x = b

    Returns:
        Matrix: 解x（bと同じ形）
    """
    rhs = np.array(b, dtype=np.float64, copy=True)
    if rhs.ndim not in (1, 2) or rhs.shape[0] != f.dim:
        raise DimensionMismatchError(f"右辺の行数 {rhs.shape} が因子の次数 {f.dim} と一致しません")

    lower = f.lower
    n = f.dim
    x = np.zeros_like(rhs)
    if side == "lower":
        for i in range(n):
            x[i] = (rhs[i] - lower[i, :i] @ x[:i]) / lower[i, i]
    elif side == "lower_transpose":
        for i in range(n - 1, -1, -1):
            x[i] = (rhs[i] - lower[i + 1:, i] @ x[i + 1:]) / lower[i, i]
    else:
        raise InvalidArgumentError(f"未知のsideです: {side}")
    return x


def matmul(a: npt.ArrayLike, b: npt.ArrayLike) -> Matrix:
    """次元検査付きの行列積"""
    left = np.asarray(a, dtype=np.float64)
    right = np.asarray(b, dtype=np.float64)
    if left.shape[-1] != right.shape[0]:
        raise DimensionMismatchError(f"行列積の次元が一致しません: {left.shape} x {right.shape}")
    return left @ right


def transpose(m: npt.ArrayLike) -> Matrix:
    return as_matrix(m).T.copy()


def invert_spd(m: npt.ArrayLike) -> Matrix:
    """
    対称正定値行列の逆行列（Cholesky経由）

    Args:
        m: 対称正定値行列

    Returns:
        Matrix: 対称化した逆行列
    """
    factor = cholesky(m)
    identity = np.eye(factor.dim)
    inverse = solve_triangular(factor, solve_triangular(factor, identity, "lower"), "lower_transpose")
    return 0.5 * (inverse + inverse.T)

"""
パターン変換
あるクラスの白色化作用素で白色化し、別クラスの着色作用素で着色する変換 L_Y⁻¹L_X、
白色雑音からのパターン生成、およびPGM画像の出力
"""

import logging
from pathlib import Path

import numpy as np
import numpy.typing as npt

from diffinfo.dense_linalg import Matrix
from diffinfo.errors import DataIOError, DimensionMismatchError
from diffinfo.pencil import WhiteningOperator

logger = logging.getLogger(__name__)

TRIPTYCH_GUTTER = 2


def _as_samples(x: npt.ArrayLike, dim: int, name: str) -> np.ndarray:
    array = np.asarray(x, dtype=np.float64)
    if array.ndim not in (1, 2) or array.shape[-1] != dim:
        raise DimensionMismatchError(f"{name}の次元 {array.shape} が作用素の次元 {dim} と一致しません")
    return array


def transform_pattern(
    x: npt.ArrayLike,
    source: WhiteningOperator,
    target: WhiteningOperator,
    restore_mean: bool = True,
) -> np.ndarray:
    """
    sourceクラスのパターンをtargetクラスのパターンへ変換

    target.inverse · (source.forward · (x − source.mean)) + target.mean

    Args:
        x: 入力ベクトル、または行に並べたサンプル
        source: 変換元クラスの白色化作用素 L_X
        target: 変換先クラスの白色化作用素 L_Y
        restore_mean: Falseなら変換先の平均を足さない

    Returns:
        np.ndarray: 変換結果（xと同じ形）
    """
    if source.dim != target.dim:
        raise DimensionMismatchError(f"作用素の次元が一致しません: {source.dim} と {target.dim}")
    array = _as_samples(x, source.dim, "入力")
    white = (array - source.mean) @ source.forward.T
    output = white @ target.inverse.T
    if restore_mean:
        output = output + target.mean
    return output


def generate_from_noise(p: npt.ArrayLike, target: WhiteningOperator, restore_mean: bool = True) -> np.ndarray:
    """白色雑音pから target.inverse·p + target.mean を生成"""
    array = _as_samples(p, target.dim, "雑音")
    output = array @ target.inverse.T
    if restore_mean:
        output = output + target.mean
    return output


def sample_white_noise(count: int, dim: int, seed: int) -> np.ndarray:
    """平均0・分散1の独立な正規雑音 (count, dim)"""
    return np.random.default_rng(seed).standard_normal((count, dim))


def covariance_transport_error(outputs: npt.ArrayLike, target_cov: npt.ArrayLike) -> float:
    """
    変換後の標本共分散と目標共分散の相対フロベニウス誤差 ‖Ĉ − C‖_F / ‖C‖_F

    Args:
        outputs: 行に並べた変換結果
        target_cov: 目標の共分散

    Returns:
        float: 相対誤差
    """
    samples = np.asarray(outputs, dtype=np.float64)
    target = np.asarray(target_cov, dtype=np.float64)
    centered = samples - samples.mean(axis=0)
    empirical = centered.T @ centered / samples.shape[0]
    return float(np.linalg.norm(empirical - target) / np.linalg.norm(target))


def to_gray(v: npt.ArrayLike) -> np.ndarray:
    """
    ベクトルを最小値・最大値で [0, 255] に正規化して切り捨てる。値が一定なら全て0

    Args:
        v: 画素値

    Returns:
        np.ndarray: uint8の画素
    """
    values = np.asarray(v, dtype=np.float64).ravel()
    low = values.min()
    span = values.max() - low
    if span <= 0.0:
        return np.zeros(values.shape, dtype=np.uint8)
    scaled = np.floor((values - low) / span * 255.0)
    return np.clip(scaled, 0, 255).astype(np.uint8)


def _write_pgm_grid(grid: np.ndarray, path: str | Path) -> None:
    rows, cols = grid.shape
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    path = Path(path)
    try:
        path.write_bytes(header + grid.astype(np.uint8).tobytes(order="C"))
    except OSError as e:
        raise DataIOError(f"PGMファイルに書き込めません: {path} ({e})") from e


def write_pgm(v: npt.ArrayLike, rows: int, cols: int, path: str | Path) -> None:
    """
    バイナリPGM (P5, maxval 255) を書き出す

    Args:
        v: 長さrows·colsのベクトル（行優先）
        rows: 行数
        cols: 列数
        path: 出力先

    Raises:
        DimensionMismatchError: rows·colsがベクトル長と一致しない
        DataIOError: 書き込み失敗
    """
    values = np.asarray(v, dtype=np.float64).ravel()
    if rows * cols != values.shape[0]:
        raise DimensionMismatchError(f"画像サイズ {rows}x{cols} がベクトル長 {values.shape[0]} と一致しません")
    _write_pgm_grid(to_gray(values).reshape(rows, cols), path)


def write_triptych(
    source: npt.ArrayLike,
    exemplar: npt.ArrayLike,
    output: npt.ArrayLike,
    rows: int,
    cols: int,
    path: str | Path,
) -> None:
    """変換元・変換先クラスの例・変換結果を横に並べた1枚のPGMを書き出す"""
    panels = []
    for v in (source, exemplar, output):
        values = np.asarray(v, dtype=np.float64).ravel()
        if rows * cols != values.shape[0]:
            raise DimensionMismatchError(f"画像サイズ {rows}x{cols} がベクトル長 {values.shape[0]} と一致しません")
        panels.append(to_gray(values).reshape(rows, cols))
    gutter = np.zeros((rows, TRIPTYCH_GUTTER), dtype=np.uint8)
    _write_pgm_grid(np.hstack([panels[0], gutter, panels[1], gutter, panels[2]]), path)


def target_covariance(target: WhiteningOperator) -> Matrix:
    """着色作用素が課す共分散 L⁻¹L⁻ᵀ（＝変換先クラスの正則化共分散）"""
    return target.inverse @ target.inverse.T

"""
MNISTデータの読み込み
IDX形式（ビッグエンディアンのマジックナンバー・次元・生データ）の読み書きとベクトル化
"""

import gzip
import logging
import struct
from collections.abc import Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt

from diffinfo.errors import (
    BadMagicError,
    DataIOError,
    InvalidArgumentError,
    LabelOutOfRangeError,
    LengthMismatchError,
    NoMatchingSamplesError,
    TruncatedFileError,
)

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

# 公式配布名と、展開ツールによってはドット区切りになる別名
_FILE_STEMS = {
    "train_images": ("train-images-idx3-ubyte", "train-images.idx3-ubyte"),
    "train_labels": ("train-labels-idx1-ubyte", "train-labels.idx1-ubyte"),
    "test_images": ("t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"),
    "test_labels": ("t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"),
}


@dataclass(frozen=True, eq=False)
class ImageSet:
    """画像 (N, rows, cols) のuint8配列と0〜9のラベル"""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        images = np.array(self.images, dtype=np.uint8, copy=True)
        labels = np.array(self.labels, dtype=np.uint8, copy=True)
        if images.ndim != 3 or images.shape[0] != labels.shape[0]:
            raise LengthMismatchError(f"画像 {images.shape} とラベル {labels.shape} の件数が一致しません")
        images.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return int(self.images.shape[1]), int(self.images.shape[2])


@dataclass(frozen=True)
class MnistData:
    train: ImageSet
    test: ImageSet


def _read_bytes(path: str | Path) -> bytes:
    path = Path(path)
    try:
        if path.suffix == ".gz":
            with gzip.open(path, "rb") as f:
                return f.read()
        return path.read_bytes()
    except (OSError, EOFError) as e:
        raise DataIOError(f"ファイルを読み込めません: {path} ({e})") from e


def _header(data: bytes, path: str | Path, expected_magic: int, count_fields: int) -> tuple[int, ...]:
    size = 4 * (1 + count_fields)
    if len(data) < 4:
        raise TruncatedFileError(f"IDXファイルがマジックナンバーより短いです: {path}")
    (magic,) = struct.unpack(">I", data[:4])
    if magic != expected_magic:
        raise BadMagicError(f"マジックナンバーが一致しません: {path} (0x{magic:08x}、期待値 0x{expected_magic:08x})")
    if len(data) < size:
        raise TruncatedFileError(f"IDXファイルのヘッダが途中で切れています: {path}")
    return struct.unpack(f">{count_fields}I", data[4:size])


def read_idx_images(path: str | Path) -> np.ndarray:
    """
    IDX画像ファイルを読み込む

    Args:
        path: ファイルパス（.gzなら展開して読む）

    Returns:
        np.ndarray: (N, rows, cols) のuint8配列

    Raises:
        BadMagicError: マジックナンバーが0x00000803でない
        TruncatedFileError: データがヘッダの申告より短い
        DataIOError: ファイルを読めない
    """
    data = _read_bytes(path)
    count, rows, cols = _header(data, path, IMAGE_MAGIC, 3)
    expected = count * rows * cols
    payload = data[16:]
    if len(payload) < expected:
        raise TruncatedFileError(f"画像データが不足しています: {path} ({len(payload)}/{expected}バイト)")
    images = np.frombuffer(payload, dtype=np.uint8, count=expected).reshape(count, rows, cols)
    logger.info(f"IDX画像読み込み完了: {path} ({count}枚, {rows}x{cols})")
    return images.copy()


def read_idx_labels(path: str | Path) -> np.ndarray:
    """
    IDXラベルファイルを読み込む

    Args:
        path: ファイルパス（.gzなら展開して読む）

    Returns:
        np.ndarray: 0〜9のuint8配列

    Raises:
        BadMagicError: マジックナンバーが0x00000801でない
        TruncatedFileError: データがヘッダの申告より短い（空ファイルを含む）
        LabelOutOfRangeError: 9を超えるラベル
    """
    data = _read_bytes(path)
    (count,) = _header(data, path, LABEL_MAGIC, 1)
    payload = data[8:]
    if len(payload) < count:
        raise TruncatedFileError(f"ラベルデータが不足しています: {path} ({len(payload)}/{count}バイト)")
    labels = np.frombuffer(payload, dtype=np.uint8, count=count).copy()
    if labels.size and labels.max() > 9:
        index = int(np.argmax(labels > 9))
        raise LabelOutOfRangeError(f"ラベルが範囲外です: {path} (位置 {index} の値 {labels[index]})")
    logger.info(f"IDXラベル読み込み完了: {path} ({count}件)")
    return labels


def _write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    try:
        if path.suffix == ".gz":
            with gzip.open(path, "wb") as f:
                f.write(data)
        else:
            path.write_bytes(data)
    except OSError as e:
        raise DataIOError(f"ファイルに書き込めません: {path} ({e})") from e


def write_idx_images(images: npt.ArrayLike, path: str | Path) -> None:
    """(N, rows, cols) のuint8画像をIDX形式で書き出す"""
    array = np.asarray(images, dtype=np.uint8)
    if array.ndim != 3:
        raise InvalidArgumentError(f"画像は3次元配列である必要があります: shape={array.shape}")
    header = struct.pack(">4I", IMAGE_MAGIC, *array.shape)
    _write_bytes(path, header + array.tobytes(order="C"))


def write_idx_labels(labels: npt.ArrayLike, path: str | Path) -> None:
    """ラベルをIDX形式で書き出す"""
    array = np.asarray(labels, dtype=np.uint8).ravel()
    header = struct.pack(">2I", LABEL_MAGIC, array.shape[0])
    _write_bytes(path, header + array.tobytes())


def load_image_set(images_path: str | Path, labels_path: str | Path) -> ImageSet:
    return ImageSet(read_idx_images(images_path), read_idx_labels(labels_path))


def locate_mnist(data_dir: str | Path) -> dict[str, Path]:
    """
    ディレクトリ内の4つのMNISTファイルを探す

    Args:
        data_dir: MNISTファイルを置いたディレクトリ

    Returns:
        dict[str, Path]: train_images, train_labels, test_images, test_labels のパス

    Raises:
        DataIOError: ディレクトリまたはファイルが見つからない
    """
    directory = Path(data_dir)
    if not directory.is_dir():
        raise DataIOError(f"MNISTディレクトリが見つかりません: {directory}")

    found = {}
    for key, stems in _FILE_STEMS.items():
        candidates = [directory / f"{stem}{suffix}" for stem in stems for suffix in ("", ".gz")]
        existing = [candidate for candidate in candidates if candidate.is_file()]
        if not existing:
            raise DataIOError(f"MNISTファイル {stems[0]} が見つかりません: {directory}")
        found[key] = existing[0]
    return found


def load_mnist(data_dir: str | Path) -> MnistData:
    """
    学習・テストの4ファイルを並行して読み込む

    Args:
        data_dir: MNISTファイルを置いたディレクトリ

    Returns:
        MnistData: 学習用とテスト用のImageSet
    """
    paths = locate_mnist(data_dir)
    with ThreadPoolExecutor(max_workers=4) as executor:
        futures = {
            key: executor.submit(read_idx_images if key.endswith("images") else read_idx_labels, path)
            for key, path in paths.items()
        }
        results = {key: future.result() for key, future in futures.items()}
    return MnistData(
        train=ImageSet(results["train_images"], results["train_labels"]),
        test=ImageSet(results["test_images"], results["test_labels"]),
    )


def vectorize(image_set: ImageSet, labels_wanted: Iterable[int]) -> tuple[np.ndarray, np.ndarray]:
    """
    指定ラベルの画像を行優先で平坦化し、[0, 1] にスケールする

    Args:
        image_set: 画像集合
        labels_wanted: 取り出すラベル（空でないこと）

    Returns:
        tuple[np.ndarray, np.ndarray]: (N, rows·cols) のfloat64行列とラベル（元の順序のまま）
    """
    wanted = sorted(set(int(label) for label in labels_wanted))
    if not wanted:
        raise InvalidArgumentError("取り出すラベルが指定されていません")
    mask = np.isin(image_set.labels, wanted)
    if not np.any(mask):
        raise NoMatchingSamplesError(f"ラベル {wanted} のサンプルがありません")
    images = image_set.images[mask]
    vectors = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return vectors, image_set.labels[mask].astype(np.int64)


def subsample_per_class(
    samples: np.ndarray,
    labels: np.ndarray,
    per_class: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """
    クラスごとに最大per_class件を無作為に選ぶ（選んだサンプルは元の順序を保つ）

    Args:
        samples: (N, n) のサンプル
        labels: ラベル
        per_class: クラスごとの上限件数（0なら全件）
        seed: 乱数シード

    Returns:
        tuple[np.ndarray, np.ndarray]: 選ばれたサンプルとラベル
    """
    if per_class <= 0:
        return samples, labels
    rng = np.random.default_rng(seed)
    chosen = []
    for label in np.unique(labels):
        indices = np.flatnonzero(labels == label)
        if indices.shape[0] > per_class:
            indices = rng.choice(indices, size=per_class, replace=False)
        chosen.append(indices)
    keep = np.sort(np.concatenate(chosen))
    return samples[keep], labels[keep]

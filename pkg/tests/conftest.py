"""
テスト共通のフィクスチャ
乱数生成器、ランダムな正定値行列、合成MNISTディレクトリ
"""

import os
from pathlib import Path

import numpy as np
import pytest

from diffinfo.mnist_io import load_mnist, write_idx_images, write_idx_labels

SIDE = 6
TRAIN_PER_CLASS = 120
TEST_PER_CLASS = 30
SYNTHETIC_LABELS = (0, 1, 2, 3)


def random_spd(rng: np.random.Generator, n: int, floor: float = 0.5) -> np.ndarray:
    """MᵀM/n + floor·I の正定値行列"""
    m = rng.standard_normal((n, n))
    return m.T @ m / n + floor * np.eye(n)


def random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    m = rng.standard_normal((n, n))
    return 0.5 * (m + m.T)


def synthetic_digits(rng: np.random.Generator, per_class: int) -> tuple[np.ndarray, np.ndarray]:
    """
    ラベルLの画像は行Lが明るい6x6の雑音画像

    Returns:
        tuple: (N, 6, 6) のuint8画像とラベル
    """
    labels = np.repeat(np.array(SYNTHETIC_LABELS, dtype=np.uint8), per_class)
    rng.shuffle(labels)
    images = rng.integers(0, 40, size=(labels.shape[0], SIDE, SIDE))
    for index, label in enumerate(labels):
        images[index, label, :] += 180
    return images.astype(np.uint8), labels


def write_synthetic_mnist(directory: Path, seed: int = 0, gz: bool = False) -> Path:
    """MNISTと同じファイル名で合成データを書き出す"""
    rng = np.random.default_rng(seed)
    directory.mkdir(parents=True, exist_ok=True)
    suffix = ".gz" if gz else ""
    train_images, train_labels = synthetic_digits(rng, TRAIN_PER_CLASS)
    test_images, test_labels = synthetic_digits(rng, TEST_PER_CLASS)
    write_idx_images(train_images, directory / f"train-images-idx3-ubyte{suffix}")
    write_idx_labels(train_labels, directory / f"train-labels-idx1-ubyte{suffix}")
    write_idx_images(test_images, directory / f"t10k-images-idx3-ubyte{suffix}")
    write_idx_labels(test_labels, directory / f"t10k-labels-idx1-ubyte{suffix}")
    return directory


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


@pytest.fixture
def mnist_dir(tmp_path):
    return write_synthetic_mnist(tmp_path / "mnist")


@pytest.fixture
def mnist_data(mnist_dir):
    return load_mnist(mnist_dir)


@pytest.fixture(scope="session")
def real_mnist_dir():
    """DIFFINFO_MNIST_DIRが実際のMNISTを指す場合のみ使う"""
    value = os.getenv("DIFFINFO_MNIST_DIR")
    if not value or not Path(value).is_dir():
        pytest.skip("DIFFINFO_MNIST_DIRが設定されていないため実データのテストをスキップ")
    return Path(value)

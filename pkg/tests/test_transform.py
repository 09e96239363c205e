"""
パターン変換のユニットテスト
クラス間の変換、雑音からの生成、共分散の輸送、PGM出力
"""

import numpy as np
import pytest

from diffinfo.covariance import ClassModel
from diffinfo.errors import DataIOError, DimensionMismatchError
from diffinfo.pencil import whitening_operator
from diffinfo.transform import (
    TRIPTYCH_GUTTER,
    covariance_transport_error,
    generate_from_noise,
    sample_white_noise,
    target_covariance,
    to_gray,
    transform_pattern,
    write_pgm,
    write_triptych,
)
from tests.conftest import random_spd


def operator_of(cov, mean=None, label=0):
    cov = np.asarray(cov, dtype=np.float64)
    mean = np.zeros(cov.shape[0]) if mean is None else np.asarray(mean, dtype=np.float64)
    return whitening_operator(ClassModel(label=label, mean=mean, cov=cov, sample_count=100, solver="lapack"))


class TestTransformPattern:
    """transform_patternのテスト"""

    def test_same_class_is_identity(self, rng):
        """変換元と変換先が同じなら入力がそのまま返る"""
        op = operator_of(random_spd(rng, 6), mean=rng.standard_normal(6))
        x = rng.standard_normal(6)
        assert np.max(np.abs(transform_pattern(x, op, op) - x)) < 1e-8

    def test_identity_operators(self, rng):
        """共分散I・平均0どうしなら恒等変換"""
        x = rng.standard_normal(4)
        np.testing.assert_allclose(transform_pattern(x, operator_of(np.eye(4)), operator_of(np.eye(4), label=1)), x)

    def test_round_trip(self, rng):
        """XからYへ、YからXへ戻すと元に戻る"""
        op_x = operator_of(random_spd(rng, 5), mean=rng.standard_normal(5))
        op_y = operator_of(random_spd(rng, 5), mean=rng.standard_normal(5), label=1)
        x = rng.standard_normal((3, 5))
        back = transform_pattern(transform_pattern(x, op_x, op_y), op_y, op_x)
        assert np.max(np.abs(back - x)) < 1e-6

    def test_restore_mean(self, rng):
        """restore_mean=Falseなら変換先の平均を足さない"""
        mean = np.array([5.0, -5.0])
        source = operator_of(np.eye(2))
        target = operator_of(np.eye(2), mean=mean, label=1)
        x = np.array([1.0, 2.0])
        np.testing.assert_allclose(transform_pattern(x, source, target), x + mean)
        np.testing.assert_allclose(transform_pattern(x, source, target, restore_mean=False), x)

    def test_covariance_transport(self, rng):
        """N(0, B) の標本を変換すると標本共分散がAに近い"""
        a, b = random_spd(rng, 16), random_spd(rng, 16)
        source, target = operator_of(b), operator_of(a, label=1)
        samples = rng.multivariate_normal(np.zeros(16), b, size=10_000)
        assert covariance_transport_error(transform_pattern(samples, source, target), a) < 0.1

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            transform_pattern(np.ones(2), operator_of(np.eye(2)), operator_of(np.eye(3)))
        with pytest.raises(DimensionMismatchError):
            transform_pattern(np.ones(3), operator_of(np.eye(2)), operator_of(np.eye(2)))


class TestGenerateFromNoise:
    """generate_from_noise, sample_white_noiseのテスト"""

    def test_zero_noise_gives_mean(self):
        mean = np.array([1.0, 2.0, 3.0])
        op = operator_of(np.diag([3.0, 2.0, 1.0]), mean=mean)
        np.testing.assert_allclose(generate_from_noise(np.zeros(3), op), mean)

    def test_hand_computed(self):
        """diag(4,1)、平均0、p = (1,1) → (2,1)"""
        op = operator_of(np.diag([4.0, 1.0]))
        np.testing.assert_allclose(generate_from_noise([1.0, 1.0], op), [2.0, 1.0])

    def test_monte_carlo(self, rng):
        """雑音から生成したパターンの共分散が目標に近い"""
        a = random_spd(rng, 8)
        op = operator_of(a)
        outputs = generate_from_noise(sample_white_noise(10_000, 8, seed=5), op)
        assert covariance_transport_error(outputs, a) < 0.1

    def test_noise_is_seeded(self):
        np.testing.assert_array_equal(sample_white_noise(3, 4, seed=9), sample_white_noise(3, 4, seed=9))
        assert sample_white_noise(3, 4, seed=9).shape == (3, 4)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            generate_from_noise(np.ones(3), operator_of(np.eye(2)))

    def test_target_covariance(self, rng):
        """着色作用素が課す共分散は変換先の共分散"""
        a = random_spd(rng, 5)
        np.testing.assert_allclose(target_covariance(operator_of(a)), a, atol=1e-10)


class TestPgm:
    """to_gray, write_pgm, write_triptychのテスト"""

    def test_constant_vector(self, tmp_path):
        """値が一定なら全画素0"""
        path = tmp_path / "flat.pgm"
        write_pgm(np.full(4, 0.7), 2, 2, path)
        assert path.read_bytes() == b"P5\n2 2\n255\n" + bytes([0, 0, 0, 0])

    def test_normalization(self, tmp_path):
        """(0, 0.5, 1, 0.25) → (0, 127, 255, 63)"""
        path = tmp_path / "ramp.pgm"
        write_pgm([0.0, 0.5, 1.0, 0.25], 2, 2, path)
        assert path.read_bytes() == b"P5\n2 2\n255\n" + bytes([0, 127, 255, 63])

    def test_header_is_width_height(self, tmp_path):
        """ヘッダは 列数 行数 の順"""
        path = tmp_path / "wide.pgm"
        write_pgm(np.arange(6, dtype=np.float64), 2, 3, path)
        assert path.read_bytes().startswith(b"P5\n3 2\n255\n")

    def test_size_mismatch(self, tmp_path):
        with pytest.raises(DimensionMismatchError):
            write_pgm(np.zeros(5), 2, 2, tmp_path / "bad.pgm")

    def test_unwritable(self, tmp_path):
        with pytest.raises(DataIOError):
            write_pgm(np.zeros(4), 2, 2, tmp_path / "missing" / "out.pgm")

    def test_to_gray(self):
        assert to_gray([-1.0, 1.0]).tolist() == [0, 255]

    def test_triptych(self, tmp_path):
        """3枚を2画素の黒い隙間で横に並べる"""
        path = tmp_path / "triptych.pgm"
        write_triptych([0.0, 1.0, 1.0, 0.0], [1.0, 1.0, 1.0, 1.0], [0.0, 0.5, 1.0, 0.25], 2, 2, path)
        width = 3 * 2 + 2 * TRIPTYCH_GUTTER
        data = path.read_bytes()
        header = f"P5\n{width} 2\n255\n".encode("ascii")
        assert data.startswith(header)
        pixels = np.frombuffer(data[len(header):], dtype=np.uint8).reshape(2, width)
        assert pixels[:, 0:2].tolist() == [[0, 255], [255, 0]]
        assert pixels[:, 2:4].tolist() == [[0, 0], [0, 0]]
        assert pixels[:, 4:6].tolist() == [[0, 0], [0, 0]]
        assert pixels[:, 8:10].tolist() == [[0, 127], [255, 63]]

"""
例外定義
ライブラリ全体で送出するエラーの階層と機械可読なエラーコード
"""


class DiffInfoError(Exception):
    """diffinfoの全エラーの基底クラス"""

    code = "diffinfo_error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def to_dict(self) -> dict:
        """
        CLIのエラー行に載せる辞書へ変換

        Returns:
            dict: errorコードとメッセージ
        """
        return {"error": self.code, "message": self.message}


class NonSymmetricError(DiffInfoError, ValueError):
    """対称であるべき行列が非対称"""

    code = "non_symmetric"


class NoConvergenceError(DiffInfoError, ArithmeticError):
    """反復解法が上限回数内に収束しない"""

    code = "no_convergence"


class NotPositiveDefiniteError(DiffInfoError, ValueError):
    """Cholesky分解のピボットが正でない（正則化されていない共分散など）"""

    code = "not_positive_definite"


class DimensionMismatchError(DiffInfoError, ValueError):
    """次元が整合しない"""

    code = "dimension_mismatch"


class TooFewSamplesError(DiffInfoError, ValueError):
    """共分散推定に必要なサンプル数が足りない"""

    code = "too_few_samples"


class SingularModelError(DiffInfoError, ValueError):
    """白色化できない（固有値が実質ゼロの）クラスモデル"""

    code = "singular_model"


class UnknownLabelError(DiffInfoError, KeyError):
    """学習データに存在しないクラスラベル"""

    code = "unknown_label"

    def __str__(self) -> str:
        return self.message


class EmptyTrainingSetError(DiffInfoError, ValueError):
    code = "empty_training_set"


class LengthMismatchError(DiffInfoError, ValueError):
    code = "length_mismatch"


class BadMagicError(DiffInfoError, ValueError):
    """IDXファイルのマジックナンバー不一致"""

    code = "bad_magic"


class TruncatedFileError(DiffInfoError, ValueError):
    """IDXファイルがヘッダの申告より短い"""

    code = "truncated_file"


class LabelOutOfRangeError(DiffInfoError, ValueError):
    code = "label_out_of_range"


class DataIOError(DiffInfoError, OSError):
    """ファイル入出力の失敗（メッセージにパスを含める）"""

    code = "io_error"


class NoMatchingSamplesError(DiffInfoError, ValueError):
    code = "no_matching_samples"


class GeometryMismatchError(DiffInfoError, ValueError):
    """変換集合のオフセットが信号の形状に合わない"""

    code = "geometry_mismatch"


class ConfigError(DiffInfoError, ValueError):
    """実験設定・特徴量仕様の誤り"""

    code = "config_error"


class InvalidArgumentError(DiffInfoError, ValueError):
    """数値パラメータの前提条件違反（kの範囲、エネルギー比など）"""

    code = "invalid_argument"

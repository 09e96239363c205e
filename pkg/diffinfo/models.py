"""
Pydanticモデル定義
実験設定とレポートの型定義
"""

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from diffinfo.feature_spec import Centering, Projection


class ExperimentConfig(BaseModel):
    """分類実験（二値・多クラス）の設定"""

    model_config = ConfigDict(frozen=True)

    data_dir: Path
    classes: list[tuple[int, ...]] = Field(min_length=1)
    features: list[str] = Field(min_length=1)
    feature_titles: list[str] | None = None
    k: int = Field(default=3, ge=1)
    ridge: float = Field(default=1e-3, ge=0.0)
    subsample: int = Field(default=0, ge=0)
    seed: int = 42
    route: Literal["cholesky", "whitening"] = "cholesky"
    eig_solver: Literal["jacobi", "lapack"] = "lapack"
    centering: Centering = "pooled"
    projection: Projection = "euclidean"
    energy: float = Field(default=1.0, gt=0.0, le=1.0)
    unbiased: bool = False
    workers: int = Field(default=1, ge=1)

    @field_validator("classes")
    @classmethod
    def _labels_are_digits(cls, value: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
        for classes in value:
            if any(not 0 <= label <= 9 for label in classes):
                raise ValueError(f"クラスラベルは0〜9である必要があります: {classes}")
        return value


class ReportRow(BaseModel):
    """レポートの1行（クラスの組 × 特徴量仕様）"""

    classes: tuple[int, ...]
    feature_spec: str
    k: int
    ridge: float
    n_train: int
    n_test: int
    accuracy_pct: float
    seconds: float
    feature_title: str | None = None


class TransformConfig(BaseModel):
    """パターン変換実験の設定"""

    model_config = ConfigDict(frozen=True)

    data_dir: Path
    source_class: int = Field(ge=0, le=9)
    target_class: int = Field(ge=0, le=9)
    out_dir: Path
    count: int = Field(default=5, ge=1)
    noise_count: int = Field(default=5, ge=0)
    ridge: float = Field(default=1e-3, ge=0.0)
    subsample: int = Field(default=0, ge=0)
    seed: int = 42
    restore_mean: bool = True
    eig_solver: Literal["jacobi", "lapack"] = "lapack"


class TransformReport(BaseModel):
    """パターン変換実験の結果"""

    source_class: int
    target_class: int
    n_source: int
    n_target: int
    dimension: int
    transport_error: float
    source_condition: float
    target_condition: float
    files: list[str]


class InvariantConfig(BaseModel):
    """不変基底の評価設定"""

    model_config = ConfigDict(frozen=True)

    length: int = Field(default=32, ge=2)
    seed: int = 42
    data_dir: Path | None = None
    image_index: int | None = Field(default=None, ge=0)
    max_offset: int | None = Field(default=None, ge=0)
    energy: float = Field(default=0.95, gt=0.0, le=1.0)
    condition_limit: float = Field(default=100.0, gt=1.0)
    eig_solver: Literal["jacobi", "lapack"] = "lapack"


class InvariantReport(BaseModel):
    """不変基底の評価結果"""

    kind: str
    signal_length: int
    transformation_count: int
    condition_ratio: float
    truncated: bool
    retained: int
    off_diagonal_ratio: float
    normalized_off_diagonal_max: float
    eigenvalue_gap: float
    projection_gap: float

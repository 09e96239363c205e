"""
環境設定
.envと環境変数から既定値を読み込む
"""

import os
from pathlib import Path
from typing import Literal

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

from diffinfo.errors import ConfigError

load_dotenv()


class Settings(BaseModel):
    """環境変数由来の既定値"""

    data_dir: Path = Path("data/mnist")
    log_level: str = "INFO"
    eig_solver: Literal["jacobi", "lapack"] = "lapack"
    workers: int = Field(default=1, ge=1)


def get_settings() -> Settings:
    """
    環境変数から設定を作成

    Returns:
        Settings: DIFFINFO_DATA_DIR, DIFFINFO_LOG_LEVEL, DIFFINFO_EIG_SOLVER, DIFFINFO_WORKERS を反映した設定
    """
    values = {
        "data_dir": os.getenv("DIFFINFO_DATA_DIR"),
        "log_level": os.getenv("DIFFINFO_LOG_LEVEL"),
        "eig_solver": os.getenv("DIFFINFO_EIG_SOLVER"),
        "workers": os.getenv("DIFFINFO_WORKERS"),
    }
    try:
        return Settings(**{key: value for key, value in values.items() if value})
    except ValidationError as e:
        raise ConfigError(f"環境変数の設定が不正です: {e.errors()[0]['msg']}") from e

"""
公開済みの結果表と同じクラスの組と特徴量列のプリセット
二値分類ではC2の共分散がA、C1の共分散がB。多クラスではC1, C2, C3がA, B, C。
"""

from pydantic import BaseModel, ConfigDict


class Preset(BaseModel):
    """クラスの組と、列見出し付きの特徴量テンプレート"""

    model_config = ConfigDict(frozen=True)

    name: str
    arity: int
    classes: tuple[tuple[int, ...], ...]
    columns: tuple[tuple[str, str], ...]

    @property
    def titles(self) -> list[str]:
        return [title for title, _ in self.columns]

    @property
    def templates(self) -> list[str]:
        return [template for _, template in self.columns]


BINARY_PAIRS = Preset(
    name="pairs",
    arity=2,
    classes=(
        (1, 0), (2, 0), (3, 0), (4, 0), (5, 0), (6, 0), (7, 0), (8, 0), (9, 0),
        (2, 1), (3, 1), (4, 1), (5, 1), (6, 1), (7, 1), (8, 1),
        (3, 2), (4, 2), (5, 2),
    ),
    columns=(
        ("(A−λB;B)", "pencil({c2}|{c1});eig({c1})"),
        ("(B−λA;A)", "pencil({c1}|{c2});eig({c2})"),
        ("A−λB", "pencil({c2}|{c1})"),
        ("B−λA", "pencil({c1}|{c2})"),
    ),
)

POOLED_TRIPLETS = Preset(
    name="pooled",
    arity=3,
    classes=(
        (0, 2, 8), (0, 3, 5), (0, 3, 6), (1, 4, 8), (1, 4, 9), (3, 5, 8), (3, 5, 9), (3, 6, 7),
        (3, 6, 8), (4, 7, 9), (4, 8, 9), (5, 6, 7), (5, 6, 8), (6, 7, 8), (6, 7, 9),
    ),
    columns=(
        ("A−λ(B,C)", "pencil({c1}|pool({c2},{c3}))"),
        ("[A−λ(B,C)];A", "pencil({c1}|pool({c2},{c3}));eig({c1})"),
        ("[A−λ(B,C)];(B,C)", "pencil({c1}|pool({c2},{c3}));eig(pool({c2},{c3}))"),
        ("B−λ(A,C)", "pencil({c2}|pool({c1},{c3}))"),
        ("[B−λ(A,C)];B", "pencil({c2}|pool({c1},{c3}));eig({c2})"),
        ("[B−λ(A,C)];(A,C)", "pencil({c2}|pool({c1},{c3}));eig(pool({c1},{c3}))"),
    ),
)

CHAINED_TRIPLETS = Preset(
    name="chained",
    arity=3,
    classes=((0, 2, 4), (0, 4, 7), (1, 2, 7), (1, 4, 5), (2, 3, 6), (2, 4, 9), (2, 6, 7), (3, 4, 9), (3, 7, 9)),
    columns=(
        ("A−λ(B,C);B−λC", "pencil({c1}|pool({c2},{c3}));pencil({c2}|{c3})"),
        ("A−λ(B,C);B−λC;C", "pencil({c1}|pool({c2},{c3}));pencil({c2}|{c3});eig({c3})"),
    ),
)

PRESETS = {preset.name: preset for preset in (BINARY_PAIRS, POOLED_TRIPLETS, CHAINED_TRIPLETS)}

"""
特徴量仕様の定義とテキスト構文の解析
例: "pencil(1|0);eig(0)"、"pencil(0|pool(2,8));eig(pool(2,8))"
"""

import re
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from diffinfo.errors import ConfigError

LabelGroup = tuple[int, ...]
Centering = Literal["pooled", "reference", "none"]
Projection = Literal["euclidean", "b_inner"]

_TOKEN = re.compile(r"\s*(pencil|eig|pool|\d+|[()|,;])")


def format_group(group: LabelGroup) -> str:
    """ラベル群をテキスト構文に戻す"""
    if len(group) == 1:
        return str(group[0])
    return "pool(" + ",".join(str(label) for label in group) + ")"


class PencilBlock(BaseModel):
    """行列ペンシル (target − λ·reference) の固有ベクトルへの射影ブロック"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["pencil"] = "pencil"
    target: LabelGroup = Field(min_length=1)
    reference: LabelGroup = Field(min_length=1)

    def canonical(self) -> str:
        return f"pencil({format_group(self.target)}|{format_group(self.reference)})"

    def labels(self) -> set[int]:
        return set(self.target) | set(self.reference)


class EigenBlock(BaseModel):
    """クラス（または結合クラス）の共分散固有ベクトルへの射影ブロック"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["eig"] = "eig"
    group: LabelGroup = Field(min_length=1)

    def canonical(self) -> str:
        return f"eig({format_group(self.group)})"

    def labels(self) -> set[int]:
        return set(self.group)


Block = Annotated[Union[PencilBlock, EigenBlock], Field(discriminator="kind")]


class FeatureSpec(BaseModel):
    """射影ブロックを順に連結した特徴量仕様"""

    model_config = ConfigDict(frozen=True)

    blocks: tuple[Block, ...] = Field(min_length=1)
    centering: Centering = "pooled"

    def canonical(self) -> str:
        return ";".join(block.canonical() for block in self.blocks)

    def labels(self) -> set[int]:
        result: set[int] = set()
        for block in self.blocks:
            result |= block.labels()
        return result

    def reference_group(self) -> LabelGroup:
        """centering="reference" で使う基準クラス（最初のブロックの基準側）"""
        first = self.blocks[0]
        return first.reference if isinstance(first, PencilBlock) else first.group


class _Parser:
    """再帰下降パーサ"""

    def __init__(self, text: str):
        self.text = text
        self.tokens = self._tokenize(text)
        self.position = 0

    def _tokenize(self, text: str) -> list[str]:
        tokens = []
        index = 0
        stripped = text.rstrip()
        while index < len(stripped):
            match = _TOKEN.match(stripped, index)
            if not match:
                raise ConfigError(f"特徴量仕様を解析できません: '{text}' (位置 {index})")
            tokens.append(match.group(1))
            index = match.end()
        return tokens

    def _peek(self) -> str | None:
        return self.tokens[self.position] if self.position < len(self.tokens) else None

    def _expect(self, token: str) -> None:
        actual = self._peek()
        if actual != token:
            raise ConfigError(f"特徴量仕様 '{self.text}' で '{token}' が必要ですが '{actual}' がありました")
        self.position += 1

    def _label(self) -> int:
        token = self._peek()
        if token is None or not token.isdigit():
            raise ConfigError(f"特徴量仕様 '{self.text}' でクラスラベルが必要ですが '{token}' がありました")
        self.position += 1
        return int(token)

    def _group(self) -> LabelGroup:
        if self._peek() == "pool":
            self.position += 1
            self._expect("(")
            labels = [self._label()]
            while self._peek() == ",":
                self.position += 1
                labels.append(self._label())
            self._expect(")")
            if len(set(labels)) != len(labels):
                raise ConfigError(f"pool内のラベルが重複しています: '{self.text}'")
            return tuple(labels)
        return (self._label(),)

    def _block(self) -> PencilBlock | EigenBlock:
        token = self._peek()
        if token == "pencil":
            self.position += 1
            self._expect("(")
            target = self._group()
            self._expect("|")
            reference = self._group()
            self._expect(")")
            return PencilBlock(target=target, reference=reference)
        if token == "eig":
            self.position += 1
            self._expect("(")
            group = self._group()
            self._expect(")")
            return EigenBlock(group=group)
        raise ConfigError(f"特徴量仕様 '{self.text}' で pencil または eig が必要ですが '{token}' がありました")

    def parse(self) -> list[PencilBlock | EigenBlock]:
        blocks = [self._block()]
        while self._peek() == ";":
            self.position += 1
            blocks.append(self._block())
        if self._peek() is not None:
            raise ConfigError(f"特徴量仕様 '{self.text}' の末尾に余分な '{self._peek()}' があります")
        return blocks


def parse_feature_spec(text: str, centering: Centering = "pooled") -> FeatureSpec:
    """
    テキスト構文から特徴量仕様を作成

    Args:
        text: 例 "pencil(0|pool(2,8));eig(pool(2,8))"
        centering: 特徴抽出時の中心化方法

    Returns:
        FeatureSpec: 解析結果

    Raises:
        ConfigError: 構文誤り
    """
    blocks = _Parser(text).parse()
    try:
        return FeatureSpec(blocks=tuple(blocks), centering=centering)
    except ValidationError as e:
        raise ConfigError(f"特徴量仕様が不正です: {e.errors()[0]['msg']}") from e


def render_template(template: str, classes: LabelGroup) -> str:
    """
    {c1}, {c2}, {c3} をクラスタプルの値で置き換える

    Args:
        template: 例 "pencil({c2}|{c1});eig({c1})"
        classes: 実験のクラスタプル

    Returns:
        str: 置換後の特徴量仕様
    """
    bindings = {f"c{i}": label for i, label in enumerate(classes, 1)}
    try:
        return template.format(**bindings)
    except (KeyError, IndexError) as e:
        raise ConfigError(f"テンプレート '{template}' のプレースホルダ {e} に対応するクラスがありません") from e

"""
特徴量仕様のユニットテスト
テキスト構文の解析、正規形、テンプレート展開
"""

import pytest
from pydantic import ValidationError

from diffinfo.errors import ConfigError
from diffinfo.feature_spec import (
    EigenBlock,
    FeatureSpec,
    PencilBlock,
    format_group,
    parse_feature_spec,
    render_template,
)


class TestParseFeatureSpec:
    """parse_feature_specのテスト"""

    def test_pencil_with_reference_eigen(self):
        """二値分類の拡張特徴量"""
        spec = parse_feature_spec("pencil(0|1);eig(1)")
        assert spec.blocks == (PencilBlock(target=(0,), reference=(1,)), EigenBlock(group=(1,)))
        assert spec.centering == "pooled"

    def test_pooled_groups(self):
        """pool(...)は複数ラベルの群になる"""
        spec = parse_feature_spec("pencil(0|pool(2,8));eig(pool(2,8))")
        assert spec.blocks[0].reference == (2, 8)
        assert spec.blocks[1].group == (2, 8)
        assert spec.labels() == {0, 2, 8}

    def test_whitespace_ignored(self):
        spec = parse_feature_spec("  pencil( 0 | pool( 2 , 8 ) ) ;  eig(8) ")
        assert spec.canonical() == "pencil(0|pool(2,8));eig(8)"

    def test_three_blocks(self):
        """3ブロックの仕様"""
        spec = parse_feature_spec("pencil(0|pool(2,4));pencil(2|4);eig(4)")
        assert len(spec.blocks) == 3

    def test_centering_option(self):
        spec = parse_feature_spec("eig(3)", centering="reference")
        assert spec.centering == "reference"
        assert spec.reference_group() == (3,)

    def test_reference_group_of_pencil(self):
        spec = parse_feature_spec("pencil(1|pool(2,3));eig(1)")
        assert spec.reference_group() == (2, 3)

    @pytest.mark.parametrize(
        "text",
        ["", "pencil(0)", "pencil(0|1", "eig()", "eig(1);", "foo(1)", "pencil(0|1) eig(1)", "eig(pool(2,2))", "eig(-1)"],
    )
    def test_malformed(self, text):
        """構文誤りはConfigError"""
        with pytest.raises(ConfigError) as exc_info:
            parse_feature_spec(text)
        assert exc_info.value.code == "config_error"

    def test_invalid_centering(self):
        with pytest.raises(ConfigError):
            parse_feature_spec("eig(1)", centering="median")

    def test_canonical_round_trip(self):
        """正規形を解析し直すと同じ仕様になる"""
        spec = parse_feature_spec("pencil(1|pool(0,2));eig(pool(0,2))")
        assert parse_feature_spec(spec.canonical()) == spec


class TestFeatureSpecModel:
    """FeatureSpecモデルのテスト"""

    def test_empty_blocks(self):
        """ブロックのない仕様は作れない"""
        with pytest.raises(ValidationError):
            FeatureSpec(blocks=())

    def test_frozen(self):
        spec = parse_feature_spec("eig(1)")
        with pytest.raises(ValidationError):
            spec.centering = "none"

    def test_discriminated_blocks(self):
        """辞書からkindでブロックを判別"""
        spec = FeatureSpec.model_validate({"blocks": [{"kind": "eig", "group": [5]}]})
        assert isinstance(spec.blocks[0], EigenBlock)

    def test_format_group(self):
        assert format_group((3,)) == "3"
        assert format_group((2, 8)) == "pool(2,8)"


class TestRenderTemplate:
    """render_templateのテスト"""

    def test_binary_template(self):
        """{c1}, {c2} をクラスの組で置き換える"""
        assert render_template("pencil({c2}|{c1});eig({c1})", (1, 0)) == "pencil(0|1);eig(1)"

    def test_multiclass_template(self):
        text = render_template("pencil({c1}|pool({c2},{c3}))", (0, 2, 8))
        assert text == "pencil(0|pool(2,8))"

    def test_literal_spec_unchanged(self):
        assert render_template("eig(4)", (1, 0)) == "eig(4)"

    def test_missing_placeholder(self):
        """二値の組に{c3}はない"""
        with pytest.raises(ConfigError):
            render_template("eig({c3})", (1, 0))

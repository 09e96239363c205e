"""
レポート出力のユニットテスト
CSVの列順・読み戻し、Markdownの表
"""

import pytest

from diffinfo.errors import ConfigError, DataIOError
from diffinfo.models import ReportRow
from diffinfo.report import CSV_COLUMNS, emit_report, parse_report, render_csv, render_markdown

HEADER = "classes,feature_spec,k,ridge,n_train,n_test,accuracy_pct,seconds\n"


def make_row(classes=(1, 0), spec="pencil(0|1);eig(1)", accuracy=99.9, seconds=1.234, title=None):
    return ReportRow(
        classes=classes, feature_spec=spec, k=3, ridge=1e-3, n_train=200, n_test=50,
        accuracy_pct=accuracy, seconds=seconds, feature_title=title,
    )


class TestRenderCsv:
    """render_csvのテスト"""

    def test_header_only(self):
        """行がなければヘッダのみ"""
        assert render_csv([]) == HEADER

    def test_column_order(self):
        assert ",".join(CSV_COLUMNS) + "\n" == HEADER

    def test_row_format(self):
        """クラスは空白区切り、正解率と秒数は小数2桁"""
        text = render_csv([make_row()])
        assert text == HEADER + "1 0,pencil(0|1);eig(1),3,0.001,200,50,99.90,1.23\n"

    def test_without_timing(self):
        """秒数列を0.00にする"""
        text = render_csv([make_row(seconds=5.0)], include_timing=False)
        assert text.endswith(",99.90,0.00\n")


class TestEmitReport:
    """emit_report, parse_reportのテスト"""

    def test_round_trip(self, tmp_path):
        """1行を書いて読み戻す"""
        path = emit_report([make_row(classes=(0, 2, 8), spec="pencil(0|pool(2,8))")], tmp_path / "report.csv")
        rows = parse_report(path)
        assert len(rows) == 1
        assert rows[0].classes == (0, 2, 8)
        assert rows[0].feature_spec == "pencil(0|pool(2,8))"
        assert rows[0].accuracy_pct == pytest.approx(99.9)
        assert rows[0].seconds == pytest.approx(1.23)

    def test_empty_report(self, tmp_path):
        path = emit_report([], tmp_path / "empty.csv")
        assert path.read_text(encoding="utf-8") == HEADER
        assert parse_report(path) == []

    def test_creates_parent_directory(self, tmp_path):
        path = emit_report([make_row()], tmp_path / "nested" / "report.csv")
        assert path.exists()

    def test_markdown_by_suffix(self, tmp_path):
        path = emit_report([make_row()], tmp_path / "report.md")
        assert path.read_text(encoding="utf-8").startswith("| C1 | C2 |")

    def test_explicit_format(self, tmp_path):
        path = emit_report([make_row()], tmp_path / "report.txt", fmt="csv")
        assert path.read_text(encoding="utf-8").startswith(HEADER)

    def test_unknown_suffix(self, tmp_path):
        with pytest.raises(ConfigError):
            emit_report([make_row()], tmp_path / "report.txt")

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(DataIOError):
            emit_report([make_row()], blocker / "report.csv")

    def test_parse_missing_file(self, tmp_path):
        with pytest.raises(DataIOError):
            parse_report(tmp_path / "missing.csv")

    def test_parse_wrong_columns(self, tmp_path):
        path = tmp_path / "other.csv"
        path.write_text("a,b\n1,2\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            parse_report(path)


class TestRenderMarkdown:
    """render_markdownのテスト"""

    def test_pivot_table(self):
        """クラスの組を行、列見出しを列とする"""
        rows = [
            make_row((1, 0), "pencil(0|1);eig(1)", 99.9, title="(A−λB;B)"),
            make_row((1, 0), "pencil(0|1)", 51.25, title="A−λB"),
            make_row((2, 0), "pencil(0|2);eig(2)", 98.0, title="(A−λB;B)"),
        ]
        lines = render_markdown(rows).splitlines()
        assert lines[0] == "| C1 | C2 | (A−λB;B) | A−λB |"
        assert lines[2] == "| 1 | 0 | 99.90 | 51.25 |"
        assert lines[3] == "| 2 | 0 | 98.00 |  |"
        assert "k = 3" in lines[-1]

    def test_spec_as_header_without_title(self):
        lines = render_markdown([make_row((0, 2, 8), "eig(0)")]).splitlines()
        assert lines[0] == "| C1 | C2 | C3 | eig(0) |"

    def test_empty(self):
        assert render_markdown([]).splitlines() == ["| C1 | C2 |", "| --- | --- |"]

"""
レポート出力
実験結果のCSV（列順固定）とMarkdown（クラスの組×特徴量の表）への書き出し・読み戻し
"""

import csv
import io
import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Literal

from diffinfo.errors import ConfigError, DataIOError
from diffinfo.models import ReportRow

logger = logging.getLogger(__name__)

ReportFormat = Literal["csv", "markdown"]

CSV_COLUMNS = ("classes", "feature_spec", "k", "ridge", "n_train", "n_test", "accuracy_pct", "seconds")


def _csv_record(row: ReportRow, include_timing: bool) -> list[str]:
    return [
        " ".join(str(label) for label in row.classes),
        row.feature_spec,
        str(row.k),
        f"{row.ridge:g}",
        str(row.n_train),
        str(row.n_test),
        f"{row.accuracy_pct:.2f}",
        f"{row.seconds:.2f}" if include_timing else "0.00",
    ]


def render_csv(rows: Sequence[ReportRow], include_timing: bool = True) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(_csv_record(row, include_timing))
    return buffer.getvalue()


def render_markdown(rows: Sequence[ReportRow]) -> str:
    """
    クラスの組を行、特徴量を列とする表を作る

    Args:
        rows: レポート行

    Returns:
        str: Markdownの表
    """
    arity = len(rows[0].classes) if rows else 2
    columns: list[str] = []
    table: dict[tuple[int, ...], dict[str, float]] = {}
    for row in rows:
        column = row.feature_title or row.feature_spec
        if column not in columns:
            columns.append(column)
        table.setdefault(row.classes, {})[column] = row.accuracy_pct

    header = [f"C{i}" for i in range(1, arity + 1)] + columns
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join(" --- " for _ in header) + "|"]
    for classes, cells in table.items():
        values = [str(label) for label in classes]
        values += [f"{cells[column]:.2f}" if column in cells else "" for column in columns]
        lines.append("| " + " | ".join(values) + " |")
    if rows:
        first = rows[0]
        lines.append("")
        lines.append(f"正解率（%）。k = {first.k}, ridge = {first.ridge:g}")
    return "\n".join(lines) + "\n"


def _infer_format(path: Path) -> ReportFormat:
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".md", ".markdown"):
        return "markdown"
    raise ConfigError(f"レポートの形式を拡張子から判定できません: {path}（.csv または .md）")


def emit_report(
    rows: Sequence[ReportRow],
    path: str | Path,
    fmt: ReportFormat | None = None,
    include_timing: bool = True,
) -> Path:
    """
    レポートをファイルに書き出す

    Args:
        rows: レポート行（入力順に出力）
        path: 出力先
        fmt: "csv" または "markdown"。省略時は拡張子から判定
        include_timing: Falseなら秒数列を0.00にする（固定シードで同一バイト列になる）

    Returns:
        Path: 書き出したパス
    """
    path = Path(path)
    fmt = fmt or _infer_format(path)
    text = render_csv(rows, include_timing) if fmt == "csv" else render_markdown(rows)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise DataIOError(f"レポートを書き込めません: {path} ({e})") from e
    logger.info(f"レポート出力完了: {path} ({len(rows)}行, {fmt})")
    return path


def parse_report(path: str | Path) -> list[ReportRow]:
    """CSVレポートを読み戻す"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataIOError(f"レポートを読み込めません: {path} ({e})") from e

    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ConfigError(f"レポートの列が想定と異なります: {reader.fieldnames}")
    return [
        ReportRow(
            classes=tuple(int(label) for label in record["classes"].split()),
            feature_spec=record["feature_spec"],
            k=int(record["k"]),
            ridge=float(record["ridge"]),
            n_train=int(record["n_train"]),
            n_test=int(record["n_test"]),
            accuracy_pct=float(record["accuracy_pct"]),
            seconds=float(record["seconds"]),
        )
        for record in reader
    ]

"""
数据读写和导出模块：事件日志（JSON-lines）、JSON 产物以及分析报告的 CSV/JSON/Excel 导出
"""

import json
import os
from typing import Any, Dict, Iterable, List, Optional

import pandas as pd

from office_world.config import EVENT_SCHEMA, EVENT_SCHEMA_VERSION, OUTPUT_DIR
from office_world.utils.logger import get_logger

# 获取日志记录器
logger = get_logger("DataExporter")


def header_record(**fields: Any) -> Dict[str, Any]:
    """事件日志首行：日志格式名称、版本以及会话信息"""
    return {"kind": "header", "schema": EVENT_SCHEMA, "version": EVENT_SCHEMA_VERSION, **fields}


class EventLogWriter:
    """按行写入事件记录；每行一个按键排序的 JSON 对象，首行为带版本的表头"""

    def __init__(self, path: str):
        self.path = path
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        self._file = open(path, "w", encoding="utf-8")
        self.count = 0

    def write(self, record: Dict[str, Any]) -> None:
        self._file.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
        self.count += 1

    def close(self) -> None:
        if not self._file.closed:
            self._file.close()
            logger.debug(f"Wrote {self.count} events to {self.path}")

    def __enter__(self) -> "EventLogWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_event_log(path: str) -> List[Dict[str, Any]]:
    """
    读取事件日志

    参数:
    - path: events.jsonl 路径

    返回:
    - 事件字典列表；末尾不完整的行会被跳过并记录警告
    """
    events = []
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError:
                logger.warning(f"Skipping malformed event log line {number} in {path}")
    return events


def write_json(path: str, data: Any) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True) + "\n")
    return path


def write_text(path: str, text: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return path


class DataExporter:
    """报告导出类"""

    FORMATS = ("csv", "json", "xlsx")

    def __init__(self, output_dir: Optional[str] = None):
        """
        初始化报告导出器

        参数:
        - output_dir: 输出目录，如果为None则使用默认目录
        """
        self.output_dir = output_dir or OUTPUT_DIR

        # 确保输出目录存在
        os.makedirs(self.output_dir, exist_ok=True)

    def export_report(self, report, fmt: str = "csv") -> str:
        """
        导出一份分析报告

        参数:
        - report: analytics.Report
        - fmt: csv / json / xlsx

        返回:
        - 导出文件的路径
        """
        if fmt not in self.FORMATS:
            raise ValueError(f"unsupported report format {fmt}")
        export_path = os.path.join(self.output_dir, f"{report.kind}.{fmt}")
        table: pd.DataFrame = report.table

        if fmt == "csv":
            table.to_csv(export_path, index=False, lineterminator="\n")
        elif fmt == "json":
            payload = {
                "kind": report.kind,
                "rows": table.to_dict(orient="records"),
                "diagnostics": list(report.diagnostics),
                "summary": report.summary,
            }
            write_json(export_path, payload)
        else:
            self._export_excel(table, export_path, report.kind)

        for message in report.diagnostics:
            logger.warning(f"{report.kind} report: {message}")
        logger.info(f"Report {report.kind} exported to {export_path}")
        return export_path

    def export_reports(self, reports: Iterable, fmt: str = "csv") -> List[str]:
        return [self.export_report(report, fmt) for report in reports]

    @staticmethod
    def _export_excel(table: pd.DataFrame, export_path: str, sheet: str) -> None:
        table.to_excel(export_path, index=False, sheet_name=sheet, engine="openpyxl")

        # 使用openpyxl添加格式
        from openpyxl import load_workbook
        from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
        from openpyxl.utils import get_column_letter

        wb = load_workbook(export_path)
        ws = wb.active

        header_font = Font(bold=True, size=12)
        header_fill = PatternFill(start_color="E0E0E0", end_color="E0E0E0", fill_type="solid")
        thin_border = Border(
            left=Side(style="thin"),
            right=Side(style="thin"),
            top=Side(style="thin"),
            bottom=Side(style="thin"),
        )

        for i, column in enumerate(table.columns, 1):
            ws.column_dimensions[get_column_letter(i)].width = max(12, len(str(column)) + 4)

        for cell in ws[1]:
            cell.font = header_font
            cell.fill = header_fill
            cell.alignment = Alignment(horizontal="center", vertical="center")
            cell.border = thin_border

        for row in ws.iter_rows(min_row=2):
            for cell in row:
                cell.border = thin_border

        wb.save(export_path)

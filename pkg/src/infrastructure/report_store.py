"""JSON persistence for reports, manifests and signature dumps"""
import json
import logging
from pathlib import Path

from src.domain.models import ExperimentReport
from src.domain.repositories import ReportRepository

logger = logging.getLogger(__name__)


class JsonReportRepository(ReportRepository):
    """Writes pretty-printed JSON, creating parent directories as needed"""

    def save_report(self, path: str, report: ExperimentReport) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(report.model_dump_json(indent=2) + "\n")
        logger.info(f"Saved {report.experiment} report to {path}")

    def load_report(self, path: str) -> ExperimentReport:
        return ExperimentReport.model_validate_json(Path(path).read_text())

    def save_json(self, path: str, payload: dict) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(payload, indent=2) + "\n")

    def load_json(self, path: str) -> dict:
        return json.loads(Path(path).read_text())

"""Repository interfaces following Dependency Inversion Principle"""
from abc import ABC, abstractmethod

from src.domain.models import ExperimentReport, Stream, StreamBatch


class StreamRepository(ABC):
    """Interface for reading and writing stream files"""

    @abstractmethod
    def read_stream(self, path: str) -> Stream:
        """Read a single stream (CSV)"""
        pass

    @abstractmethod
    def write_stream(self, path: str, stream: Stream) -> None:
        """Write a single stream (CSV)"""
        pass

    @abstractmethod
    def read_batch(self, path: str) -> StreamBatch:
        """Read a batch of equal-shape streams (JSON-lines)"""
        pass

    @abstractmethod
    def write_batch(self, path: str, batch: StreamBatch) -> None:
        """Write a batch of streams (JSON-lines)"""
        pass


class ReportRepository(ABC):
    """Interface for persisting experiment reports and manifests"""

    @abstractmethod
    def save_report(self, path: str, report: ExperimentReport) -> None:
        """Persist a report"""
        pass

    @abstractmethod
    def load_report(self, path: str) -> ExperimentReport:
        """Load a previously saved report"""
        pass

    @abstractmethod
    def save_json(self, path: str, payload: dict) -> None:
        """Persist an arbitrary JSON document (manifests, signatures, traces)"""
        pass

    @abstractmethod
    def load_json(self, path: str) -> dict:
        """Load a JSON document"""
        pass


class ParameterRepository(ABC):
    """Interface for persisting trained model parameters"""

    @abstractmethod
    def save(self, path: str, values, segments: dict) -> None:
        """Write the flat parameter vector and its segment layout"""
        pass

    @abstractmethod
    def load(self, path: str) -> tuple:
        """Return (flat values, segments) previously written by save"""
        pass

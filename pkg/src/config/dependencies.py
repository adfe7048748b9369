"""Dependency injection container"""
from functools import lru_cache

from src.application.generative import GenerativeExperimentUseCase
from src.application.hurst import HurstExperimentUseCase
from src.application.use_cases import (
    ComputeSignatureUseCase,
    GenerateDataUseCase,
    GradCheckUseCase,
    InvertSignatureUseCase,
    MMDTestUseCase,
)
from src.config.settings import Settings, settings
from src.domain.repositories import ParameterRepository, ReportRepository, StreamRepository
from src.infrastructure.param_store import BinaryParameterRepository
from src.infrastructure.report_store import JsonReportRepository
from src.infrastructure.stream_files import FileStreamRepository


@lru_cache()
def get_settings() -> Settings:
    """Get application settings (singleton)"""
    return settings


def get_stream_repository() -> StreamRepository:
    """Get stream file repository instance"""
    return FileStreamRepository()


def get_report_repository() -> ReportRepository:
    """Get report repository instance"""
    return JsonReportRepository()


def get_parameter_repository() -> ParameterRepository:
    """Get parameter file repository instance"""
    return BinaryParameterRepository()


def get_compute_signature_use_case() -> ComputeSignatureUseCase:
    return ComputeSignatureUseCase(stream_repository=get_stream_repository(), threads=get_settings().threads)


def get_invert_signature_use_case() -> InvertSignatureUseCase:
    return InvertSignatureUseCase(
        stream_repository=get_stream_repository(),
        report_repository=get_report_repository(),
    )


def get_mmd_test_use_case() -> MMDTestUseCase:
    return MMDTestUseCase(stream_repository=get_stream_repository(), threads=get_settings().threads)


def get_generate_data_use_case() -> GenerateDataUseCase:
    return GenerateDataUseCase(
        stream_repository=get_stream_repository(),
        report_repository=get_report_repository(),
        threads=get_settings().threads,
    )


def get_gradcheck_use_case() -> GradCheckUseCase:
    return GradCheckUseCase()


def get_hurst_experiment_use_case() -> HurstExperimentUseCase:
    return HurstExperimentUseCase(
        parameter_repository=get_parameter_repository(),
        threads=get_settings().threads,
    )


def get_generative_experiment_use_case() -> GenerativeExperimentUseCase:
    return GenerativeExperimentUseCase(
        parameter_repository=get_parameter_repository(),
        threads=get_settings().threads,
    )

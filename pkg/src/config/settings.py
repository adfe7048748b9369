"""Application settings using Pydantic"""
from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application configuration, read from SIGSTACK_* variables and .env"""
    threads: int = Field(default=1, ge=1)  # worker threads for batch signatures and permutations
    log_level: str = "INFO"
    output_dir: str = "./runs"
    default_depth: int = Field(default=4, ge=1)
    inversion_depth: int = Field(default=12, ge=1)
    kernel_target_norm: float = Field(default=1.0, gt=0.0)
    permutations: int = Field(default=200, ge=100)

    class Config:
        env_prefix = "SIGSTACK_"
        env_file = ".env"
        case_sensitive = False
        extra = "ignore"  # Ignore extra environment variables


# Global settings instance
settings = Settings()

from pathlib import Path

from pydantic import Field, validator
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """
    Document exchange settings loaded from environment variables with validation.
    """
    # Application settings
    PROJECT_NAME: str = "dxsync Document Exchange API"
    API_V1_PREFIX: str = "/api/v1"
    ENVIRONMENT: str = Field("development", env="ENVIRONMENT")  # development, staging, production
    HOST: str = Field("0.0.0.0", env="HOST")
    PORT: int = Field(8000, env="PORT")

    # Logging settings
    AUDIT_LOG_PATH: str = Field("./logs/exchange_audit.log", env="AUDIT_LOG_PATH")

    # Search limits
    ENUMERATION_CAP_BITS: int = Field(24, env="ENUMERATION_CAP_BITS")
    WITNESS_CAP: int = Field(1_000_000, env="WITNESS_CAP")
    CANDIDATE_CAP: int = Field(1_000_000, env="CANDIDATE_CAP")
    FULL_SCAN_MAX_BITS: int = Field(1024, env="FULL_SCAN_MAX_BITS")
    EXACT_DETECT_MAX_BITS: int = Field(4096, env="EXACT_DETECT_MAX_BITS")
    ENUMERATE_VALUE_BITS: int = Field(12, env="ENUMERATE_VALUE_BITS")

    # Scheme constants
    ALG2_HASH_WIDTH: int = Field(8, env="ALG2_HASH_WIDTH")
    VERIFY_MULTIPLIER: int = Field(4, env="VERIFY_MULTIPLIER")
    BIAS_CONSTANT: int = Field(2, env="BIAS_CONSTANT")
    FINAL_CHECK_BITS: int = Field(64, env="FINAL_CHECK_BITS")
    COLOR_HASH_BITS: int = Field(64, env="COLOR_HASH_BITS")

    # Worker threads for per-level work
    THREADS: int = Field(1, env="THREADS")

    @validator("AUDIT_LOG_PATH")
    def validate_audit_log_path(cls, v: str) -> str:
        """Validate the audit log path exists or can be created"""
        log_dir = Path(v).parent
        if not log_dir.exists():
            try:
                log_dir.mkdir(parents=True, exist_ok=True)
            except Exception as e:
                raise ValueError(f"Failed to create log directory: {e}")
        return v

    @validator("ENUMERATION_CAP_BITS")
    def validate_enumeration_cap(cls, v: int) -> int:
        """Seed enumeration beyond 40 bits is never tractable"""
        if not 0 <= v <= 40:
            raise ValueError("ENUMERATION_CAP_BITS must be within [0, 40]")
        return v

    class Config:
        env_file = ".env"
        case_sensitive = True
        extra = "ignore"  # Ignore extra fields in the environment


settings = Settings()

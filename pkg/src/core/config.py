from typing import Optional
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Основные настройки
    APP_NAME: str = "ObsEntropy"
    APP_VERSION: str = "1.0.0"
    ENVIRONMENT: str = Field("development")
    DEBUG: bool = Field(False)

    # Логирование
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None
    LOG_FORMAT: str = "text"

    # Куда CLI пишет результаты по умолчанию
    OUTPUT_DIR: str = "."

    # Допуски проверок инвариантов
    HERMITIAN_TOL: float = 1e-10
    TRACE_TOL: float = 1e-10
    PSD_TOL: float = 1e-10
    PROJECTOR_TOL: float = 1e-10
    COMPLETENESS_TOL: float = 1e-10
    VOLUME_INTEGER_TOL: float = 1e-8
    DEGENERACY_TOL: float = 1e-8

    # Энтропия
    PRUNE_VOLUME_TOL: float = 1e-12
    BRANCH_PROBABILITY_TOL: float = 1e-9
    PROBABILITY_SUM_TOL: float = 1e-9
    VOLUME_SUM_TOL: float = 1e-6
    VALIDATE_MAX_DIM: int = 4096

    # Оптимизатор энтропии квантовых корреляций
    QCE_RESTARTS: int = 16
    QCE_SEED: int = 0
    QCE_TOL_OBJ: float = 1e-8
    QCE_MAX_SWEEPS: int = 200
    QCE_GRID_POINTS: int = 16

    # Решеточные модели
    MAX_SITES: int = 16
    MAX_DIM: int = 4096
    SHELL_FRACTION: float = 50.0
    AVERAGE_WINDOW: float = 0.25

    # Классическое фазовое пространство
    PLANCK_CONSTANT: float = 1.0

    @field_validator("LOG_FORMAT")
    @classmethod
    def validate_log_format(cls, v: str) -> str:
        v = v.lower()
        if v not in ("text", "json"):
            raise ValueError("LOG_FORMAT должен быть 'text' или 'json'")
        return v

    @field_validator("AVERAGE_WINDOW")
    @classmethod
    def validate_window(cls, v: float) -> float:
        if not 0 < v <= 1:
            raise ValueError("AVERAGE_WINDOW должен лежать в (0, 1]")
        return v

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore"
    )

    @property
    def is_production(self) -> bool:
        return self.ENVIRONMENT == "production"

    @property
    def is_development(self) -> bool:
        return self.ENVIRONMENT == "development"


# Создание глобального объекта настроек
settings = Settings()

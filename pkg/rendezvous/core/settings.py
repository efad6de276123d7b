from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # App Info
    APP_TITLE: str = "Rendezvous IRLS Planner"
    APP_VERSION: str = "0.3.0"

    # Logging
    RENDEZVOUS_LOG_LEVEL: str = "INFO"

    # Outputs
    RENDEZVOUS_OUTPUT_DIR: str = "runs"

    # Mission presets
    RENDEZVOUS_MISSIONS_PATH: str = "config/missions.yaml"

    # Physics
    RENDEZVOUS_MU: float = 3.986004418e14  # Earth, m^3/s^2

    # Numerics
    RENDEZVOUS_GAUSS_NODES: int = 5
    RENDEZVOUS_QUADRATURE_RTOL: float = 1e-8
    RENDEZVOUS_JMAX: int = 500

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore"
    )

settings = Settings()

import logging
import os

from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger("weakwire")

_DEFAULTS = {
    "WEAKWIRE_THREADS": "1",
    "WEAKWIRE_MAX_QUBITS": "12",
    "WEAKWIRE_AMP_EPS": "1e-10",
    "WEAKWIRE_CHECK_TOL": "1e-10",
    "WEAKWIRE_LOG_LEVEL": "WARNING",
}


class ConfigError(ValueError):
    pass


def _read(name: str, cast):
    raw = os.environ.get(name, _DEFAULTS[name])
    try:
        value = cast(raw)
    except ValueError:
        raise ConfigError(f"invalid value for {name}: {raw!r}")
    if cast in (int, float) and value <= 0:
        raise ConfigError(f"{name} must be positive, got {raw!r}")
    return value


def get_config() -> dict:
    config = {
        "threads": _read("WEAKWIRE_THREADS", int),
        "max_qubits": _read("WEAKWIRE_MAX_QUBITS", int),
        "amp_eps": _read("WEAKWIRE_AMP_EPS", float),
        "check_tol": _read("WEAKWIRE_CHECK_TOL", float),
        "log_level": _read("WEAKWIRE_LOG_LEVEL", str).upper(),
    }
    return config


def configure_logging(level: str | None = None) -> None:
    """Attach a stderr handler to the project logger (CLI only)."""
    level = level or get_config()["log_level"]
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(
            logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
        )
        logger.addHandler(handler)
    logger.setLevel(level)

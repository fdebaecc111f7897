"""Shared configuration knobs."""

import os

ENUM_CAP_ENV = "WSL_ENUM_CAP"


def resolve_enum_cap(default: int, override=None) -> int:
    """Enumeration cap: explicit override wins, then the environment, then default."""
    if override is not None:
        return int(override)
    env = os.environ.get(ENUM_CAP_ENV)
    if env is not None:
        return int(env)
    return default

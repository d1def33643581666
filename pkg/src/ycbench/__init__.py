"""Deterministic one-year startup simulation with a command-line action space."""

__version__ = "0.1.0"

from .config import BenchConfig, TierSpec, load_config, load_preset  # noqa: F401
from .model import WorldState, state_hash  # noqa: F401
from .worldgen import generate_world  # noqa: F401

"""Provider settings. The API key itself lives only in the environment;
the config stores the variable's name, so no instance can leak it."""

import os
from dataclasses import dataclass


class CredentialError(Exception):
    pass


@dataclass
class ProviderConfig:
    model: str
    base_url: str
    api_key_env: str = "YC_DRIVER_API_KEY"
    timeout: float = 60.0
    max_retries: int = 2
    retry_backoff: float = 0.5  # seconds, scaled by attempt number

    def api_key(self) -> str:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise CredentialError(
                f"no API key in ${self.api_key_env}; export it before running"
            )
        return key


@dataclass
class Pricing:
    prompt_per_1k: float
    completion_per_1k: float

    def cost(self, tokens_in: int, tokens_out: int) -> float:
        dollars = (tokens_in * self.prompt_per_1k + tokens_out * self.completion_per_1k) / 1000
        return round(dollars, 6)

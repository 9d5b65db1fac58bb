"""Shared backend types: endpoint configuration, prompts, token accounting."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
        )

    @property
    def total(self) -> int:
        return self.prompt_tokens + self.completion_tokens


@dataclass(frozen=True)
class InferenceEndpointConfig:
    """Where and how to reach one remote inference service.

    Credentials are read from the environment variable named by
    ``credential_env_var_name`` at request time, never stored in config.
    """

    base_url: str
    model_id: str
    credential_env_var_name: str | None = None
    timeout: float = 30.0
    max_retries: int = 2
    max_parallel_requests: int = 4
    retry_backoff: float = 0.0

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_parallel_requests < 1:
            raise ValueError("max_parallel_requests must be >= 1")


@dataclass(frozen=True)
class PromptTemplate:
    """A named prompt with ``{placeholder}`` slots filled by literal replacement."""

    name: str
    text: str
    required: tuple[str, ...] = ()

    def __post_init__(self):
        missing = [p for p in self.required if ("{%s}" % p) not in self.text]
        if missing:
            raise ValueError(f"template {self.name!r} is missing placeholders: {missing}")

    def render(self, **values: str) -> str:
        out = self.text
        for key, value in values.items():
            out = out.replace("{%s}" % key, value)
        return out

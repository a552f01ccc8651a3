"""Configuration: target-language profile, provider settings, pipeline defaults.

Config files are TOML; environment variables override secrets and provider
settings (OPENAI_API_KEY, TOOLFORGE_PROVIDER, TOOLFORGE_KB_ROOT).
"""

from __future__ import annotations

import os
import shutil
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigurationError


@dataclass(frozen=True)
class TargetProfile:
    """Language profile for generated functions and their test scripts."""

    name: str = "python"
    source_extension: str = ".py"
    interpreter: tuple[str, ...] = (sys.executable,)
    import_template: str = "from {module} import {name}"
    signature_pattern: str = r"^(?:async\s+)?def\s+(\w+)\s*\((.*?)\)\s*(?:->.*?)?:"

    def check_interpreter(self) -> None:
        if shutil.which(self.interpreter[0]) is None:
            raise ConfigurationError(f"interpreter not found: {self.interpreter[0]}")


@dataclass(frozen=True)
class ProviderSettings:
    kind: str = "replay"  # "live" | "replay"
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4.1"
    api_key_env: str = "OPENAI_API_KEY"
    transcript_path: str | None = None  # replay source
    record_path: str | None = None  # tee live traffic here


@dataclass(frozen=True)
class Config:
    kb_root: Path = Path("kb")
    provider: ProviderSettings = field(default_factory=ProviderSettings)
    profile: TargetProfile = field(default_factory=TargetProfile)
    max_iterations: int = 6
    timeout_seconds: int = 30
    tdd_enabled: bool = True
    context_budget: int = 8000
    listen_host: str = "127.0.0.1"
    listen_port: int = 8642

    def validate(self) -> None:
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be >= 1")
        if self.timeout_seconds < 1:
            raise ConfigurationError("timeout_seconds must be >= 1")
        self.profile.check_interpreter()
        self.kb_root.mkdir(parents=True, exist_ok=True)
        if not os.access(self.kb_root, os.W_OK):
            raise ConfigurationError(f"kb_root not writable: {self.kb_root}")


def load_config(path: Path | None = None, env: dict[str, str] | None = None) -> Config:
    """Load a TOML config file (optional) and apply environment overrides."""
    env = os.environ if env is None else env
    doc: dict = {}
    if path is not None:
        try:
            doc = tomllib.loads(Path(path).read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc

    prov_doc = doc.get("provider", {})
    provider = ProviderSettings(
        kind=prov_doc.get("kind", "replay"),
        base_url=prov_doc.get("base_url", ProviderSettings.base_url),
        model=prov_doc.get("model", ProviderSettings.model),
        api_key_env=prov_doc.get("api_key_env", ProviderSettings.api_key_env),
        transcript_path=prov_doc.get("transcript_path"),
        record_path=prov_doc.get("record_path"),
    )
    prof_doc = doc.get("profile", {})
    profile = TargetProfile(
        name=prof_doc.get("name", "python"),
        source_extension=prof_doc.get("source_extension", ".py"),
        interpreter=tuple(prof_doc.get("interpreter", [sys.executable])),
        import_template=prof_doc.get("import_template", TargetProfile.import_template),
    )
    pipe_doc = doc.get("pipeline", {})
    cfg = Config(
        kb_root=Path(doc.get("kb_root", "kb")),
        provider=provider,
        profile=profile,
        max_iterations=pipe_doc.get("max_iterations", 6),
        timeout_seconds=pipe_doc.get("timeout_seconds", 30),
        tdd_enabled=pipe_doc.get("tdd_enabled", True),
        context_budget=pipe_doc.get("context_budget", 8000),
        listen_host=doc.get("listen_host", "127.0.0.1"),
        listen_port=doc.get("listen_port", 8642),
    )

    if env.get("TOOLFORGE_KB_ROOT"):
        cfg = replace(cfg, kb_root=Path(env["TOOLFORGE_KB_ROOT"]))
    if env.get("TOOLFORGE_PROVIDER"):
        cfg = replace(cfg, provider=replace(cfg.provider, kind=env["TOOLFORGE_PROVIDER"]))
    if env.get("TOOLFORGE_TRANSCRIPT"):
        cfg = replace(
            cfg, provider=replace(cfg.provider, transcript_path=env["TOOLFORGE_TRANSCRIPT"])
        )
    return cfg

"""TOML run configuration, backend construction, and seed expansion.

One root seed drives everything; each pipeline stage derives its own
stream from (root seed, stage name) so stages stay independently
reproducible.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import backends as be
from .corpus import read_manifest
from .errors import ConfigurationError
from .prompts import load_data, template_hashes

DEFAULT_VOICES: Tuple[Tuple[str, str], ...] = tuple(
    (v, g) for v, g in json.loads(load_data("voices.json"))
)


@dataclass
class RunConfig:
    root_seed: int = 1234
    out_dir: str = "runs/default"
    backends: Dict[str, dict] = field(default_factory=dict)
    generation: Dict[str, object] = field(default_factory=dict)
    verification: Dict[str, object] = field(default_factory=dict)
    plan: Dict[str, object] = field(default_factory=dict)
    evaluation: Dict[str, object] = field(default_factory=dict)
    raw_bytes: bytes = b""

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.raw_bytes).hexdigest()

    def voices(self) -> Tuple[Tuple[str, str], ...]:
        listed = self.backends.get("tts", {}).get("voices")
        if listed:
            return tuple((v, g) for v, g in listed)
        return DEFAULT_VOICES


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    raw = Path(path).read_bytes()
    data = tomllib.loads(raw.decode("utf-8"))
    return RunConfig(
        root_seed=int(data.get("root_seed", 1234)),
        out_dir=str(data.get("out_dir", "runs/default")),
        backends=data.get("backends", {}),
        generation=data.get("generation", {}),
        verification=data.get("verification", {}),
        plan=data.get("plan", {}),
        evaluation=data.get("evaluation", {}),
        raw_bytes=raw,
    )


def stage_seed(root_seed: int, stage: str) -> int:
    digest = hashlib.sha256(f"{root_seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def provenance(config: RunConfig, stage: str, inputs=(), outputs=()) -> dict:
    return {
        "stage": stage,
        "config_hash": config.config_hash,
        "root_seed": config.root_seed,
        "stage_seed": stage_seed(config.root_seed, stage),
        "template_hashes": template_hashes(),
        "inputs": list(inputs),
        "outputs": list(outputs),
    }


def _api_key(section: dict, default_env: str) -> str:
    env = section.get("api_key_env", default_env)
    return os.environ.get(env, "")


def build_chat_backend(config: RunConfig, role: str = "chat"):
    section = config.backends.get(role, {})
    kind = section.get("kind", "mock")
    if kind == "mock":
        if role == "judge":
            return be.MockJudgeBackend()
        return be.MockChatBackend(seed=config.root_seed)
    if kind == "http":
        return be.HTTPChatBackend(
            endpoint=section["endpoint"],
            model=section.get("model", ""),
            api_key=_api_key(section, "CHAT_API_KEY"),
            timeout_s=float(section.get("timeout_s", 30.0)),
        )
    raise ConfigurationError(f"unknown {role} backend kind {kind!r}")


def build_tts_backend(config: RunConfig):
    section = config.backends.get("tts", {})
    kind = section.get("kind", "mock")
    if kind == "mock":
        return be.MockTTSBackend()
    if kind == "http":
        return be.HTTPTTSBackend(
            endpoint=section["endpoint"],
            model=section.get("model", ""),
            api_key=_api_key(section, "TTS_API_KEY"),
            timeout_s=float(section.get("timeout_s", 60.0)),
        )
    raise ConfigurationError(f"unknown tts backend kind {kind!r}")


def build_stress_backend(config: RunConfig):
    section = config.backends.get("stress", {})
    kind = section.get("kind", "mock")
    if kind == "mock":
        return be.MockStressDetector(
            p_flip=float(section.get("p_flip", 0.0)),
            seed=int(section.get("seed", stage_seed(config.root_seed, "stress-detect"))),
        )
    if kind == "http":
        return be.HTTPStressBackend(
            endpoint=section["endpoint"],
            api_key=_api_key(section, "STRESS_API_KEY"),
            timeout_s=float(section.get("timeout_s", 60.0)),
        )
    if kind == "command":
        return be.CommandStressBackend(section["argv"])
    raise ConfigurationError(f"unknown stress backend kind {kind!r}")


def build_slm_backend(config: RunConfig, dataset_manifest: Optional[str], audio_root) -> object:
    section = config.backends.get("slm", {})
    kind = section.get("kind", "mock:echo_gold")
    if kind.startswith("mock:"):
        mode = kind.split(":", 1)[1]
        if mode == "option":
            return be.FixedOptionSLM(int(section.get("option", 1)))
        if dataset_manifest is None:
            raise ConfigurationError("sample-aware mock SLM needs a dataset manifest")
        samples = read_manifest(dataset_manifest)
        if mode == "echo_gold":
            return be.EchoGoldSLM(samples, audio_root)
        if mode == "complement":
            return be.ComplementSLM(samples, audio_root)
        raise ConfigurationError(f"unknown mock slm mode {mode!r}")
    if kind == "http":
        return be.HTTPSLMBackend(
            endpoint=section["endpoint"],
            model=section.get("model", ""),
            api_key=_api_key(section, "SLM_API_KEY"),
            timeout_s=float(section.get("timeout_s", 120.0)),
        )
    raise ConfigurationError(f"unknown slm backend kind {kind!r}")

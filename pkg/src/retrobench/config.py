"""Run configuration: one TOML file, every key mirrored by a CLI flag
(flags win). Sections:

    [run]           seed, out, stereo ("aware" | "agnostic"), k = [1, 10]
    [[dataset]]     manifest = "path/to/dataset.toml"
    [predictions]   file = "predictions.jsonl"
    [endpoint]      url, request_template, response_path, n, temperature,
                    max_tokens, timeout, max_retries, max_in_flight,
                    credential_env, [endpoint.headers]
    [instruct]      templates, design_rate, augment
    [vocab]         merges
    [fingerprint]   radius, n_bits, knn
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from retrobench.sampling import EndpointConfig


class ConfigError(ValueError):
    pass


@dataclass
class Settings:
    """Raw config data plus CLI overrides; lookups prefer overrides."""

    data: dict = field(default_factory=dict)
    overrides: dict = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path.cwd)

    def get(self, section: str, key: str, default: Any = None) -> Any:
        value = self.overrides.get(f"{section}.{key}")
        if value is not None:
            return value
        return self.data.get(section, {}).get(key, default)

    def set_override(self, section: str, key: str, value: Any) -> None:
        if value is not None:
            self.overrides[f"{section}.{key}"] = value

    # -- typed accessors -----------------------------------------------------

    def seed(self) -> int:
        return int(self.get("run", "seed", 0))

    def stereo(self) -> bool:
        mode = str(self.get("run", "stereo", "aware"))
        if mode not in ("aware", "agnostic"):
            raise ConfigError(f"stereo must be 'aware' or 'agnostic', got {mode!r}")
        return mode == "aware"

    def ks(self) -> list[int]:
        raw = self.get("run", "k", [1, 10])
        if isinstance(raw, str):
            raw = [part for part in raw.split(",") if part]
        try:
            ks = sorted({int(v) for v in raw})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad k list: {raw!r}") from exc
        if not ks or any(k < 1 for k in ks):
            raise ConfigError("k values must be positive")
        return ks

    def out_dir(self, required: bool = True) -> Optional[Path]:
        value = self.get("run", "out")
        if value is None:
            if required:
                raise ConfigError("an output directory is required (--out or [run].out)")
            return None
        path = Path(value)
        if not path.is_absolute():
            path = self.base_dir / path
        try:
            path.mkdir(parents=True, exist_ok=True)
            probe = path / ".write_probe"
            probe.touch()
            probe.unlink()
        except OSError as exc:
            raise ConfigError(f"output directory {path} is not writable: {exc}") from exc
        return path

    def dataset_manifests(self) -> list[Path]:
        paths = [Path(p) for p in self.overrides.get("dataset.manifests", [])]
        if not paths:
            for entry in self.data.get("dataset", []):
                if "manifest" not in entry:
                    raise ConfigError("[[dataset]] entries need a manifest key")
                raw = Path(entry["manifest"])
                paths.append(raw if raw.is_absolute() else self.base_dir / raw)
        return paths

    def predictions_file(self) -> Optional[Path]:
        value = self.get("predictions", "file")
        if value is None:
            return None
        path = Path(value)
        return path if path.is_absolute() else self.base_dir / path

    def endpoint(self) -> Optional[EndpointConfig]:
        section = dict(self.data.get("endpoint", {}))
        for key in ("url", "request_template", "response_path", "n", "temperature",
                    "max_tokens", "timeout", "max_retries", "max_in_flight",
                    "credential_env"):
            override = self.overrides.get(f"endpoint.{key}")
            if override is not None:
                section[key] = override
        if not section.get("url"):
            return None
        headers = section.pop("headers", {})
        defaults = EndpointConfig(url=section["url"])
        try:
            return EndpointConfig(
                url=section["url"],
                request_template=section.get("request_template",
                                             defaults.request_template),
                response_path=section.get("response_path", defaults.response_path),
                headers=dict(headers),
                n=int(section.get("n", defaults.n)),
                temperature=float(section.get("temperature", defaults.temperature)),
                max_tokens=int(section.get("max_tokens", defaults.max_tokens)),
                timeout=float(section.get("timeout", defaults.timeout)),
                max_retries=int(section.get("max_retries", defaults.max_retries)),
                max_in_flight=int(section.get("max_in_flight", defaults.max_in_flight)),
                credential_env=section.get("credential_env"),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad [endpoint] section: {exc}") from exc

    def snapshot(self) -> dict:
        """Hashable view of effective configuration (for the run manifest)."""
        return {
            "data": self.data,
            "overrides": {k: str(v) for k, v in sorted(self.overrides.items())},
        }


def load_settings(config_path: Optional[Path | str]) -> Settings:
    if config_path is None:
        return Settings()
    path = Path(config_path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc
    return Settings(data=data, base_dir=path.resolve().parent)

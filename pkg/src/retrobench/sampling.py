"""Batch sampling client for text-generation HTTP endpoints.

Protocol-agnostic by templating: the request body is a JSON template with
{prompt} {n} {temperature} {max_tokens} placeholders, and the response
text is extracted via a dotted path (keys, integer indices, '*' to map
over a list), e.g. "choices.*.text". No vendor API is hardcoded.

Credentials come from an environment variable named in the config; the
value is injected where a header value contains {credential} and is never
logged.

Transient failures (connection errors, HTTP 429/5xx) retry with a
deterministic exponential backoff; extraction-path misses and empty
yields are permanent. Prompts are processed with bounded concurrency and
per-prompt ordering is preserved in the output.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import httpx

log = logging.getLogger(__name__)

BACKOFF_BASE_SECONDS = 0.25
BACKOFF_CAP_SECONDS = 8.0


class EndpointError(RuntimeError):
    pass


@dataclass(frozen=True)
class EndpointConfig:
    url: str
    request_template: str = '{"prompt": {prompt}, "n": {n}, "temperature": {temperature}, "max_tokens": {max_tokens}}'
    response_path: str = "choices.*.text"
    headers: dict = field(default_factory=dict)
    n: int = 1
    temperature: float = 1.0
    max_tokens: int = 256
    timeout: float = 30.0
    max_retries: int = 3
    max_in_flight: int = 4
    credential_env: Optional[str] = None

    def resolved_headers(self) -> dict[str, str]:
        credential = None
        if self.credential_env:
            credential = os.environ.get(self.credential_env)
            if credential is None:
                raise EndpointError(
                    f"credential environment variable {self.credential_env} is not set")
        out = {}
        for key, value in self.headers.items():
            if "{credential}" in value:
                if credential is None:
                    raise EndpointError(
                        "header uses {credential} but no credential_env is configured")
                value = value.replace("{credential}", credential)
            out[key] = value
        return out


def build_request_body(template: str, prompt: str, n: int, temperature: float,
                       max_tokens: int) -> str:
    body = template.replace("{prompt}", json.dumps(prompt))
    body = body.replace("{n}", str(n))
    body = body.replace("{temperature}", repr(float(temperature)))
    body = body.replace("{max_tokens}", str(int(max_tokens)))
    return body


def extract_path(payload, path: str) -> list[str]:
    """Walk a dotted path through parsed JSON; '*' maps over a list. The
    result is flattened to a list of strings."""
    def walk(node, segments: list[str]) -> list:
        if not segments:
            return [node]
        head, rest = segments[0], segments[1:]
        if head == "*":
            if not isinstance(node, list):
                raise EndpointError(f"extraction path expected a list at {head!r}")
            out = []
            for item in node:
                out.extend(walk(item, rest))
            return out
        if isinstance(node, list):
            try:
                return walk(node[int(head)], rest)
            except (ValueError, IndexError) as exc:
                raise EndpointError(f"extraction path miss at {head!r}") from exc
        if isinstance(node, dict):
            if head not in node:
                raise EndpointError(f"extraction path miss at {head!r}")
            return walk(node[head], rest)
        raise EndpointError(f"extraction path miss at {head!r}")

    leaves = walk(payload, path.split("."))
    out = []
    for leaf in leaves:
        if not isinstance(leaf, str):
            raise EndpointError(f"extraction path yielded non-text value {leaf!r}")
        out.append(leaf)
    return out


@dataclass
class PromptResult:
    prompt_index: int
    samples: list[str]
    requests: int = 0
    retries: int = 0
    error: Optional[str] = None


def _sample_one(client: httpx.Client, cfg: EndpointConfig, headers: dict,
                prompt: str, index: int, sleep=time.sleep) -> PromptResult:
    result = PromptResult(prompt_index=index, samples=[])
    while len(result.samples) < cfg.n:
        remaining = cfg.n - len(result.samples)
        body = build_request_body(cfg.request_template, prompt, remaining,
                                  cfg.temperature, cfg.max_tokens)
        attempt = 0
        while True:
            transient: Optional[str] = None
            try:
                result.requests += 1
                response = client.post(cfg.url, content=body, headers={
                    "Content-Type": "application/json", **headers,
                }, timeout=cfg.timeout)
                if response.status_code == 429 or response.status_code >= 500:
                    transient = f"HTTP {response.status_code}"
                elif response.status_code >= 400:
                    result.error = f"HTTP {response.status_code}: {response.text[:200]}"
                    return result
                else:
                    try:
                        payload = response.json()
                    except ValueError:
                        transient = "malformed JSON body"
                    else:
                        try:
                            texts = extract_path(payload, cfg.response_path)
                        except EndpointError as exc:
                            result.error = str(exc)
                            return result
                        if not texts:
                            result.error = "endpoint returned no samples"
                            return result
                        result.samples.extend(texts[:remaining])
                        break
            except httpx.TransportError as exc:
                transient = f"transport error: {exc}"
            if transient is not None:
                if attempt >= cfg.max_retries:
                    result.error = f"gave up after {attempt} retries: {transient}"
                    return result
                delay = min(BACKOFF_CAP_SECONDS, BACKOFF_BASE_SECONDS * (2 ** attempt))
                log.warning("prompt %d: %s; retry %d/%d in %.2fs",
                            index, transient, attempt + 1, cfg.max_retries, delay)
                sleep(delay)
                attempt += 1
                result.retries += 1
    return result


def sample_prompts(prompts: list[str], cfg: EndpointConfig,
                   client: Optional[httpx.Client] = None,
                   sleep=time.sleep) -> list[PromptResult]:
    """Collect cfg.n samples for every prompt; bounded concurrency, output
    in prompt order. Results with .error set mark prompts that failed
    permanently (their partial samples are preserved)."""
    headers = cfg.resolved_headers()
    own_client = client is None
    if own_client:
        client = httpx.Client()
    try:
        if cfg.max_in_flight <= 1:
            results = [
                _sample_one(client, cfg, headers, prompt, i, sleep)
                for i, prompt in enumerate(prompts)
            ]
        else:
            with ThreadPoolExecutor(max_workers=cfg.max_in_flight) as pool:
                results = list(pool.map(
                    lambda pair: _sample_one(client, cfg, headers, pair[1], pair[0], sleep),
                    enumerate(prompts),
                ))
    finally:
        if own_client:
            client.close()
    return sorted(results, key=lambda r: r.prompt_index)

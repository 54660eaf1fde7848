"""Uniform chat-completion access: HTTP providers, retries, caching, and a
fixture-backed mock provider for offline runs."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Mapping

import httpx
import jsonschema

from .errors import AdjudgeError

PROVIDER_KINDS = ("openai-chat", "anthropic-messages", "mock")
ANTHROPIC_VERSION = "2023-06-01"


class GatewayError(AdjudgeError):
    pass


class AuthenticationError(GatewayError):
    """Credential problems; never retried."""


class ProviderResponseError(GatewayError):
    """The provider answered with something we cannot use."""


class RetryBudgetExceededError(GatewayError):
    pass


class MockFixtureMissingError(GatewayError):
    def __init__(self, digest: str, summary: str):
        super().__init__(f"no mock fixture for request {digest} ({summary})")
        self.digest = digest


class StructuredOutputError(GatewayError):
    """Structured parsing failed even after the repair round-trip.

    Carries every raw payload so traces can record the full exchange.
    """

    def __init__(self, kind: str, message: str, attempts: tuple[str, ...]):
        super().__init__(f"{kind}: {message}")
        self.kind = kind  # "invalid-json" | "schema-violation"
        self.attempts = attempts


class _TransientProviderError(GatewayError):
    """Internal marker for retryable failures (429/5xx/timeouts)."""


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"invalid message role {self.role!r}")


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[ChatMessage, ...]
    temperature: float | None = None
    max_output_tokens: int = 2048
    response_format: str = "free-form"  # "free-form" | "json"

    def __post_init__(self) -> None:
        object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise ValueError("a chat request needs at least one message")
        if self.temperature is not None and not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")
        if self.response_format not in ("free-form", "json"):
            raise ValueError(f"invalid response_format {self.response_format!r}")


@dataclass(frozen=True)
class ChatResponse:
    content: str
    provider_metadata: Mapping[str, Any]
    latency_s: float


@dataclass(frozen=True)
class Capabilities:
    temperature: bool = True
    json_mode: bool = True


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_delay_ms: int = 250


@dataclass(frozen=True)
class ProviderConfig:
    id: str
    kind: str
    model: str
    endpoint: str | None = None
    api_key_env: str | None = None
    capabilities: Capabilities = field(default_factory=Capabilities)
    max_parallel: int = 4
    retry: RetryPolicy = field(default_factory=RetryPolicy)

    def __post_init__(self) -> None:
        if self.kind not in PROVIDER_KINDS:
            raise ValueError(f"unknown provider kind {self.kind!r}; expected one of {PROVIDER_KINDS}")
        if self.kind != "mock" and not self.endpoint:
            raise ValueError(f"provider {self.id!r} of kind {self.kind!r} needs an endpoint")


def load_provider_config(path: str | Path) -> ProviderConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise GatewayError(f"cannot read provider config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise GatewayError(f"provider config {path} is not valid JSON: {exc}") from exc
    return provider_config_from_dict(data)


def provider_config_from_dict(data: Mapping) -> ProviderConfig:
    try:
        capabilities = Capabilities(**data.get("capabilities", {}))
        retry = RetryPolicy(**data.get("retry", {}))
        return ProviderConfig(
            id=data["id"],
            kind=data["kind"],
            model=data["model"],
            endpoint=data.get("endpoint"),
            api_key_env=data.get("api_key_env"),
            capabilities=capabilities,
            max_parallel=int(data.get("max_parallel", 4)),
            retry=retry,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise GatewayError(f"malformed provider config: {exc}") from exc


def request_digest(provider_id: str, req: ChatRequest) -> str:
    """Stable digest identifying a request; the cache and mock-fixture key."""
    canonical = json.dumps(
        {
            "provider": provider_id,
            "model": req.model,
            "messages": [{"role": m.role, "content": m.content} for m in req.messages],
            "temperature": req.temperature,
            "response_format": req.response_format,
        },
        sort_keys=True,
        ensure_ascii=True,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _request_summary(req: ChatRequest) -> str:
    last_user = next((m.content for m in reversed(req.messages) if m.role == "user"), "")
    first_line = last_user.strip().splitlines()[0] if last_user.strip() else ""
    return f"{req.model}, {len(req.messages)} message(s): {first_line[:160]}"


class ResponseCache:
    """One file per request digest; concurrent last-write-wins is safe because
    identical keys store identical values."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def get(self, digest: str) -> ChatResponse | None:
        path = self._path(digest)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        except (OSError, json.JSONDecodeError):
            return None
        return ChatResponse(data["content"], data["provider_metadata"], data["latency_s"])

    def put(self, digest: str, response: ChatResponse) -> None:
        payload = json.dumps(
            {
                "content": response.content,
                "provider_metadata": dict(response.provider_metadata),
                "latency_s": response.latency_s,
            },
            sort_keys=True,
        )
        fd, tmp_name = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(payload)
            os.replace(tmp_name, self._path(digest))
        except OSError:
            try:
                os.unlink(tmp_name)
            except OSError:
                pass
            raise


class FixtureStore:
    """Mock-provider fixtures: a JSON-lines file of {key_digest, content} plus a
    human-readable companion of {key_digest, request_summary} for authoring."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    @property
    def companion_path(self) -> Path:
        return self.path.with_name(self.path.name + ".requests.jsonl")

    def load(self) -> dict[str, str]:
        fixtures: dict[str, str] = {}
        try:
            text = self.path.read_text(encoding="utf-8")
        except OSError as exc:
            raise GatewayError(f"cannot read mock fixtures {self.path}: {exc}") from exc
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                fixtures[entry["key_digest"]] = entry["content"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise GatewayError(
                    f"malformed fixture line {line_no} in {self.path}: {exc}") from exc
        return fixtures

    def record(self, provider_id: str, req: ChatRequest, content: str) -> str:
        digest = request_digest(provider_id, req)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps({"key_digest": digest, "content": content}) + "\n")
        with self.companion_path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(
                {"key_digest": digest, "request_summary": _request_summary(req)}) + "\n")
        return digest


@dataclass(frozen=True)
class StructuredCompletion:
    document: Any
    repairs: int
    attempts: tuple[str, ...]
    latency_s: float

    @property
    def raw_response(self) -> str:
        return self.attempts[-1]


class LlmGateway:
    """Provider handle with caching, retries, and bounded per-provider parallelism.

    Safe for concurrent use from multiple threads.
    """

    def __init__(
        self,
        provider: ProviderConfig,
        cache_dir: str | Path | None = None,
        mock_fixtures: str | Path | None = None,
        transport: httpx.BaseTransport | None = None,
        sleeper: Callable[[float], None] = time.sleep,
        timeout_s: float = 60.0,
    ):
        self.provider = provider
        self.cache = ResponseCache(cache_dir) if cache_dir else None
        self._sleep = sleeper
        self._semaphore = threading.BoundedSemaphore(max(1, provider.max_parallel))
        self._timeout_s = timeout_s
        self._transport = transport
        self._client: httpx.Client | None = None
        self._client_lock = threading.Lock()
        self._fixtures: dict[str, str] | None = None
        self._fixtures_lock = threading.Lock()
        if provider.kind == "mock":
            path = mock_fixtures or provider.endpoint
            if not path:
                raise GatewayError(
                    "mock provider needs a fixture path (config endpoint or mock_fixtures)")
            self._fixture_store = FixtureStore(path)
        elif mock_fixtures is not None:
            raise GatewayError("mock_fixtures is only valid with a mock provider")

    @property
    def model(self) -> str:
        return self.provider.model

    def complete(self, req: ChatRequest) -> ChatResponse:
        """Resolve a request through cache, provider, and retry policy."""
        digest = request_digest(self.provider.id, req)
        if self.cache is not None:
            cached = self.cache.get(digest)
            if cached is not None:
                return cached
        response = self._complete_with_retry(req)
        if self.cache is not None:
            self.cache.put(digest, response)
        return response

    def _complete_with_retry(self, req: ChatRequest) -> ChatResponse:
        retry = self.provider.retry
        last_error: Exception | None = None
        for attempt in range(1, max(1, retry.max_attempts) + 1):
            try:
                with self._semaphore:
                    return self._send(req)
            except _TransientProviderError as exc:
                last_error = exc
                if attempt < retry.max_attempts:
                    self._sleep(retry.base_delay_ms * (2 ** (attempt - 1)) / 1000.0)
        raise RetryBudgetExceededError(
            f"provider {self.provider.id!r} failed after {retry.max_attempts} attempt(s): "
            f"{last_error}")

    def _send(self, req: ChatRequest) -> ChatResponse:
        if self.provider.kind == "mock":
            return self._send_mock(req)
        return self._send_http(req)

    def _send_mock(self, req: ChatRequest) -> ChatResponse:
        with self._fixtures_lock:
            if self._fixtures is None:
                self._fixtures = self._fixture_store.load()
        digest = request_digest(self.provider.id, req)
        try:
            content = self._fixtures[digest]
        except KeyError:
            raise MockFixtureMissingError(digest, _request_summary(req)) from None
        return ChatResponse(content, {"model": self.provider.model}, 0.0)

    def _send_http(self, req: ChatRequest) -> ChatResponse:
        url, headers, payload = self._build_http_request(req)
        client = self._get_client()
        started = time.monotonic()
        try:
            http_response = client.post(url, headers=headers, json=payload)
        except httpx.TimeoutException as exc:
            raise _TransientProviderError(f"timeout talking to {self.provider.id}: {exc}") from exc
        except httpx.TransportError as exc:
            raise _TransientProviderError(f"transport error talking to {self.provider.id}: {exc}") from exc
        latency = time.monotonic() - started
        if http_response.status_code in (401, 403):
            raise AuthenticationError(
                f"provider {self.provider.id!r} rejected credentials "
                f"(HTTP {http_response.status_code})")
        if http_response.status_code == 429 or http_response.status_code >= 500:
            raise _TransientProviderError(
                f"HTTP {http_response.status_code} from {self.provider.id}")
        if http_response.status_code >= 400:
            raise ProviderResponseError(
                f"HTTP {http_response.status_code} from {self.provider.id}: "
                f"{http_response.text[:500]}")
        try:
            body = http_response.json()
        except (json.JSONDecodeError, ValueError) as exc:
            raise ProviderResponseError(
                f"provider {self.provider.id!r} returned a non-JSON body") from exc
        content, metadata = self._parse_http_body(body)
        return ChatResponse(content, metadata, latency)

    def _get_client(self) -> httpx.Client:
        with self._client_lock:
            if self._client is None:
                self._client = httpx.Client(
                    timeout=self._timeout_s, transport=self._transport)
            return self._client

    def _api_key(self) -> str:
        env_name = self.provider.api_key_env
        if not env_name:
            raise AuthenticationError(
                f"provider {self.provider.id!r} has no api_key_env configured")
        key = os.environ.get(env_name)
        if not key:
            raise AuthenticationError(
                f"environment variable {env_name!r} for provider {self.provider.id!r} is not set")
        return key

    def _build_http_request(self, req: ChatRequest) -> tuple[str, dict, dict]:
        capabilities = self.provider.capabilities
        if self.provider.kind == "openai-chat":
            headers = {"Authorization": f"Bearer {self._api_key()}"}
            payload: dict[str, Any] = {
                "model": req.model,
                "messages": [{"role": m.role, "content": m.content} for m in req.messages],
                "max_tokens": req.max_output_tokens,
            }
            if req.temperature is not None and capabilities.temperature:
                payload["temperature"] = req.temperature
            if req.response_format == "json" and capabilities.json_mode:
                payload["response_format"] = {"type": "json_object"}
            return self.provider.endpoint, headers, payload
        if self.provider.kind == "anthropic-messages":
            headers = {"x-api-key": self._api_key(), "anthropic-version": ANTHROPIC_VERSION}
            system_parts = [m.content for m in req.messages if m.role == "system"]
            payload = {
                "model": req.model,
                "max_tokens": req.max_output_tokens,
                "messages": [
                    {"role": m.role, "content": m.content}
                    for m in req.messages
                    if m.role != "system"
                ],
            }
            if system_parts:
                payload["system"] = "\n\n".join(system_parts)
            if req.temperature is not None and capabilities.temperature:
                payload["temperature"] = req.temperature
            return self.provider.endpoint, headers, payload
        raise GatewayError(f"kind {self.provider.kind!r} is not an HTTP provider")

    def _parse_http_body(self, body: Mapping) -> tuple[str, dict]:
        try:
            if self.provider.kind == "openai-chat":
                content = body["choices"][0]["message"]["content"]
                usage = body.get("usage", {})
                metadata = {
                    "model": body.get("model", self.provider.model),
                    "input_tokens": usage.get("prompt_tokens"),
                    "output_tokens": usage.get("completion_tokens"),
                }
            else:
                blocks = body["content"]
                content = "".join(
                    block.get("text", "") for block in blocks if block.get("type") == "text")
                usage = body.get("usage", {})
                metadata = {
                    "model": body.get("model", self.provider.model),
                    "input_tokens": usage.get("input_tokens"),
                    "output_tokens": usage.get("output_tokens"),
                }
            if not isinstance(content, str) or content == "":
                raise KeyError("empty content")
            return content, metadata
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderResponseError(
                f"malformed response body from provider {self.provider.id!r}: {exc}") from exc

    def complete_structured(self, req: ChatRequest, schema: Mapping) -> StructuredCompletion:
        """Request JSON matching a closed object schema, with one repair round."""
        _require_closed_object_schema(schema)
        attempts: list[str] = []
        total_latency = 0.0
        current = req
        kind, problem = "invalid-json", "no attempt made"
        for round_no in (0, 1):
            response = self.complete(current)
            attempts.append(response.content)
            total_latency += response.latency_s
            document, kind, problem = check_structured_content(response.content, schema)
            if kind is None:
                return StructuredCompletion(document, round_no, tuple(attempts), total_latency)
            if round_no == 0:
                current = structured_repair_request(current, response.content, schema)
        raise StructuredOutputError(kind, problem, tuple(attempts))


def check_structured_content(content: str, schema: Mapping):
    """Parse and validate one structured reply.

    Returns (document, None, None) on success, else (None, kind, problem)
    where kind is "invalid-json" or "schema-violation".
    """
    try:
        document = json.loads(content)
    except json.JSONDecodeError as exc:
        return None, "invalid-json", f"response is not valid JSON: {exc}"
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(document), key=lambda e: str(e.path))
    if errors:
        problem = "; ".join(_describe_schema_error(e) for e in errors[:5])
        return None, "schema-violation", problem
    return document, None, None


def structured_repair_request(req: ChatRequest, raw_response: str,
                              schema: Mapping) -> ChatRequest:
    """The follow-up request issued after an unusable structured reply.

    Exposed so mock fixtures can be authored for repair rounds.
    """
    _, _, problem = check_structured_content(raw_response, schema)
    if problem is None:
        raise ValueError("response was valid; no repair request would be issued")
    return replace(
        req,
        messages=req.messages
        + (
            ChatMessage("assistant", raw_response),
            ChatMessage("user", _repair_message(problem)),
        ),
    )


def _describe_schema_error(error: jsonschema.ValidationError) -> str:
    where = "/".join(str(p) for p in error.absolute_path) or "document root"
    return f"{where}: {error.message}"


def _repair_message(problem: str) -> str:
    return (
        "The previous reply could not be used. "
        f"Problems: {problem}\n"
        "Reply again with a single JSON object that matches the required structure "
        "exactly: no extra properties, no commentary, no code fences."
    )


def _require_closed_object_schema(schema: Mapping) -> None:
    if schema.get("type") != "object" or schema.get("additionalProperties") is not False:
        raise ValueError(
            "structured completion requires a closed object schema "
            "(type 'object' with additionalProperties false)")

"""Provider contracts for chat completion, text embedding, and transcription.

Every external service sits behind one of the three small interfaces below,
each with a deterministic offline implementation so the whole pipeline is
testable without network access. Real providers are configured entirely from
``ORALITY_*`` environment variables.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

from .model import Vector

logger = logging.getLogger(__name__)

MOCK_EMBEDDING_DIM = 32


class ProviderError(Exception):
    """Base class for failures talking to an external service."""


class TransportError(ProviderError):
    pass


class ProviderTimeout(ProviderError):
    pass


class RateLimitedError(ProviderError):
    pass


class UnmockedRequestError(ProviderError):
    """A strict mock received a request it has no canned answer for."""


class EmbeddingDimensionError(ProviderError):
    """An embedding batch disagreed with the session's fixed dimension."""


class MalformedJsonError(ValueError):
    """Model output was not parseable JSON."""


class SchemaViolationError(ValueError):
    """Model output parsed as JSON but broke the expected schema."""


class ResponseFormat(Enum):
    FREE_TEXT = "free_text"
    JSON_EXPECTED = "json_expected"


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    user_message: str
    response_format_hint: ResponseFormat = ResponseFormat.FREE_TEXT

    def __post_init__(self) -> None:
        if not self.system_prompt.strip():
            raise ValueError("system_prompt must be non-empty")


@dataclass(frozen=True)
class EmbeddingRequest:
    texts: tuple[str, ...]

    def __post_init__(self) -> None:
        for text in self.texts:
            if not text:
                raise ValueError("embedding inputs must be non-empty strings")


@dataclass(frozen=True)
class TranscriptChunk:
    text: str
    is_final: bool


class ChatProvider(ABC):
    @abstractmethod
    def chat_complete(self, request: ChatRequest) -> str:
        """Return the raw model text; parsing is the caller's job."""


class EmbeddingProvider(ABC):
    @abstractmethod
    def embed(self, request: EmbeddingRequest) -> list[Vector]:
        """Return one unit-norm vector per input, in input order."""


class TranscriptionStream(ABC):
    """One in-flight utterance; feed audio, then finish to get the final text."""

    @abstractmethod
    def feed(self, frame: bytes) -> list[TranscriptChunk]:
        ...

    @abstractmethod
    def finish(self) -> list[TranscriptChunk]:
        ...


class TranscriptionProvider(ABC):
    @abstractmethod
    def open_stream(self) -> TranscriptionStream:
        ...

    def stream_transcribe(self, frames: Iterable[bytes]) -> Iterator[TranscriptChunk]:
        """Transcribe a complete frame sequence.

        Emits advisory partials for every frame but the last, then exactly one
        final chunk per utterance. No frames means no chunks at all.
        """
        stream = self.open_stream()
        pending: list[TranscriptChunk] = []
        fed_any = False
        for frame in frames:
            yield from pending
            pending = [c for c in stream.feed(frame) if not c.is_final]
            fed_any = True
        if fed_any:
            yield from stream.finish()


@dataclass
class Providers:
    """The bundle of services one session talks to."""

    chat: ChatProvider
    embedding: EmbeddingProvider
    transcription: TranscriptionProvider


# --- deterministic mocks ------------------------------------------------------

def mock_embedding_vector(text: str, seed: int = 0, dim: int = MOCK_EMBEDDING_DIM) -> Vector:
    """Pure function of (text, seed, dim): hash-expanded floats, L2-normalized."""
    values: list[float] = []
    counter = 0
    while len(values) < dim:
        digest = hashlib.sha256(f"{seed}:{counter}:{text}".encode("utf-8")).digest()
        for offset in range(0, len(digest), 4):
            if len(values) == dim:
                break
            word = int.from_bytes(digest[offset:offset + 4], "big")
            values.append(word / 2**31 - 1.0)
        counter += 1
    norm = math.sqrt(sum(v * v for v in values))
    if norm == 0.0:
        values[0] = 1.0
        norm = 1.0
    return tuple(v / norm for v in values)


class MockEmbeddingProvider(EmbeddingProvider):
    def __init__(self, seed: int = 0, dim: int = MOCK_EMBEDDING_DIM) -> None:
        self.seed = seed
        self.dim = dim

    def embed(self, request: EmbeddingRequest) -> list[Vector]:
        return [mock_embedding_vector(t, self.seed, self.dim) for t in request.texts]


class ScriptedChatProvider(ChatProvider):
    """Canned-response chat mock for fixtures.

    Responses are registered under a key matched as a substring of the
    combined prompt text; per-key response lists are consumed in order and the
    last entry repeats once exhausted. In strict mode an unmatched request is
    an error rather than a silent empty answer.
    """

    def __init__(self, strict: bool = True) -> None:
        self.strict = strict
        self.calls: list[ChatRequest] = []
        self._rules: dict[str, list[str]] = {}
        self._cursor: dict[str, int] = {}

    def add(self, key: str, *responses: str) -> "ScriptedChatProvider":
        if not responses:
            raise ValueError("at least one response required")
        self._rules.setdefault(key, []).extend(responses)
        return self

    def chat_complete(self, request: ChatRequest) -> str:
        self.calls.append(request)
        haystack = request.system_prompt + "\n" + request.user_message
        for key, responses in self._rules.items():
            if key in haystack:
                index = self._cursor.get(key, 0)
                self._cursor[key] = index + 1
                return responses[min(index, len(responses) - 1)]
        if self.strict:
            raise UnmockedRequestError(
                f"unmocked request (no key matched {request.user_message[:80]!r})"
            )
        return ""


def _split_sentences(text: str) -> list[str]:
    parts = re.split(r"(?<=[.!?;])\s+|\n+", text.strip())
    return [p.strip() for p in parts if p.strip()]


class DemoChatProvider(ChatProvider):
    """Offline stand-in for ``--mock-providers`` serving.

    Recognizes each pipeline prompt by its template header and produces
    deterministic, schema-valid output so the whole system can be driven
    end to end with no API keys.
    """

    def chat_complete(self, request: ChatRequest) -> str:
        system = request.system_prompt
        user = request.user_message
        if system.startswith("You are a listener"):
            return self._extract(system, user)
        if system.startswith("You are a content organizer"):
            return self._reorganize(user)
        if system.startswith("You are a thoughtful conversation facilitator"):
            return self._questions(user)
        if system.startswith("You are an expert at identifying logical conflicts"):
            return "[]"
        return self._memo(system)

    def _extract(self, system: str, user: str) -> str:
        sentences = _split_sentences(user) or ["(nothing said)"]
        forced = re.findall(r'"([^"]+)"', system.split("must come from", 1)[1]) \
            if "must come from" in system else []
        groups = []
        for start in range(0, len(sentences), 3):
            chunk = sentences[start:start + 3]
            label = forced[0] if forced else " ".join(chunk[0].split()[:5]).rstrip(".,;") .title()
            groups.append({"topic": label, "entities": chunk})
            if forced:
                break
        return json.dumps(groups)

    def _reorganize(self, user: str) -> str:
        match = re.search(r"Current outline:\n(\[.*?\])\n\nUser's full text",
                          user, re.DOTALL)
        if not match:
            return "[]"
        outline = json.loads(match.group(1))
        return json.dumps(outline)

    def _questions(self, user: str) -> str:
        content_lines = [l for l in user.splitlines() if l.startswith("- ")]
        questions = [
            "What specific challenges have you run into here so far?",
            "Can you describe one concrete example that shaped this view?",
        ]
        return json.dumps(questions[: 2 if len(content_lines) <= 1 else 1])

    def _memo(self, system: str) -> str:
        if "'comprehensive'" in system:
            return (
                "Key Themes\nYour thinking centers on a few recurring threads.\n\n"
                "Important Insights\nYou already identified the core trade-offs.\n\n"
                "Connections & Patterns\nSeveral points reinforce each other.\n\n"
                "Next Steps\nPick one thread and push it further."
            )
        if "'bullet'" in system:
            return "- Main thread\n- Supporting point\n- Next step: keep going"
        return "You are converging on a clear position; refine the open questions next."


class MockTranscriptionStream(TranscriptionStream):
    """Treats audio bytes as UTF-8 text; partials echo the accumulated text."""

    def __init__(self, fail_after: int | None = None) -> None:
        self._buffer: list[str] = []
        self._frames = 0
        self._fail_after = fail_after

    def feed(self, frame: bytes) -> list[TranscriptChunk]:
        self._frames += 1
        if self._fail_after is not None and self._frames > self._fail_after:
            raise TransportError("transcription stream disconnected")
        self._buffer.append(frame.decode("utf-8"))
        return [TranscriptChunk(text="".join(self._buffer), is_final=False)]

    def finish(self) -> list[TranscriptChunk]:
        text = "".join(self._buffer).strip()
        if not text:
            return []
        return [TranscriptChunk(text=text, is_final=True)]


class MockTranscriptionProvider(TranscriptionProvider):
    def __init__(self, fail_after: int | None = None) -> None:
        self.fail_after = fail_after

    def open_stream(self) -> TranscriptionStream:
        return MockTranscriptionStream(fail_after=self.fail_after)


def mock_providers(seed: int = 0, dim: int = MOCK_EMBEDDING_DIM,
                   chat: ChatProvider | None = None) -> Providers:
    return Providers(
        chat=chat if chat is not None else DemoChatProvider(),
        embedding=MockEmbeddingProvider(seed=seed, dim=dim),
        transcription=MockTranscriptionProvider(),
    )


# --- structured-output retry policy ------------------------------------------

T = TypeVar("T")

REPAIR_INSTRUCTION = (
    "Your previous response could not be used: {error}. "
    "Respond again with ONLY valid JSON in exactly the required format, "
    "with no surrounding prose or markdown."
)


def repair_request(request: ChatRequest, error: str) -> ChatRequest:
    return ChatRequest(
        system_prompt=request.system_prompt,
        user_message=request.user_message + "\n\n" + REPAIR_INSTRUCTION.format(error=error),
        response_format_hint=request.response_format_hint,
    )


def request_parsed(chat: ChatProvider, request: ChatRequest,
                   parse: Callable[[str], T]) -> T:
    """Call the chat provider and parse; one repair retry, then a hard error."""
    raw = chat.chat_complete(request)
    try:
        return parse(raw)
    except (MalformedJsonError, SchemaViolationError) as exc:
        logger.warning("model output rejected (%s); retrying once", exc)
        retry_raw = chat.chat_complete(repair_request(request, str(exc)))
        return parse(retry_raw)


def extract_json(raw: str):
    """Parse model output as JSON, tolerating a markdown code fence wrapper."""
    text = raw.strip()
    fence = re.fullmatch(r"```(?:json)?\s*(.*?)\s*```", text, re.DOTALL)
    if fence:
        text = fence.group(1)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJsonError(f"not valid JSON: {exc}") from exc


# --- real providers -----------------------------------------------------------

ENV_CHAT_KEY = "ORALITY_CHAT_API_KEY"
ENV_CHAT_MODEL = "ORALITY_CHAT_MODEL"
ENV_CHAT_BASE_URL = "ORALITY_CHAT_BASE_URL"
ENV_EMBED_KEY = "ORALITY_EMBED_API_KEY"
ENV_EMBED_MODEL = "ORALITY_EMBED_MODEL"
ENV_EMBED_BASE_URL = "ORALITY_EMBED_BASE_URL"
ENV_TRANSCRIBE_KEY = "ORALITY_TRANSCRIBE_API_KEY"
ENV_TRANSCRIBE_URL = "ORALITY_TRANSCRIBE_URL"


def _post_json(url: str, headers: dict[str, str], payload: dict, timeout: float):
    import httpx

    try:
        response = httpx.post(url, headers=headers, json=payload, timeout=timeout)
    except httpx.TimeoutException as exc:
        raise ProviderTimeout(str(exc)) from exc
    except httpx.HTTPError as exc:
        raise TransportError(str(exc)) from exc
    if response.status_code == 429:
        raise RateLimitedError(response.text[:200])
    if response.status_code >= 400:
        raise TransportError(f"HTTP {response.status_code}: {response.text[:200]}")
    return response.json()


class RealChatProvider(ChatProvider):
    """OpenAI-compatible chat completion endpoint."""

    def __init__(self, api_key: str, model: str,
                 base_url: str = "https://api.openai.com/v1",
                 timeout: float = 60.0) -> None:
        self.api_key = api_key
        self.model = model
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def chat_complete(self, request: ChatRequest) -> str:
        payload: dict = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_message},
            ],
        }
        if request.response_format_hint is ResponseFormat.JSON_EXPECTED:
            payload["response_format"] = {"type": "json_object"}
        data = _post_json(
            f"{self.base_url}/chat/completions",
            {"Authorization": f"Bearer {self.api_key}"},
            payload,
            self.timeout,
        )
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected chat response shape: {exc}") from exc


class RealEmbeddingProvider(EmbeddingProvider):
    """OpenAI-compatible embeddings endpoint; re-normalizes defensively."""

    def __init__(self, api_key: str, model: str,
                 base_url: str = "https://api.openai.com/v1",
                 timeout: float = 60.0) -> None:
        self.api_key = api_key
        self.model = model
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def embed(self, request: EmbeddingRequest) -> list[Vector]:
        if not request.texts:
            return []
        data = _post_json(
            f"{self.base_url}/embeddings",
            {"Authorization": f"Bearer {self.api_key}"},
            {"model": self.model, "input": list(request.texts)},
            self.timeout,
        )
        try:
            rows = sorted(data["data"], key=lambda r: r["index"])
            vectors = [tuple(float(x) for x in row["embedding"]) for row in rows]
        except (KeyError, TypeError) as exc:
            raise TransportError(f"unexpected embeddings response shape: {exc}") from exc
        out: list[Vector] = []
        for vec in vectors:
            norm = math.sqrt(sum(x * x for x in vec))
            if norm == 0.0:
                raise TransportError("embedding endpoint returned a zero vector")
            out.append(tuple(x / norm for x in vec))
        return out


class _BatchTranscriptionStream(TranscriptionStream):
    def __init__(self, provider: "RealTranscriptionProvider") -> None:
        self._provider = provider
        self._frames: list[bytes] = []

    def feed(self, frame: bytes) -> list[TranscriptChunk]:
        self._frames.append(frame)
        return []

    def finish(self) -> list[TranscriptChunk]:
        if not self._frames:
            return []
        text = self._provider.transcribe_bytes(b"".join(self._frames))
        if not text.strip():
            return []
        return [TranscriptChunk(text=text.strip(), is_final=True)]


class RealTranscriptionProvider(TranscriptionProvider):
    """Batch REST transcription: POST the utterance audio, get text back.

    Vendor-neutral; expects a JSON body {"text": ...} from the configured URL.
    Partials are not available on this path, which the contract allows.
    """

    def __init__(self, api_key: str, url: str, timeout: float = 120.0) -> None:
        self.api_key = api_key
        self.url = url
        self.timeout = timeout

    def open_stream(self) -> TranscriptionStream:
        return _BatchTranscriptionStream(self)

    def transcribe_bytes(self, audio: bytes) -> str:
        import base64

        data = _post_json(
            self.url,
            {"Authorization": f"Bearer {self.api_key}"},
            {"audio_base64": base64.b64encode(audio).decode("ascii")},
            self.timeout,
        )
        try:
            return str(data["text"])
        except (KeyError, TypeError) as exc:
            raise TransportError(f"unexpected transcription response shape: {exc}") from exc


def providers_from_env(env: dict[str, str] | None = None) -> Providers:
    """Build the real provider bundle from ORALITY_* environment variables."""
    env = dict(os.environ) if env is None else env
    missing = [k for k in (ENV_CHAT_KEY, ENV_CHAT_MODEL, ENV_EMBED_KEY) if not env.get(k)]
    if missing:
        raise ProviderError(f"missing provider configuration: {', '.join(missing)}")
    chat = RealChatProvider(
        api_key=env[ENV_CHAT_KEY],
        model=env[ENV_CHAT_MODEL],
        base_url=env.get(ENV_CHAT_BASE_URL, "https://api.openai.com/v1"),
    )
    embedding = RealEmbeddingProvider(
        api_key=env[ENV_EMBED_KEY],
        model=env.get(ENV_EMBED_MODEL, "text-embedding-3-small"),
        base_url=env.get(ENV_EMBED_BASE_URL, "https://api.openai.com/v1"),
    )
    if env.get(ENV_TRANSCRIBE_KEY) and env.get(ENV_TRANSCRIBE_URL):
        transcription: TranscriptionProvider = RealTranscriptionProvider(
            api_key=env[ENV_TRANSCRIBE_KEY], url=env[ENV_TRANSCRIBE_URL],
        )
    else:
        # Typed transcripts reach the same final-chunk path, so audio is optional.
        transcription = MockTranscriptionProvider()
    return Providers(chat=chat, embedding=embedding, transcription=transcription)

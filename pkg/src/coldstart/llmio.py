"""Text-generation backends: registry, HTTP client, and the offline mock.

The mock backend is a pure function of the prompt text, which is what makes
whole-pipeline reruns byte-identical. The HTTP backend speaks a minimal
JSON contract (configurable response pointer) with bearer-token auth taken
from ``COLDSTART_<BACKEND>_API_KEY``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from typing import Protocol

from .analysis import normalize_tokens
from .errors import BackendError, ConfigError, InputError, MockPromptError, OutputParseError, SchemaError

log = logging.getLogger(__name__)

MIN_MAX_TOKENS = 64


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    temperature: float
    max_tokens: int
    backend_id: str

    def __post_init__(self):
        if self.max_tokens < MIN_MAX_TOKENS:
            raise InputError(f"max_tokens must be >= {MIN_MAX_TOKENS}")


@dataclass(frozen=True)
class GenerationOutput:
    justification: str
    generalized_template: str
    query: str
    key_attributes: tuple[str, ...]

    def __post_init__(self):
        if not self.query:
            raise SchemaError("query", "must be non-empty")
        if not self.key_attributes:
            raise SchemaError("key_attributes", "must be non-empty")

    def to_dict(self) -> dict:
        return {
            "justification": self.justification,
            "generalized_template": self.generalized_template,
            "query": self.query,
            "key_attributes": list(self.key_attributes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationOutput":
        return cls(
            justification=d["justification"],
            generalized_template=d["generalized_template"],
            query=d["query"],
            key_attributes=tuple(d["key_attributes"]),
        )


def serialize_generation(out: GenerationOutput) -> str:
    return json.dumps(out.to_dict(), ensure_ascii=False, sort_keys=True)


def parse_generation(raw: str) -> GenerationOutput:
    """Strict parse of the mandated four-field JSON output.

    Tolerates prose or markdown fences around a single JSON object by
    extracting the outermost braced region.
    """
    obj = _extract_json_object(raw)
    for fld in ("justification", "generalized_template", "query", "key_attributes"):
        if fld not in obj:
            raise SchemaError(fld)
    if not isinstance(obj["query"], str) or not obj["query"].strip():
        raise SchemaError("query", "must be a non-empty string")
    attrs = obj["key_attributes"]
    if not isinstance(attrs, list) or not attrs or not all(isinstance(a, str) for a in attrs):
        raise SchemaError("key_attributes", "must be a non-empty list of strings")
    return GenerationOutput(
        justification=str(obj["justification"]),
        generalized_template=str(obj["generalized_template"]),
        query=obj["query"],
        key_attributes=tuple(attrs),
    )


def _extract_json_object(raw: str) -> dict:
    start = raw.find("{")
    if start < 0:
        raise OutputParseError("no JSON object found in model output")
    depth = 0
    in_string = False
    escape = False
    for i in range(start, len(raw)):
        ch = raw[i]
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                try:
                    obj = json.loads(raw[start : i + 1])
                except json.JSONDecodeError as e:
                    raise OutputParseError(f"unbalanced or invalid JSON: {e}") from e
                if not isinstance(obj, dict):
                    raise OutputParseError("extracted JSON is not an object")
                return obj
    raise OutputParseError("unterminated JSON object in model output")


# ---------------------------------------------------------------------------
# Backend registry


class Backend(Protocol):
    backend_id: str

    def complete(self, request: CompletionRequest) -> str: ...


@dataclass
class BackendStats:
    requests: int = 0
    retries: int = 0
    failures: int = 0
    latency_total_s: float = 0.0
    prompt_tokens: int = 0
    completion_tokens: int = 0


_registry: dict[str, Backend] = {}
_stats: dict[str, BackendStats] = {}
_registry_lock = threading.Lock()


def register_backend(backend: Backend, replace: bool = False) -> None:
    with _registry_lock:
        if backend.backend_id in _registry and not replace:
            raise ConfigError(f"backend {backend.backend_id!r} already registered")
        _registry[backend.backend_id] = backend
        _stats.setdefault(backend.backend_id, BackendStats())


def unregister_backend(backend_id: str) -> None:
    with _registry_lock:
        _registry.pop(backend_id, None)


def get_backend(backend_id: str) -> Backend:
    with _registry_lock:
        backend = _registry.get(backend_id)
    if backend is None:
        raise ConfigError(f"unknown backend id {backend_id!r}")
    return backend


def backend_stats(backend_id: str) -> BackendStats:
    with _registry_lock:
        return _stats.setdefault(backend_id, BackendStats())


def complete(request: CompletionRequest) -> str:
    """Run a completion against the registered backend, recording stats."""
    backend = get_backend(request.backend_id)
    stats = backend_stats(request.backend_id)
    start = time.monotonic()
    try:
        text = backend.complete(request)
    except Exception:
        stats.failures += 1
        raise
    stats.requests += 1
    stats.latency_total_s += time.monotonic() - start
    stats.prompt_tokens += len(request.prompt.split())
    stats.completion_tokens += len(text.split())
    return text


# ---------------------------------------------------------------------------
# HTTP backend


class HTTPBackend:
    """POSTs {model, prompt|messages, temperature, max_tokens} to one URL.

    Retries transient failures (connection errors, timeouts, 429/5xx) with
    exponential backoff. Credentials come only from the environment
    variable COLDSTART_<ID>_API_KEY, never from config files.
    """

    def __init__(
        self,
        backend_id: str,
        url: str,
        model: str,
        text_pointer: str = "/text",
        use_messages: bool = False,
        max_retries: int = 3,
        backoff_base_s: float = 0.5,
        timeout_s: float = 60.0,
        rate_limit_rps: float | None = None,
        max_concurrency: int | None = None,
    ):
        self.backend_id = backend_id
        self.url = url
        self.model = model
        self.text_pointer = text_pointer
        self.use_messages = use_messages
        self.max_retries = max_retries
        self.backoff_base_s = backoff_base_s
        self.timeout_s = timeout_s
        self._min_interval = 1.0 / rate_limit_rps if rate_limit_rps else 0.0
        self._next_allowed = 0.0
        self._rate_lock = threading.Lock()
        self._sem = threading.BoundedSemaphore(max_concurrency) if max_concurrency else None

    def _throttle(self) -> None:
        if not self._min_interval:
            return
        with self._rate_lock:
            now = time.monotonic()
            wait = self._next_allowed - now
            self._next_allowed = max(now, self._next_allowed) + self._min_interval
        if wait > 0:
            time.sleep(wait)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        env_name = f"COLDSTART_{self.backend_id.upper().replace('-', '_')}_API_KEY"
        key = os.environ.get(env_name)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _payload(self, request: CompletionRequest) -> dict:
        payload: dict = {
            "model": self.model,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        if self.use_messages:
            payload["messages"] = [{"role": "user", "content": request.prompt}]
        else:
            payload["prompt"] = request.prompt
        return payload

    def complete(self, request: CompletionRequest) -> str:
        import requests

        stats = backend_stats(self.backend_id)
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                stats.retries += 1
                time.sleep(self.backoff_base_s * (2 ** (attempt - 1)))
            self._throttle()
            if self._sem:
                self._sem.acquire()
            try:
                resp = requests.post(
                    self.url,
                    json=self._payload(request),
                    headers=self._headers(),
                    timeout=self.timeout_s,
                )
                if resp.status_code == 429 or resp.status_code >= 500:
                    last_error = BackendError(
                        self.backend_id, f"HTTP {resp.status_code}"
                    )
                    continue
                resp.raise_for_status()
                text = resolve_json_pointer(resp.json(), self.text_pointer)
                if not isinstance(text, str):
                    raise BackendError(
                        self.backend_id,
                        f"response at pointer {self.text_pointer!r} is not text",
                    )
                return text
            except (requests.ConnectionError, requests.Timeout) as e:
                last_error = e
                continue
            except requests.HTTPError as e:
                raise BackendError(self.backend_id, e) from e
            finally:
                if self._sem:
                    self._sem.release()
        raise BackendError(self.backend_id, last_error or "retries exhausted")


def resolve_json_pointer(obj: object, pointer: str) -> object:
    """Minimal RFC 6901 JSON pointer lookup ('' returns the document)."""
    if pointer == "":
        return obj
    if not pointer.startswith("/"):
        raise ConfigError(f"invalid JSON pointer {pointer!r}")
    cur = obj
    for token in pointer.split("/")[1:]:
        token = token.replace("~1", "/").replace("~0", "~")
        if isinstance(cur, list):
            try:
                cur = cur[int(token)]
            except (ValueError, IndexError) as e:
                raise ConfigError(f"pointer {pointer!r} missed: {e}") from e
        elif isinstance(cur, dict):
            if token not in cur:
                raise ConfigError(f"pointer {pointer!r} missed at {token!r}")
            cur = cur[token]
        else:
            raise ConfigError(f"pointer {pointer!r} descends into a scalar")
    return cur


# ---------------------------------------------------------------------------
# Offline mock backend

_BLOCKLIST = (
    "entire home",
    "private room",
    "superhost",
    "guest favorite",
    "badge",
    "airbnb",
    "listing",
    "instant book",
)

_SEED_RE = re.compile(r'Seed query: "(.*)"')
_BOUNDS_RE = re.compile(r"\((\d+)-(\d+) words\)")
_CONTEXT_RE = re.compile(
    r"Search context: (.*?) \| .*? \| adults=(\d+) children=(\d+) pets=(\d+)"
)


@dataclass(frozen=True)
class _BlockFacts:
    phrases: tuple[str, ...]
    location: str
    children: int
    pets: int


class MockBackend:
    """Deterministic offline generator and judge.

    Dispatches on prompt structure markers: generation prompts carry
    'Listing 1:' / 'Listing 2:' sections, judge prompts carry
    'Candidate A:' / 'Candidate B:'. Raises on anything else.
    """

    def __init__(self, backend_id: str = "mock"):
        self.backend_id = backend_id

    def complete(self, request: CompletionRequest) -> str:
        prompt = request.prompt
        if "Listing 1:" in prompt and "Listing 2:" in prompt:
            return self._generate(prompt)
        if "Candidate A:" in prompt and "Candidate B:" in prompt:
            return self._judge(prompt)
        raise MockPromptError("prompt has neither generation nor judge markers")

    # -- generation ---------------------------------------------------------

    def _generate(self, prompt: str) -> str:
        facts_1 = self._block_facts(prompt, "Listing 1:")
        facts_2 = self._block_facts(prompt, "Listing 2:")

        bounds = _BOUNDS_RE.search(prompt)
        lo, hi = (int(bounds.group(1)), int(bounds.group(2))) if bounds else (3, 8)
        seed_match = _SEED_RE.search(prompt)
        seed_text = seed_match.group(1) if seed_match else None

        forbidden_tokens = set(normalize_tokens(facts_1.location))
        other = set(facts_2.phrases)

        def allowed(phrase: str) -> bool:
            low = phrase.lower()
            if any(term in low for term in _BLOCKLIST):
                return False
            if any(ch.isdigit() for ch in low):
                return False
            if set(normalize_tokens(low)) & forbidden_tokens:
                return False
            if facts_1.pets == 0 and "pet" in low:
                return False
            if facts_1.children == 0 and ("family" in low or "kid" in low):
                return False
            return True

        differentiators = [p for p in facts_1.phrases if p not in other and allowed(p)]
        fillers = [p for p in facts_1.phrases if p in other and allowed(p)]

        # Stable per-pair rotation decorrelates near-identical pairs without
        # breaking determinism.
        h = int.from_bytes(
            hashlib.sha256(prompt.encode("utf-8")).digest()[:8], "big"
        )
        if differentiators:
            offset = h % len(differentiators)
            differentiators = differentiators[offset:] + differentiators[:offset]
        if fillers:
            offset = h % len(fillers)
            fillers = fillers[offset:] + fillers[:offset]

        if seed_text is not None:
            target = max(lo, min(hi, len(normalize_tokens(seed_text))))
        else:
            target = lo + h % (hi - lo + 1)

        # Hard prompts ask for the subtlest differentiating combination and
        # forbid verbatim copying (leakage guardrail): keep one
        # differentiator, express it compacted the way terse users type
        # ("hot tub" -> "hottub"), and bury it under shared attributes.
        hard = "Difficulty: hard." in prompt
        max_diff = 1 if hard else 3

        def surface(phrase: str) -> str:
            words = phrase.split()
            if hard and len(words) >= 2:
                return "".join(words[-2:])
            return phrase

        chosen: list[tuple[str, str]] = []  # (query surface, source attribute)
        total = 0
        for phrase in differentiators:
            s = surface(phrase)
            w = len(s.split())
            if len(chosen) < max_diff and total + w <= target:
                chosen.append((s, phrase))
                total += w
        # Top up toward the target length with remaining Listing 1
        # attributes, shared ones included (grounded, less discriminative).
        if total < max(lo, target):
            for phrase in differentiators[max_diff:] + fillers:
                if any(phrase == attr for _, attr in chosen):
                    continue
                w = len(phrase.split())
                if total + w <= min(hi, max(lo, target)):
                    chosen.append((phrase, phrase))
                    total += w
                if total >= max(lo, target):
                    break
        if not chosen:
            pool = differentiators + fillers
            short = [p for p in pool if len(p.split()) <= hi]
            if not short:
                raise MockPromptError("no usable attribute phrases in Listing 1")
            chosen = [(short[0], short[0])]

        query = " ".join(s for s, _ in chosen)
        attrs = [attr for _, attr in chosen]
        out = {
            "justification": "only the first option offers " + ", ".join(attrs),
            "generalized_template": " ".join(
                f"<attr{i + 1}>" for i in range(len(chosen))
            ),
            "query": query,
            "key_attributes": attrs,
        }
        return json.dumps(out, ensure_ascii=False, sort_keys=True)

    def _block_facts(self, prompt: str, marker: str) -> _BlockFacts:
        lines = prompt.splitlines()
        try:
            start = lines.index(marker)
        except ValueError:
            raise MockPromptError(f"marker {marker!r} not found")
        block: list[str] = []
        for line in lines[start + 1 :]:
            if not line.strip():
                break
            block.append(line)
        amenities: list[str] = []
        locations: list[str] = []
        ptype = ""
        location = ""
        children = pets = 0
        for line in block:
            if line.startswith("Amenities: "):
                rest = line[len("Amenities: ") :]
                if rest != "n/a":
                    amenities = [a.strip() for a in rest.split(",") if a.strip()]
            elif line.startswith("Location: "):
                rest = line[len("Location: ") :]
                if rest != "n/a":
                    locations = [a.strip() for a in rest.split(",") if a.strip()]
            elif line.startswith("Property: "):
                ptype = line[len("Property: ") :].split(" | ")[0].strip()
            else:
                m = _CONTEXT_RE.match(line)
                if m:
                    location = m.group(1).strip()
                    children = int(m.group(3))
                    pets = int(m.group(4))
        if not block:
            raise MockPromptError(f"empty block under {marker!r}")
        phrases = list(amenities) + list(locations)
        if ptype and ptype != "n/a":
            phrases.append(ptype)
        return _BlockFacts(
            phrases=tuple(phrases), location=location, children=children, pets=pets
        )

    # -- judging ------------------------------------------------------------

    def _judge(self, prompt: str) -> str:
        query = ""
        for line in prompt.splitlines():
            if line.startswith("Query: "):
                query = line[len("Query: ") :]
                break
        q_tokens = set(normalize_tokens(query))
        a_text = self._section(prompt, "Candidate A:")
        b_text = self._section(prompt, "Candidate B:")
        a_overlap = len(q_tokens & set(normalize_tokens(a_text)))
        b_overlap = len(q_tokens & set(normalize_tokens(b_text)))
        if a_overlap > b_overlap:
            token = "A"
        elif b_overlap > a_overlap:
            token = "B"
        else:
            token = "TIE"
        return (
            f"Candidate A matches {a_overlap} query tokens; "
            f"candidate B matches {b_overlap}.\n{token}"
        )

    def _section(self, prompt: str, marker: str) -> str:
        lines = prompt.splitlines()
        try:
            start = lines.index(marker)
        except ValueError:
            raise MockPromptError(f"marker {marker!r} not found")
        out = []
        for line in lines[start + 1 :]:
            if not line.strip():
                break
            out.append(line)
        return "\n".join(out)


def mock_generate(prompt_text: str) -> str:
    """Deterministic mock completion for a rendered generation prompt."""
    return MockBackend().complete(
        CompletionRequest(
            prompt=prompt_text, temperature=0.0, max_tokens=256, backend_id="mock"
        )
    )


def ensure_default_backends() -> None:
    """Idempotently register the built-in offline backend."""
    with _registry_lock:
        if "mock" not in _registry:
            _registry["mock"] = MockBackend("mock")
            _stats.setdefault("mock", BackendStats())


ensure_default_backends()

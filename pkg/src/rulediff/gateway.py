"""Chat-completion client with schema validation and correction retries.

All three LLM stages (formalization, matching, verbalization) go through
``Gateway.request_structured``: render a template, send it, validate the
answer, and on failure append the answer plus a rendered correction
prompt to the conversation and try again.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import httpx

from .ecgraph import MATCHING_SCHEMA, Matching, parse_matching
from .errors import ConfigError, RulediffError, SchemaError, TransportError, ValidationExhausted
from .formal import FORMALIZATION_SCHEMA, Formalization, parse_formalization, serialize
from .interface import Interface
from .triage import Representative

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

_PLACEHOLDER = re.compile(r"\{\{\s*([A-Za-z0-9_]+)\s*\}\}")


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str

    @property
    def required(self) -> frozenset[str]:
        return frozenset(_PLACEHOLDER.findall(self.body))

    def render(self, bindings: Mapping[str, Any]) -> str:
        missing = sorted(self.required - set(bindings))
        if missing:
            raise ConfigError(f"template {self.name!r} has unbound placeholders: {', '.join(missing)}")
        return _PLACEHOLDER.sub(lambda m: str(bindings[m.group(1)]), self.body)

    @classmethod
    def builtin(cls, name: str) -> "PromptTemplate":
        body = resources.files("rulediff").joinpath("templates", f"{name}.md").read_text(encoding="utf-8")
        return cls(name, body)

    @classmethod
    def from_file(cls, path: str | Path) -> "PromptTemplate":
        path = Path(path)
        return cls(path.stem, path.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class GatewayConfig:
    endpoint: str
    model: str
    token_env: str | None = None
    max_retries: int = 2
    timeout: float = 120.0
    temperature: float | None = None
    max_tokens: int | None = None
    concurrency: int = 4
    record_dir: str | None = None
    templates: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.endpoint:
            raise ConfigError("gateway endpoint is empty")
        if not self.model:
            raise ConfigError("gateway model is empty")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.concurrency < 1:
            raise ConfigError("concurrency must be >= 1")

    def token(self) -> str | None:
        if not self.token_env:
            return None
        tok = os.environ.get(self.token_env)
        if not tok:
            raise ConfigError(f"environment variable {self.token_env} is not set")
        return tok

    def template(self, name: str) -> PromptTemplate:
        if name in self.templates:
            return PromptTemplate.from_file(self.templates[name])
        return PromptTemplate.builtin(name)


def load_config(path: str | Path) -> GatewayConfig:
    path = Path(path)
    raw = path.read_bytes()
    try:
        if path.suffix == ".toml":
            doc = tomllib.loads(raw.decode("utf-8"))
        else:
            doc = json.loads(raw)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read gateway config {path}: {exc}") from exc
    doc = doc.get("gateway", doc)
    known = set(GatewayConfig.__dataclass_fields__)
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown gateway config keys: {', '.join(unknown)}")
    try:
        return GatewayConfig(**doc)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def extract_json(text: str) -> str:
    """Strip a surrounding markdown code fence, if any."""
    m = re.search(r"```(?:json)?\s*\n(.*?)```", text, re.S)
    return m.group(1) if m else text.strip()


class Gateway:
    def __init__(self, config: GatewayConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self._client = httpx.Client(transport=transport, timeout=config.timeout)
        self._slots = threading.Semaphore(config.concurrency)
        self._record_lock = threading.Lock()
        self.requests_sent = 0

    def close(self):
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def request_body(self, messages: Sequence[Mapping[str, str]]) -> dict:
        body: dict[str, Any] = {"model": self.config.model, "messages": [dict(m) for m in messages]}
        if self.config.temperature is not None:
            body["temperature"] = self.config.temperature
        if self.config.max_tokens is not None:
            body["max_tokens"] = self.config.max_tokens
        return body

    def chat(self, messages: Sequence[Mapping[str, str]]) -> str:
        body = self.request_body(messages)
        headers = {"content-type": "application/json"}
        tok = self.config.token()
        if tok:
            headers["authorization"] = f"Bearer {tok}"
        payload = json.dumps(body, sort_keys=True, ensure_ascii=False).encode("utf-8")
        with self._slots:
            try:
                resp = self._client.post(self.config.endpoint, content=payload, headers=headers)
            except httpx.HTTPError as exc:
                raise TransportError(f"request to {self.config.endpoint} failed: {exc}") from exc
            self.requests_sent += 1
        if resp.status_code >= 400:
            raise TransportError(f"endpoint answered HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            doc = resp.json()
            content = doc["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected response shape: {resp.text[:200]}") from exc
        self._record(body, doc)
        return content

    def _record(self, body, response):
        if not self.config.record_dir:
            return
        path = Path(self.config.record_dir) / "transcript.jsonl"
        path.parent.mkdir(parents=True, exist_ok=True)
        line = json.dumps({"request": body, "response": response}, sort_keys=True, ensure_ascii=False)
        with self._record_lock, path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def request_structured(
        self,
        template: PromptTemplate,
        bindings: Mapping[str, Any],
        validator: Callable[[str], Any],
        correction: PromptTemplate | None = None,
    ):
        """Send ``template`` and return ``validator(answer)`` of the first valid answer.

        The validator raises (any RulediffError or ValueError) to reject an
        answer; its message is bound to ``{{ERROR}}`` in the correction prompt.
        """
        prompt = template.render(bindings)
        messages = [{"role": "user", "content": prompt}]
        failures = []
        for attempt in range(self.config.max_retries + 1):
            answer = self.chat(messages)
            try:
                return validator(answer)
            except (RulediffError, ValueError) as exc:
                log.info("%s: attempt %d rejected: %s", template.name, attempt + 1, exc)
                failures.append(str(exc))
                if correction is None:
                    continue
                fix = correction.render({**bindings, "ERROR": str(exc), "PREVIOUS": answer})
                messages = [*messages, {"role": "assistant", "content": answer}, {"role": "user", "content": fix}]
        raise ValidationExhausted(
            f"{template.name}: no valid answer after {len(failures)} attempts; last error: {failures[-1]}",
            failures,
        )


class ReplayTransport(httpx.BaseTransport):
    """Serve responses from a recorded ``transcript.jsonl`` in order.

    Each incoming request body must equal the recorded one, so a replay
    also checks that request construction is deterministic.
    """

    def __init__(self, path: str | Path):
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        self.entries = [json.loads(x) for x in lines if x.strip()]
        self.position = 0

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        if self.position >= len(self.entries):
            raise httpx.ConnectError("transcript exhausted", request=request)
        entry = self.entries[self.position]
        self.position += 1
        body = json.loads(request.content)
        if body != entry["request"]:
            raise httpx.ConnectError(f"request {self.position} differs from the transcript", request=request)
        return httpx.Response(200, json=entry["response"])


# -- stage helpers ----------------------------------------------------------

def formalization_validator(text: str) -> Formalization:
    return parse_formalization(extract_json(text))


def matching_validator(formalizations: Sequence[Formalization]) -> Callable[[str], Matching]:
    return lambda text: parse_matching(extract_json(text), formalizations)


def request_formalization(gw: Gateway, law_text: str, provision_id: str, tree_id: str) -> Formalization:
    bindings = {
        "LAW_TEXT": law_text,
        "PROVISION_ID": provision_id,
        "TREE_ID": tree_id,
        "SCHEMA": json.dumps(FORMALIZATION_SCHEMA, indent=2),
    }
    return gw.request_structured(
        gw.config.template("formalize"), bindings, formalization_validator, gw.config.template("formalize_correction")
    )


def request_matching(gw: Gateway, law_text: str, formalizations: Sequence[Formalization]) -> Matching:
    bindings = {
        "LAW_TEXT": law_text,
        "FORMALIZATIONS": "\n\n".join(serialize(f) for f in formalizations),
        "SCHEMA": json.dumps(MATCHING_SCHEMA, indent=2),
    }
    return gw.request_structured(
        gw.config.template("matching"),
        bindings,
        matching_validator(formalizations),
        gw.config.template("matching_correction"),
    )


@dataclass(frozen=True)
class Verbalization:
    provision_id: str
    pair: tuple[str, str]
    signature: str
    scenario: str
    question: str
    true_side_label: str
    false_side_label: str
    stipulated_facts: tuple[tuple[str, bool], ...]

    def to_dict(self) -> dict:
        return {
            "provision_id": self.provision_id,
            "pair": list(self.pair),
            "signature": self.signature,
            "scenario": self.scenario,
            "question": self.question,
            "true_side_label": self.true_side_label,
            "false_side_label": self.false_side_label,
            "stipulated_facts": [{"variable": v, "value": b} for v, b in self.stipulated_facts],
        }


def variable_label(iface: Interface, var: str) -> str:
    if var in iface.private_vars:
        atom = iface.private_vars[var]
        return iface.matching.trees[atom.tree_id].nodes[atom.node_id].label
    return iface.matching.label(var)


def verbalization_bindings(rep: Representative, law_text: str, iface: Interface) -> dict:
    m = iface.matching
    a, b = rep.pair
    fixed = dict(rep.pi.fixed)

    def line(v, value=None):
        tail = "" if value is None else f": {'true' if value else 'false'}"
        return f"- [{v}] {variable_label(iface, v)}{tail}"

    open_vars = [v for v in iface.variables if v not in fixed]
    true_side, false_side = rep.sides if rep.sides else ("either (mixed)", "either (mixed)")
    return {
        "LAW_TEXT": law_text,
        "TREE_A": a,
        "TREE_B": b,
        "FORMALIZATION_A": serialize(m.trees[a]),
        "FORMALIZATION_B": serialize(m.trees[b]),
        "STIPULATED_FACTS": "\n".join(line(v, fixed[v]) for v in sorted(fixed))
        or "- (none: the formalizations disagree on every case)",
        "OPEN_VARIABLES": "\n".join(line(v) for v in open_vars) or "- (none)",
        "ROOT_CAUSES": "\n".join(f"- [{c.ec_id}] {m.label(c.ec_id)}" for c in rep.root_causes)
        or "- (not localized)",
        "TRUE_SIDE": true_side,
        "FALSE_SIDE": false_side,
    }


def verbalization_validator(rep: Representative, provision_id: str) -> Callable[[str], Verbalization]:
    expected = dict(rep.pi.fixed)

    def check(text: str) -> Verbalization:
        try:
            doc = json.loads(extract_json(text))
        except ValueError as exc:
            raise SchemaError(f"answer is not JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise SchemaError("answer must be a JSON object")
        for key in ("scenario", "question", "true_side_label", "false_side_label"):
            if not isinstance(doc.get(key), str) or not doc[key].strip():
                raise SchemaError(f"field {key!r} must be a nonempty string")
        facts = doc.get("stipulated_facts")
        if not isinstance(facts, list):
            raise SchemaError("field 'stipulated_facts' must be a list")
        echoed = {}
        for f in facts:
            if not isinstance(f, dict) or not isinstance(f.get("variable"), str) or not isinstance(f.get("value"), bool):
                raise SchemaError("each stipulated fact needs a string 'variable' and a boolean 'value'")
            echoed[f["variable"]] = f["value"]
        if echoed != expected:
            raise SchemaError(f"stipulated facts {echoed} do not match the required {expected}")
        return Verbalization(
            provision_id,
            rep.pair,
            rep.signature.digest,
            doc["scenario"],
            doc["question"],
            doc["true_side_label"],
            doc["false_side_label"],
            tuple(sorted(expected.items())),
        )

    return check


def verbalize(gw: Gateway, rep: Representative, law_text: str, iface: Interface) -> Verbalization:
    """Ask the model for a concrete scenario realizing ``rep``'s edge case."""
    return gw.request_structured(
        gw.config.template("verbalize"),
        verbalization_bindings(rep, law_text, iface),
        verbalization_validator(rep, iface.matching.provision_id),
        gw.config.template("verbalize_correction"),
    )

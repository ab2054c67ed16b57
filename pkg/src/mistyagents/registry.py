"""Robot command catalog: load, domain routing, and prompt-doc rendering.

The registry is the single source of truth for what the DSL may call.
It feeds three consumers: prompt construction (rendered docs), static
validation, and interpreter dispatch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from importlib import resources

DOMAINS = ("action", "touch", "audiovisual", "core")
PARAM_KINDS = ("int", "float", "string", "color", "duration-ms", "enum")
RETURN_TAGS = ("none", "text", "image-handle", "audio-handle", "boolean", "event")

# Control forms live in the registry for documentation purposes but are
# parsed as keywords, never dispatched as commands.
SYNTAX_FORMS = frozenset({"repeat", "if_else", "let", "stop"})


class RegistryError(ValueError):
    """Raised when a registry document violates its invariants."""


def _ident_ok(name: str) -> bool:
    if not name or not (name[0].isalpha() and name[0].islower()):
        return False
    return all(c.islower() or c.isdigit() or c == "_" for c in name)


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str
    range: tuple[float, float] | None = None
    enum_values: tuple[str, ...] | None = None
    required: bool = True
    default: object = None

    def check(self) -> None:
        if not _ident_ok(self.name):
            raise RegistryError(f"param name {self.name!r} is not a valid identifier")
        if self.kind not in PARAM_KINDS:
            raise RegistryError(f"param {self.name}: unknown kind {self.kind!r}")
        if self.kind == "enum" and not self.enum_values:
            raise RegistryError(f"param {self.name}: enum kind requires enum_values")
        if self.range is not None and self.range[0] > self.range[1]:
            raise RegistryError(f"param {self.name}: empty range {self.range}")
        if self.default is not None:
            if self.range is not None and not (
                self.range[0] <= float(self.default) <= self.range[1]
            ):
                raise RegistryError(
                    f"param {self.name}: default {self.default} outside range {self.range}"
                )
            if self.enum_values is not None and self.default not in self.enum_values:
                raise RegistryError(
                    f"param {self.name}: default {self.default!r} not in enum_values"
                )


@dataclass(frozen=True)
class ApiDefinition:
    name: str
    domain: str
    params: tuple[ParamSpec, ...]
    returns: str = "none"
    description: str = ""
    example_call: str = ""
    event_kind: str | None = None

    def check(self) -> None:
        if not _ident_ok(self.name):
            raise RegistryError(f"api name {self.name!r} is not a valid identifier")
        if self.domain not in DOMAINS:
            raise RegistryError(f"api {self.name}: unknown domain {self.domain!r}")
        if self.returns not in RETURN_TAGS:
            raise RegistryError(f"api {self.name}: unknown returns tag {self.returns!r}")
        seen = set()
        for p in self.params:
            p.check()
            if p.name in seen:
                raise RegistryError(f"api {self.name}: duplicate param {p.name!r}")
            seen.add(p.name)

    @property
    def is_syntax_form(self) -> bool:
        return self.name in SYNTAX_FORMS

    def signature(self) -> str:
        parts = []
        for p in self.params:
            s = p.name + ("" if p.required else "?") + f": {p.kind}"
            if p.range is not None:
                lo, hi = p.range
                s += f" [{_num(lo)},{_num(hi)}]"
            if p.enum_values is not None:
                s += " {" + "|".join(p.enum_values) + "}"
            if p.default is not None:
                s += f" = {p.default}"
            parts.append(s)
        sig = f"{self.name}({', '.join(parts)})"
        if self.returns != "none":
            sig += f" -> {self.returns}"
        return sig


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else str(x)


@dataclass(frozen=True)
class ApiRegistry:
    """Immutable after load; safe to share between threads."""

    apis: tuple[ApiDefinition, ...] = ()
    _by_name: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_name", {a.name: a for a in self.apis})

    def __len__(self) -> int:
        return len(self.apis)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ApiRegistry) and self.apis == other.apis

    def get(self, name: str) -> ApiDefinition | None:
        return self._by_name.get(name)

    def names(self) -> list[str]:
        return sorted(self._by_name)

    def domain_subset(self, domain: str) -> "ApiRegistry":
        """APIs of the given domain plus everything in `core`."""
        if domain not in DOMAINS:
            raise RegistryError(f"unknown domain {domain!r}")
        keep = tuple(a for a in self.apis if a.domain in (domain, "core"))
        return ApiRegistry(apis=keep)

    def event_apis(self) -> list[ApiDefinition]:
        return [a for a in self.apis if a.event_kind]

    def to_document(self) -> dict:
        """Serialize back to the registry JSON document shape."""
        out = []
        for a in self.apis:
            params = []
            for p in a.params:
                d: dict = {"name": p.name, "kind": p.kind, "required": p.required}
                if p.range is not None:
                    d["range"] = list(p.range)
                if p.enum_values is not None:
                    d["enum_values"] = list(p.enum_values)
                if p.default is not None:
                    d["default"] = p.default
                params.append(d)
            out.append(
                {
                    "name": a.name,
                    "domain": a.domain,
                    "description": a.description,
                    "returns": a.returns,
                    "event_kind": a.event_kind,
                    "params": params,
                    "example_call": a.example_call,
                }
            )
        return {"apis": out}

    def render_docs(self) -> str:
        """Deterministic prompt text: one block per API, sorted by name."""
        blocks = []
        for name in self.names():
            a = self._by_name[name]
            lines = [a.signature()]
            if a.description:
                lines.append(f"  {a.description}")
            for p in a.params:
                row = f"  - {p.name}: {p.kind}"
                if p.range is not None:
                    row += f", range [{_num(p.range[0])},{_num(p.range[1])}]"
                if p.enum_values is not None:
                    row += ", one of " + ", ".join(p.enum_values)
                if p.default is not None:
                    row += f", default {p.default}"
                if not p.required:
                    row += " (optional)"
                lines.append(row)
            if a.example_call:
                lines.append(f"  example: {a.example_call}")
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"


def _parse_param(raw: dict, where: str) -> ParamSpec:
    try:
        rng = raw.get("range")
        return ParamSpec(
            name=raw["name"],
            kind=raw["kind"],
            range=tuple(rng) if rng is not None else None,
            enum_values=tuple(raw["enum_values"]) if raw.get("enum_values") else None,
            required=raw.get("required", True),
            default=raw.get("default"),
        )
    except (KeyError, TypeError) as exc:
        raise RegistryError(f"{where}: malformed param record: {exc}") from exc


def load_registry(source: str | dict, *, check_examples: bool = True) -> ApiRegistry:
    """Load a registry document (JSON text or parsed dict).

    Raises RegistryError on parse problems, duplicate names, or example
    calls that fail to validate against the loaded registry itself.
    """
    if isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise RegistryError(f"registry document is not valid JSON: {exc}") from exc
    else:
        doc = source
    if not isinstance(doc, dict) or not isinstance(doc.get("apis"), list):
        raise RegistryError('registry document must be {"apis": [...]}')

    apis: list[ApiDefinition] = []
    seen: set[str] = set()
    for i, raw in enumerate(doc["apis"]):
        where = f"apis[{i}]"
        if not isinstance(raw, dict) or "name" not in raw:
            raise RegistryError(f"{where}: missing name")
        name = raw["name"]
        if name in seen:
            raise RegistryError(f"duplicate API name {name!r}")
        seen.add(name)
        api = ApiDefinition(
            name=name,
            domain=raw.get("domain", ""),
            params=tuple(_parse_param(p, f"{where}.params") for p in raw.get("params", [])),
            returns=raw.get("returns", "none"),
            description=raw.get("description", ""),
            example_call=raw.get("example_call", ""),
            event_kind=raw.get("event_kind"),
        )
        api.check()
        apis.append(api)

    reg = ApiRegistry(apis=tuple(apis))
    if check_examples:
        _check_example_calls(reg)
    return reg


def _check_example_calls(reg: ApiRegistry) -> None:
    # Deferred import: the DSL validator depends on the registry type.
    from .rsc import parse, validate

    for api in reg.apis:
        if not api.example_call:
            continue
        result = parse(api.example_call)
        if result.diagnostics:
            raise RegistryError(
                f"api {api.name}: example_call does not parse: "
                f"{result.diagnostics[0].message}"
            )
        diags = validate(result.program, reg)
        if diags:
            raise RegistryError(
                f"api {api.name}: example_call does not validate: {diags[0].message}"
            )


def load_registry_file(path: str | Path) -> ApiRegistry:
    return load_registry(Path(path).read_text(encoding="utf-8"))


def bundled_registry_path() -> Path:
    return Path(str(resources.files("mistyagents").joinpath("data/apis.json")))


def load_bundled_registry() -> ApiRegistry:
    return load_registry(bundled_registry_path().read_text(encoding="utf-8"))

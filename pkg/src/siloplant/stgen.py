"""Declarative component model and IEC 61131-3 v3 declaration emitter.

A component model lists interfaces (name + methods) and function blocks
(name, optional EXTENDS parent, IMPLEMENTS list, typed members, methods).
``parse_model`` accepts either the JSON model format or previously emitted
structured text; both paths canonicalize identifiers and run the same
reference / cycle / duplicate validation.  ``emit_st`` prints the
declaration subset only: interfaces first, then blocks, in declaration
order, one blank line between declarations, LF endings.

Identifier style: type names become UPPER_SNAKE (underscores inserted at
lower-to-upper camel boundaries); member names keep a leading ``its`` prefix
lowercase, e.g. ``itsProcessPort`` -> ``itsPROCESS_PORT``.  The transform is
idempotent, so emitted documents re-parse to an equal model.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .components import InterfaceSpec, OpSpec
from .errors import SiloPlantError


class ModelError(SiloPlantError):
    """Model rejected; ``location`` points at the offending entity."""

    def __init__(self, code: str, message: str, location: str | None = None):
        where = f" (at {location})" if location else ""
        super().__init__(code, message + where)
        self.location = location


@dataclass(frozen=True)
class StMember:
    name: str
    type_name: str


@dataclass(frozen=True)
class BlockSpec:
    name: str
    extends: str | None = None
    implements: tuple[str, ...] = ()
    members: tuple[StMember, ...] = ()
    methods: tuple[str, ...] = ()


@dataclass(frozen=True)
class ComponentModel:
    interfaces: tuple[InterfaceSpec, ...] = ()
    blocks: tuple[BlockSpec, ...] = ()

    def interface(self, name: str) -> InterfaceSpec | None:
        return next((i for i in self.interfaces if i.name == name), None)

    def block(self, name: str) -> BlockSpec | None:
        return next((b for b in self.blocks if b.name == name), None)


_CAMEL_BOUNDARY = re.compile(r"(?<=[a-z])(?=[A-Z])")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


def type_identifier(name: str) -> str:
    """UPPER_SNAKE form of a type name; idempotent on canonical names."""
    return _CAMEL_BOUNDARY.sub("_", name).upper()


def member_identifier(name: str) -> str:
    """Member style keeps a leading ``its`` lowercase: itsProcess -> itsPROCESS."""
    if name.startswith("its") and len(name) > 3:
        return "its" + type_identifier(name[3:])
    return type_identifier(name)


def _check_ident(raw: str, location: str) -> None:
    if not isinstance(raw, str) or not _IDENT.match(raw):
        raise ModelError("SYNTAX", f"invalid identifier {raw!r}", location)


# ----------------------------------------------------------------------
# Parsing
# ----------------------------------------------------------------------


def parse_model(document: str) -> ComponentModel:
    """Parse a model document: JSON model file or emitted structured text."""
    stripped = document.lstrip()
    if stripped.startswith("{"):
        return parse_model_json(document)
    return parse_st(document)


def parse_model_json(document: str) -> ComponentModel:
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ModelError("SYNTAX", f"not valid JSON: {exc}", f"line {exc.lineno}")
    if not isinstance(data, dict):
        raise ModelError("SYNTAX", "model document must be a JSON object", "<root>")
    unknown = set(data) - {"interfaces", "blocks"}
    if unknown:
        raise ModelError("SYNTAX", f"unknown top-level keys {sorted(unknown)}", "<root>")

    interfaces = []
    for i, entry in enumerate(_expect_list(data.get("interfaces", []), "interfaces")):
        loc = f"interfaces[{i}]"
        if not isinstance(entry, dict) or "name" not in entry:
            raise ModelError("SYNTAX", "interface entry needs a name", loc)
        _check_ident(entry["name"], loc)
        methods = _expect_list(entry.get("methods", []), f"{loc}.methods")
        ops = []
        for m in methods:
            _check_ident(m, f"{loc}.methods")
            ops.append(OpSpec(type_identifier(m)))
        _reject_unknown(entry, {"name", "methods"}, loc)
        interfaces.append(_make_interface(type_identifier(entry["name"]), ops, loc))

    blocks = []
    for i, entry in enumerate(_expect_list(data.get("blocks", []), "blocks")):
        loc = f"blocks[{i}]"
        if not isinstance(entry, dict) or "name" not in entry:
            raise ModelError("SYNTAX", "block entry needs a name", loc)
        _check_ident(entry["name"], loc)
        _reject_unknown(entry, {"name", "extends", "implements", "members", "methods"}, loc)
        extends = entry.get("extends")
        if extends is not None:
            _check_ident(extends, f"{loc}.extends")
        implements = []
        for name in _expect_list(entry.get("implements", []), f"{loc}.implements"):
            _check_ident(name, f"{loc}.implements")
            implements.append(type_identifier(name))
        members = []
        for j, member in enumerate(_expect_list(entry.get("members", []), f"{loc}.members")):
            mloc = f"{loc}.members[{j}]"
            if not isinstance(member, dict) or "name" not in member or "type" not in member:
                raise ModelError("SYNTAX", "member needs name and type", mloc)
            _check_ident(member["name"], mloc)
            _check_ident(member["type"], mloc)
            _reject_unknown(member, {"name", "type"}, mloc)
            members.append(
                StMember(member_identifier(member["name"]), type_identifier(member["type"]))
            )
        methods = []
        for m in _expect_list(entry.get("methods", []), f"{loc}.methods"):
            _check_ident(m, f"{loc}.methods")
            methods.append(type_identifier(m))
        blocks.append(
            BlockSpec(
                name=type_identifier(entry["name"]),
                extends=type_identifier(extends) if extends is not None else None,
                implements=tuple(implements),
                members=tuple(members),
                methods=tuple(methods),
            )
        )

    model = ComponentModel(interfaces=tuple(interfaces), blocks=tuple(blocks))
    validate_model(model)
    return model


def _expect_list(value, location: str) -> list:
    if not isinstance(value, list):
        raise ModelError("SYNTAX", "expected a list", location)
    return value


def _reject_unknown(entry: dict, allowed: set[str], location: str) -> None:
    unknown = set(entry) - allowed
    if unknown:
        raise ModelError("SYNTAX", f"unknown keys {sorted(unknown)}", location)


def _make_interface(name: str, ops: list[OpSpec], location: str) -> InterfaceSpec:
    seen = set()
    for op in ops:
        if op.name in seen:
            raise ModelError("DUPLICATE_NAME", f"duplicate method {op.name}", location)
        seen.add(op.name)
    return InterfaceSpec(name, tuple(ops))


# -- structured-text declaration grammar --------------------------------


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        for tok in re.findall(r"[A-Za-z_][A-Za-z0-9_]*|[:;,]", line):
            tokens.append((tok, lineno))
    return tokens


class _TokenStream:
    def __init__(self, tokens: list[tuple[str, int]]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def line(self) -> int:
        if self.pos < len(self.tokens):
            return self.tokens[self.pos][1]
        return self.tokens[-1][1] if self.tokens else 0

    def next(self, expected: str | None = None) -> str:
        if self.pos >= len(self.tokens):
            raise ModelError("SYNTAX", "unexpected end of document", f"line {self.line()}")
        tok, lineno = self.tokens[self.pos]
        if expected is not None and tok != expected:
            raise ModelError("SYNTAX", f"expected {expected!r}, found {tok!r}", f"line {lineno}")
        self.pos += 1
        return tok


_KEYWORDS = {
    "INTERFACE", "END_INTERFACE", "FUNCTION_BLOCK", "END_FUNCTION_BLOCK",
    "EXTENDS", "IMPLEMENTS", "METHOD", "END_METHOD",
}


def parse_st(text: str) -> ComponentModel:
    """Parse the emitted declaration subset back into a model."""
    stream = _TokenStream(_tokenize(text))
    interfaces: list[InterfaceSpec] = []
    blocks: list[BlockSpec] = []
    while stream.peek() is not None:
        if stream.peek() == "INTERFACE":
            interfaces.append(_parse_interface(stream))
        elif stream.peek() == "FUNCTION_BLOCK":
            blocks.append(_parse_block(stream))
        else:
            raise ModelError(
                "SYNTAX",
                f"expected INTERFACE or FUNCTION_BLOCK, found {stream.peek()!r}",
                f"line {stream.line()}",
            )
    model = ComponentModel(interfaces=tuple(interfaces), blocks=tuple(blocks))
    validate_model(model)
    return model


def _parse_interface(stream: _TokenStream) -> InterfaceSpec:
    stream.next("INTERFACE")
    line = stream.line()
    name = stream.next()
    ops = []
    while stream.peek() == "METHOD":
        stream.next("METHOD")
        ops.append(OpSpec(stream.next()))
        stream.next("END_METHOD")
    stream.next("END_INTERFACE")
    return _make_interface(name, ops, f"line {line}")


def _parse_block(stream: _TokenStream) -> BlockSpec:
    stream.next("FUNCTION_BLOCK")
    name = stream.next()
    extends = None
    implements: list[str] = []
    if stream.peek() == "EXTENDS":
        stream.next("EXTENDS")
        extends = stream.next()
    if stream.peek() == "IMPLEMENTS":
        stream.next("IMPLEMENTS")
        implements.append(stream.next())
        while stream.peek() == ",":
            stream.next(",")
            implements.append(stream.next())
    members: list[StMember] = []
    methods: list[str] = []
    while stream.peek() != "END_FUNCTION_BLOCK":
        if stream.peek() == "METHOD":
            stream.next("METHOD")
            methods.append(stream.next())
            stream.next("END_METHOD")
        elif stream.peek() is None:
            raise ModelError("SYNTAX", "unterminated FUNCTION_BLOCK", f"line {stream.line()}")
        else:
            member_name = stream.next()
            if member_name in _KEYWORDS:
                raise ModelError(
                    "SYNTAX", f"unexpected {member_name!r} inside FUNCTION_BLOCK",
                    f"line {stream.line()}",
                )
            stream.next(":")
            members.append(StMember(member_name, stream.next()))
            stream.next(";")
    stream.next("END_FUNCTION_BLOCK")
    return BlockSpec(
        name=name,
        extends=extends,
        implements=tuple(implements),
        members=tuple(members),
        methods=tuple(methods),
    )


# ----------------------------------------------------------------------
# Validation
# ----------------------------------------------------------------------


def validate_model(model: ComponentModel) -> None:
    names: set[str] = set()
    for itf in model.interfaces:
        if itf.name in names:
            raise ModelError("DUPLICATE_NAME", f"duplicate declaration {itf.name}", itf.name)
        names.add(itf.name)
    for blk in model.blocks:
        if blk.name in names:
            raise ModelError("DUPLICATE_NAME", f"duplicate declaration {blk.name}", blk.name)
        names.add(blk.name)

    interface_names = {i.name for i in model.interfaces}
    block_names = {b.name for b in model.blocks}

    for blk in model.blocks:
        if blk.extends is not None and blk.extends not in block_names:
            raise ModelError(
                "UNRESOLVED_REFERENCE",
                f"{blk.name} extends undeclared block {blk.extends}",
                blk.name,
            )
        for itf in blk.implements:
            if itf not in interface_names:
                raise ModelError(
                    "UNRESOLVED_REFERENCE",
                    f"{blk.name} implements undeclared interface {itf}",
                    blk.name,
                )
        seen_members = set()
        for member in blk.members:
            if member.name in seen_members:
                raise ModelError(
                    "DUPLICATE_NAME", f"duplicate member {member.name}", blk.name
                )
            seen_members.add(member.name)
            if member.type_name not in interface_names | block_names:
                raise ModelError(
                    "UNRESOLVED_REFERENCE",
                    f"member {member.name} has undeclared type {member.type_name}",
                    blk.name,
                )
        seen_methods = set()
        for method in blk.methods:
            if method in seen_methods:
                raise ModelError("DUPLICATE_NAME", f"duplicate method {method}", blk.name)
            seen_methods.add(method)

    # EXTENDS chains must be acyclic.
    parents = {b.name: b.extends for b in model.blocks}
    for start in parents:
        seen = {start}
        node = parents[start]
        while node is not None:
            if node in seen:
                raise ModelError(
                    "CYCLIC_INHERITANCE", f"inheritance cycle through {start}", start
                )
            seen.add(node)
            node = parents.get(node)


# ----------------------------------------------------------------------
# Emission
# ----------------------------------------------------------------------


def emit_st(model: ComponentModel) -> str:
    """Deterministic declaration text; empty model emits an empty document."""
    parts: list[str] = []
    for itf in model.interfaces:
        lines = [f"INTERFACE {itf.name}"]
        lines += [f"METHOD {op.name} END_METHOD" for op in itf.operations]
        lines.append("END_INTERFACE")
        parts.append("\n".join(lines))
    for blk in model.blocks:
        header = f"FUNCTION_BLOCK {blk.name}"
        if blk.extends:
            header += f" EXTENDS {blk.extends}"
        if blk.implements:
            header += f" IMPLEMENTS {', '.join(blk.implements)}"
        lines = [header]
        lines += [f"{m.name}:{m.type_name};" for m in blk.members]
        lines += [f"METHOD {m} END_METHOD" for m in blk.methods]
        lines.append("END_FUNCTION_BLOCK")
        parts.append("\n".join(lines))
    return "\n\n".join(parts) + ("\n" if parts else "")


# ----------------------------------------------------------------------
# Port compliance
# ----------------------------------------------------------------------


def _implements_closure(model: ComponentModel, block: BlockSpec) -> set[str]:
    implemented: set[str] = set()
    node: BlockSpec | None = block
    while node is not None:
        implemented.update(node.implements)
        node = model.block(node.extends) if node.extends else None
    return implemented


def _required_interfaces(model: ComponentModel, block: BlockSpec) -> list[str]:
    interface_names = {i.name for i in model.interfaces}
    required: list[str] = []
    node: BlockSpec | None = block
    while node is not None:
        for member in node.members:
            if member.type_name in interface_names:
                required.append(member.type_name)
        node = model.block(node.extends) if node.extends else None
    return required


def check_port_compliance(model: ComponentModel, port_a: str, port_b: str) -> list[str]:
    """Empty list when the two port blocks can be joined by a connector.

    A port block is compliant with another when each implements exactly the
    interface that types the other's required member.
    """
    violations: list[str] = []
    blocks = {}
    for name in (port_a, port_b):
        block = model.block(name)
        if block is None:
            raise ModelError("UNKNOWN_BLOCK", f"no block named {name}", name)
        blocks[name] = block

    sides = [(port_a, port_b), (port_b, port_a)]
    for provider_name, consumer_name in sides:
        provider = blocks[provider_name]
        consumer = blocks[consumer_name]
        required = _required_interfaces(model, consumer)
        if len(required) != 1:
            violations.append(
                f"{consumer_name}: expected exactly one interface-typed required member, "
                f"found {len(required)}"
            )
            continue
        provided = _implements_closure(model, provider)
        if provided != {required[0]}:
            violations.append(
                f"{provider_name} implements {sorted(provided) or 'nothing'}, "
                f"but {consumer_name} requires exactly {required[0]}"
            )
    return violations

"""Contract ABI parsing and the calldata/event-log codec.

Encoding follows the standard contract-ABI layout: every static value
occupies 32-byte slots in the head, dynamic values put a byte offset in
the head and a length-prefixed payload in the tail. The decoder is
strict: it accepts exactly the canonical layout the encoder emits, so a
successful decode always re-encodes to the original bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Optional, Sequence

from .chain import Address, Hash32, LogEntry, keccak256

WORD = 32
MAX_NESTING = 4  # array/tuple nesting depth ceiling

_UINT_MAX = {bits: (1 << bits) - 1 for bits in range(8, 257, 8)}


class AbiError(Exception):
    """Base class for ABI errors."""


class MalformedAbi(AbiError):
    """The ABI document is not valid JSON or not the expected shape."""


class UnsupportedType(AbiError):
    """A type name outside the supported grammar (or nested too deep)."""


class DuplicateSelector(AbiError):
    """Two functions in one document share a 4-byte selector."""


class AbiEncodeError(AbiError):
    """Base class for encoding failures."""


class ArityMismatch(AbiEncodeError):
    pass


class TypeMismatch(AbiEncodeError):
    pass


class IntegerOverflow(AbiEncodeError):
    """Integer value does not fit the declared bit width."""


class AbiDecodeError(AbiError):
    """Base class for decoding failures."""


class UnknownSelector(AbiDecodeError):
    pass


class TruncatedData(AbiDecodeError):
    """A read would run past the end of the payload."""


class MalformedOffset(AbiDecodeError):
    """A dynamic-data offset is unaligned, out of bounds, or non-sequential."""


class NonCanonicalData(AbiDecodeError):
    """Payload bytes violate canonical encoding (dirty padding, bad bool...)."""


class UnknownTopic(AbiDecodeError):
    pass


class TopicCountMismatch(AbiDecodeError):
    pass


@dataclass(frozen=True)
class AbiType:
    """One node of a parsed type expression.

    kind is one of: uint, int, address, bool, bytes_fixed, bytes, string,
    array (dynamic), array_fixed, tuple. ``bits`` is the integer width,
    ``size`` the fixed-bytes length or fixed-array element count.
    """

    kind: str
    bits: int = 0
    size: int = 0
    inner: Optional["AbiType"] = None
    components: tuple["AbiType", ...] = ()

    def canonical(self) -> str:
        k = self.kind
        if k == "uint":
            return f"uint{self.bits}"
        if k == "int":
            return f"int{self.bits}"
        if k in ("address", "bool", "bytes", "string"):
            return k
        if k == "bytes_fixed":
            return f"bytes{self.size}"
        if k == "array":
            return self.inner.canonical() + "[]"
        if k == "array_fixed":
            return f"{self.inner.canonical()}[{self.size}]"
        if k == "tuple":
            return "(" + ",".join(c.canonical() for c in self.components) + ")"
        raise UnsupportedType(k)

    def is_dynamic(self) -> bool:
        if self.kind in ("bytes", "string", "array"):
            return True
        if self.kind == "array_fixed":
            return self.inner.is_dynamic()
        if self.kind == "tuple":
            return any(c.is_dynamic() for c in self.components)
        return False

    def static_size(self) -> int:
        """Encoded byte length of a static value of this type."""
        if self.is_dynamic():
            raise TypeMismatch(f"{self.canonical()} is dynamic")
        if self.kind == "array_fixed":
            return self.size * self.inner.static_size()
        if self.kind == "tuple":
            return sum(c.static_size() for c in self.components)
        return WORD

    def head_size(self) -> int:
        return WORD if self.is_dynamic() else self.static_size()

    def depth(self) -> int:
        if self.kind in ("array", "array_fixed"):
            return 1 + self.inner.depth()
        if self.kind == "tuple":
            return 1 + max((c.depth() for c in self.components), default=0)
        return 0


def parse_type(name: str, components: Optional[Sequence[dict]] = None) -> AbiType:
    """Parse an ABI type name (plus tuple components) into an AbiType.

    Accepts the alias forms ``uint``/``int`` and normalizes them to the
    256-bit canonical types. Raises UnsupportedType for anything outside
    the grammar or nested deeper than MAX_NESTING.
    """
    t = _parse_type_inner(name.strip(), components)
    if t.depth() > MAX_NESTING:
        raise UnsupportedType(f"nesting deeper than {MAX_NESTING}: {name}")
    return t


def _parse_type_inner(name: str, components: Optional[Sequence[dict]]) -> AbiType:
    if name.endswith("]"):
        open_idx = name.rfind("[")
        if open_idx < 0:
            raise UnsupportedType(name)
        inner = _parse_type_inner(name[:open_idx], components)
        dim = name[open_idx + 1:-1]
        if dim == "":
            return AbiType("array", inner=inner)
        if not dim.isdigit() or int(dim) == 0:
            raise UnsupportedType(name)
        return AbiType("array_fixed", size=int(dim), inner=inner)
    if name == "tuple":
        if components is None:
            raise MalformedAbi("tuple type requires components")
        comps = tuple(
            _parse_type_inner(c.get("type", ""), c.get("components")) for c in components
        )
        return AbiType("tuple", components=comps)
    if name.startswith("(") and name.endswith(")"):
        return AbiType("tuple", components=tuple(_split_tuple(name)))
    if name in ("uint", "int"):
        return AbiType(name, bits=256)
    if name.startswith("uint") or name.startswith("int"):
        kind = "uint" if name.startswith("uint") else "int"
        suffix = name[len(kind):]
        if not suffix.isdigit():
            raise UnsupportedType(name)
        bits = int(suffix)
        if bits % 8 != 0 or not 8 <= bits <= 256:
            raise UnsupportedType(name)
        return AbiType(kind, bits=bits)
    if name == "address":
        return AbiType("address")
    if name == "bool":
        return AbiType("bool")
    if name == "string":
        return AbiType("string")
    if name == "bytes":
        return AbiType("bytes")
    if name.startswith("bytes"):
        suffix = name[5:]
        if not suffix.isdigit():
            raise UnsupportedType(name)
        size = int(suffix)
        if not 1 <= size <= 32:
            raise UnsupportedType(name)
        return AbiType("bytes_fixed", size=size)
    raise UnsupportedType(name)


def _split_tuple(name: str) -> list[AbiType]:
    """Parse a parenthesized tuple type string like (uint256,(bool,address))."""
    body = name[1:-1]
    if body == "":
        return []
    parts: list[str] = []
    depth = 0
    start = 0
    for i, ch in enumerate(body):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(body[start:i])
            start = i + 1
    parts.append(body[start:])
    return [_parse_type_inner(p, None) for p in parts]


@dataclass(frozen=True)
class FunctionAbi:
    name: str
    inputs: tuple[tuple[str, AbiType], ...]
    outputs: tuple[AbiType, ...] = ()
    mutability: str = "nonpayable"

    def canonical_signature(self) -> str:
        return self.name + "(" + ",".join(t.canonical() for _, t in self.inputs) + ")"

    def selector(self) -> bytes:
        return _signature_hash(self.canonical_signature())[:4]


@dataclass(frozen=True)
class EventAbi:
    name: str
    inputs: tuple[tuple[str, AbiType, bool], ...]  # (name, type, indexed)
    anonymous: bool = False

    def canonical_signature(self) -> str:
        return self.name + "(" + ",".join(t.canonical() for _, t, _ in self.inputs) + ")"

    def topic0(self) -> Hash32:
        return Hash32(_signature_hash(self.canonical_signature()))


@lru_cache(maxsize=4096)
def _signature_hash(signature: str) -> bytes:
    return bytes(keccak256(signature.encode("ascii")))


def selector(f: FunctionAbi) -> bytes:
    """First 4 bytes of keccak256 over the canonical signature."""
    return f.selector()


@dataclass(frozen=True)
class AbiDefinition:
    functions: tuple[FunctionAbi, ...]
    events: tuple[EventAbi, ...]
    selector_index: dict[bytes, FunctionAbi] = field(default_factory=dict)
    topic_index: dict[Hash32, EventAbi] = field(default_factory=dict)

    def function(self, name: str) -> FunctionAbi:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def event(self, name: str) -> EventAbi:
        for e in self.events:
            if e.name == name:
                return e
        raise KeyError(name)


def parse_abi(document: str) -> AbiDefinition:
    """Parse a standard contract-ABI JSON document.

    Function and event entries are indexed by selector and topic hash;
    constructor/fallback/receive entries are ignored. Duplicate selectors
    are rejected.
    """
    try:
        entries = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MalformedAbi(f"invalid JSON: {exc}") from exc
    return parse_abi_entries(entries)


def parse_abi_entries(entries: Any) -> AbiDefinition:
    if not isinstance(entries, list):
        raise MalformedAbi("ABI document must be a JSON array")
    functions: list[FunctionAbi] = []
    events: list[EventAbi] = []
    for entry in entries:
        if not isinstance(entry, dict):
            raise MalformedAbi("ABI entries must be objects")
        etype = entry.get("type", "function")
        if etype == "function":
            functions.append(_parse_function(entry))
        elif etype == "event":
            events.append(_parse_event(entry))
        elif etype in ("constructor", "fallback", "receive", "error"):
            continue
        else:
            raise MalformedAbi(f"unknown entry type: {etype}")
    selector_index: dict[bytes, FunctionAbi] = {}
    for f in functions:
        sel = f.selector()
        if sel in selector_index:
            raise DuplicateSelector(
                f"{f.canonical_signature()} collides with "
                f"{selector_index[sel].canonical_signature()} on 0x{sel.hex()}"
            )
        selector_index[sel] = f
    topic_index: dict[Hash32, EventAbi] = {}
    for e in events:
        if not e.anonymous:
            topic_index[e.topic0()] = e
    return AbiDefinition(tuple(functions), tuple(events), selector_index, topic_index)


def _parse_function(entry: dict) -> FunctionAbi:
    name = entry.get("name")
    if not isinstance(name, str) or not name:
        raise MalformedAbi("function entry without a name")
    inputs = tuple(
        (p.get("name", ""), parse_type(p.get("type", ""), p.get("components")))
        for p in entry.get("inputs", [])
    )
    outputs = tuple(
        parse_type(p.get("type", ""), p.get("components")) for p in entry.get("outputs", [])
    )
    mutability = entry.get("stateMutability")
    if mutability is None:
        # Pre-0.5 compiler documents use constant/payable booleans.
        if entry.get("payable"):
            mutability = "payable"
        elif entry.get("constant"):
            mutability = "view"
        else:
            mutability = "nonpayable"
    if mutability not in ("pure", "view", "nonpayable", "payable"):
        raise MalformedAbi(f"unknown mutability: {mutability}")
    return FunctionAbi(name, inputs, outputs, mutability)


def _parse_event(entry: dict) -> EventAbi:
    name = entry.get("name")
    if not isinstance(name, str) or not name:
        raise MalformedAbi("event entry without a name")
    inputs = tuple(
        (p.get("name", ""), parse_type(p.get("type", ""), p.get("components")),
         bool(p.get("indexed", False)))
        for p in entry.get("inputs", [])
    )
    anonymous = bool(entry.get("anonymous", False))
    indexed = sum(1 for _, _, idx in inputs if idx)
    if not anonymous and indexed > 3:
        raise MalformedAbi(f"event {name} has {indexed} indexed inputs (max 3)")
    return EventAbi(name, inputs, anonymous)


# --- encoding -------------------------------------------------------------

def encode_args(f: FunctionAbi, args: Sequence[Any]) -> bytes:
    """Build calldata: 4-byte selector followed by the encoded arguments."""
    return f.selector() + encode_values([t for _, t in f.inputs], args)


def encode_values(types: Sequence[AbiType], values: Sequence[Any]) -> bytes:
    """Encode a value sequence with the head/tail 32-byte-slot scheme."""
    if len(types) != len(values):
        raise ArityMismatch(f"expected {len(types)} values, got {len(values)}")
    head_size = sum(t.head_size() for t in types)
    heads: list[bytes] = []
    tails: list[bytes] = []
    offset = head_size
    for t, v in zip(types, values):
        if t.is_dynamic():
            heads.append(offset.to_bytes(WORD, "big"))
            tail = _encode_value(t, v)
            tails.append(tail)
            offset += len(tail)
        else:
            heads.append(_encode_value(t, v))
    return b"".join(heads) + b"".join(tails)


def _encode_value(t: AbiType, v: Any) -> bytes:
    kind = t.kind
    if kind == "uint":
        if isinstance(v, bool) or not isinstance(v, int):
            raise TypeMismatch(f"{t.canonical()} needs an int, got {type(v).__name__}")
        if v < 0 or v > _UINT_MAX[t.bits]:
            raise IntegerOverflow(f"{v} out of range for {t.canonical()}")
        return v.to_bytes(WORD, "big")
    if kind == "int":
        if isinstance(v, bool) or not isinstance(v, int):
            raise TypeMismatch(f"{t.canonical()} needs an int, got {type(v).__name__}")
        lo, hi = -(1 << (t.bits - 1)), (1 << (t.bits - 1)) - 1
        if not lo <= v <= hi:
            raise IntegerOverflow(f"{v} out of range for {t.canonical()}")
        return (v & ((1 << 256) - 1)).to_bytes(WORD, "big")
    if kind == "address":
        raw = _coerce_address(v)
        return b"\x00" * 12 + raw
    if kind == "bool":
        if not isinstance(v, bool):
            raise TypeMismatch(f"bool needs a bool, got {type(v).__name__}")
        return int(v).to_bytes(WORD, "big")
    if kind == "bytes_fixed":
        if not isinstance(v, (bytes, bytearray)) or len(v) != t.size:
            raise TypeMismatch(f"{t.canonical()} needs exactly {t.size} bytes")
        return bytes(v) + b"\x00" * (WORD - t.size)
    if kind == "bytes":
        if not isinstance(v, (bytes, bytearray)):
            raise TypeMismatch("bytes needs a bytes value")
        return _encode_length_prefixed(bytes(v))
    if kind == "string":
        if not isinstance(v, str):
            raise TypeMismatch("string needs a str value")
        return _encode_length_prefixed(v.encode("utf-8"))
    if kind == "array":
        if not isinstance(v, (list, tuple)):
            raise TypeMismatch(f"{t.canonical()} needs a list")
        body = encode_values([t.inner] * len(v), list(v))
        return len(v).to_bytes(WORD, "big") + body
    if kind == "array_fixed":
        if not isinstance(v, (list, tuple)) or len(v) != t.size:
            raise TypeMismatch(f"{t.canonical()} needs a list of {t.size} items")
        return encode_values([t.inner] * t.size, list(v))
    if kind == "tuple":
        if not isinstance(v, (list, tuple)) or len(v) != len(t.components):
            raise TypeMismatch(f"{t.canonical()} needs {len(t.components)} items")
        return encode_values(list(t.components), list(v))
    raise UnsupportedType(kind)


def _coerce_address(v: Any) -> bytes:
    if isinstance(v, Address):
        return bytes(v)
    if isinstance(v, (bytes, bytearray)) and len(v) == 20:
        return bytes(v)
    if isinstance(v, str):
        try:
            return bytes(Address.from_hex(v))
        except ValueError as exc:
            raise TypeMismatch(f"bad address text: {v}") from exc
    raise TypeMismatch(f"address needs 20 bytes, got {type(v).__name__}")


def _encode_length_prefixed(payload: bytes) -> bytes:
    padding = (-len(payload)) % WORD
    return len(payload).to_bytes(WORD, "big") + payload + b"\x00" * padding


# --- decoding -------------------------------------------------------------

@dataclass(frozen=True)
class DecodedCall:
    function_name: str
    canonical_signature: str
    selector: bytes
    args: tuple[tuple[str, Any], ...]


@dataclass(frozen=True)
class TopicHash:
    """Stand-in for a dynamic indexed event argument: only its hash is on chain."""

    digest: Hash32


@dataclass(frozen=True)
class DecodedEvent:
    event_name: str
    args: tuple[tuple[str, Any, bool], ...]  # (name, value, indexed)


class _Reader:
    """Strict sequential reader over one encoding scope.

    Canonical encodings place dynamic tails in head order immediately
    after the head block, so each offset must equal the running tail
    cursor; anything else is rejected.
    """

    def __init__(self, buf: memoryview, start: int, end: int):
        self.buf = buf
        self.start = start
        self.end = end

    def word(self, pos: int) -> bytes:
        if pos + WORD > self.end:
            raise TruncatedData(f"need 32 bytes at {pos - self.start}, have "
                                f"{self.end - pos}")
        return bytes(self.buf[pos:pos + WORD])


def decode_values(types: Sequence[AbiType], data: bytes) -> list[Any]:
    """Decode a top-level value sequence; the entire payload must be consumed."""
    buf = memoryview(data)
    reader = _Reader(buf, 0, len(data))
    values, consumed = _decode_sequence(types, reader, 0, len(data))
    if consumed != len(data):
        raise NonCanonicalData(f"{len(data) - consumed} trailing bytes")
    return values


def _decode_sequence(types: Sequence[AbiType], reader: _Reader,
                     base: int, limit: int) -> tuple[list[Any], int]:
    """Decode a head/tail scope starting at ``base``; returns (values, bytes used)."""
    head_size = sum(t.head_size() for t in types)
    if base + head_size > limit:
        raise TruncatedData("head block runs past end of data")
    values: list[Any] = []
    head_pos = base
    tail_cursor = head_size  # offsets are relative to the scope base
    for t in types:
        if t.is_dynamic():
            offset = int.from_bytes(reader.word(head_pos), "big")
            if offset % WORD != 0:
                raise MalformedOffset(f"offset {offset} not 32-byte aligned")
            if base + offset > limit:
                raise MalformedOffset(f"offset {offset} past end of scope")
            if offset != tail_cursor:
                raise MalformedOffset(
                    f"offset {offset} breaks canonical tail order (expected {tail_cursor})"
                )
            value, used = _decode_dynamic(t, reader, base + offset, limit)
            values.append(value)
            tail_cursor += used
            head_pos += WORD
        else:
            values.append(_decode_static(t, reader, head_pos))
            head_pos += t.static_size()
    return values, tail_cursor


def _decode_static(t: AbiType, reader: _Reader, pos: int) -> Any:
    kind = t.kind
    if kind in ("uint", "int", "address", "bool", "bytes_fixed"):
        return _decode_word(t, reader.word(pos))
    if kind == "array_fixed":
        out = []
        step = t.inner.static_size()
        for i in range(t.size):
            out.append(_decode_static(t.inner, reader, pos + i * step))
        return out
    if kind == "tuple":
        out_t = []
        for c in t.components:
            out_t.append(_decode_static(c, reader, pos))
            pos += c.static_size()
        return tuple(out_t)
    raise UnsupportedType(kind)


def _decode_word(t: AbiType, word: bytes) -> Any:
    kind = t.kind
    if kind == "uint":
        v = int.from_bytes(word, "big")
        if v > _UINT_MAX[t.bits]:
            raise NonCanonicalData(f"value exceeds {t.canonical()}")
        return v
    if kind == "int":
        v = int.from_bytes(word, "big")
        if v >= 1 << 255:
            v -= 1 << 256
        lo, hi = -(1 << (t.bits - 1)), (1 << (t.bits - 1)) - 1
        if not lo <= v <= hi:
            raise NonCanonicalData(f"value exceeds {t.canonical()}")
        return v
    if kind == "address":
        if word[:12] != b"\x00" * 12:
            raise NonCanonicalData("address word has dirty padding")
        return Address(word[12:])
    if kind == "bool":
        v = int.from_bytes(word, "big")
        if v not in (0, 1):
            raise NonCanonicalData("bool word must be 0 or 1")
        return bool(v)
    if kind == "bytes_fixed":
        if word[t.size:] != b"\x00" * (WORD - t.size):
            raise NonCanonicalData(f"{t.canonical()} word has dirty padding")
        return word[:t.size]
    raise UnsupportedType(kind)


def _decode_dynamic(t: AbiType, reader: _Reader, pos: int, limit: int) -> tuple[Any, int]:
    """Decode one dynamic value at ``pos``; returns (value, encoded length)."""
    kind = t.kind
    if kind in ("bytes", "string"):
        length = int.from_bytes(reader.word(pos), "big")
        padded = length + (-length) % WORD
        if pos + WORD + padded > limit:
            raise TruncatedData(f"{t.canonical()} payload of {length} bytes truncated")
        payload = bytes(reader.buf[pos + WORD:pos + WORD + length])
        pad = bytes(reader.buf[pos + WORD + length:pos + WORD + padded])
        if pad != b"\x00" * len(pad):
            raise NonCanonicalData(f"{t.canonical()} padding not zeroed")
        if kind == "string":
            try:
                return payload.decode("utf-8"), WORD + padded
            except UnicodeDecodeError as exc:
                raise NonCanonicalData(f"string is not valid UTF-8: {exc}") from exc
        return payload, WORD + padded
    if kind == "array":
        length = int.from_bytes(reader.word(pos), "big")
        if length > (limit - pos) // WORD:
            raise TruncatedData(f"array length {length} cannot fit remaining data")
        values, used = _decode_sequence([t.inner] * length, reader, pos + WORD, limit)
        return values, WORD + used
    if kind == "array_fixed":
        values, used = _decode_sequence([t.inner] * t.size, reader, pos, limit)
        return values, used
    if kind == "tuple":
        values, used = _decode_sequence(list(t.components), reader, pos, limit)
        return tuple(values), used
    raise UnsupportedType(kind)


def decode_call(input_bytes: bytes, abi: AbiDefinition) -> Optional[DecodedCall]:
    """Reconstruct the function call carried by a transaction payload.

    Empty input is a plain value transfer and returns None. Raises
    UnknownSelector when the 4-byte prefix matches no indexed function,
    TruncatedData for payloads shorter than a selector.
    """
    if len(input_bytes) == 0:
        return None
    if len(input_bytes) < 4:
        raise TruncatedData(f"calldata of {len(input_bytes)} bytes has no full selector")
    sel = bytes(input_bytes[:4])
    f = abi.selector_index.get(sel)
    if f is None:
        raise UnknownSelector(f"0x{sel.hex()}")
    values = decode_values([t for _, t in f.inputs], bytes(input_bytes[4:]))
    args = tuple((name, v) for (name, _), v in zip(f.inputs, values))
    return DecodedCall(f.name, f.canonical_signature(), sel, args)


def decode_event(log: LogEntry, abi: AbiDefinition) -> DecodedEvent:
    """Reconstruct an event from its log entry.

    Indexed static arguments come from topics 1..; dynamic indexed
    arguments only exist on chain as their hash and are surfaced as
    TopicHash values; the rest decode from the data section.
    """
    if not log.topics:
        raise TopicCountMismatch("log has no topics; non-anonymous events need topic0")
    event = abi.topic_index.get(log.topics[0])
    if event is None:
        raise UnknownTopic(log.topics[0].to_hex())
    indexed_types = [(n, t) for n, t, idx in event.inputs if idx]
    if len(indexed_types) != len(log.topics) - 1:
        raise TopicCountMismatch(
            f"{event.name} declares {len(indexed_types)} indexed inputs, "
            f"log carries {len(log.topics) - 1} argument topics"
        )
    plain_types = [t for _, t, idx in event.inputs if not idx]
    plain_values = decode_values(plain_types, log.data)
    topic_iter = iter(log.topics[1:])
    plain_iter = iter(plain_values)
    args: list[tuple[str, Any, bool]] = []
    for name, t, idx in event.inputs:
        if idx:
            topic = next(topic_iter)
            if t.is_dynamic():
                args.append((name, TopicHash(topic), True))
            else:
                args.append((name, _decode_word(t, bytes(topic)), True))
        else:
            args.append((name, next(plain_iter), False))
    return DecodedEvent(event.name, tuple(args))


# --- serialization of decoded values --------------------------------------

def value_to_jsonable(v: Any) -> Any:
    """Lossless JSON form: ints as decimal text, bytes as 0x-hex."""
    if isinstance(v, bool):
        return v
    if isinstance(v, int):
        return str(v)
    if isinstance(v, TopicHash):
        return {"hashed": v.digest.to_hex()}
    if isinstance(v, (Address, Hash32)):
        return v.to_hex()
    if isinstance(v, (bytes, bytearray)):
        return "0x" + bytes(v).hex()
    if isinstance(v, str):
        return v
    if isinstance(v, (list, tuple)):
        return [value_to_jsonable(x) for x in v]
    raise TypeError(f"cannot serialize {type(v).__name__}")


def call_to_doc(call: DecodedCall) -> dict:
    return {
        "function": call.function_name,
        "signature": call.canonical_signature,
        "selector": "0x" + call.selector.hex(),
        "args": [
            {"name": name or f"arg{i}", "value": value_to_jsonable(v)}
            for i, (name, v) in enumerate(call.args)
        ],
    }


def event_to_doc(event: DecodedEvent) -> dict:
    return {
        "event": event.event_name,
        "args": [
            {"name": name or f"arg{i}", "value": value_to_jsonable(v), "indexed": idx}
            for i, (name, v, idx) in enumerate(event.args)
        ],
    }

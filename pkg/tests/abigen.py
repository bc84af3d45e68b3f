"""Random ABI type/value generator for round-trip testing."""

from __future__ import annotations

import random
import string

from chainharvest.abi import AbiType, FunctionAbi
from chainharvest.chain import Address

_SCALAR_KINDS = ("uint", "int", "address", "bool", "bytes_fixed", "bytes", "string")


def random_type(rng: random.Random, depth: int = 0) -> AbiType:
    """A supported type, nested at most 4 deep (composites get rarer with depth)."""
    composite_odds = {0: 0.45, 1: 0.3, 2: 0.2, 3: 0.1}.get(depth, 0.0)
    if rng.random() < composite_odds:
        choice = rng.choice(("array", "array_fixed", "tuple"))
        if choice == "array":
            return AbiType("array", inner=random_type(rng, depth + 1))
        if choice == "array_fixed":
            return AbiType("array_fixed", size=rng.randint(1, 3),
                           inner=random_type(rng, depth + 1))
        comps = tuple(random_type(rng, depth + 1) for _ in range(rng.randint(1, 3)))
        return AbiType("tuple", components=comps)
    kind = rng.choice(_SCALAR_KINDS)
    if kind in ("uint", "int"):
        return AbiType(kind, bits=8 * rng.randint(1, 32))
    if kind == "bytes_fixed":
        return AbiType(kind, size=rng.randint(1, 32))
    return AbiType(kind)


def random_value(rng: random.Random, t: AbiType):
    kind = t.kind
    if kind == "uint":
        return rng.randrange(0, 1 << t.bits)
    if kind == "int":
        return rng.randrange(-(1 << (t.bits - 1)), 1 << (t.bits - 1))
    if kind == "address":
        return Address(rng.randbytes(20))
    if kind == "bool":
        return rng.random() < 0.5
    if kind == "bytes_fixed":
        return rng.randbytes(t.size)
    if kind == "bytes":
        return rng.randbytes(rng.randint(0, 80))
    if kind == "string":
        alphabet = string.ascii_letters + string.digits + " _-é世"
        return "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 40)))
    if kind == "array":
        return [random_value(rng, t.inner) for _ in range(rng.randint(0, 4))]
    if kind == "array_fixed":
        return [random_value(rng, t.inner) for _ in range(t.size)]
    if kind == "tuple":
        return tuple(random_value(rng, c) for c in t.components)
    raise AssertionError(kind)


def random_function(rng: random.Random) -> tuple[FunctionAbi, list]:
    """A random function ABI plus matching argument values."""
    name = "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(1, 12)))
    n_args = rng.randint(0, 5)
    inputs = tuple((f"arg{i}", random_type(rng)) for i in range(n_args))
    f = FunctionAbi(name, inputs)
    values = [random_value(rng, t) for _, t in inputs]
    return f, values

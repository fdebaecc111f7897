"""Code construction: kernels, convolutional precoders, generators, coset codes.

A code is described by a kernel sequence (Kronecker factors, listed
left to right), a binary convolutional polynomial (p_0, ..., p_nu) for
the rate-1 precoder, and a family tag.  The generator is
P @ (K_1 kron K_2 kron ... kron K_s); conv_poly = [1] means P = I.

Wiretap encoding is coset coding: the message occupies the positions in
message_set A of the input vector u, uniform randomness fills the rest,
and the codeword is u @ G.  The main channel is noiseless, so decoding
is exact via G^-1.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import gf2
from .gf2 import BitMatrix

__all__ = [
    "Kernel",
    "CodeSpec",
    "WiretapCode",
    "SpecError",
    "G2",
    "G8",
    "G16",
    "builtin_kernel",
    "builtin_kernel_names",
    "conv_precoder",
    "build_generator",
    "inner_generator",
    "rm_profile_order",
    "encode",
    "decode",
    "code_from_generator",
    "spec_from_dict",
    "spec_to_dict",
    "load_spec",
    "bundled_spec_names",
    "kernel_fixture_text",
]


class SpecError(ValueError):
    """Invalid code description."""


@dataclass(frozen=True)
class Kernel:
    """A square invertible polarization kernel."""

    name: str
    matrix: BitMatrix

    def __post_init__(self):
        m = self.matrix
        if m.rows != m.cols:
            raise SpecError(f"kernel {self.name!r} is not square: {m.shape}")
        if gf2.rank(m) != m.rows:
            raise SpecError(f"kernel {self.name!r} is singular")

    @property
    def size(self) -> int:
        return self.matrix.rows


_G2_ROWS = [
    "10",
    "11",
]

_G8_ROWS = [
    "10000000",
    "11000000",
    "10100000",
    "10010000",
    "11101000",
    "11010100",
    "10110010",
    "11111111",
]

_G16_ROWS = [
    "0000000000000001",
    "0000000100000001",
    "0000000000010001",
    "0000000000000101",
    "0000000000000011",
    "0000000000110011",
    "0000000000001111",
    "0001000100011110",
    "0000001100000011",
    "0000001101100101",
    "0000010100111001",
    "0101010101010101",
    "0011001100110011",
    "0000111100001111",
    "0000000011111111",
    "1111111111111111",
]

G2 = Kernel("G2", BitMatrix.from_rows(_G2_ROWS))
G8 = Kernel("G8", BitMatrix.from_rows(_G8_ROWS))
G16 = Kernel("G16", BitMatrix.from_rows(_G16_ROWS))

_BUILTINS = {k.name: k for k in (G2, G8, G16)}

FAMILIES = ("polar", "mk-polar", "pac", "mk-pac")


def builtin_kernel(name: str) -> Kernel:
    try:
        return _BUILTINS[name]
    except KeyError:
        raise SpecError(f"unknown kernel {name!r}; built-ins: {sorted(_BUILTINS)}") from None


def builtin_kernel_names() -> list[str]:
    return sorted(_BUILTINS)


def kernel_fixture_text(name: str) -> str:
    """Bundled reference listing for a built-in kernel (checksum fixture)."""
    res = resources.files("bewtc").joinpath(f"data/kernels/{name}.txt")
    return res.read_text()


@dataclass(frozen=True)
class CodeSpec:
    """Kernel sequence + convolutional polynomial + family tag."""

    kernels: tuple[Kernel, ...]
    conv_poly: tuple[int, ...]
    family: str
    n: int = field(default=0)

    def __post_init__(self):
        if not self.kernels:
            raise SpecError("at least one kernel required")
        prod = 1
        for k in self.kernels:
            prod *= k.size
        if self.n == 0:
            object.__setattr__(self, "n", prod)
        elif self.n != prod:
            raise SpecError(f"n={self.n} does not match kernel dimension product {prod}")
        _validate_poly(self.conv_poly, self.n)
        if self.family not in FAMILIES:
            raise SpecError(f"family {self.family!r} not in {FAMILIES}")
        if self.family in ("polar", "mk-polar") and self.conv_poly != (1,):
            raise SpecError(f"family {self.family!r} does not take a precoder polynomial")
        if self.family == "polar" and any(k.matrix != G2.matrix for k in self.kernels):
            raise SpecError("family 'polar' requires all kernels equal to G2")


def _validate_poly(poly: tuple[int, ...], n: int) -> None:
    if len(poly) == 0:
        raise SpecError("empty polynomial; use [1] for no precoding")
    if any(c not in (0, 1) for c in poly):
        raise SpecError(f"polynomial coefficients must be 0/1: {poly}")
    if poly[0] != 1:
        raise SpecError("invalid polynomial: leading coefficient p_0 must be 1")
    if poly[-1] != 1:
        raise SpecError("invalid polynomial: last coefficient p_nu must be 1")
    if len(poly) > n:
        raise SpecError(f"polynomial degree {len(poly) - 1} too large for blocklength {n}")


def conv_precoder(conv_poly, n: int) -> BitMatrix:
    """Upper unitriangular Toeplitz precoder: P(i, i+t) = p_t."""
    poly = tuple(int(c) for c in conv_poly)
    _validate_poly(poly, n)
    arr = np.zeros((n, n), dtype=np.uint8)
    for t, c in enumerate(poly):
        if c:
            idx = np.arange(n - t)
            arr[idx, idx + t] = 1
    return BitMatrix.from_array(arr)


def inner_generator(spec: CodeSpec) -> BitMatrix:
    """Kronecker fold of the kernel sequence, without the precoder."""
    g = spec.kernels[0].matrix
    for k in spec.kernels[1:]:
        g = gf2.kron(g, k.matrix)
    return g


def build_generator(spec: CodeSpec) -> BitMatrix:
    inner = inner_generator(spec)
    if spec.conv_poly == (1,):
        return inner
    return gf2.matmul(conv_precoder(spec.conv_poly, spec.n), inner)


def rm_profile_order(generator_without_precoder: BitMatrix) -> list[int]:
    """Row-weight rate-profile order: heaviest rows first, ties by higher index."""
    if generator_without_precoder.rows != generator_without_precoder.cols:
        raise gf2.ShapeError("rate profile needs a square generator")
    weights = generator_without_precoder.row_weights()
    return sorted(range(len(weights)), key=lambda i: (weights[i], i), reverse=True)


@dataclass(frozen=True)
class WiretapCode:
    """A coset wiretap code: spec, its generator, and the message positions."""

    spec: CodeSpec
    generator: BitMatrix
    message_set: tuple[int, ...]
    generator_inv: BitMatrix = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = self.generator.rows
        ms = tuple(sorted(int(i) for i in self.message_set))
        if len(set(ms)) != len(ms):
            raise SpecError("message_set has duplicates")
        if ms and not (0 <= ms[0] and ms[-1] < n):
            raise SpecError(f"message_set out of range for n={n}")
        object.__setattr__(self, "message_set", ms)
        object.__setattr__(self, "generator_inv", gf2.invert(self.generator))

    @property
    def n(self) -> int:
        return self.generator.rows

    @property
    def k(self) -> int:
        return len(self.message_set)

    @property
    def randomness_set(self) -> tuple[int, ...]:
        ms = set(self.message_set)
        return tuple(i for i in range(self.n) if i not in ms)

    @classmethod
    def from_spec(cls, spec: CodeSpec, message_set) -> "WiretapCode":
        return cls(spec, build_generator(spec), tuple(message_set))


def code_from_generator(generator: BitMatrix, message_set) -> WiretapCode:
    """Wrap a raw invertible generator as a single-kernel coset code."""
    spec = CodeSpec(kernels=(Kernel("custom", generator),), conv_poly=(1,), family="mk-polar")
    return WiretapCode(spec, generator, tuple(message_set))


def encode(code: WiretapCode, message, randomness) -> np.ndarray:
    """u[A] = message, u[A^c] = randomness; codeword = u @ G."""
    message = np.asarray(message, dtype=np.uint8)
    randomness = np.asarray(randomness, dtype=np.uint8)
    if message.shape != (code.k,):
        raise ValueError(f"message length {message.shape} != k={code.k}")
    if randomness.shape != (code.n - code.k,):
        raise ValueError(f"randomness length {randomness.shape} != n-k={code.n - code.k}")
    u = np.zeros(code.n, dtype=np.uint8)
    u[list(code.message_set)] = message & 1
    u[list(code.randomness_set)] = randomness & 1
    x = gf2.matmul(BitMatrix.from_array(u.reshape(1, -1)), code.generator)
    return x.to_array()[0]


def decode(code: WiretapCode, received) -> np.ndarray:
    """Invert the noiseless observation and read off the message positions."""
    received = np.asarray(received, dtype=np.uint8) & 1
    if received.shape != (code.n,):
        raise ValueError(f"received length {received.shape} != n={code.n}")
    u = gf2.matmul(BitMatrix.from_array(received.reshape(1, -1)), code.generator_inv)
    return u.to_array()[0][list(code.message_set)]


# -- serialization -----------------------------------------------------------


def _kernel_from_json(entry) -> Kernel:
    if isinstance(entry, str):
        return builtin_kernel(entry)
    if isinstance(entry, dict) and "rows" in entry:
        name = entry.get("name", "custom")
        return Kernel(str(name), BitMatrix.from_rows(entry["rows"]))
    raise SpecError(f"bad kernel entry {entry!r}; use a name or {{name, rows}}")


def _kernel_to_json(k: Kernel):
    if k.name in _BUILTINS and k.matrix == _BUILTINS[k.name].matrix:
        return k.name
    return {"name": k.name, "rows": k.matrix.to_text().split("\n")}


def spec_from_dict(d: dict) -> CodeSpec:
    try:
        kernels = tuple(_kernel_from_json(e) for e in d["kernels"])
        conv_poly = tuple(int(c) for c in d.get("conv_poly", [1]))
        family = str(d["family"])
    except KeyError as exc:
        raise SpecError(f"spec missing field {exc}") from None
    return CodeSpec(kernels=kernels, conv_poly=conv_poly, family=family, n=int(d.get("n", 0)))


def spec_to_dict(spec: CodeSpec) -> dict:
    return {
        "family": spec.family,
        "kernels": [_kernel_to_json(k) for k in spec.kernels],
        "conv_poly": list(spec.conv_poly),
        "n": spec.n,
    }


def bundled_spec_names() -> list[str]:
    root = resources.files("bewtc").joinpath("data/specs")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_spec(name_or_path: str) -> CodeSpec:
    """Load a spec from a JSON file path or a bundled fixture name.

    An existing file wins; otherwise bundled names resolve with or
    without a .json suffix, e.g. both "g2" and "g2.json".
    """
    text = None
    if os.path.isfile(name_or_path):
        with open(name_or_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        stem = name_or_path[: -len(".json")] if name_or_path.endswith(".json") else name_or_path
        res = resources.files("bewtc").joinpath(f"data/specs/{stem}.json")
        if "/" not in stem and "\\" not in stem and res.is_file():
            text = res.read_text()
    if text is None:
        raise SpecError(
            f"{name_or_path!r} is neither a file nor a bundled spec "
            f"(bundled: {', '.join(bundled_spec_names())})"
        )
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"bad JSON in {name_or_path!r}: {exc}") from None
    return spec_from_dict(d)

"""Kernels, precoder, generator assembly, profiles, JSON round trips."""

import itertools
import json

import numpy as np
import pytest

from bewtc import codes, gf2
from bewtc.codes import CodeSpec, SpecError, WiretapCode
from bewtc.gf2 import BitMatrix

G8_TEXT = "\n".join(
    [
        "10000000",
        "11000000",
        "10100000",
        "10010000",
        "11101000",
        "11010100",
        "10110010",
        "11111111",
    ]
)

G16_TEXT = "\n".join(
    [
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
)


def test_kernel_constants_verbatim():
    assert codes.G2.matrix.to_text() == "10\n11"
    assert codes.G8.matrix.to_text() == G8_TEXT
    assert codes.G16.matrix.to_text() == G16_TEXT


def test_kernel_fixture_files_match_constants():
    for name in codes.builtin_kernel_names():
        assert codes.builtin_kernel(name).matrix.to_text() == codes.kernel_fixture_text(name).strip()


def test_kernels_invertible():
    for name in codes.builtin_kernel_names():
        k = codes.builtin_kernel(name)
        assert gf2.rank(k.matrix) == k.size


def test_kernel_rejects_singular():
    with pytest.raises(SpecError):
        codes.Kernel("bad", BitMatrix.from_array(np.zeros((2, 2), dtype=np.uint8)))


def test_conv_precoder_rows():
    poly = (1, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0, 1, 1)
    n = 128
    precoder = codes.conv_precoder(poly, n).to_array()
    taps = [t for t, c in enumerate(poly) if c]
    assert taps == [0, 3, 7, 9, 11, 12]
    assert np.flatnonzero(precoder[0]).tolist() == taps
    # truncation near the right boundary keeps only taps that fit
    assert np.flatnonzero(precoder[120]).tolist() == [120, 123, 127]
    assert np.flatnonzero(precoder[n - 1]).tolist() == [n - 1]
    # unitriangular
    assert np.array_equal(np.diag(precoder), np.ones(n, dtype=np.uint8))
    assert not np.tril(precoder, -1).any()


def test_build_generator_composition():
    spec = codes.load_spec("n32_mkpac")
    inner = codes.inner_generator(spec)
    precoder = codes.conv_precoder(spec.conv_poly, spec.n)
    assert codes.build_generator(spec) == gf2.matmul(precoder, inner)
    assert inner == gf2.kron(spec.kernels[0].matrix, spec.kernels[1].matrix)


def test_generator_shapes_and_rank():
    for name in codes.bundled_spec_names():
        spec = codes.load_spec(name)
        g = codes.build_generator(spec)
        assert g.rows == g.cols == spec.n
        assert gf2.rank(g) == spec.n


def test_rm_profile_order():
    inner = gf2.kron(codes.G2.matrix, codes.G2.matrix)
    # row weights 1,2,2,4: descending weight, ties by descending index
    assert codes.rm_profile_order(inner) == [3, 2, 1, 0]


def test_polar_family_validation():
    with pytest.raises(SpecError):
        CodeSpec(kernels=(codes.G8,), conv_poly=(1,), family="polar")
    with pytest.raises(SpecError):
        CodeSpec(kernels=(codes.G2,), conv_poly=(1, 1), family="polar")
    with pytest.raises(SpecError, match="invalid polynomial"):
        CodeSpec(kernels=(codes.G2, codes.G2), conv_poly=(0, 1), family="pac")
    with pytest.raises(SpecError):
        CodeSpec(kernels=(codes.G2,), conv_poly=(1,), family="polar", n=4)
    with pytest.raises(SpecError):
        CodeSpec(kernels=(codes.G2,), conv_poly=(1,), family="nonsense")


def test_encode_decode_exhaustive_n8():
    spec = codes.load_spec("n16_mkpac")
    code = WiretapCode.from_spec(codes.load_spec("g2"), [1])
    # n=2, k=1: enumerate everything
    seen = set()
    for m in range(2):
        for r in range(2):
            x = codes.encode(code, [m], [r])
            assert codes.decode(code, x).tolist() == [m]
            seen.add(tuple(x.tolist()))
    assert len(seen) == 4

    spec8 = CodeSpec(kernels=(codes.G8,), conv_poly=(1, 1, 1), family="pac")
    code8 = WiretapCode.from_spec(spec8, [0, 3, 5])
    for mbits in itertools.product((0, 1), repeat=3):
        for rbits in itertools.product((0, 1), repeat=5):
            x = codes.encode(code8, mbits, rbits)
            assert codes.decode(code8, x).tolist() == list(mbits)


def test_cosets_partition_space():
    spec = CodeSpec(kernels=(codes.G2, codes.G2), conv_poly=(1, 1), family="pac")
    code = WiretapCode.from_spec(spec, [2, 3])
    words = set()
    for mbits in itertools.product((0, 1), repeat=2):
        coset = set()
        for rbits in itertools.product((0, 1), repeat=2):
            coset.add(tuple(codes.encode(code, mbits, rbits).tolist()))
        assert len(coset) == 4
        words |= coset
    assert len(words) == 16


def test_spec_json_roundtrip_bundled():
    for name in codes.bundled_spec_names():
        spec = codes.load_spec(name)
        again = codes.spec_from_dict(codes.spec_to_dict(spec))
        assert again == spec


def test_spec_json_inline_kernel_roundtrip():
    rows = ["110", "010", "001"]
    d = {"family": "mk-polar", "kernels": [{"name": "custom", "rows": rows}], "conv_poly": [1]}
    spec = codes.spec_from_dict(d)
    assert spec.n == 3
    assert codes.spec_to_dict(spec)["kernels"][0]["rows"] == rows


def test_load_spec_from_path(tmp_path):
    d = codes.spec_to_dict(codes.load_spec("n16_mkpac"))
    path = tmp_path / "myspec.json"
    path.write_text(json.dumps(d))
    assert codes.load_spec(str(path)) == codes.load_spec("n16_mkpac")
    assert codes.load_spec("n16_mkpac.json") == codes.load_spec("n16_mkpac")
    with pytest.raises(SpecError):
        codes.load_spec("no_such_spec")


def test_paper_configuration_fixtures():
    expected = {
        "n16_mkpac": (["G16"], [1, 0, 1, 1, 0, 1, 1]),
        "n32_mkpac": (["G2", "G16"], [1, 0, 1, 1, 0, 1, 1]),
        "n64_mkpac": (["G2", "G2", "G16"], [1, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1]),
        "n128_mkpac": (["G8", "G16"], [1, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0, 1, 1]),
        "n256_mkpac": (
            ["G16", "G16"],
            [1, 1, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0, 0, 1, 0, 1, 1],
        ),
    }
    for name, (kernels, poly) in expected.items():
        d = codes.spec_to_dict(codes.load_spec(name))
        assert d["kernels"] == kernels, name
        assert d["conv_poly"] == poly, name
        assert d["family"] == "mk-pac"


def test_message_set_validation():
    spec = codes.load_spec("g2")
    with pytest.raises(ValueError):
        WiretapCode.from_spec(spec, [0, 0])
    with pytest.raises(ValueError):
        WiretapCode.from_spec(spec, [5])
    code = WiretapCode.from_spec(spec, [])
    assert code.k == 0 and code.randomness_set == (0, 1)


def test_code_from_generator_requires_invertible():
    with pytest.raises(SpecError):
        codes.code_from_generator(BitMatrix.zeros(3, 3), [0])

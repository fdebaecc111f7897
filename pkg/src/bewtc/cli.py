"""Command-line front end.

Subcommands
-----------
construct      dump a generator matrix with rank / weight diagnostics
bitchannels    bit-channel erasure probabilities as CSV (MC or exact)
rates          bound comparison rows for one or more code specs
leakage-exact  exact coset-code leakage by erasure-pattern enumeration
bounds         raw g_n / h_n and threshold evaluation
selftest       named oracle checks; exit 1 on any failure

Every file output embeds its fully resolved configuration in '#'
metadata lines so runs are reproducible byte-for-byte.  Exit codes:
0 success, 1 failed check, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import sys
import time
from typing import Optional

import numpy as np

from . import bitchannel, codes, gf2, secrecy
from ._config import resolve_enum_cap
from .bitchannel import Conditioning, ErasureTrialPlan
from .codes import CodeSpec, SpecError


def _resolved_config(command: str, args: argparse.Namespace, **extra) -> str:
    # threads is a performance knob with no effect on results, so it stays
    # out of the echoed config and outputs are byte-identical across it.
    skip = {"func", "threads", "out"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}
    cfg["command"] = command
    cfg.update(extra)
    return json.dumps(cfg, sort_keys=True, default=str)


@contextlib.contextmanager
def _open_out(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _parse_message_set(text: str, n: int) -> tuple[int, ...]:
    # CLI indices are 1-based to match CSV output.
    try:
        idx = sorted({int(tok) for tok in text.split(",") if tok.strip()})
    except ValueError as exc:
        raise SpecError(f"bad message set {text!r}: {exc}") from None
    if not idx or idx[0] < 1 or idx[-1] > n:
        raise SpecError(f"message set indices must lie in 1..{n}")
    return tuple(i - 1 for i in idx)


def _conditioning_from_args(args, n: int) -> Conditioning:
    if args.conditioning == "all-past":
        if getattr(args, "message_set", None):
            raise SpecError("--message-set requires --conditioning message-past")
        return Conditioning.all_past()
    if not getattr(args, "message_set", None):
        raise SpecError("--conditioning message-past needs --message-set")
    return Conditioning.message_past(_parse_message_set(args.message_set, n))


# ---------------------------------------------------------------- construct


def cmd_construct(args) -> int:
    spec = codes.load_spec(args.spec)
    generator = codes.build_generator(spec)
    rk = gf2.rank(generator)
    weights = generator.row_weights()
    hist = np.bincount(weights, minlength=1)
    hist_text = " ".join(f"{w}:{int(c)}" for w, c in enumerate(hist) if c)
    with _open_out(args.out) as fh:
        fh.write(f"# config: {_resolved_config('construct', args)}\n")
        fh.write(f"# spec: {json.dumps(codes.spec_to_dict(spec), sort_keys=True)}\n")
        fh.write(f"# rank: {rk}\n")
        fh.write(f"# invertible: {str(rk == spec.n).lower()}\n")
        fh.write(f"# row_weight_histogram: {hist_text}\n")
        fh.write(generator.to_text())
        fh.write("\n")
    return 0


# -------------------------------------------------------------- bitchannels


def cmd_bitchannels(args) -> int:
    spec = codes.load_spec(args.spec)
    cond = _conditioning_from_args(args, spec.n)
    generator = codes.build_generator(spec)
    meta = {
        "config": _resolved_config("bitchannels", args),
        "spec": json.dumps(codes.spec_to_dict(spec), sort_keys=True),
        "p": repr(args.p),
        "conditioning": cond.describe(),
        "rng": bitchannel.RNG_NAME,
    }
    if args.exact:
        estimates = bitchannel.exact_erasure_probs(
            generator, args.p, cond, cap=args.enum_cap
        )
        meta["estimator"] = "exact"
    else:
        plan = ErasureTrialPlan(
            p=args.p, trials=args.trials, seed=args.seed, conditioning=cond
        )
        estimates = bitchannel.mc_erasure_probs(generator, plan)
        meta.update(estimator="mc", trials=str(args.trials), seed=str(args.seed))
    with _open_out(args.out) as fh:
        bitchannel.write_bitchannel_csv(fh, estimates, meta, sort_by_tvd=args.sorted)
    return 0


# -------------------------------------------------------------------- rates


def cmd_rates(args) -> int:
    results = []
    for name in args.spec:
        spec = codes.load_spec(name)
        plan = None
        if not args.exact:
            plan = ErasureTrialPlan(p=args.p, trials=args.trials, seed=args.seed)
        results.append(
            secrecy.code_rate_curve(
                spec,
                args.p,
                args.delta,
                plan=plan,
                profile=args.profile,
                exact=args.exact,
                enum_cap=args.enum_cap,
            )
        )
    meta = {"config": _resolved_config("rates", args)}
    with _open_out(args.out) as fh:
        secrecy.write_rates_csv(fh, results, meta)
    return 0


# ------------------------------------------------------------ leakage-exact


def cmd_leakage_exact(args) -> int:
    spec = codes.load_spec(args.spec)
    if args.message_set:
        message_set = _parse_message_set(args.message_set, spec.n)
        bound = None
    else:
        plan = ErasureTrialPlan(p=args.p, trials=args.trials, seed=args.seed)
        estimates = bitchannel.mc_erasure_probs(spec, plan)
        selection = secrecy.select_message_set(estimates, args.delta)
        message_set = selection.message_set
        bound = selection.leakage_bound
    code = codes.WiretapCode.from_spec(spec, message_set)
    leak = secrecy.exact_leakage(code, args.p, cap=args.enum_cap)
    meta_set = ",".join(str(i + 1) for i in message_set)
    with _open_out(args.out) as fh:
        fh.write(f"# config: {_resolved_config('leakage-exact', args)}\n")
        fh.write(f"# spec: {json.dumps(codes.spec_to_dict(spec), sort_keys=True)}\n")
        fh.write(f"# message_set: {meta_set}\n")
        fh.write("n,p,k,exact_leakage,leakage_bound\n")
        bound_text = "" if bound is None else repr(bound)
        fh.write(f"{spec.n},{args.p!r},{code.k},{leak!r},{bound_text}\n")
    return 0


# ------------------------------------------------------------------- bounds


def cmd_bounds(args) -> int:
    with _open_out(args.out) as fh:
        fh.write(f"# config: {_resolved_config('bounds', args)}\n")
        if args.gamma is not None:
            g = secrecy.g_n(args.gamma, args.n, args.p)
            h = secrecy.h_n(args.gamma, args.n, args.p)
            fh.write("n,p,gamma,g_n,h_n\n")
            fh.write(f"{args.n},{args.p!r},{args.gamma!r},{g!r},{h!r}\n")
            return 0
        if args.delta is None:
            raise SpecError("bounds needs either --gamma or --delta")
        n, p, delta = args.n, args.p, args.delta
        kc = secrecy.converse_max_k(n, p, delta)
        ka = secrecy.k_achiev(n, p, delta)
        k = args.k if args.k is not None else max(ka, 1)
        ach, gamma_star, bracket = secrecy.achievability_detail(n, k, p)
        fh.write(f"# gamma_star: {gamma_star!r} bracket: {bracket}\n")
        fh.write(
            "n,p,delta,k,g_at_k,achiev_delta_at_k,"
            "k_converse,k_achiev_rc,rate_second_order\n"
        )
        g_at_k = secrecy.g_n(float(2.0 ** (n - k)), n, p)
        so = secrecy.second_order_rate(n, p, delta)
        fh.write(
            f"{n},{p!r},{delta!r},{k},{g_at_k!r},{ach!r},{kc},{ka},{so!r}\n"
        )
    return 0


# ----------------------------------------------------------------- selftest


def _spc_coset_code(n: int) -> codes.WiretapCode:
    """k=1 coset code whose randomness rows span the single-parity-check code."""
    rows = np.zeros((n, n), dtype=np.uint8)
    rows[0, 0] = 1
    for i in range(1, n):
        rows[i, i - 1] = 1
        rows[i, i] = 1
    return codes.code_from_generator(gf2.BitMatrix.from_array(rows), [0])


def _repetition_coset_code(n: int) -> codes.WiretapCode:
    """k=n-1 coset code whose randomness row is the all-ones repetition code."""
    rows = np.zeros((n, n), dtype=np.uint8)
    for i in range(n - 1):
        rows[i, i] = 1
    rows[n - 1, :] = 1
    return codes.code_from_generator(
        gf2.BitMatrix.from_array(rows), list(range(n - 1))
    )


def _check_kernel_checksums() -> str:
    for name in codes.builtin_kernel_names():
        embedded = codes.builtin_kernel(name).matrix.to_text()
        fixture = codes.kernel_fixture_text(name).strip()
        if embedded != fixture:
            return f"kernel {name} does not match its bundled fixture"
    return ""


def _check_polar_recursion(smax: int) -> str:
    for s in range(1, smax + 1):
        spec = CodeSpec(kernels=(codes.G2,) * s, conv_poly=(1,), family="polar")
        generator = codes.build_generator(spec)
        for p in (0.1, 0.4, 0.7):
            exact = bitchannel.exact_erasure_probs(generator, p, cap=2**s)
            ref = bitchannel.polar_bec_recursion(p, s)
            err = max(abs(e.erasure_prob - r) for e, r in zip(exact, ref))
            if err > 1e-12:
                return f"s={s} p={p}: recursion mismatch {err:.3e}"
    return ""


def _check_mds_closed_form(nmax: int) -> str:
    for n in range(4, nmax + 1):
        for p in (0.25, 0.4):
            for code, k in ((_spc_coset_code(n), 1), (_repetition_coset_code(n), n - 1)):
                got = secrecy.exact_leakage(code, p, cap=nmax)
                want = secrecy.mds_avg_tvd(n, k, p)
                if abs(got - want) > 1e-12:
                    return f"n={n} k={k} p={p}: |{got!r} - {want!r}| > 1e-12"
    return ""


def _check_mc_determinism() -> str:
    spec = CodeSpec(kernels=(codes.G2,) * 3, conv_poly=(1,), family="polar")
    plan = ErasureTrialPlan(p=0.4, trials=5000, seed=7)
    a = bitchannel.mc_erasure_probs(spec, plan)
    b = bitchannel.mc_erasure_probs(spec, plan)
    if a != b:
        return "same seed produced different estimates"
    return ""


def _check_bound_sanity() -> str:
    if abs(secrecy.g_n(1.0, 1, 0.4) - 0.3) > 1e-15:
        return "g_1(1) hand value failed"
    if abs(secrecy.h_n(2.0, 1, 0.4) - 0.8) > 1e-15:
        return "h_1(2) hand value failed"
    if abs(secrecy.q_inv(0.5)) > 1e-9:
        return "q_inv(0.5) != 0"
    for n in (8, 16, 32):
        for delta in (0.1, 0.01):
            ka = secrecy.k_achiev(n, 0.4, delta)
            kc = secrecy.converse_max_k(n, 0.4, delta)
            if not 0 <= ka <= kc <= n:
                return f"ordering violated at n={n} delta={delta}: {ka} vs {kc}"
    return ""


def _check_mc_vs_exact(trials: int, seed: int) -> str:
    cases = [
        CodeSpec(kernels=(codes.G2,) * 4, conv_poly=(1,), family="polar"),
        codes.load_spec("n16_mkpac"),
    ]
    for spec in cases:
        generator = codes.build_generator(spec)
        exact = bitchannel.exact_erasure_probs(generator, 0.4, cap=16)
        plan = ErasureTrialPlan(p=0.4, trials=trials, seed=seed)
        mc = bitchannel.mc_erasure_probs(spec, plan)
        bad = sum(
            abs(m.erasure_prob - e.erasure_prob) > 4 * max(m.std_err, 1e-12)
            for m, e in zip(mc, exact)
        )
        if bad:
            return f"{spec.family} n=16: {bad}/16 indices beyond 4 std errors"
    return ""


def _random_invertible(n: int, rng: np.random.Generator) -> gf2.BitMatrix:
    while True:
        m = gf2.BitMatrix.from_array(rng.integers(0, 2, size=(n, n)).astype(np.uint8))
        if gf2.rank(m) == n:
            return m


def _check_leakage_bound_validity() -> str:
    rng = np.random.default_rng(2024)
    for n in (6, 8, 10):
        if n & (n - 1) == 0:
            spec = CodeSpec(kernels=(codes.G2,) * int(np.log2(n)), conv_poly=(1,), family="polar")
            generator = codes.build_generator(spec)
        else:
            generator = _random_invertible(n, rng)
        exact = bitchannel.exact_erasure_probs(generator, 0.4, cap=10)
        for k in (1, n // 2):
            sel = sorted(
                sorted(exact, key=lambda e: (-e.erasure_prob, e.index))[:k],
                key=lambda e: e.index,
            )
            message_set = [e.index for e in sel]
            code = codes.code_from_generator(generator, message_set)
            leak = secrecy.exact_leakage(code, 0.4, cap=10)
            bound = secrecy.leakage_bound_sum(exact, message_set)
            if leak > bound + 1e-12:
                return f"n={n} k={k}: exact leakage {leak!r} exceeds bound {bound!r}"
    return ""


def _check_second_order() -> str:
    rates = [secrecy.second_order_rate(n, 0.4, 0.001) for n in (16, 32, 64, 128, 256, 512, 1024)]
    if any(b <= a for a, b in zip(rates, rates[1:])):
        return "second-order rate not increasing in n"
    if abs(rates[3] - 0.2661890) > 1e-4:
        return f"rate at n=128 off: {rates[3]!r}"
    if not 0.37 < secrecy.second_order_rate(10**6, 0.4, 0.001) < 0.4:
        return "rate does not approach the erasure probability"
    return ""


def _check_pinned_leakage() -> str:
    got = secrecy.exact_leakage(_spc_coset_code(8), 0.4, cap=8)
    if abs(got - 0.00839808) > 1e-8:
        return f"pinned (n=8, k=1, p=0.4) leakage off: {got!r}"
    return ""


def cmd_selftest(args) -> int:
    checks = [
        ("kernel-checksum", _check_kernel_checksums),
        ("polar-recursion-exact", lambda: _check_polar_recursion(3)),
        ("mds-closed-form", lambda: _check_mds_closed_form(8)),
        ("mc-determinism", _check_mc_determinism),
        ("bound-sanity", _check_bound_sanity),
        ("pinned-leakage", _check_pinned_leakage),
    ]
    if not args.quick:
        checks += [
            ("polar-recursion-16", lambda: _check_polar_recursion(4)),
            ("mc-vs-exact", lambda: _check_mc_vs_exact(200000, 1)),
            ("leakage-bound-validity", _check_leakage_bound_validity),
            ("second-order-curve", _check_second_order),
        ]
    failures = 0
    for name, fn in checks:
        t0 = time.perf_counter()
        detail = fn()
        dt = time.perf_counter() - t0
        status = "PASS" if not detail else f"FAIL ({detail})"
        print(f"{name}: {status} [{dt:.2f}s]")
        failures += bool(detail)
    print(f"selftest: {len(checks) - failures}/{len(checks)} checks passed")
    return 1 if failures else 0


# --------------------------------------------------------------------- main


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bewtc",
        description="Wiretap coset codes on the binary-erasure wiretap channel",
    )
    parser.add_argument("--threads", type=int, help="numba thread count (default: all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="dump a generator matrix")
    c.add_argument("--spec", required=True, help="bundled spec name or JSON path")
    c.add_argument("--out")
    c.set_defaults(func=cmd_construct)

    b = sub.add_parser("bitchannels", help="bit-channel erasure probabilities")
    b.add_argument("--spec", required=True)
    b.add_argument("--p", type=float, required=True)
    b.add_argument("--trials", type=int, default=200000)
    b.add_argument("--seed", type=int, default=1)
    b.add_argument("--conditioning", choices=["all-past", "message-past"], default="all-past")
    b.add_argument("--message-set", help="1-based indices, comma separated")
    b.add_argument("--exact", action="store_true")
    b.add_argument("--enum-cap", type=int, help="max n for exact enumeration")
    b.add_argument("--sorted", action="store_true", help="sort rows by ascending TVD")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bitchannels)

    r = sub.add_parser("rates", help="bound comparison rows")
    r.add_argument("--spec", action="append", required=True)
    r.add_argument("--p", type=float, required=True)
    r.add_argument("--delta", type=float, required=True)
    r.add_argument("--trials", type=int, default=200000)
    r.add_argument("--seed", type=int, default=1)
    r.add_argument("--profile", choices=["tvd", "rm"], default="tvd")
    r.add_argument("--exact", action="store_true")
    r.add_argument("--enum-cap", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_rates)

    le = sub.add_parser("leakage-exact", help="exact coset-code leakage")
    le.add_argument("--spec", required=True)
    le.add_argument("--p", type=float, required=True)
    le.add_argument("--delta", type=float, default=0.001)
    le.add_argument("--trials", type=int, default=200000)
    le.add_argument("--seed", type=int, default=1)
    le.add_argument("--message-set", help="1-based indices; skips greedy selection")
    le.add_argument("--enum-cap", type=int)
    le.add_argument("--out")
    le.set_defaults(func=cmd_leakage_exact)

    bo = sub.add_parser("bounds", help="raw bound evaluation")
    bo.add_argument("--n", type=int, required=True)
    bo.add_argument("--p", type=float, required=True)
    bo.add_argument("--delta", type=float)
    bo.add_argument("--k", type=int)
    bo.add_argument("--gamma", type=float)
    bo.add_argument("--out")
    bo.set_defaults(func=cmd_bounds)

    st = sub.add_parser("selftest", help="named oracle checks")
    st.add_argument("--quick", action="store_true", help="small-n subset, under 10 s")
    st.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            parser.error("--threads must be positive")
        import numba

        # Results are bit-identical for any thread count; clamp to what
        # the machine actually has.
        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    try:
        return args.func(args)
    except (SpecError, gf2.ShapeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

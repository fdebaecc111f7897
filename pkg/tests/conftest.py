import json
from importlib import resources

import pytest

from bewtc import bitchannel, codes

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance summary")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture()
def acceptance():
    """Record one PASS/FAIL line per criterion and fail the test if not ok."""

    def record(num: int, ok: bool, detail: str) -> None:
        line = f"ACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def _published_runs() -> dict:
    text = resources.files("bewtc.data").joinpath("published_runs.json").read_text()
    return json.loads(text)


@pytest.fixture(scope="session")
def published_runs() -> dict:
    return _published_runs()


@pytest.fixture(scope="session")
def headline_estimates(published_runs):
    """Bit-channel estimates for every (spec, seed) the rate tests need.

    Computed once per session; the greedy-rate, variant-delta, and
    dominance checks all reuse the same Monte-Carlo runs.
    """
    cfg = published_runs
    seeds = [cfg["seed"]] + list(cfg["extra_seeds"])
    wanted = [cfg["specs"][str(n)] for n in (16, 32, 64, 128)]
    wanted.append(cfg["polar_specs"]["128"])
    out = {}
    for seed in seeds:
        for name in wanted:
            plan = bitchannel.ErasureTrialPlan(
                p=cfg["p"], trials=cfg["trials"], seed=seed
            )
            out[(name, seed)] = bitchannel.mc_erasure_probs(codes.load_spec(name), plan)
    return out

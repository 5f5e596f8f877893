import sys
from pathlib import Path

import pytest

from ekelab.group_math import GroupParams, gen_params
from ekelab.password_cipher import Password
from ekelab.protocol import SessionConfig, Variant, run_session

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; printed in the terminal summary."""

    def record(name: str, ok: bool, detail: str = "") -> bool:
        _ACCEPTANCE.append((name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else ""))


@pytest.fixture(scope="session")
def q23():
    return GroupParams(23, 5)


@pytest.fixture(scope="session")
def g20():
    return gen_params(20, 2024)


def make_session(params, variant, password, seed=1, password_b=None, **kw):
    """Config pair for one honest session; kwargs prefixed a_/b_ go to one side."""
    a_kw = {k[2:]: v for k, v in kw.items() if k.startswith("a_")}
    b_kw = {k[2:]: v for k, v in kw.items() if k.startswith("b_")}
    shared = {k: v for k, v in kw.items() if not k.startswith(("a_", "b_"))}
    cfg_a = SessionConfig("A", params, password, 2 * seed, variant, **shared, **a_kw)
    cfg_b = SessionConfig("B", params, password_b or password, 2 * seed + 1, variant, **shared, **b_kw)
    return cfg_a, cfg_b


def run(params, variant, password, seed=1, **kw):
    cfg_a, cfg_b = make_session(params, variant, password, seed, **kw)
    return run_session(cfg_a, cfg_b)


ALL_VARIANTS = list(Variant)
PW8 = Password.from_index(0xA5, 8)

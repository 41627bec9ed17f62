import dataclasses
import functools
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent / "fixtures"))

import oracles  # noqa: E402

from hamloc.problemfile import load  # noqa: E402
from hamloc.solve import default_initial_guess, solve  # noqa: E402


@functools.lru_cache(maxsize=None)
def problem_file(name):
    return load(name)


def initial_guess(pf, n):
    ig = pf.initial_guess
    coeffs = {k: ig[k] for k in ("u", "v") if k in ig}
    return default_initial_guess(pf.spec, ig["kind"], coeffs, n=n, scale=ig.get("scale", 1.0))


@functools.lru_cache(maxsize=None)
def solved(name, n=1025, method="newton"):
    pf = problem_file(name)
    params = dataclasses.replace(pf.params, n=n, method=method)
    return solve(pf.problem, initial_guess(pf, n), params, pf.spec)


@pytest.fixture(scope="session")
def oracle():
    return oracles.load()


@pytest.fixture(scope="session")
def numex():
    return problem_file("numex")


@pytest.fixture(scope="session")
def ex2():
    return problem_file("ex2")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)

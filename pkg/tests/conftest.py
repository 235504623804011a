import numpy as np
import pytest

from motorpm.data import encode, stratified_split_indices
from motorpm.harness import run_benchmark
from motorpm.synth import GeneratorConfig, generate


@pytest.fixture(scope="session")
def motors():
    """Noiseless synthetic dataset, n=1050, seed 42."""
    return generate(GeneratorConfig(n=1050, seed=42))


@pytest.fixture(scope="session")
def motors_split(motors):
    X, y = encode(motors), motors.labels
    tr, te = stratified_split_indices(y, 0.2, 42)
    return X[tr], y[tr], X[te], y[te]


@pytest.fixture(scope="session")
def benchmark_run(motors):
    """(report, fitted models, (train_idx, test_idx)) of one full benchmark."""
    return run_benchmark(motors, split_seed=42, test_fraction=0.2, return_models=True)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


# ---------------------------------------------------------------- acceptance summary
#
# Tests marked ``@pytest.mark.acceptance(id, text)`` are collected into a
# one-line-per-criterion verdict printed at the end of every run.

_verdicts: dict[str, list] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = getattr(report, "_acceptance", None)
    if marker is None:
        return
    cid, text = marker
    entry = _verdicts.setdefault(cid, [text, True])
    entry[1] = entry[1] and report.passed


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("acceptance")
    if m is not None:
        outcome.get_result()._acceptance = (str(m.args[0]), m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_verdicts, key=lambda c: (len(c), c)):
        text, ok = _verdicts[cid]
        terminalreporter.write_line(f"criterion {cid:<3} {'PASS' if ok else 'FAIL'}  {text}")

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


class AcceptanceLog:
    """Collects one pass/fail row per acceptance criterion for the summary."""

    def __init__(self):
        self.rows: list[tuple[str, bool, str]] = []

    def record(self, name: str, ok: bool, detail: str = "") -> None:
        self.rows.append((name, bool(ok), detail))
        assert ok, f"{name}: {detail}"


_acceptance_log = AcceptanceLog()


@pytest.fixture(scope="session")
def acceptance_log() -> AcceptanceLog:
    return _acceptance_log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_log.rows:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _acceptance_log.rows:
        status = "PASS" if ok else "FAIL"
        line = f"{status}  {name}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session", autouse=True)
def warm_compiled_kernels():
    # the tree kernels JIT-compile on first use; pay that once so the
    # timed acceptance tests measure steady-state behavior
    from dlrec import forest

    rng = np.random.default_rng(0)
    X = rng.random((16, 3))
    y = rng.random(16)
    model = forest.fit_forest(X, y, 2, 3, seed=0)
    forest.predict_batch(model, X)
    yield


@pytest.fixture(scope="session")
def default_space():
    from dlrec.space import default_space as load

    return load()


@pytest.fixture(scope="session")
def default_schema(default_space):
    from dlrec.encoding import build_schema

    return build_schema(default_space)


@pytest.fixture(scope="session")
def bundled_dataset_path():
    from importlib import resources

    ref = resources.files("dlrec.data").joinpath("synthetic_dataset.csv")
    with resources.as_file(ref) as path:
        yield str(path)

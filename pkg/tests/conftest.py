import numpy as np
import pytest

from modalsound import Material


@pytest.fixture(scope="session")
def ceramic():
    return Material(name="ceramic", E=72e9, nu=0.19, rho=2700.0,
                    alpha=6.0, beta=1e-7)


@pytest.fixture(scope="session")
def soft():
    # low stiffness keeps eigenvalues small and conditioning mild
    return Material(name="soft", E=1e6, nu=0.3, rho=1000.0,
                    alpha=1.0, beta=1e-6)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    label = getattr(item.function, "acceptance_label", None)
    if label and rep.when == "call":
        tr = item.config.pluginmanager.get_plugin("terminalreporter")
        if tr is not None:
            verdict = "PASS" if rep.passed else "FAIL"
            tr.write_line(f"[acceptance] {label}: {verdict}")

import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def small_instance(seed=0, n=30, K=3, M_dummy=(4, 4), localized=False, J=1):
    """Random pattern, covariates and design on the unit window."""
    from haarsel.design import CovariateTable, build_design
    from haarsel.quadrature import build_quadrature
    from haarsel.simulate import PointPattern, Window
    from haarsel.wavelet import HaarBasis

    r = np.random.default_rng(seed)
    win = Window()
    pat = PointPattern(r.random((n, 2)), win)
    scheme = build_quadrature(pat, win, M_dummy)
    X = r.normal(size=(scheme.M, K))
    # tie the pattern to the first covariate so the fit has signal
    X[:n, 0] += 1.0
    table = CovariateTable(X, tuple(f"X{i + 1}" for i in range(K)))
    basis = HaarBasis(J) if localized else None
    return scheme, build_design(table, basis, scheme)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import settings

from pcf_pairs import dispersion

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def model():
    return dispersion.default_model()


def constant_beta2_model(beta2, center_nm=800.0, half_width=3e14, n=41):
    """beta2 held constant over a symmetric frequency window, referenced at its center."""
    w0 = float(dispersion.wavelength_to_omega(center_nm))
    w = np.linspace(w0 - half_width, w0 + half_width, n)
    return dispersion.from_beta2_samples(w, np.full(n, beta2), omega_ref=w0)


def quartic_model(beta2, beta4, center_nm=800.0, half_width=6e14, n=121):
    """k = beta2 d^2/2 + beta4 d^4/24 about the center, so beta2(w) = beta2 + beta4 d^2/2."""
    w0 = float(dispersion.wavelength_to_omega(center_nm))
    w = np.linspace(w0 - half_width, w0 + half_width, n)
    return dispersion.from_beta2_samples(w, beta2 + 0.5 * beta4 * (w - w0) ** 2, omega_ref=w0)


# --- acceptance reporting: one line per criterion in the terminal summary ---------

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = "" if rep.passed else rep.longrepr.reprcrash.message.splitlines()[0] if hasattr(
            rep.longrepr, "reprcrash") else str(rep.longrepr).splitlines()[-1]
        _ACCEPTANCE[number] = (title, rep.outcome, detail, getattr(item, "_acceptance_note", ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, outcome, detail, note = _ACCEPTANCE[n]
        status = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        line = f"[{status}] {n:2d}. {title}"
        if note:
            line += f"  ({note})"
        if detail:
            line += f"  -- {detail}"
        tr.write_line(line)
    passed = sum(1 for v in _ACCEPTANCE.values() if v[1] == "passed")
    tr.write_line(f"{passed}/{len(_ACCEPTANCE)} acceptance criteria passed")

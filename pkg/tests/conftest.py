import numpy as np
import pytest

from dsa_mimo.config import preset
from dsa_mimo.system_model import SystemConfig, SystemModel, UserProfile

ACCEPTANCE = {}


def record(criterion: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE[criterion] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.fixture(scope="session")
def fig3_model():
    return preset("fig3").model


@pytest.fixture(scope="session")
def fig5_model():
    return preset("fig5").model


def make_model(betas, p_max=1.0, p_pilot=None, arrival_prob=0.0, B_max=100.0, **cfg):
    users = tuple(UserProfile(beta=b, p_pilot=p_max if p_pilot is None else p_pilot,
                              p_max=p_max, arrival_prob=arrival_prob, B_max=B_max)
                  for b in np.atleast_1d(betas))
    return SystemModel(SystemConfig(**cfg), users)

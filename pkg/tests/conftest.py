import numpy as np
import pytest

from gridfreq import PfcSettings, Resource, SystemParams
from gridfreq.disturbances import DisturbanceConfig, OuParams
from gridfreq.market import MarketSettings
from gridfreq.scenario import ScenarioConfig


def sync_unit(rid, p_set=500.0, h=5.0, droop=None, deadband=15.0, **kw):
    pfc = None if droop is None else PfcSettings(deadband=deadband, droop_pct=droop)
    kw.setdefault("p_max", 1000.0)
    kw.setdefault("rating", 1000.0)
    return Resource(rid, "SyncGen", p_set=p_set, inertia_h=h, pfc=pfc, **kw)


def quiet_config(resources, demand, duration=60.0, **kw):
    """Noise-free scenario without market, for deterministic checks."""
    kw.setdefault("market", MarketSettings(enabled=False))
    kw.setdefault("disturbances", DisturbanceConfig(ou=OuParams(sigma=0.0)))
    return ScenarioConfig(name="quiet", demand=demand, resources=resources, duration=duration, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record a one-line pass/fail verdict for the acceptance summary."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA):
            terminalreporter.write_line(line)

import pytest

import cavity_eit as ce


@pytest.fixture(scope="session")
def ref():
    """Reference configuration at the default 5 uW pump."""
    params, drive = ce.reference_defaults()
    return params, drive


@pytest.fixture(scope="session")
def steady_5uw(ref):
    params, drive = ref
    return ce.solve_steady(params, ce.derive(params, drive))


def steady_at(params, power):
    """Steady state of `params` at pump power `power` (W)."""
    drive = ce.DriveParams(pump_power=power)
    return ce.solve_steady(params, ce.derive(params, drive))

import pytest

from polypin.chain import bridge_density_table, modal_expansion
from polypin.potentials import Potential, PotentialSpec, certify_assumptions
from polypin.spectral import Grid, spectral_data

ACCEPTANCE = []


@pytest.fixture(scope="session")
def quad_spec():
    return certify_assumptions(PotentialSpec.quadratic()).spec


@pytest.fixture(scope="session")
def heavy_spec():
    """Log-growth V1 with exponential V2: a certified non-Gaussian model."""
    spec = PotentialSpec(Potential("log", 2.0), Potential("exponential", 1.0))
    return certify_assumptions(spec).spec


@pytest.fixture(scope="session")
def light_spec():
    """Quartic V1 with exponential V2: certified, non-Gaussian, light tails."""
    spec = PotentialSpec(Potential("quartic", 1.0), Potential("exponential", 1.0))
    return certify_assumptions(spec).spec


@pytest.fixture(scope="session")
def sd(quad_spec):
    return spectral_data(quad_spec, Grid.symmetric(8.0, 257))


@pytest.fixture(scope="session")
def sd_coarse(quad_spec):
    return spectral_data(quad_spec, Grid.symmetric(8.0, 129))


@pytest.fixture(scope="session")
def short_table(sd):
    return bridge_density_table(sd, 401)


@pytest.fixture(scope="session")
def expansion(sd):
    return modal_expansion(sd)


@pytest.fixture(scope="session")
def long_table(sd, expansion):
    return bridge_density_table(sd, 2 ** 20, expansion=expansion)


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""
    def record(number, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
        ACCEPTANCE.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

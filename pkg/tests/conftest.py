import numpy as np
import pytest

from frontlab.potential import analyze_potential, builtin_potential


@pytest.fixture(scope="session")
def allen_cahn():
    return builtin_potential("allen_cahn")


@pytest.fixture(scope="session")
def nagumo():
    return builtin_potential("nagumo", a=0.25)


@pytest.fixture(scope="session")
def triple_well():
    return builtin_potential("triple_well", h1=0.12, h2=0.18)


@pytest.fixture(scope="session")
def ac_analysis(allen_cahn):
    return analyze_potential(allen_cahn)


@pytest.fixture(scope="session")
def nagumo_analysis(nagumo):
    return analyze_potential(nagumo)


@pytest.fixture(scope="session")
def tw_analysis(triple_well):
    return analyze_potential(triple_well)


@pytest.fixture(scope="session")
def nagumo_front(nagumo, nagumo_analysis):
    from frontlab.frontsolver import find_bistable_speed_scalar
    c, prof = find_bistable_speed_scalar(
        nagumo, 1.0, 0.0, (0.0, 2.0), d_esc=nagumo_analysis.d_esc, alpha=1.0)
    return c, prof


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def tanh_profile():
    """Exact Allen-Cahn stationary wall sampled densely."""
    from frontlab.frontsolver import FrontProfile
    xi = np.arange(-2500, 2501) * 0.01
    phi = np.tanh(xi / np.sqrt(2))[:, None]
    dphi = ((1 - np.tanh(xi / np.sqrt(2)) ** 2) / np.sqrt(2))[:, None]
    return FrontProfile(xi=xi, phi=phi, dphi=dphi, c=0.0, alpha=1.0,
                        m_minus=np.array([-1.0]), m_plus=np.array([1.0]))

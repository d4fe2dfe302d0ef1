import numpy as np
import pytest

from windtraj.airlink import ChannelParams, GroundUser
from windtraj.offline import Scenario
from windtraj.propulsion import AeroParams


@pytest.fixture(scope="session")
def aero() -> AeroParams:
    # rotor/airframe constants used across the suite
    return AeroParams(m=2.0, g_mag=9.8, rho=1.225, A_disc=0.79,
                      s_solidity=0.1, delta=0.012, c_T=0.3, c_f=0.13,
                      S_FP=0.01)


@pytest.fixture(scope="session")
def channel() -> ChannelParams:
    # link budget in dB: gain -60, NLoS extra -20, noise -110 dBm, gap 8.2
    return ChannelParams.from_db(A1=-1.0, A2=0.05, A3=0.1, A4=0.9,
                                 rho0_db=-60.0, mu0_db=-20.0,
                                 alpha_L=2.5, alpha_N=5.0,
                                 sigma2_dbm=-110.0, Gamma_db=8.2,
                                 P0=0.1, B=1e6)


@pytest.fixture(scope="session")
def users() -> list:
    pts = [(100.0, 300.0), (500.0, 800.0), (500.0, 200.0), (900.0, 600.0)]
    return [GroundUser(id=k + 1, position=np.array(p)) for k, p in enumerate(pts)]


@pytest.fixture
def make_scenario(aero, channel, users):
    """Mission factory with the reference caps; override fields per test."""
    def _make(duration=150.0, slot_dt=1.0, q_start=(0.0, 500.0, 100.0),
              q_end=(1000.0, 500.0, 100.0), v_h_max=40.0, v_v_max=20.0,
              h_min=50.0, h_max=300.0, wind=None, users_=None, n_samples=50):
        return Scenario(duration=duration, slot_dt=slot_dt,
                        q_start=np.array(q_start), q_end=np.array(q_end),
                        v_h_max=v_h_max, v_v_max=v_v_max,
                        h_min=h_min, h_max=h_max,
                        users=tuple(users_ if users_ is not None else users),
                        wind=wind, aero=aero, channel=channel,
                        n_samples=n_samples)
    return _make

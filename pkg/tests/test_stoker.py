import math

import numpy as np
import pytest

from sweperf import stoker

G = 9.81


def test_star_state_satisfies_jump_conditions():
    hs, us, s = stoker.star_state(4.0, 1.0, G)
    # left rarefaction: Riemann invariant u + 2c carried from the still left state
    assert us + 2 * math.sqrt(G * hs) == pytest.approx(2 * math.sqrt(G * 4.0), rel=1e-12)
    # right shock: mass and momentum balance in the shock frame
    assert s * (hs - 1.0) == pytest.approx(hs * us, rel=1e-12)
    mom_l = hs * us * us + 0.5 * G * hs * hs
    mom_r = 0.5 * G * 1.0
    assert s * (hs * us) == pytest.approx(mom_l - mom_r, rel=1e-12)
    assert 1.0 < hs < 4.0


def test_solution_conserves_mass():
    x = np.linspace(-60, 60, 240001)
    h, _ = stoker.solution(x, 3.0, 4.0, 1.0)
    h0, _ = stoker.solution(x, 0.0, 4.0, 1.0)
    dx = x[1] - x[0]
    assert np.sum(h) * dx == pytest.approx(np.sum(h0) * dx, rel=1e-4)


def test_solution_limits():
    h, u = stoker.solution(np.array([-100.0, 100.0]), 1.0, 4.0, 1.0)
    assert list(h) == [4.0, 1.0] and list(u) == [0.0, 0.0]


def test_rejects_inverted_states():
    with pytest.raises(ValueError):
        stoker.star_state(1.0, 2.0)

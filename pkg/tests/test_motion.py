import numpy as np
import pytest

from octrack.geometry import BoundingBox
from octrack.motion import (
    box_to_measurement,
    initiate,
    kf_update,
    predict,
    state_to_box,
)


def test_measurement_round_trip():
    box = BoundingBox(10, 20, 30, 60)
    z = box_to_measurement(box)
    np.testing.assert_allclose(z, [25, 50, 0.5, 60])
    back = state_to_box(initiate(box))
    assert back.as_tlwh() == pytest.approx(box.as_tlwh())


def test_initiate_zero_velocity():
    state = initiate(BoundingBox(0, 0, 10, 20))
    np.testing.assert_array_equal(state.mean[4:], np.zeros(4))
    assert state.covariance.shape == (8, 8)


def test_predict_moves_with_velocity():
    state = initiate(BoundingBox(0, 0, 10, 20))
    state.mean[4] = 3.0  # vx
    state = predict(state)
    assert state.mean[0] == pytest.approx(5 + 3)


def test_covariance_grows_on_predict_shrinks_on_update():
    state = initiate(BoundingBox(0, 0, 10, 20))
    var0 = np.trace(state.covariance[:4, :4])
    pred = predict(state)
    assert np.trace(pred.covariance[:4, :4]) > var0
    upd = kf_update(pred, BoundingBox(0.5, 0.2, 10, 20))
    assert np.trace(upd.covariance[:4, :4]) < np.trace(pred.covariance[:4, :4])


def test_covariance_stays_symmetric_psd():
    rng = np.random.default_rng(11)
    state = initiate(BoundingBox(0, 0, 12, 24))
    for _ in range(60):
        state = predict(state)
        jitter = rng.normal(0, 1.0, size=2)
        state = kf_update(state, BoundingBox(jitter[0], jitter[1], 12, 24))
        np.testing.assert_allclose(state.covariance, state.covariance.T,
                                   atol=1e-10)
        eigvals = np.linalg.eigvalsh(state.covariance)
        assert eigvals.min() >= -1e-9


def test_converges_to_constant_velocity_track():
    # noiseless target moving at (2, -1) px/frame; the filter should lock on
    state = initiate(BoundingBox(0, 0, 10, 20))
    for t in range(1, 40):
        state = predict(state)
        state = kf_update(state, BoundingBox(2.0 * t, -1.0 * t, 10, 20))
    assert state.mean[4] == pytest.approx(2.0, abs=0.05)
    assert state.mean[5] == pytest.approx(-1.0, abs=0.05)
    # one more prediction lands on the extrapolated position
    ahead = state_to_box(predict(state))
    assert ahead.left == pytest.approx(2.0 * 40, abs=0.5)
    assert ahead.top == pytest.approx(-1.0 * 40, abs=0.5)


def test_state_to_box_guards_degenerate_height():
    state = initiate(BoundingBox(0, 0, 10, 20))
    state.mean[3] = -5.0
    box = state_to_box(state)
    assert box.height > 0 and box.width > 0

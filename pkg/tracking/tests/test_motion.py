import numpy as np
from django.test import SimpleTestCase

from tracking.geometry import BBox
from tracking.motion import MotionState, average_velocity, predict


def _state(xs, frames=None, window=9, **kwargs):
    frames = list(range(len(xs))) if frames is None else frames
    boxes = [BBox.from_center(x, 0.0, 2.0, 2.0) for x in xs]
    return MotionState.from_boxes(frames, boxes, window, **kwargs)


def _linear_box(k):
    return BBox.from_center(3.0 + 1.5 * k, 2.0 - 0.5 * k, 10.0 + 0.2 * k, 20.0 + 0.4 * k)


class VelocityTests(SimpleTestCase):

    def test_unit_steps(self):
        for window in (2, 3, 9, 14):
            with self.subTest(window=window):
                self.assertAlmostEqual(average_velocity(_state(range(12), window=window)).vx, 1.0)

    def test_ten_frames_window_nine(self):
        self.assertAlmostEqual(_state(range(10), window=9).velocity().vx, 1.0)

    def test_noisy_example(self):
        xs = [0, 2, 1, 3, 2, 4]
        self.assertAlmostEqual(_state(xs, window=5).velocity().vx, 0.8)
        self.assertAlmostEqual(_state(xs, window=2).velocity().vx, 2.0)

    def test_short_history_uses_whole_span(self):
        self.assertAlmostEqual(_state([0, 2, 1, 3], window=9).velocity().vx, 1.0)

    def test_gap_divides_by_elapsed_frames(self):
        state = _state([1, 2, 3, 7], frames=[1, 2, 3, 7], window=2)
        self.assertAlmostEqual(state.velocity().vx, 1.0)

    def test_single_observation_is_unreliable(self):
        velocity = _state([5]).velocity()
        self.assertEqual(velocity[:4], (0.0, 0.0, 0.0, 0.0))
        self.assertFalse(velocity.reliable)

    def test_invalid_states(self):
        with self.assertRaises(ValueError):
            _state([1, 2], window=1)
        with self.assertRaises(ValueError):
            _state([1, 2], frames=[3, 3])
        with self.assertRaises(ValueError):
            MotionState((), 9)


class PredictTests(SimpleTestCase):

    def test_zero_horizon_returns_last_box(self):
        boxes = [BBox(0.1, 0.2, 3.3, 4.4), BBox(1.7, 0.9, 3.1, 4.6)]
        state = MotionState.from_boxes([1, 2], boxes)
        self.assertEqual(predict(state, 0), boxes[-1])

    def test_linear_shift(self):
        predicted = predict(_state(range(10)), 5)
        self.assertAlmostEqual(predicted.center[0], 14.0)

    def test_noisy_example_prediction(self):
        predicted = predict(_state([0, 2, 1, 3, 2, 4], window=5), 3)
        self.assertAlmostEqual(predicted.center[0], 6.4)

    def test_negative_horizon_extrapolates_backwards(self):
        predicted = predict(_state(range(10)), -3)
        self.assertAlmostEqual(predicted.center[0], 6.0)

    def test_sizes_never_negative(self):
        boxes = [BBox.from_center(0, 0, 10, 10), BBox.from_center(0, 0, 2, 2)]
        predicted = MotionState.from_boxes([1, 2], boxes, 2).predict(5)
        self.assertEqual((predicted.width, predicted.height), (0.0, 0.0))

    def test_freeze_size_moves_centre_only(self):
        boxes = [_linear_box(k) for k in range(5)]
        state = MotionState.from_boxes(range(5), boxes, 9, freeze_size=True)
        predicted = state.predict(4)
        self.assertAlmostEqual(predicted.width, boxes[-1].width)
        self.assertAlmostEqual(predicted.center[0], _linear_box(8).center[0])

    def test_exact_on_linear_trajectories(self):
        for window in range(2, 15):
            for length in (2, 5, 15):
                state = MotionState.from_boxes(range(length), [_linear_box(k) for k in range(length)], window)
                for p in range(1, 11):
                    expected = _linear_box(length - 1 + p)
                    predicted = state.predict(p)
                    with self.subTest(window=window, length=length, p=p):
                        np.testing.assert_allclose(predicted.as_tlwh(), expected.as_tlwh(), atol=1e-9)

    def test_long_window_beats_two_frames_on_noisy_tracks(self):
        errors = {2: [], 9: []}
        for seed in range(100):
            rng = np.random.default_rng(seed)
            frames = np.arange(30)
            true_x = 5.0 + 2.0 * frames
            noisy = true_x + rng.normal(0.0, 1.0, size=frames.size)
            for window in errors:
                state = _state(noisy[:25], frames=frames[:25].tolist(), window=window)
                errors[window].append((state.predict(5).center[0] - true_x[29]) ** 2)
        self.assertLess(np.mean(errors[9]), np.mean(errors[2]))

    def test_horizons_add_up(self):
        boxes = [BBox.from_center(2.0 * k + (k % 3), 1.0 - k, 10.0 + 0.1 * k, 20.0) for k in range(12)]
        state = MotionState.from_boxes(range(12), boxes, 5)
        v = state.velocity()
        for a, b in ((1, 2), (3, 4), (0, 7), (5, -2)):
            shifted = state.predict(a + b)
            base = state.predict(a)
            with self.subTest(a=a, b=b):
                self.assertAlmostEqual(shifted.center[0], base.center[0] + v.vx * b)
                self.assertAlmostEqual(shifted.center[1], base.center[1] + v.vy * b)
                self.assertAlmostEqual(shifted.width, base.width + v.vw * b)


class PredictArrayTests(SimpleTestCase):

    def test_matches_predict(self):
        noisy = [BBox.from_center(3.0 * k + (-1) ** k, 5.0, 12.0 - k, 20.0 + 0.5 * k) for k in range(8)]
        for freeze_size in (False, True):
            state = MotionState.from_boxes(range(8), noisy, 4, freeze_size=freeze_size)
            horizons = np.array([0, 1, 2, 5, 13, 40, -3])
            rows = state.predict_array(horizons)
            self.assertEqual(rows.shape, (len(horizons), 4))
            for p, row in zip(horizons, rows):
                with self.subTest(freeze_size=freeze_size, p=p):
                    np.testing.assert_allclose(row, state.predict(int(p)).as_tlwh(), atol=1e-9)

    def test_single_observation_is_static(self):
        box = BBox(1.0, 2.0, 3.0, 4.0)
        rows = MotionState.from_boxes([7], [box]).predict_array([1, 10])
        np.testing.assert_allclose(rows, [box.as_tlwh(), box.as_tlwh()])

import math
from collections import Counter

import numpy as np
from django.test import SimpleTestCase

from tracking.association import (
    INFEASIBLE, Detection, MergeStep, Tracklet, form_lifted_frames, pairwise_distances, track_sequence,
    tracklet_distance, upgma_clusters, upgma_merge, window_detections,
)
from tracking.config import TrackerConfig
from tracking.geometry import BBox
from tracking.metrics import clear_mot, idf1
from tracking.mot_io import trajectory_rows
from tracking.synthgen import Scenario, simulate

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def _detections(specs):
    """
    ``[(frame, cx, cy, embedding), ...]`` -> detections numbered in list order.
    """
    detections = []
    ranks = Counter()
    for index, (frame, cx, cy, embedding) in enumerate(specs):
        detections.append(Detection(
            frame=frame,
            box=BBox.from_center(cx, cy, 20.0, 48.0),
            confidence=0.9,
            embedding=np.asarray(embedding, dtype=float),
            source_index=index,
            det_index=ranks[frame],
        ))
        ranks[frame] += 1
    return detections


def _tracklet(tracklet_id, frames, cx0, vx, embedding, config, cy=100.0):
    specs = [(f, cx0 + vx * (f - frames[0]), cy, embedding) for f in frames]
    return Tracklet.build(tracklet_id, _detections(specs), config)


class WindowTests(SimpleTestCase):

    def test_fixed_windows(self):
        detections = _detections([(f, 0, 0, E1) for f in range(1, 14)])
        windows = window_detections(detections, 6)
        self.assertEqual([[d.frame for d in w] for w in windows],
                         [[1, 2, 3, 4, 5, 6], [7, 8, 9, 10, 11, 12], [13]])

    def test_empty_windows_skipped(self):
        detections = _detections([(1, 0, 0, E1), (20, 0, 0, E1)])
        self.assertEqual(len(window_detections(detections, 6)), 2)


class LiftedFrameTests(SimpleTestCase):

    def setUp(self):
        self.config = TrackerConfig()

    def test_single_target_single_chain(self):
        window = _detections([(f, 10.0 * f, 100, E1) for f in range(1, 7)])
        tracklets = form_lifted_frames(window, self.config)
        self.assertEqual(len(tracklets), 1)
        self.assertEqual(len(tracklets[0]), 6)

    def test_two_separable_targets(self):
        specs = []
        for f in range(1, 7):
            specs.append((f, 10.0 * f, 100, E1))
            specs.append((f, 500 - 10.0 * f, 300, E2))
        tracklets = form_lifted_frames(_detections(specs), self.config)
        self.assertEqual(len(tracklets), 2)
        for tracklet in tracklets:
            self.assertEqual(len(tracklet), 6)
            embeddings = {tuple(d.embedding) for d in tracklet.detections}
            self.assertEqual(len(embeddings), 1)

    def test_stage1_never_bridges_a_missing_frame(self):
        specs = []
        for f in range(1, 7):
            specs.append((f, 10.0 * f, 100, E1))
            if f != 3:
                specs.append((f, 500, 300, E2))
        tracklets = form_lifted_frames(_detections(specs), self.config)
        interrupted = [t for t in tracklets if np.allclose(t.detections[0].embedding, E2)]
        self.assertGreaterEqual(len(interrupted), 2)
        self.assertEqual(sorted(sorted(t.frames) for t in interrupted), [[1, 2], [4, 5, 6]])

    def test_gate_blocks_dissimilar_links(self):
        window = _detections([(1, 0, 0, E1), (2, 0, 0, E2)])
        self.assertEqual(len(form_lifted_frames(window, self.config)), 2)

    def test_ids_start_at_first_id(self):
        window = _detections([(1, 0, 0, E1), (1, 50, 0, E2)])
        self.assertEqual([t.id for t in form_lifted_frames(window, self.config, first_id=7)], [7, 8])

    def test_two_detections_in_one_frame_rejected(self):
        with self.assertRaises(ValueError):
            Tracklet.build(1, _detections([(1, 0, 0, E1), (1, 5, 0, E1)]), self.config)


class TrackletDistanceTests(SimpleTestCase):

    def setUp(self):
        self.config = TrackerConfig()

    def test_time_overlap_is_infeasible(self):
        a = _tracklet(1, [1, 2, 3, 4], 0, 5, E1, self.config)
        b = _tracklet(2, [3, 4, 5], 0, 5, E1, self.config)
        self.assertEqual(tracklet_distance(a, b, self.config), INFEASIBLE)

    def test_interleaved_spans_are_infeasible(self):
        a = _tracklet(1, [1, 5], 0, 5, E1, self.config)
        b = _tracklet(2, [3], 0, 5, E1, self.config)
        self.assertTrue(math.isinf(tracklet_distance(a, b, self.config)))

    def test_perfect_continuation(self):
        a = _tracklet(1, [1, 2, 3, 4, 5, 6], 100, 4, E1, self.config)
        b = _tracklet(2, [9, 10, 11, 12], 100 + 4 * 8, 4, E1, self.config)
        self.assertAlmostEqual(tracklet_distance(a, b, self.config), 0.0, places=9)

    def test_stationary_boxes_orthogonal_embeddings(self):
        a = _tracklet(1, [1, 2, 3], 200, 0, E1, self.config)
        b = _tracklet(2, [7, 8, 9], 200, 0, E2, self.config)
        self.assertAlmostEqual(tracklet_distance(a, b, self.config), 0.525, places=9)

    def test_symmetric(self):
        a = _tracklet(1, [1, 2, 3], 200, 3, E1, self.config)
        b = _tracklet(2, [8, 9], 260, -2, normalize_mix(E1, E2), self.config)
        self.assertEqual(tracklet_distance(a, b, self.config), tracklet_distance(b, a, self.config))

    def test_pairwise_matrix_matches_pair_function(self):
        tracklets = [
            _tracklet(1, [1, 2, 3], 200, 3, E1, self.config),
            _tracklet(2, [8, 9], 260, -2, normalize_mix(E1, E2), self.config),
            _tracklet(3, [2, 3, 4], 600, 0, E3, self.config),
        ]
        matrix = pairwise_distances(tracklets, self.config)
        for i in range(3):
            for j in range(3):
                if i != j:
                    self.assertAlmostEqual(matrix[i, j], tracklet_distance(tracklets[i], tracklets[j], self.config))

    def test_pairwise_matrix_on_random_tracklets(self):
        rng = np.random.default_rng(17)
        embeddings = rng.normal(size=(12, 3))
        embeddings /= np.linalg.norm(embeddings, axis=1, keepdims=True)
        for spatial in ('iou', 'giou', 'wgiou', 'hgiou', 'dgiou'):
            config = TrackerConfig(spatial_mode=spatial, n=3, freeze_size=spatial == 'hgiou')
            tracklets = []
            for k, embedding in enumerate(embeddings):
                start = int(rng.integers(1, 40))
                frames = list(range(start, start + int(rng.integers(1, 6))))
                tracklets.append(_tracklet(k + 1, frames, rng.uniform(0, 400), rng.uniform(-6, 6),
                                           embedding, config, cy=rng.uniform(50, 150)))
            matrix = pairwise_distances(tracklets, config)
            for i, a in enumerate(tracklets):
                for j, b in enumerate(tracklets):
                    if i == j:
                        continue
                    with self.subTest(spatial=spatial, i=i, j=j):
                        expected = tracklet_distance(a, b, config)
                        if math.isinf(expected):
                            self.assertTrue(math.isinf(matrix[i, j]))
                        else:
                            self.assertAlmostEqual(matrix[i, j], expected, places=9)


def normalize_mix(a, b):
    mix = a + b
    return mix / np.linalg.norm(mix)


def _upgma_by_rescan(distances, cutoff):
    """
    Reference agglomeration scanning the whole matrix at each merge.
    """
    d = np.array(distances, dtype=float)
    n = d.shape[0]
    np.fill_diagonal(d, INFEASIBLE)
    sizes = np.ones(n, dtype=int)
    members = [[i] for i in range(n)]
    active = np.ones(n, dtype=bool)
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    steps = []
    while active.sum() > 1:
        candidates = np.where(upper & np.outer(active, active), d, INFEASIBLE)
        i, j = np.unravel_index(np.argmin(candidates), candidates.shape)
        best = candidates[i, j]
        if not np.isfinite(best) or best >= cutoff:
            break
        merged = (sizes[i] * d[i] + sizes[j] * d[j]) / (sizes[i] + sizes[j])
        d[i, :] = d[:, i] = merged
        d[i, i] = INFEASIBLE
        d[j, :] = d[:, j] = INFEASIBLE
        sizes[i] += sizes[j]
        members[i].extend(members[j])
        members[j] = []
        active[j] = False
        steps.append(MergeStep(int(i), int(j), float(best), int(sizes[i])))
    return [sorted(members[i]) for i in range(n) if active[i]], steps


class UpgmaTests(SimpleTestCase):

    def test_infeasibility_propagates(self):
        distances = np.array([
            [0.0, 0.1, 0.9],
            [0.1, 0.0, INFEASIBLE],
            [0.9, INFEASIBLE, 0.0],
        ])
        clusters, steps = upgma_clusters(distances, 0.5)
        self.assertEqual(clusters, [[0, 1], [2]])
        self.assertEqual(len(steps), 1)

    def test_all_infeasible_is_a_no_op(self):
        distances = np.full((4, 4), INFEASIBLE)
        clusters, steps = upgma_clusters(distances, 0.5)
        self.assertEqual(clusters, [[0], [1], [2], [3]])
        self.assertEqual(steps, [])

    def test_average_linkage(self):
        distances = np.array([
            [0.0, 0.1, 0.3, 0.9],
            [0.1, 0.0, 0.5, 0.9],
            [0.3, 0.5, 0.0, 0.9],
            [0.9, 0.9, 0.9, 0.0],
        ])
        clusters, steps = upgma_clusters(distances, 0.45)
        self.assertEqual(clusters, [[0, 1, 2], [3]])
        self.assertAlmostEqual(steps[1].distance, 0.4)
        self.assertEqual(steps[1].size, 3)

    def test_cutoff_is_exclusive(self):
        distances = np.array([[0.0, 0.5], [0.5, 0.0]])
        self.assertEqual(upgma_clusters(distances, 0.5)[0], [[0], [1]])

    def test_ties_go_to_lowest_index_pair(self):
        distances = np.array([
            [0.0, 0.2, 0.9, 0.9],
            [0.2, 0.0, 0.9, 0.9],
            [0.9, 0.9, 0.0, 0.2],
            [0.9, 0.9, 0.2, 0.0],
        ])
        _, steps = upgma_clusters(distances, 0.5)
        self.assertEqual((steps[0].left, steps[0].right), (0, 1))
        self.assertEqual((steps[1].left, steps[1].right), (2, 3))

    def test_empty(self):
        self.assertEqual(upgma_clusters(np.zeros((0, 0)), 0.5), ([], []))

    def test_matches_full_rescan_on_random_matrices(self):
        rng = np.random.default_rng(29)
        for trial in range(40):
            n = int(rng.integers(2, 16))
            upper = np.triu(rng.choice([0.1, 0.2, 0.3, 0.45, 0.6, INFEASIBLE], size=(n, n)), 1)
            if trial % 2:
                upper = np.triu(rng.uniform(0.0, 1.0, size=(n, n)), 1)
                upper[rng.random((n, n)) < 0.3] = INFEASIBLE
            distances = upper + upper.T
            with self.subTest(trial=trial):
                clusters, steps = upgma_clusters(distances, 0.5)
                expected_clusters, expected_steps = _upgma_by_rescan(distances, 0.5)
                self.assertEqual(clusters, expected_clusters)
                self.assertEqual([(s.left, s.right, s.size) for s in steps],
                                 [(s.left, s.right, s.size) for s in expected_steps])

    def test_occlusion_split_is_merged(self):
        config = TrackerConfig()
        a = _tracklet(1, [1, 2, 3, 4, 5, 6], 100, 4, E1, config)
        b = _tracklet(2, [10, 11, 12], 100 + 4 * 9, 4, E1, config)
        merged = upgma_merge([a, b], config)
        self.assertEqual(len(merged), 1)
        self.assertEqual(merged[0].frames, frozenset([1, 2, 3, 4, 5, 6, 10, 11, 12]))

    def test_output_ids_follow_start_frame(self):
        config = TrackerConfig()
        late = _tracklet(1, [10, 11], 600, 0, E2, config)
        early = _tracklet(2, [1, 2, 3], 100, 0, E1, config)
        merged = upgma_merge([late, early], config)
        self.assertEqual([(t.id, t.start_frame) for t in merged], [(1, 1), (2, 10)])


class TrackSequenceTests(SimpleTestCase):

    def test_empty(self):
        self.assertEqual(track_sequence([]), [])

    def test_clean_scenario_perfect_recovery(self):
        truth = simulate(Scenario(n_targets=5, n_frames=100, seed=1))
        trajectories = track_sequence(truth.detections(), TrackerConfig())
        self.assertEqual(len(trajectories), 5)
        rows = trajectory_rows(trajectories)
        self.assertEqual(clear_mot(truth.gt_rows, rows).mota, 1.0)
        self.assertEqual(idf1(truth.gt_rows, rows).idf1, 1.0)

    def test_partition_of_detections(self):
        config = TrackerConfig()
        for seed in range(50):
            scenario = Scenario(
                n_targets=4, n_frames=30, det_noise_px=1.5, embed_noise=0.3,
                n_random_occlusions=2, occlusion_len=4, seed=seed,
            )
            detections = simulate(scenario).detections()
            trajectories = track_sequence(detections, config)
            with self.subTest(seed=seed):
                output = Counter(d.key for t in trajectories for d in t.detections)
                self.assertEqual(output, Counter(d.key for d in detections))
                self.assertEqual([t.id for t in trajectories], list(range(1, len(trajectories) + 1)))
                for trajectory in trajectories:
                    self.assertEqual(len(trajectory.frames), len(trajectory))

    def test_deterministic(self):
        detections = simulate(Scenario(n_targets=4, n_frames=40, embed_noise=0.4, det_noise_px=2, seed=3)).detections()
        first = trajectory_rows(track_sequence(detections))
        second = trajectory_rows(track_sequence(list(reversed(detections))))
        self.assertEqual(first, second)


class FlagIsolationTests(SimpleTestCase):
    """
    The baseline configuration differs from the full one only through
    appearance, spatial distance and velocity window.
    """

    def setUp(self):
        scenario = Scenario(n_targets=4, n_frames=36, det_noise_px=2.0, embed_noise=0.5, seed=2)
        self.detections = simulate(scenario).detections()
        self.full = TrackerConfig()
        self.baseline = TrackerConfig(appearance_mode='median', spatial_mode='iou', n=2)

    def _stage1(self, config):
        tracklets = []
        for window in window_detections(self.detections, config.window_len):
            tracklets.extend(form_lifted_frames(window, config, first_id=len(tracklets) + 1))
        return tracklets

    def test_stage1_ignores_the_flags(self):
        full = [[d.key for d in t.detections] for t in self._stage1(self.full)]
        baseline = [[d.key for d in t.detections] for t in self._stage1(self.baseline)]
        self.assertEqual(full, baseline)

    def test_each_flag_changes_its_own_part(self):
        tracklets = self._stage1(self.full)
        reference = pairwise_distances(tracklets, self.full)
        for change in ({'appearance_mode': 'median'}, {'spatial_mode': 'iou'}, {'n': 2}):
            config = self.full.replace(**change)
            rebuilt = [Tracklet.build(t.id, t.detections, config) for t in tracklets]
            with self.subTest(change=change):
                changed = pairwise_distances(rebuilt, config)
                self.assertTrue(np.array_equal(np.isinf(changed), np.isinf(reference)))
                self.assertFalse(np.allclose(changed[np.isfinite(changed)], reference[np.isfinite(reference)]))

    def test_baseline_runs_end_to_end(self):
        trajectories = track_sequence(self.detections, self.baseline)
        self.assertEqual(sum(len(t) for t in trajectories), len(self.detections))

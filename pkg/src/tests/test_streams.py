import os
import tempfile
import unittest

import numpy as np
import numpy.testing as npt

from src.core.errors import ValidationError
from src.streams.csv_io import load_csv_streams, save_csv_streams
from src.streams.generator import (ShiftPattern, ShiftSpec, StreamBatch, generate_streams,
                                   shift_vector, simulate_in_control)
from src.streams.graph import CausalGraph, WeightedDag, assign_sem_weights, sample_er_dag


def chain_dag(weights):
    """Chain 0 -> 1 -> ... with the given edge weights."""
    p = len(weights) + 1
    adjacency = np.zeros((p, p), dtype=bool)
    w = np.zeros((p, p))
    for i, weight in enumerate(weights):
        adjacency[i, i + 1] = True
        w[i, i + 1] = weight
    graph = CausalGraph(p=p, adjacency=adjacency, topo_order=np.arange(p))
    return WeightedDag(graph=graph, weights=w)


class TestGraphSampling(unittest.TestCase):

    def test_zero_probability_gives_no_edges(self):
        self.assertEqual(sample_er_dag(5, 0.0, 1).n_edges, 0)

    def test_unit_probability_gives_complete_dag(self):
        self.assertEqual(sample_er_dag(5, 1.0, 1).n_edges, 10)

    def test_edges_follow_topological_order(self):
        for seed in range(20):
            graph = sample_er_dag(8, 0.5, seed)
            order = np.argsort(graph.topo_order)
            permuted = graph.adjacency[np.ix_(order, order)]
            self.assertFalse(np.any(np.tril(permuted)))

    def test_sampling_is_deterministic(self):
        a = sample_er_dag(10, 0.3, 7)
        b = sample_er_dag(10, 0.3, 7)
        npt.assert_array_equal(a.adjacency, b.adjacency)
        npt.assert_array_equal(a.topo_order, b.topo_order)

    def test_mean_edge_count(self):
        counts = [sample_er_dag(10, 0.3, seed).n_edges for seed in range(1000)]
        self.assertAlmostEqual(np.mean(counts), 45 * 0.3, delta=2.0)

    def test_invalid_probability_rejected(self):
        with self.assertRaises(ValidationError):
            sample_er_dag(5, 1.5, 1)

    def test_from_adjacency_rejects_cycle(self):
        with self.assertRaises(ValidationError):
            CausalGraph.from_adjacency(np.array([[0, 1], [1, 0]], dtype=bool))


class TestSemWeights(unittest.TestCase):

    def test_empty_graph_has_zero_weights(self):
        dag = assign_sem_weights(sample_er_dag(4, 0.0, 3), 0.3, 0.8, 3)
        npt.assert_array_equal(dag.weights, np.zeros((4, 4)))

    def test_degenerate_interval(self):
        dag = assign_sem_weights(sample_er_dag(6, 1.0, 3), 0.5, 0.5, 3)
        npt.assert_array_equal(np.abs(dag.weights[dag.graph.adjacency]), 0.5)

    def test_weights_are_reproducible(self):
        graph = chain_dag([1.0, 1.0]).graph
        a = assign_sem_weights(graph, 0.3, 0.8, 11)
        b = assign_sem_weights(graph, 0.3, 0.8, 11)
        npt.assert_array_equal(a.weights, b.weights)
        self.assertTrue(np.all(np.abs(a.weights[graph.adjacency]) >= 0.3))

    def test_invalid_bounds_rejected(self):
        with self.assertRaises(ValidationError):
            assign_sem_weights(sample_er_dag(3, 0.5, 1), 0.0, 0.5, 1)


class TestGenerateStreams(unittest.TestCase):

    def test_in_control_means_are_zero(self):
        dag = chain_dag([0.5, 0.5])
        spec = ShiftSpec.first_k(1, "a", 0.0, onset=1, horizon=10000)
        batch = generate_streams(dag, spec, 10000, seed=5)
        npt.assert_allclose(batch.values.mean(axis=0), 0.0, atol=0.05)

    def test_shift_propagates_to_child(self):
        dag = chain_dag([0.5])
        spec = ShiftSpec.first_k(1, "a", 2.0, onset=1, horizon=10000)
        batch = generate_streams(dag, spec, 10000, seed=9)
        self.assertAlmostEqual(batch.values[:, 0].mean(), 2.0, delta=0.1)
        self.assertAlmostEqual(batch.values[:, 1].mean(), 1.0, delta=0.1)

    def test_no_shift_before_onset(self):
        dag = chain_dag([0.7])
        spec = ShiftSpec.first_k(1, "a", 3.0, onset=5001, horizon=10000)
        batch = generate_streams(dag, spec, 10000, seed=4)
        before = batch.values[:5000]
        stderr = before.std(axis=0, ddof=1) / np.sqrt(5000)
        self.assertTrue(np.all(np.abs(before.mean(axis=0)) < 4 * stderr))

    def test_alternating_shift_vector(self):
        spec = ShiftSpec.first_k(4, ShiftPattern.ALTERNATING, 1.0, onset=1, horizon=10)
        npt.assert_array_equal(shift_vector(spec, 6), [1, -1, 1, -1, 0, 0])

    def test_all_positive_shift_vector(self):
        spec = ShiftSpec.first_k(3, "a", 0.5, onset=1, horizon=10)
        npt.assert_array_equal(shift_vector(spec, 4), [0.5, 0.5, 0.5, 0.0])

    def test_truth_mask_follows_window(self):
        dag = chain_dag([0.5, 0.5])
        spec = ShiftSpec.first_k(2, "a", 1.0, onset=4, horizon=20, duration=5)
        batch = generate_streams(dag, spec, 20, seed=1)
        npt.assert_array_equal(batch.truth_mask(3), [0, 0, 0])
        npt.assert_array_equal(batch.truth_mask(4), [1, 1, 0])
        npt.assert_array_equal(batch.truth_mask(9), [1, 1, 0])
        npt.assert_array_equal(batch.truth_mask(10), [0, 0, 0])

    def test_window_must_fit_horizon(self):
        dag = chain_dag([0.5])
        spec = ShiftSpec.first_k(1, "a", 1.0, onset=8, horizon=10, duration=5)
        with self.assertRaises(ValidationError):
            generate_streams(dag, spec, 10, seed=1)

    def test_generation_is_deterministic(self):
        dag = assign_sem_weights(sample_er_dag(6, 0.4, 2), 0.3, 0.8, 2)
        spec = ShiftSpec.first_k(3, "b", 1.0, onset=10, horizon=50, noise_sigma=0.1)
        a = generate_streams(dag, spec, 50, seed=3)
        b = generate_streams(dag, spec, 50, seed=3)
        npt.assert_array_equal(a.values, b.values)

    def test_in_control_context(self):
        dag = chain_dag([0.5, 0.5])
        rows = simulate_in_control(dag, 100, 0.0, seed=2)
        self.assertEqual(rows.shape, (100, 3))
        npt.assert_array_equal(rows, simulate_in_control(dag, 100, 0.0, seed=2))

    def test_non_finite_values_rejected(self):
        with self.assertRaises(ValidationError):
            StreamBatch(horizon=2, values=np.array([[0.0], [np.nan]]))


class TestCsvStreams(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, name, text):
        path = os.path.join(self.tmp.name, name)
        with open(path, "w") as handle:
            handle.write(text)
        return path

    def test_numeric_file(self):
        path = self._write("a.csv", "1,2,3,4\n5,6,7,8\n9,10,11,12\n")
        batch = load_csv_streams(path, 1, 4)
        self.assertEqual(batch.values.shape, (3, 4))
        self.assertIsNone(batch.spec)
        npt.assert_array_equal(batch.values[2], [9, 10, 11, 12])

    def test_column_bounds_are_inclusive(self):
        path = self._write("b.csv", "1,2,3,4\n5,6,7,8\n")
        batch = load_csv_streams(path, 2, 3)
        npt.assert_array_equal(batch.values, [[2, 3], [6, 7]])

    def test_header_is_detected(self):
        path = self._write("c.csv", "a,b\n1.5,2\n3,4\n")
        batch = load_csv_streams(path)
        self.assertEqual(batch.horizon, 2)

    def test_empty_file(self):
        path = self._write("d.csv", "")
        with self.assertRaisesRegex(ValidationError, "no data rows"):
            load_csv_streams(path)

    def test_header_only_file(self):
        path = self._write("e.csv", "a,b\n")
        with self.assertRaisesRegex(ValidationError, "no data rows"):
            load_csv_streams(path)

    def test_non_numeric_cell_is_located(self):
        path = self._write("f.csv", "1,2\n3,oops\n")
        with self.assertRaisesRegex(ValidationError, "row 2, column 2"):
            load_csv_streams(path)

    def test_bad_bounds(self):
        path = self._write("g.csv", "1,2\n")
        with self.assertRaises(ValidationError):
            load_csv_streams(path, 1, 3)

    def test_round_trip_is_exact(self):
        dag = assign_sem_weights(sample_er_dag(4, 0.5, 1), 0.3, 0.8, 1)
        batch = generate_streams(dag, ShiftSpec.first_k(2, "a", 1.0, 5, 30), 30, seed=8)
        path = os.path.join(self.tmp.name, "round.csv")
        save_csv_streams(batch, path)
        npt.assert_array_equal(load_csv_streams(path).values, batch.values)


if __name__ == '__main__':
    unittest.main()

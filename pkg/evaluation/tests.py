import json
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from forge.exceptions import InputError, NumericDomainError, ShapeError

from .models import EvalProtocol, EvalReport
from .ranking import distance_matrix, evaluate, tie_break
from .reports import report_data, write_cmc, write_json
from .serializers import EvalProtocolSerializer


def brute_force(dist, q_ids, q_cams, g_ids, g_cams):
    """Loop-by-loop CMC / mAP for cross-checking."""
    n_gallery = len(g_ids)
    cmc_counts = [0] * n_gallery
    aps = []
    for i in range(len(q_ids)):
        ranked = sorted(range(n_gallery), key=lambda j: (dist[i][j], j))
        kept = [j for j in ranked if not (g_ids[j] == q_ids[i] and g_cams[j] == q_cams[i])]
        hits, precisions, first = 0, [], None
        for position, j in enumerate(kept, start=1):
            if g_ids[j] == q_ids[i]:
                hits += 1
                precisions.append(hits / position)
                if first is None:
                    first = position
        if first is None:
            continue
        aps.append(sum(precisions) / len(precisions))
        for r in range(first - 1, n_gallery):
            cmc_counts[r] += 1
    return [c / len(aps) for c in cmc_counts], sum(aps) / len(aps)


class DistanceMatrixTests(SimpleTestCase):

    def test_matches_nested_loop(self):
        rng = np.random.default_rng(1)
        queries, gallery = rng.random((7, 5)), rng.random((11, 5))
        dist = distance_matrix(queries, gallery)
        for i in range(7):
            for j in range(11):
                self.assertAlmostEqual(dist[i, j], np.linalg.norm(queries[i] - gallery[j]), places=12)

    def test_identical_rows_are_exactly_zero(self):
        rows = np.random.default_rng(2).random((4, 3))
        dist = distance_matrix(rows, rows)
        self.assertTrue(np.all(np.diag(dist) == 0.0))

    def test_symmetric_on_same_set(self):
        rows = np.random.default_rng(3).random((6, 4))
        dist = distance_matrix(rows, rows)
        self.assertTrue(np.array_equal(dist, dist.T))

    def test_dimension_mismatch(self):
        with self.assertRaises(ShapeError):
            distance_matrix(np.zeros((2, 3)), np.zeros((2, 4)))


class TieBreakTests(SimpleTestCase):

    def test_ties_keep_gallery_order(self):
        self.assertEqual(list(tie_break([0.5, 0.1, 0.5, 0.1])), [1, 3, 0, 2])

    def test_all_equal_is_identity(self):
        self.assertEqual(list(tie_break([0.3] * 5)), [0, 1, 2, 3, 4])

    def test_reversed_sorted_row(self):
        self.assertEqual(list(tie_break([4.0, 3.0, 2.0, 1.0])), [3, 2, 1, 0])

    def test_nan_is_rejected(self):
        with self.assertRaises(NumericDomainError):
            tie_break([0.1, float('nan')])


class EvaluateTests(SimpleTestCase):

    def test_hand_computed_average_precision(self):
        # matches at ranks 1 and 3 of 5
        dist = np.array([[0.1, 0.2, 0.3, 0.4, 0.5]])
        report = evaluate(dist, [7], [0], [7, 1, 7, 2, 3], [1, 1, 1, 1, 1])
        self.assertAlmostEqual(report.map, (1 + 2 / 3) / 2, places=12)
        self.assertEqual(report.rank(1), 1.0)
        self.assertEqual(report.per_query[0].first_hit, 1)

    def test_same_camera_same_identity_is_junk(self):
        dist = np.array([[0.1, 0.2, 0.3]])
        report = evaluate(dist, [7], [0], [7, 1, 7], [0, 1, 1])
        self.assertEqual(report.per_query[0].first_hit, 2)
        self.assertEqual(report.rank(1), 0.0)
        self.assertEqual(report.rank(2), 1.0)
        self.assertAlmostEqual(report.map, 0.5)

    def test_junk_removal_can_be_disabled(self):
        dist = np.array([[0.1, 0.2, 0.3]])
        report = evaluate(dist, [7], [0], [7, 1, 7], [0, 1, 1], EvalProtocol(exclude_same_camera_same_id=False))
        self.assertEqual(report.rank(1), 1.0)

    def test_query_without_match_is_excluded(self):
        dist = np.array([[0.1, 0.2], [0.3, 0.1]])
        with self.assertLogs('evaluation.ranking', level='WARNING'):
            report = evaluate(dist, [1, 9], [0, 0], [1, 2], [1, 1])
        self.assertEqual(report.excluded_queries, (1,))
        self.assertEqual(report.num_valid_queries, 1)
        self.assertEqual(report.rank(1), 1.0)

    def test_no_valid_query(self):
        with self.assertRaises(InputError):
            evaluate(np.array([[0.1]]), [1], [0], [1], [0])

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            evaluate(np.zeros((2, 3)), [1, 2], [0, 0], [1, 2], [0, 0])

    def test_agrees_with_brute_force(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            n_q, n_g = rng.integers(1, 8), rng.integers(2, 15)
            q_ids, g_ids = rng.integers(0, 4, n_q), rng.integers(0, 4, n_g)
            q_cams, g_cams = rng.integers(0, 3, n_q), rng.integers(0, 3, n_g)
            # coarse values so ties actually occur
            dist = rng.integers(0, 5, (n_q, n_g)).astype(float)
            try:
                cmc, mean_ap = brute_force(dist, q_ids, q_cams, g_ids, g_cams)
            except ZeroDivisionError:
                with self.assertRaises(InputError):
                    evaluate(dist, q_ids, q_cams, g_ids, g_cams)
                continue
            report = evaluate(dist, q_ids, q_cams, g_ids, g_cams)
            np.testing.assert_allclose(report.cmc, cmc, atol=1e-9)
            self.assertAlmostEqual(report.map, mean_ap, delta=1e-9)

    def test_cmc_is_monotone_and_bounded(self):
        rng = np.random.default_rng(5)
        dist = rng.random((20, 30))
        report = evaluate(dist, rng.integers(0, 5, 20), np.zeros(20), rng.integers(0, 5, 30), np.ones(30))
        self.assertTrue(np.all(np.diff(report.cmc) >= 0))
        self.assertTrue(0.0 <= report.cmc[0] and report.cmc[-1] <= 1.0)
        self.assertTrue(0.0 <= report.map <= 1.0)
        self.assertEqual(report.rank(1000), report.cmc[-1])

    def test_gallery_permutation_does_not_change_scores(self):
        rng = np.random.default_rng(6)
        dist = rng.random((10, 25))
        q_ids, g_ids = rng.integers(0, 4, 10), rng.integers(0, 4, 25)
        q_cams, g_cams = np.zeros(10, int), np.ones(25, int)
        perm = rng.permutation(25)
        a = evaluate(dist, q_ids, q_cams, g_ids, g_cams)
        b = evaluate(dist[:, perm], q_ids, q_cams, g_ids[perm], g_cams[perm])
        np.testing.assert_allclose(a.cmc, b.cmc)
        self.assertAlmostEqual(a.map, b.map, places=12)

    def test_thread_count_does_not_change_report(self):
        rng = np.random.default_rng(7)
        dist = rng.random((40, 60))
        args = (dist, rng.integers(0, 6, 40), np.zeros(40), rng.integers(0, 6, 60), np.ones(60))
        a, b = evaluate(*args, threads=1), evaluate(*args, threads=8)
        self.assertTrue(np.array_equal(a.cmc, b.cmc))
        self.assertEqual(a.map, b.map)


class ProtocolTests(SimpleTestCase):

    def test_defaults_from_settings(self):
        protocol = EvalProtocol.from_settings()
        self.assertTrue(protocol.exclude_same_camera_same_id)
        self.assertEqual(protocol.ranks_reported, (1, 5, 10))

    def test_ranks_must_ascend(self):
        with self.assertRaises(InputError):
            EvalProtocol(ranks_reported=(5, 1))
        serializer = EvalProtocolSerializer(data={'ranks_reported': [5, 1]})
        self.assertFalse(serializer.is_valid())

    def test_serializer_creates_protocol(self):
        serializer = EvalProtocolSerializer(data={'ranks_reported': [1, 20]})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.save().ranks_reported, (1, 20))


class ReportTests(SimpleTestCase):

    def test_json_and_cmc_files(self):
        report = EvalReport(cmc=np.array([0.5, 1.0]), map=0.75, protocol=EvalProtocol(ranks_reported=(1, 5)))
        with tempfile.TemporaryDirectory() as tmp:
            write_json(Path(tmp) / 'eval.json', report_data(report, model='none'))
            data = json.loads((Path(tmp) / 'eval.json').read_text())
            write_cmc(Path(tmp) / 'cmc.csv', report)
            lines = (Path(tmp) / 'cmc.csv').read_text().splitlines()
        self.assertEqual(data['ranks'], {'R1': 0.5, 'R5': 1.0})
        self.assertEqual(data['variant'], 'all-shot single-query')
        self.assertEqual(data['model'], 'none')
        self.assertEqual(lines, ['rank,cmc', '1,0.5', '2,1.0'])

    def test_json_lists_each_valid_query(self):
        dist = np.array([[0.1, 0.2, 0.3], [0.3, 0.2, 0.1]])
        with self.assertLogs('evaluation.ranking', level='WARNING'):
            report = evaluate(dist, [7, 9], [0, 2], [7, 1, 7], [0, 1, 1])
        with tempfile.TemporaryDirectory() as tmp:
            write_json(Path(tmp) / 'eval.json', report_data(report))
            data = json.loads((Path(tmp) / 'eval.json').read_text())
        self.assertEqual(data['per_query'], [{'query': 0, 'identity': 7, 'camera': 0, 'ap': 0.5, 'first_hit': 2}])
        self.assertEqual(data['excluded_queries'], [1])

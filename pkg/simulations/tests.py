import itertools
import tempfile
import unittest
from io import StringIO
from pathlib import Path

import numpy as np
import orjson
import pandas as pd
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from algebra.textio import format_matrix
from codes.families import codewords, gray_messages
from codes.services import builtin_code, searched_base
from orbitdecoding.exceptions import CapacityError, ConfigError, InputError, ValidationError
from polar.orbit import PodDecoder
from .baselines import BoundedDistanceDecoder, MaximumLikelihoodDecoder, hd_theoretical_bler, ml_decode
from .channel import ChannelPoint, draw_batch, draw_trial, transmit, trial_stream
from .experiment import ExperimentConfig
from .services import (
    CSV_COLUMNS, DecoderDescriptor, make_decoder, records_frame, run_bler, trial_errors, wilson_interval, write_csv,
)


def overlapping(a, b, confidence=0.95):
    lo_a, hi_a = a.interval(confidence)
    lo_b, hi_b = b.interval(confidence)
    return lo_a <= hi_b and lo_b <= hi_a


class ChannelTests(SimpleTestCase):
    def test_noise_variance(self):
        point = ChannelPoint(3.0, 0.5)
        self.assertAlmostEqual(point.sigma2, 1.0 / 10 ** 0.3)
        self.assertAlmostEqual(point.llr_scale, 2.0 * 10 ** 0.3)

    def test_invalid_points(self):
        with self.assertRaises(ValidationError):
            ChannelPoint(3.0, 0.0)
        with self.assertRaises(ValidationError):
            ChannelPoint(float('nan'), 0.5)

    def test_high_snr_signs(self):
        c = np.array([0, 1, 1, 0, 1], dtype=np.uint8)
        llr = transmit(c, ChannelPoint(60.0, 0.5), np.random.default_rng(0))
        np.testing.assert_array_equal(np.sign(llr), 1 - 2 * c.astype(int))

    def test_llr_moments(self):
        point = ChannelPoint(2.0, 0.5)
        draws = transmit(np.zeros(200_000, dtype=np.uint8), point, np.random.default_rng(1))
        mean = 2.0 / point.sigma2
        std = 2.0 / np.sqrt(point.sigma2)
        self.assertLess(abs(draws.mean() - mean), 4 * std / np.sqrt(draws.size))
        self.assertAlmostEqual(draws.var() / (4.0 / point.sigma2), 1.0, delta=0.03)

    def test_streams_do_not_depend_on_batching(self):
        messages, noise = draw_batch(7, 2, 5, 3, 4, 6)
        for i in range(3):
            m, z = draw_trial(7, 2, 5 + i, 4, 6)
            np.testing.assert_array_equal(messages[i], m)
            np.testing.assert_array_equal(noise[i], z)

    def test_streams_differ_by_key(self):
        a = trial_stream(1, 0, 0).standard_normal(4)
        b = trial_stream(1, 0, 1).standard_normal(4)
        c = trial_stream(1, 1, 0).standard_normal(4)
        self.assertFalse(np.array_equal(a, b))
        self.assertFalse(np.array_equal(a, c))
        np.testing.assert_array_equal(a, trial_stream(1, 0, 0).standard_normal(4))


class BaselineTests(SimpleTestCase):
    def test_ml_noiseless(self):
        code = builtin_code('ebch16-7')
        word = codewords(code.g)[77]
        np.testing.assert_array_equal(ml_decode(code, 4.0 * (1.0 - 2.0 * word)), word)

    def test_ml_matches_naive_search_on_golay(self):
        code = builtin_code('egolay24-12')
        words = codewords(code.g)
        _, noise = draw_batch(3, 0, 0, 100, code.k, code.n)
        point = ChannelPoint(1.0, code.rate)
        llrs = point.llr_scale * (1.0 + np.sqrt(point.sigma2) * noise)
        decoder = MaximumLikelihoodDecoder(code, 20)
        for llr, index in zip(llrs, decoder.decode_indices(llrs)):
            naive = int(np.argmax([float(((1.0 - 2.0 * w) * llr).sum()) for w in words]))
            np.testing.assert_array_equal(words[index], words[naive])

    def test_ml_messages_follow_gray_order(self):
        code = builtin_code('rep8-3')
        decoder = MaximumLikelihoodDecoder(code, 20)
        for message in itertools.product((0, 1), repeat=3):
            c = np.array(message) @ code.g.to_dense() % 2
            decoded, _ = decoder.decode_batch((1.0 - 2.0 * c)[None])
            np.testing.assert_array_equal(decoded[0], message)
        self.assertEqual(gray_messages(3).shape, (8, 3))

    def test_ml_capacity_guard(self):
        with self.assertRaises(CapacityError):
            MaximumLikelihoodDecoder(builtin_code('ebch64-36'), 20)
        with self.assertRaises(CapacityError):
            make_decoder(builtin_code('ebch64-36'), 'hd:3')

    def test_ml_rejects_non_finite_input(self):
        with self.assertRaises(InputError):
            MaximumLikelihoodDecoder(builtin_code('rep8-3'), 20).decode_batch(np.full((1, 8), np.inf))

    def test_bounded_distance(self):
        code = builtin_code('ebch16-7')
        decoder = BoundedDistanceDecoder(code, 2, 20)
        llr = np.full(16, 3.0)
        two = llr.copy()
        two[[1, 9]] = -3.0
        three = llr.copy()
        three[[1, 5, 9]] = -3.0
        decoded, _ = decoder.decode_batch(np.stack([two, three]))
        np.testing.assert_array_equal(decoded[0], np.zeros(7))
        self.assertTrue(np.all(decoded[1] != np.zeros(7)))
        self.assertEqual(decoder.label, 'hd2')

    def test_theoretical_hard_decision_bler(self):
        self.assertEqual(hd_theoretical_bler(16, 7, 16, 4.0), 0.0)
        self.assertLess(hd_theoretical_bler(16, 7, 2, 30.0), 1e-12)
        self.assertGreater(hd_theoretical_bler(16, 7, 2, 3.0), hd_theoretical_bler(16, 7, 2, 5.0))
        with self.assertRaises(ValidationError):
            hd_theoretical_bler(16, 7, -1, 4.0)

    def test_theoretical_bler_against_sampled_binomial(self):
        from scipy.special import erfc
        p = 0.5 * erfc(np.sqrt(7 / 16 * 10 ** 0.4))
        errors = np.random.default_rng(5).binomial(16, p, size=2_000_000)
        sampled = float((errors > 2).mean())
        expected = hd_theoretical_bler(16, 7, 2, 4.0)
        self.assertLess(abs(sampled - expected), 5 * np.sqrt(expected * (1 - expected) / errors.size))


class DescriptorTests(SimpleTestCase):
    def test_parse(self):
        self.assertEqual(DecoderDescriptor.parse('sc').kind, 'sc')
        self.assertEqual(DecoderDescriptor.parse('scl:8').list_size, 8)
        self.assertEqual(DecoderDescriptor.parse('hd:2').radius, 2)
        pod = DecoderDescriptor.parse('pod:8:scl:4:sample')
        self.assertEqual((pod.kind, pod.branches, pod.list_size, pod.selection), ('pod', 8, 4, 'sample'))
        pod = DecoderDescriptor.parse('pod:16:sc')
        self.assertEqual((pod.branches, pod.list_size, pod.selection), (16, 1, None))

    def test_rejects_bad_descriptors(self):
        for text in ('', 'scl', 'scl:0', 'pod:4', 'pod:x:sc', 'pod:4:bp', 'hd:-1', 'ml:2'):
            with self.assertRaises(ConfigError, msg=text):
                DecoderDescriptor.parse(text)

    def test_make_decoder(self):
        code = builtin_code('ebch16-7')
        self.assertIsInstance(make_decoder(code, 'ml'), MaximumLikelihoodDecoder)
        self.assertIsInstance(make_decoder(code, 'hd:2'), BoundedDistanceDecoder)
        pod = make_decoder(code, 'pod:4:scl:2')
        self.assertIsInstance(pod, PodDecoder)
        self.assertEqual((pod.cfg.m, pod.cfg.list_size, pod.cfg.combiner), (4, 2, 'ml-among-valid'))
        self.assertEqual(make_decoder(code, 'scl:4').cfg.combiner, 'best-metric')

    @override_settings(POD_COMBINER='best-metric', POD_PATH_METRIC='approx')
    def test_make_decoder_follows_settings(self):
        pod = make_decoder(builtin_code('ebch16-7'), 'pod:2:sc')
        self.assertEqual((pod.cfg.combiner, pod.cfg.path_metric), ('best-metric', 'approx'))


class BlerTests(SimpleTestCase):
    def test_wilson_interval(self):
        lo, hi = wilson_interval(10, 100)
        self.assertLess(lo, 0.1)
        self.assertGreater(hi, 0.1)
        self.assertEqual(wilson_interval(0, 50)[0], 0.0)
        with self.assertRaises(ValidationError):
            wilson_interval(0, 0)

    def test_max_trials_caps_the_run(self):
        code = builtin_code('rep8-3')
        [record] = run_bler(code, make_decoder(code, 'sc'), [0.0], min_errors=10_000, max_trials=10,
                            seed=1, batch_trials=4)
        self.assertEqual(record.trials, 10)
        self.assertEqual(record.bler, record.block_errors / 10)

    def test_stops_after_min_errors(self):
        code = builtin_code('rep8-3')
        [record] = run_bler(code, make_decoder(code, 'sc'), [-2.0], min_errors=5, max_trials=10_000,
                            seed=1, batch_trials=8)
        self.assertGreaterEqual(record.block_errors, 5)
        self.assertEqual(record.trials % 8, 0)
        self.assertLess(record.trials, 10_000)

    def test_high_snr_is_nearly_error_free(self):
        code = builtin_code('rep8-3')
        [record] = run_bler(code, make_decoder(code, 'ml'), [12.0], min_errors=1, max_trials=2000, seed=3)
        self.assertLess(record.bler, 1e-3)

    def test_sc_equals_single_path_list(self):
        code = builtin_code('ebch16-7')
        sc = run_bler(code, make_decoder(code, 'sc'), [2.0, 3.0], min_errors=20, max_trials=2000, seed=9)
        scl = run_bler(code, make_decoder(code, 'scl:1'), [2.0, 3.0], min_errors=20, max_trials=2000, seed=9)
        self.assertEqual([(r.trials, r.block_errors) for r in sc], [(r.trials, r.block_errors) for r in scl])

    def test_parallel_runs_are_identical(self):
        code = builtin_code('ebch16-7')
        decoder = make_decoder(code, 'pod:4:sc')
        kwargs = dict(min_errors=30, max_trials=3000, seed=4, batch_trials=64)
        serial = run_bler(code, decoder, [2.0, 3.0], workers=1, **kwargs)
        parallel = run_bler(code, decoder, [2.0, 3.0], workers=2, **kwargs)
        self.assertEqual([(r.trials, r.block_errors) for r in serial],
                         [(r.trials, r.block_errors) for r in parallel])

    def test_paired_trials(self):
        code = builtin_code('ebch16-7')
        sc = trial_errors(code, make_decoder(code, 'sc'), 2.0, seed=5, trials=500)
        ml = trial_errors(code, make_decoder(code, 'ml'), 2.0, seed=5, trials=500)
        self.assertEqual(sc.shape, (500,))
        self.assertLessEqual(ml.sum(), sc.sum())

    def test_csv_frame(self):
        code = builtin_code('rep8-3')
        records = run_bler(code, make_decoder(code, 'ml'), [1.0], min_errors=1, max_trials=50, seed=2,
                           label='ml')
        frame = records_frame(records, timing=False)
        self.assertEqual(list(frame.columns), CSV_COLUMNS)
        self.assertEqual(frame.loc[0, 'seconds'], '0.000')
        self.assertEqual(frame.loc[0, 'ebno_db'], '1.00')

    def test_default_csv_is_reproducible(self):
        code = builtin_code('ebch16-7')
        paths = []
        with tempfile.TemporaryDirectory() as tmp:
            for name in ('first.csv', 'second.csv'):
                records = run_bler(code, make_decoder(code, 'pod:4:sc'), [2.0, 3.0], min_errors=10,
                                   max_trials=400, seed=21, label='pod:4:sc')
                paths.append(write_csv(records, Path(tmp) / name))
            first, second = (path.read_bytes() for path in paths)
        self.assertEqual(first, second)
        self.assertTrue(all(row.endswith(',0.000') for row in first.decode().splitlines()[1:]))


class ExperimentConfigTests(SimpleTestCase):
    def test_parse(self):
        cfg = ExperimentConfig.from_text(
            '# desk run\ncode=ebch16-7\ndecoder=scl:8\ndecoder=pod:16:sc\n'
            'snr_start=3\nsnr_stop=5\nsnr_step=0.5\nmin_errors=50\ntiming=off\n'
        )
        self.assertEqual(cfg.snr, (3.0, 3.5, 4.0, 4.5, 5.0))
        self.assertEqual([d.text for d in cfg.decoders], ['scl:8', 'pod:16:sc'])
        self.assertEqual(cfg.min_errors, 50)
        self.assertEqual(cfg.max_trials, settings.SIMULATION_MAX_TRIALS)
        self.assertFalse(cfg.timing)
        self.assertEqual(cfg.with_overrides(seed=11).seed, 11)

    def test_defaults(self):
        cfg = ExperimentConfig.from_text(
            'code=egolay24-12\ndecoder=pod:4:scl:8\nsnr=3\nperm=search\nselection=distinct\n'
        )
        self.assertFalse(cfg.timing)
        self.assertTrue(cfg.search_base)
        self.assertIsNone(cfg.perm)
        self.assertEqual(cfg.selection, 'distinct')
        self.assertTrue(ExperimentConfig.from_text('code=rep8-3\ndecoder=sc\nsnr=1\ntiming=on\n').timing)

    def test_snr_list(self):
        cfg = ExperimentConfig.from_text('code=rep8-3\ndecoder=sc\nsnr=1, 2.5,4\n')
        self.assertEqual(cfg.snr, (1.0, 2.5, 4.0))

    def test_errors(self):
        cases = [
            'decoder=sc\nsnr=1\n',
            'code=rep8-3\nsnr=1\n',
            'code=rep8-3\ndecoder=sc\n',
            'code=rep8-3\ndecoder=sc\nsnr=\n',
            'code=rep8-3\ndecoder=sc\nsnr=1\nsnr_start=1\n',
            'code=rep8-3\ndecoder=sc\nsnr_start=5\nsnr_stop=1\nsnr_step=1\n',
            'code=rep8-3\ndecoder=bp\nsnr=1\n',
            'code=rep8-3\ndecoder=sc\nsnr=1\nmin_errors=0\n',
            'code=rep8-3\ndecoder=sc\nsnr=1\ntiming=maybe\n',
            'code=rep8-3\ndecoder=sc\nsnr=1\ncolour=red\n',
            'code=rep8-3\ndecoder=sc\nsnr=1\nseed=1\nseed=2\n',
            'code=missing.txt\ndecoder=sc\nsnr=1\n',
            'code=rep8-3\ndecoder=sc\nsnr=1\nperm=missing.perm\n',
            'code=rep8-3\ndecoder sc\n',
        ]
        for text in cases:
            with self.assertRaises(ConfigError, msg=text):
                ExperimentConfig.from_text(text)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            ExperimentConfig.from_file('/nonexistent/run.cfg')


class SimulateCommandTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write_config(self, body, name='run.cfg'):
        path = self.dir / name
        path.write_text(body)
        return path

    def simulate(self, config, **options):
        out = StringIO()
        call_command('simulate', config=str(config), stdout=out, **options)
        return out.getvalue()

    def test_single_point_single_decoder(self):
        out = self.dir / 'one.csv'
        config = self.write_config(f'code=rep8-3\ndecoder=sc\nsnr=2\nmax_trials=10\nout={out}\n')
        self.simulate(config)
        frame = pd.read_csv(out)
        self.assertEqual(len(frame), 1)
        self.assertEqual(int(frame.loc[0, 'trials']), 10)
        self.assertEqual(out.read_text().splitlines()[0], 'code,decoder,ebno_db,trials,block_errors,bler,seconds')

    def test_repeated_runs_are_byte_identical(self):
        body = ('code=ebch16-7\ndecoder=sc\ndecoder=scl:8\ndecoder=pod:4:sc\ndecoder=ml\ndecoder=hd:2\n'
                'snr=2,3\nmin_errors=20\nmax_trials=1500\ntiming=off\n')
        config = self.write_config(body)
        first, second = self.dir / 'a.csv', self.dir / 'b.csv'
        output = self.simulate(config, out=str(first), seed=77)
        self.simulate(config, out=str(second), seed=77, workers=2)
        self.assertEqual(first.read_bytes(), second.read_bytes())
        self.assertEqual(len(pd.read_csv(first)), 10)
        self.assertIn('theory', output)

    def test_diagnostics_lines(self):
        diagnostics = self.dir / 'diag.jsonl'
        config = self.write_config(
            f'code=ebch16-7\ndecoder=pod:4:sc\nsnr=3\nmax_trials=12\n'
            f'out={self.dir / "d.csv"}\ndiagnostics={diagnostics}\n'
        )
        self.simulate(config)
        lines = [orjson.loads(line) for line in diagnostics.read_bytes().splitlines()]
        self.assertEqual(len(lines), 12)
        self.assertEqual(lines[0]['decoder'], 'pod:4:sc')
        self.assertEqual(len(lines[0]['branch_metrics']), 4)
        self.assertEqual([line['trial'] for line in lines], list(range(12)))

    def test_code_from_files(self):
        matrix = self.dir / 'rep.txt'
        matrix.write_text(format_matrix(builtin_code('rep8-3').g))
        out = self.dir / 'files.csv'
        config = self.write_config(f'code=rep.txt\ndecoder=scl:2\nsnr=3\nmax_trials=8\nout={out}\n')
        self.simulate(config)
        self.assertEqual(pd.read_csv(out).loc[0, 'code'], 'rep')

    def test_config_error_exit_code(self):
        config = self.write_config('code=rep8-3\ndecoder=bp\nsnr=1\n')
        with self.assertRaises(CommandError) as ctx:
            self.simulate(config)
        self.assertEqual(ctx.exception.returncode, 1)

    def test_pod_without_generators_is_a_config_error(self):
        matrix = self.dir / 'rep.txt'
        matrix.write_text(format_matrix(builtin_code('rep8-3').g))
        config = self.write_config('code=rep.txt\ndecoder=pod:2:sc\nsnr=1\n')
        with self.assertRaises(CommandError) as ctx:
            self.simulate(config)
        self.assertEqual(ctx.exception.returncode, 1)

    def test_capacity_exit_code(self):
        config = self.write_config('code=ebch64-36\ndecoder=ml\nsnr=1\n')
        with self.assertRaises(CommandError) as ctx:
            self.simulate(config)
        self.assertEqual(ctx.exception.returncode, 3)


class BlerOrderingTests(SimpleTestCase):
    """Paired-trial error counts on fixed noise; small enough to run on every test pass."""

    def errors(self, code, descriptor, eb_n0_db, trials, base=None, seed=31):
        decoder = make_decoder(code, descriptor, base, selection='distinct')
        return int(trial_errors(code, decoder, eb_n0_db, seed=seed, trials=trials).sum())

    def test_ebch16_7(self):
        code = builtin_code('ebch16-7')
        counts = {d: self.errors(code, d, 2.5, 1000) for d in ('sc', 'scl:8', 'pod:16:sc', 'ml')}
        self.assertLess(counts['pod:16:sc'], counts['sc'])
        self.assertLessEqual(counts['pod:16:sc'], 1.5 * counts['scl:8'] + 5)
        self.assertLessEqual(counts['scl:8'], 1.5 * counts['ml'] + 5)
        self.assertLessEqual(counts['ml'], counts['pod:16:sc'] + 3)

    def test_ebch64_16(self):
        code = builtin_code('ebch64-16')
        counts = {d: self.errors(code, d, 2.0, 300) for d in ('scl:64', 'pod:8:scl:8', 'ml')}
        self.assertLessEqual(counts['scl:64'], 1.5 * counts['ml'] + 5)
        self.assertLessEqual(counts['pod:8:scl:8'], 1.5 * counts['scl:64'] + 5)

    def test_golay_with_searched_base(self):
        code = builtin_code('egolay24-12')
        base = searched_base(code)
        counts = {d: self.errors(code, d, 3.0, 300, base) for d in ('scl:32', 'pod:4:scl:8', 'ml')}
        self.assertLessEqual(counts['scl:32'], 1.5 * counts['ml'] + 5)
        self.assertLessEqual(counts['pod:4:scl:8'], 1.5 * counts['scl:32'] + 5)


@unittest.skipUnless(settings.RUN_SLOW_TESTS, 'set POD_RUN_SLOW_TESTS=true for BLER curve checks')
class BlerCurveTests(SimpleTestCase):
    """Desk-scale reproductions of the published BLER curves."""

    def run_decoder(self, code, descriptor, points, seed=2026, base=None):
        decoder = make_decoder(code, descriptor, base, selection='distinct')
        return run_bler(code, decoder, points, min_errors=100,
                        max_trials=2_000_000, seed=seed, label=descriptor)

    def test_ebch16_7_pod16_matches_scl8(self):
        code = builtin_code('ebch16-7')
        points = [3.0, 4.0, 5.0]
        pod = self.run_decoder(code, 'pod:16:sc', points)
        scl = self.run_decoder(code, 'scl:8', points)
        ml = self.run_decoder(code, 'ml', [5.0])
        for a, b in zip(pod, scl):
            self.assertTrue(overlapping(a, b), f"{a} vs {b}")
        self.assertTrue(overlapping(pod[-1], ml[0]))
        self.assertTrue(overlapping(scl[-1], ml[0]))

    def test_ebch64_16_pod8_scl8_matches_scl64(self):
        code = builtin_code('ebch64-16')
        pod = self.run_decoder(code, 'pod:8:scl:8', [3.0])
        scl = self.run_decoder(code, 'scl:64', [3.0])
        ml = self.run_decoder(code, 'ml', [3.0])
        self.assertTrue(overlapping(pod[0], scl[0]))
        self.assertTrue(overlapping(pod[0], ml[0]))

    def test_golay_same_effective_list(self):
        code = builtin_code('egolay24-12')
        points = [3.0, 4.0]
        base = searched_base(code)
        pod = self.run_decoder(code, 'pod:4:scl:8', points, base=base)
        scl = self.run_decoder(code, 'scl:32', points, base=base)
        for a, b in zip(pod, scl):
            self.assertTrue(overlapping(a, b), f"{a} vs {b}")
        ml = self.run_decoder(code, 'ml', points)
        for a, b in zip(ml, scl):
            self.assertLessEqual(a.interval()[0], b.interval()[1])

    def test_bler_decreases_with_snr(self):
        code = builtin_code('ebch16-7')
        records = self.run_decoder(code, 'pod:4:sc', [2.0, 3.0, 4.0, 5.0])
        for low, high in zip(records, records[1:]):
            self.assertGreaterEqual(low.interval()[1], high.interval()[0])

    def test_hard_decision_simulation_matches_theory(self):
        code = builtin_code('ebch16-7')
        [record] = run_bler(code, make_decoder(code, 'hd:2'), [4.0], min_errors=1000,
                            max_trials=200_000, seed=8)
        lo, hi = record.interval(0.999)
        self.assertTrue(lo <= hd_theoretical_bler(16, 7, 2, 4.0) <= hi)

import itertools

import numpy as np
from django.test import SimpleTestCase

from algebra.gf2 import BitMatrix, matmul, rref_with_transform
from algebra.permgroup import Permutation, act_on_rows, apply, compose, inverse
from codes.families import bch_code, codewords
from codes.services import builtin_code, group_of
from orbitdecoding.exceptions import (
    AutomorphismViolationError, CapacityError, InputError, ShapeError, ValidationError,
)
from simulations.baselines import MaximumLikelihoodDecoder
from simulations.channel import ChannelPoint, draw_batch, modulate_with_noise
from .decoders import ListDecoder, bit_node, check_node, path_penalty, sc_decode, scl_decode
from .kernel import (
    DynamicFrozenSpec, PolarSpec, bhattacharyya_parameters, is_lower_triangular_affine, kronecker_power,
    next_power_of_two, polar_encode, synthetic_bhattacharyya,
)
from .orbit import PodDecoder, _combine_batch, build_pod, combine, pod_decode, single_transform
from .transform import (
    branch_dress, codebook, embed_generator, encode_message, polar_transform, recover_message, recover_messages,
    sc_error_bound, search_base, verify_automorphism,
)

REPETITION = BitMatrix.from_rows(['11100000', '00011100', '00000011'])
P1 = Permutation.from_cycles(8, [(0, 3), (1, 4), (2, 5)])
P2 = Permutation.from_cycles(8, [(0, 1)])
SPEC8 = PolarSpec.of_length(8)


def noiseless(c):
    return 20.0 * (1.0 - 2.0 * np.asarray(c, dtype=np.float64))


def noisy_trials(code, eb_n0_db, count, seed=2026):
    messages, noise = draw_batch(seed, 0, 0, count, code.k, code.n)
    c = (messages.astype(np.int64) @ code.g.to_dense() % 2).astype(np.uint8)
    return messages, modulate_with_noise(c, noise, ChannelPoint(eb_n0_db, code.rate))


class KernelTests(SimpleTestCase):
    def test_kronecker_power(self):
        np.testing.assert_array_equal(kronecker_power(1), [[1, 0], [1, 1]])
        g4 = kronecker_power(2)
        np.testing.assert_array_equal(g4[3], [1, 1, 1, 1])
        np.testing.assert_array_equal(g4[:, 3], [0, 0, 0, 1])

    def test_of_length(self):
        self.assertEqual(PolarSpec.of_length(32).m, 5)
        with self.assertRaises(ShapeError):
            PolarSpec.of_length(24)
        self.assertEqual(next_power_of_two(24), 32)
        self.assertEqual(next_power_of_two(16), 16)

    def test_encode_matches_matrix_product(self):
        rng = np.random.default_rng(1)
        u = rng.integers(0, 2, size=(6, 16), dtype=np.uint8)
        spec = PolarSpec.of_length(16)
        np.testing.assert_array_equal(polar_encode(spec, u), (u.astype(int) @ kronecker_power(4)) % 2)

    def test_encode_is_involution(self):
        u = np.array([1, 0, 1, 1, 0, 0, 1, 0], dtype=np.uint8)
        np.testing.assert_array_equal(polar_encode(SPEC8, polar_encode(SPEC8, u)), u)

    def test_frozen_spec_validation(self):
        with self.assertRaises(ValidationError):
            DynamicFrozenSpec(n=4, k=1, pivots=(2,), constraints={0: (), 1: ()})
        with self.assertRaises(ValidationError):
            DynamicFrozenSpec(n=4, k=1, pivots=(2,), constraints={0: (0,), 1: (), 3: ()})

    def test_expand_fills_constraints(self):
        df = DynamicFrozenSpec(n=4, k=2, pivots=(1, 2), constraints={0: (), 3: (0, 1)})
        u = df.expand(np.array([[1, 0], [1, 1]], dtype=np.uint8))
        np.testing.assert_array_equal(u, [[0, 1, 0, 1], [0, 1, 1, 0]])
        self.assertTrue(df.satisfied_by(u[0]))
        self.assertFalse(df.satisfied_by([0, 1, 0, 0]))

    def test_bhattacharyya_ordering(self):
        z = bhattacharyya_parameters(1, 0.5)
        z0 = np.exp(-1.0)
        np.testing.assert_allclose(z, [2 * z0 - z0 * z0, z0 * z0])
        z3 = bhattacharyya_parameters(3, 0.5)
        self.assertEqual(int(np.argmax(z3)), 0)
        self.assertEqual(int(np.argmin(z3)), 7)

    def test_padded_channels_are_perfect(self):
        z = synthetic_bhattacharyya(np.array([0.5, 0.0]))
        np.testing.assert_allclose(z, [0.5, 0.0])
        uniform = synthetic_bhattacharyya(np.full(8, np.exp(-1.0)))
        np.testing.assert_allclose(uniform, bhattacharyya_parameters(3, 0.5))

    def test_lower_triangular_affine(self):
        index = np.arange(16)
        self.assertTrue(is_lower_triangular_affine(index))
        self.assertTrue(is_lower_triangular_affine(index ^ 5))
        self.assertTrue(is_lower_triangular_affine(Permutation.from_cycles(4, [(1, 3)]).images))
        self.assertFalse(is_lower_triangular_affine(Permutation.from_cycles(4, [(2, 3)]).images))
        self.assertFalse(is_lower_triangular_affine(Permutation.from_cycles(4, [(1, 2)]).images))


class DecoderPrimitiveTests(SimpleTestCase):
    def test_check_node_matches_exact_formula(self):
        rng = np.random.default_rng(4)
        a, b = rng.normal(0, 6, size=(2, 500))
        exact = 2 * np.arctanh(np.tanh(a / 2) * np.tanh(b / 2))
        np.testing.assert_allclose(check_node(a, b), exact, atol=1e-9)

    def test_check_node_min_sum(self):
        np.testing.assert_allclose(check_node(np.array([3.0, -2.0]), np.array([-1.0, -5.0]), True), [-1.0, 2.0])

    def test_check_node_is_finite_for_large_inputs(self):
        self.assertTrue(np.all(np.isfinite(check_node(np.array([1e6, -1e6]), np.array([1e6, 3.0])))))

    def test_bit_node(self):
        np.testing.assert_allclose(bit_node(np.array([2.0, 2.0]), np.array([1.0, 1.0]), np.array([0, 1])), [3.0, -1.0])

    def test_path_penalty(self):
        llr = np.array([3.0, -3.0])
        np.testing.assert_allclose(path_penalty(llr, np.array([0, 0])), np.log1p(np.exp([-3.0, 3.0])))
        np.testing.assert_allclose(path_penalty(llr, np.array([0, 0]), 'approx'), [0.0, 3.0])


class ExampleTransformTests(SimpleTestCase):
    """The (8,3) block repetition code under the block swap and a first-block transposition."""

    expected_m = BitMatrix.from_rows(['10110100', '01010100', '00000001'])

    def test_both_automorphisms_give_the_same_frozen_matrix(self):
        r1 = polar_transform(REPETITION, P1, SPEC8)
        r2 = polar_transform(REPETITION, P2, SPEC8)
        self.assertEqual(r1.m_p, r2.m_p)
        self.assertEqual(r1.m_p, self.expected_m)
        self.assertEqual(r1.pivots, (0, 1, 7))

    def test_frozen_matrix_is_reduced_form_of_projected_generator(self):
        reduced, _, _ = rref_with_transform(matmul(REPETITION, SPEC8.generator))
        self.assertEqual(polar_transform(REPETITION, P1, SPEC8).m_p, reduced)

    def test_block_swap_elimination_is_row_swap(self):
        _, elim, _ = rref_with_transform(act_on_rows(inverse(P1), REPETITION))
        self.assertEqual(elim, BitMatrix.from_rows(['010', '100', '001']))
        self.assertEqual(matmul(elim, act_on_rows(inverse(P1), REPETITION)), REPETITION)

    def test_dynamic_frozen_constraints(self):
        df = polar_transform(REPETITION, P1, SPEC8).df
        self.assertEqual(df.constraints, {2: (0,), 3: (0, 1), 4: (), 5: (0, 1), 6: ()})
        self.assertEqual(df.dynamic_count, 3)
        self.assertEqual(df.frozen_indices, [2, 3, 4, 5, 6])

    def test_encode_and_recover_every_message(self):
        result = polar_transform(REPETITION, P1, SPEC8)
        for message in itertools.product((0, 1), repeat=3):
            c = encode_message(result, message)
            np.testing.assert_array_equal(c, (np.array(message) @ REPETITION.to_dense()) % 2)
            u = polar_encode(SPEC8, apply(inverse(P1), c))
            np.testing.assert_array_equal(recover_message(result, u), message)
            np.testing.assert_array_equal(recover_messages(result.e_p_dense, result.pivots, u[None]), [message])

    def test_recover_rejects_inconsistent_u(self):
        result = polar_transform(REPETITION, P1, SPEC8)
        with self.assertRaises(ValidationError):
            recover_message(result, [1, 0, 0, 0, 0, 0, 0, 0])

    def test_codebook_matches_code(self):
        expected = {row.tobytes() for row in codewords(REPETITION)}
        for p in (P1, P2, Permutation.identity(8)):
            self.assertEqual(codebook(polar_transform(REPETITION, p, SPEC8)), expected)

    def test_non_automorphism_is_rejected(self):
        result = polar_transform(REPETITION, Permutation.identity(8), SPEC8)
        cross = Permutation.from_cycles(8, [(2, 7)])
        self.assertFalse(verify_automorphism(REPETITION, cross))
        with self.assertRaises(AutomorphismViolationError):
            branch_dress(result, cross)

    def test_rank_deficient_generator(self):
        with self.assertRaises(ValidationError):
            polar_transform(BitMatrix.from_rows(['11000000', '11000000']), P1, SPEC8)

    def test_embedding(self):
        embedded = embed_generator(REPETITION.select_columns(range(6)), 8)
        self.assertEqual(embedded.shape, (3, 8))
        self.assertEqual(embedded.select_columns([6, 7]), BitMatrix.zeros(3, 2))
        with self.assertRaises(ShapeError):
            embed_generator(REPETITION, 4)

    def test_sc_error_bound_falls_with_snr(self):
        result = polar_transform(REPETITION, P1, SPEC8)
        self.assertGreater(sc_error_bound(result, 0.0), sc_error_bound(result, 4.0))


class InformationSetTests(SimpleTestCase):
    def test_ebch16_7_pivots_sit_on_reliable_channels(self):
        result = single_transform(builtin_code('ebch16-7'))
        self.assertEqual(result.pivots, (3, 5, 7, 11, 13, 14, 15))
        self.assertLess(sc_error_bound(result, 4.0), 1.0)

    def test_binary_labeling_beats_cyclic_labeling(self):
        binary = single_transform(builtin_code('ebch64-16'))
        cyclic = single_transform(bch_code(6, 23, labeling='cyclic'))
        self.assertEqual(cyclic.df.k, 16)
        self.assertLess(sc_error_bound(binary, 4.0), sc_error_bound(cyclic, 4.0))

    def test_binary_translation_flips_the_low_bit(self):
        code = builtin_code('ebch16-7')
        translate = code.aut_generators[1]
        np.testing.assert_array_equal(translate.images, np.arange(16) ^ 1)
        self.assertTrue(is_lower_triangular_affine(translate.images))

    def test_orbit_shares_the_bound(self):
        code = builtin_code('egolay24-12')
        result = single_transform(code)
        bound = sc_error_bound(result, 3.0, code.n)
        rng = np.random.default_rng(5)
        for _ in range(5):
            h = group_of(code).sample_uniform(rng).extended(32)
            self.assertAlmostEqual(sc_error_bound(branch_dress(result, h), 3.0, code.n), bound)

    def test_padding_is_known(self):
        code = builtin_code('egolay24-12')
        result = single_transform(code)
        # padded coordinates 24..31 enter with Z = 0
        self.assertLess(sc_error_bound(result, 3.0, code.n),
                        sc_error_bound(result, 3.0 + 10 * np.log10(32 / 24), 32) + 1e-12)

    def test_search_improves_and_is_reproducible(self):
        code = builtin_code('egolay24-12')
        spec = PolarSpec.of_length(32)
        start = sc_error_bound(single_transform(code), 4.0, code.n)
        base, bound = search_base(code.g, spec, 4.0, 300, seed=11)
        again, _ = search_base(code.g, spec, 4.0, 300, seed=11)
        self.assertEqual(base, again)
        self.assertLessEqual(bound, start)
        found = single_transform(code, base)
        self.assertEqual(len(found.pivots), code.k)
        self.assertAlmostEqual(sc_error_bound(found, 4.0, code.n), bound)

    def test_search_without_iterations_keeps_the_start(self):
        base, _ = search_base(REPETITION, SPEC8, 2.0, 0, start=P1)
        self.assertEqual(base, P1)
        with self.assertRaises(ValidationError):
            search_base(REPETITION, SPEC8, 2.0, -1)


class ListDecoderTests(SimpleTestCase):
    def setUp(self):
        self.result = polar_transform(REPETITION, P1, SPEC8)

    def test_sc_decodes_noiseless_words(self):
        for message in itertools.product((0, 1), repeat=3):
            c = encode_message(self.result, message)
            path = sc_decode(SPEC8, self.result.df, noiseless(apply(inverse(P1), c)))
            np.testing.assert_array_equal(recover_message(self.result, path.u_hat), message)

    def test_list_is_sorted_and_consistent(self):
        llr = np.array([1.2, -0.3, 0.8, 2.0, -1.1, 0.4, 0.1, -0.2])
        paths = scl_decode(SPEC8, self.result.df, llr, 8)
        self.assertEqual(len(paths), 8)
        metrics = [p.metric for p in paths]
        self.assertEqual(metrics, sorted(metrics))
        self.assertEqual(len({p.u_hat.tobytes() for p in paths}), 8)
        for p in paths:
            self.assertTrue(self.result.df.satisfied_by(p.u_hat))

    def test_single_path_list_equals_sc(self):
        llr = np.array([0.2, -0.3, 0.8, -2.0, -1.1, 0.4, 0.1, -0.2])
        sc = sc_decode(SPEC8, self.result.df, llr)
        scl = scl_decode(SPEC8, self.result.df, llr, 1)[0]
        np.testing.assert_array_equal(sc.u_hat, scl.u_hat)
        self.assertEqual(sc.metric, scl.metric)

    def test_invalid_input(self):
        decoder = ListDecoder(SPEC8, self.result.df, 2)
        with self.assertRaises(InputError):
            decoder.decode_batch(np.full((1, 8), np.nan))
        with self.assertRaises(ShapeError):
            decoder.decode_batch(np.zeros((1, 4)))
        with self.assertRaises(ValidationError):
            ListDecoder(SPEC8, self.result.df, 0)

    def test_full_list_is_maximum_likelihood(self):
        code = builtin_code('rep8-3')
        messages, llrs = noisy_trials(code, 1.0, 10_000)
        full_list = PodDecoder(build_pod(code, None, None, 1, list_size=8, combiner='best-metric'))
        decoded, _ = full_list.decode_batch(llrs)
        ml, _ = MaximumLikelihoodDecoder(code, 20).decode_batch(llrs)
        np.testing.assert_array_equal(decoded, ml)
        self.assertGreater(int(np.any(decoded != messages, axis=1).sum()), 0)

    def test_best_full_list_metric_never_exceeds_sc_metric(self):
        for name in ('rep8-3', 'ebch16-7'):
            code = builtin_code(name)
            result = single_transform(code)
            _, llrs = noisy_trials(code, 1.0, 40, seed=8)
            sc = ListDecoder(result.spec, result.df, 1).decode_batch(llrs)
            full = ListDecoder(result.spec, result.df, 2 ** code.k).decode_batch(llrs)
            self.assertTrue(np.all(full.metrics[:, 0] <= sc.metrics[:, 0] + 1e-9))
            self.assertTrue(np.all(np.diff(full.metrics, axis=1) >= 0))


class OrbitInvarianceTests(SimpleTestCase):
    def check_code(self, name):
        code = builtin_code(name)
        group = group_of(code)
        n = next_power_of_two(code.n)
        result = single_transform(code)
        rng = np.random.default_rng(42)
        for _ in range(200):
            h = group.sample_uniform(rng)
            self.assertEqual(branch_dress(result, h.extended(n)).m_p, result.m_p)
        with self.assertRaises(AutomorphismViolationError):
            branch_dress(result, Permutation.from_cycles(n, [(0, 1)]))

    def test_ebch16_7(self):
        self.check_code('ebch16-7')

    def test_ebch64_16(self):
        self.check_code('ebch64-16')

    def test_ebch64_36(self):
        self.check_code('ebch64-36')

    def test_egolay24_12(self):
        self.check_code('egolay24-12')

    def test_branch_codebooks_match_code(self):
        code = builtin_code('ebch16-7')
        cfg = build_pod(code, None, group_of(code), 4)
        expected = {row.tobytes() for row in codewords(code.g)}
        for branch in cfg.branches:
            result = polar_transform(code.g, branch.perm, cfg.spec)
            self.assertEqual(codebook(result), expected)


class PodTests(SimpleTestCase):
    def test_build_pod_branches(self):
        code = builtin_code('ebch16-7')
        cfg = build_pod(code, None, group_of(code), 16)
        self.assertEqual(cfg.m, 16)
        self.assertEqual(cfg.label, 'pod16-sc')
        self.assertTrue(cfg.branches[0].perm.is_identity)
        self.assertEqual(len({b.perm for b in cfg.branches}), 16)

    def test_sampled_branches_are_reproducible(self):
        code = builtin_code('ebch16-7')
        group = group_of(code)
        a = build_pod(code, None, group, 8, selection='sample', seed=9)
        b = build_pod(code, None, group, 8, selection='sample', seed=9)
        self.assertEqual([x.perm for x in a.branches], [x.perm for x in b.branches])
        self.assertTrue(a.branches[0].perm.is_identity)

    def test_distinct_branches_are_not_affine_relabellings(self):
        code = builtin_code('ebch16-7')
        group = group_of(code)
        cfg = build_pod(code, None, group, 8, selection='distinct')
        self.assertTrue(cfg.branches[0].perm.is_identity)
        images = [b.perm.images for b in cfg.branches]
        for i, j in itertools.combinations(range(8), 2):
            self.assertFalse(is_lower_triangular_affine(np.argsort(images[i])[images[j]]))
        smaller = build_pod(code, None, group, 4, selection='distinct')
        self.assertEqual([b.perm for b in smaller.branches], [b.perm for b in cfg.branches[:4]])
        translate = compose(Permutation.identity(16), code.aut_generators[1])
        self.assertNotIn(translate, [b.perm for b in cfg.branches])

    def test_distinct_selection_pads_with_equivalent_branches(self):
        code = builtin_code('ebch16-7')
        with self.assertLogs('polar.orbit', level='WARNING') as logs:
            cfg = build_pod(code, None, group_of(code), 960, selection='distinct')
        self.assertIn('pairwise distinct', logs.output[0])
        self.assertEqual(len({b.perm for b in cfg.branches}), 960)
        with self.assertRaises(CapacityError):
            build_pod(code, None, group_of(code), 961, selection='distinct')
        with self.assertRaises(ValidationError):
            build_pod(code, None, group_of(code), 2, selection='shuffle')

    def test_too_many_branches(self):
        code = builtin_code('rep8-3')
        with self.assertRaises(CapacityError):
            build_pod(code, None, group_of(code), 145)

    def test_invalid_settings(self):
        code = builtin_code('rep8-3')
        with self.assertRaises(ValidationError):
            build_pod(code, None, group_of(code), 0)
        with self.assertRaises(ValidationError):
            build_pod(code, None, None, 2)
        with self.assertRaises(ValidationError):
            build_pod(code, None, group_of(code), 2, combiner='vote')

    def test_noiseless_decoding(self):
        for name in ('rep8-3', 'ebch16-7', 'egolay24-12'):
            code = builtin_code(name)
            decoder = PodDecoder(build_pod(code, None, group_of(code), 4, list_size=2), workers=2)
            messages, _ = noisy_trials(code, 3.0, 20)
            c = (messages.astype(np.int64) @ code.g.to_dense() % 2).astype(np.uint8)
            decoded, _ = decoder.decode_batch(noiseless(c))
            np.testing.assert_array_equal(decoded, messages)

    def test_diagnostics(self):
        code = builtin_code('ebch16-7')
        cfg = build_pod(code, None, group_of(code), 4)
        message, diagnostics = pod_decode(cfg, noiseless(np.zeros(16)))
        np.testing.assert_array_equal(message, np.zeros(7))
        self.assertEqual(len(diagnostics.branch_metrics), 4)
        self.assertEqual(diagnostics.branch_valid, [True] * 4)
        self.assertEqual(diagnostics.distinct_candidates, 1)
        self.assertEqual(diagnostics.winner, 0)
        self.assertFalse(diagnostics.fallback)
        self.assertEqual(set(diagnostics.as_dict()), {
            'branch_metrics', 'branch_valid', 'distinct_candidates', 'winner', 'fallback',
        })

    def test_thread_pool_does_not_change_results(self):
        code = builtin_code('ebch16-7')
        cfg = build_pod(code, None, group_of(code), 8)
        _, llrs = noisy_trials(code, 2.0, 64)
        serial, _ = PodDecoder(cfg, workers=1).decode_batch(llrs)
        threaded, _ = PodDecoder(cfg, workers=4).decode_batch(llrs)
        np.testing.assert_array_equal(serial, threaded)

    def test_pod_never_loses_to_its_first_branch_unless_ml_does(self):
        code = builtin_code('ebch16-7')
        group = group_of(code)
        messages, llrs = noisy_trials(code, 2.0, 2000)
        sc = PodDecoder(build_pod(code, None, None, 1, combiner='best-metric'))
        pod = PodDecoder(build_pod(code, None, group, 16))
        ml = MaximumLikelihoodDecoder(code, 20)
        sc_err = np.any(sc.decode_batch(llrs)[0] != messages, axis=1)
        pod_err = np.any(pod.decode_batch(llrs)[0] != messages, axis=1)
        ml_err = np.any(ml.decode_batch(llrs)[0] != messages, axis=1)
        self.assertFalse(np.any(pod_err & ~sc_err & ~ml_err))
        self.assertLessEqual(ml_err.sum(), pod_err.sum())
        self.assertLessEqual(pod_err.sum(), sc_err.sum())

    def test_winner_correlation_grows_with_branches(self):
        code = builtin_code('ebch16-7')
        group = group_of(code)
        _, llrs = noisy_trials(code, 2.0, 500)
        previous = None
        for m in (1, 2, 4, 8, 16):
            decoder = PodDecoder(build_pod(code, None, group, m))
            messages, _ = decoder.decode_batch(llrs)
            c = (messages.astype(np.int64) @ code.g.to_dense() % 2)
            score = ((1.0 - 2.0 * c) * llrs).sum(axis=1)
            if previous is not None:
                self.assertTrue(np.all(score >= previous - 1e-9))
            previous = score

    def test_combiner_modes(self):
        h = BitMatrix.from_rows(['11'])
        llr = np.array([1.0, 1.0])
        words = [[(np.array([1, 0]), 0.1)], [(np.array([0, 0]), 0.5), (np.array([1, 1]), 0.2)]]
        self.assertEqual(combine(words, llr, h, 'best-metric')[0], 0)
        branch, (word, _) = combine(words, llr, h, 'ml-among-valid')
        self.assertEqual(branch, 1)
        np.testing.assert_array_equal(word, [0, 0])

    def test_combiner_fallback(self):
        candidates = np.array([[[1, 0], [0, 1]]], dtype=np.uint8)
        winner, valid, fallback = _combine_batch(
            candidates, np.array([[0.7, 0.3]]), np.array([[1.0, 1.0]]), np.array([[1, 1]]), 'ml-among-valid',
        )
        self.assertEqual(int(winner[0]), 1)
        self.assertFalse(valid.any())
        self.assertTrue(fallback[0])

    def test_fallback_is_logged_as_warning(self):
        code = builtin_code('rep8-3')
        decoder = PodDecoder(build_pod(code, None, group_of(code), 2))
        decoder.h_check = np.array([[1, 0, 0, 0, 0, 0, 0, 0]], dtype=np.uint8)
        with self.assertLogs('polar.orbit', level='WARNING') as logs:
            _, diagnostics = decoder.decode_batch(noiseless([[1, 1, 1, 0, 0, 0, 0, 0]]), with_diagnostics=True)
        self.assertIn('fell back to best-metric', logs.output[0])
        self.assertTrue(diagnostics[0].fallback)

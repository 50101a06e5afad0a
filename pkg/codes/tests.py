import itertools
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.cache import cache
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from algebra.gf2 import BitMatrix, matmul
from algebra.permgroup import Permutation, compose, schreier_sims
from algebra.textio import format_generator_set, format_matrix, format_permutation
from orbitdecoding.exceptions import AutomorphismViolationError, ConfigError, LabelingError, ValidationError
from polar.kernel import kronecker_power
from polar.transform import verify_automorphism
from .families import (
    CodeSpec, agl_generators, bch_code, bch_generator, codewords, extend_code, gray_messages, m24_generators,
    minimum_distance, parity_from_generator, repetition_block_code, verify_code, weight_distribution,
)
from .fields import GF2mField
from .services import builtin_code, group_of, load_code, resolve_code


def poly_mod(a: int, b: int) -> int:
    while a and a.bit_length() >= b.bit_length():
        a ^= b << (a.bit_length() - b.bit_length())
    return a


class FieldTests(SimpleTestCase):
    def test_tables_are_inverse(self):
        for m in (3, 4, 6, 10):
            field = GF2mField(m)
            for x in range(1, field.size):
                self.assertEqual(field.alpha_power(field.log[x]), x)
            self.assertEqual(field.alpha_power(field.order), 1)

    def test_multiplication_and_inverse(self):
        field = GF2mField(4)
        for x in range(1, 16):
            self.assertEqual(field.mul(x, field.inverse(x)), 1)
        self.assertEqual(field.mul(0, 7), 0)
        with self.assertRaises(ZeroDivisionError):
            field.inverse(0)

    def test_cyclotomic_coset(self):
        field = GF2mField(4)
        self.assertEqual(field.cyclotomic_coset(1), [1, 2, 4, 8])
        self.assertEqual(field.cyclotomic_coset(5), [5, 10])

    def test_coordinate_labels(self):
        field = GF2mField(3)
        self.assertEqual(field.position_of(0), 7)
        self.assertEqual(field.element_at(7), 0)
        self.assertEqual(field.element_at(0), 1)
        self.assertEqual(sorted(field.positions), list(range(8)))

    def test_unsupported_degree(self):
        with self.assertRaises(ValidationError):
            GF2mField(11)


class ConstructionTests(SimpleTestCase):
    def test_bch_generator_polynomial(self):
        field = GF2mField(4)
        poly = bch_generator(field, 5)
        self.assertEqual(poly, 0b111010001)
        self.assertEqual(poly_mod((1 << 15) | 1, poly), 0)

    def test_bch_dimensions(self):
        field = GF2mField(6)
        self.assertEqual(63 - (bch_generator(field, 23).bit_length() - 1), 16)
        self.assertEqual(63 - (bch_generator(field, 11).bit_length() - 1), 36)

    def test_bch_design_distance_range(self):
        with self.assertRaises(ValidationError):
            bch_generator(GF2mField(4), 1)
        with self.assertRaises(ValidationError):
            bch_generator(GF2mField(4), 16)

    def test_extend_code(self):
        self.assertEqual(extend_code(BitMatrix.from_rows(['111'])), BitMatrix.from_rows(['1111']))

    def test_extended_bch_16_7(self):
        code = builtin_code('ebch16-7')
        self.assertEqual((code.n, code.k, code.d), (16, 7, 6))
        self.assertTrue(all(w % 2 == 0 for w in weight_distribution(code.g)))

    def test_extended_bch_64(self):
        low = builtin_code('ebch64-16')
        self.assertEqual((low.n, low.k, low.d), (64, 16, 24))
        high = builtin_code('ebch64-36')
        self.assertEqual((high.n, high.k), (64, 36))
        self.assertTrue(matmul(high.g, high.h.T).is_zero())

    def test_bch_labelings_give_equivalent_codes(self):
        binary = builtin_code('ebch16-7')
        cyclic = bch_code(4, 5, 'ebch16-7-cyclic', labeling='cyclic')
        self.assertEqual(weight_distribution(binary.g), weight_distribution(cyclic.g))
        self.assertEqual(group_of(binary).order(), group_of(cyclic).order())
        with self.assertRaises(ValidationError):
            bch_code(4, 5, labeling='gray')

    def test_golay(self):
        code = builtin_code('egolay24-12')
        self.assertEqual((code.n, code.k), (24, 12))
        self.assertTrue(matmul(code.g, code.g.T).is_zero())
        self.assertEqual(weight_distribution(code.g), {0: 1, 8: 759, 12: 2576, 16: 759, 24: 1})
        self.assertEqual(minimum_distance(code.g), 8)

    def test_repetition(self):
        code = repetition_block_code()
        self.assertEqual(code.g.row(0).tolist(), [1, 1, 1, 0, 0, 0, 0, 0])
        for word in codewords(code.g):
            self.assertFalse(np.any(matmul(BitMatrix.from_dense(word[None]), code.h.T).to_dense()))
        self.assertFalse(verify_automorphism(code.g, Permutation.from_cycles(8, [(2, 6)])))

    def test_parity_of_systematic_generator(self):
        g = BitMatrix.from_rows(['1001', '0111'])
        self.assertEqual(parity_from_generator(g), BitMatrix.from_rows(['0110', '1101']))

    def test_parity_of_rank_deficient_generator(self):
        with self.assertRaises(ValidationError):
            parity_from_generator(BitMatrix.from_rows(['1100', '1100']))

    def test_gray_order(self):
        g = BitMatrix.from_rows(['1100', '0110', '0011'])
        words = codewords(g)
        messages = gray_messages(3)
        np.testing.assert_array_equal(words, messages.astype(int) @ g.to_dense() % 2)
        self.assertEqual(len({m.tobytes() for m in messages}), 8)
        steps = np.abs(np.diff(messages.astype(int), axis=0)).sum(axis=1)
        self.assertTrue(np.all(steps == 1))

    def test_verify_code_names_bad_generator(self):
        code = repetition_block_code()
        broken = CodeSpec(name='broken', n=8, k=3, d=2, g=code.g, h=code.h,
                          aut_generators=(Permutation.from_cycles(8, [(2, 6)]),))
        with self.assertRaisesMessage(LabelingError, '(2 6)'):
            verify_code(broken)


class GroupOrderTests(SimpleTestCase):
    def test_affine_semilinear_orders(self):
        for m, expected in ((3, 168), (4, 960), (6, 24192)):
            field = GF2mField(m)
            for labeling in ('cyclic', 'binary'):
                group = schreier_sims(field.size, agl_generators(field, labeling))
                self.assertEqual(group.order(), expected)

    def test_frobenius_has_order_m(self):
        field = GF2mField(4)
        frobenius = agl_generators(field)[2]
        power = frobenius
        for _ in range(3):
            self.assertFalse(power.is_identity)
            power = compose(power, frobenius)
        self.assertTrue(power.is_identity)

    def test_affine_generators_preserve_ebch(self):
        code = builtin_code('ebch16-7')
        for h in code.aut_generators:
            self.assertTrue(verify_automorphism(code.g, h))

    def test_mathieu_group(self):
        code = builtin_code('egolay24-12')
        for h in m24_generators():
            self.assertTrue(verify_automorphism(code.g, h))
        group = group_of(code)
        self.assertEqual(group.order(), 244823040)
        self.assertTrue(group.contains(Permutation.identity(24)))
        self.assertFalse(group.contains(Permutation.from_cycles(24, [(0, 1)])))

    def test_repetition_group(self):
        self.assertEqual(group_of(repetition_block_code()).order(), 144)


class ServiceTests(SimpleTestCase):
    def setUp(self):
        cache.clear()
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        code = repetition_block_code()
        self.matrix = self.dir / 'rep.txt'
        self.matrix.write_text(format_matrix(code.g))
        self.auts = self.dir / 'rep.aut'
        self.auts.write_text(format_generator_set(8, list(code.aut_generators)))
        self.bad_auts = self.dir / 'bad.aut'
        self.bad_auts.write_text(format_generator_set(8, [Permutation.from_cycles(8, [(2, 6)])]))

    def tearDown(self):
        self.tmp.cleanup()

    def test_builtin_code_is_cached(self):
        first = builtin_code('ebch16-7')
        self.assertEqual(builtin_code('ebch16-7').g, first.g)
        self.assertIsNotNone(cache.get('code:ebch16-7'))

    def test_unknown_code(self):
        with self.assertRaises(ConfigError):
            builtin_code('ldpc')
        with self.assertRaises(ConfigError):
            resolve_code(str(self.dir / 'missing.txt'))

    def test_load_code_from_files(self):
        code = load_code(self.matrix, self.auts)
        self.assertEqual((code.name, code.n, code.k), ('rep', 8, 3))
        self.assertEqual(group_of(code).order(), 144)
        self.assertEqual(resolve_code(str(self.matrix)).g, code.g)

    def test_load_code_rejects_non_automorphisms(self):
        with self.assertRaises(AutomorphismViolationError):
            load_code(self.matrix, self.bad_auts)
        with self.assertRaises(AutomorphismViolationError):
            resolve_code('rep8-3', self.bad_auts)

    def test_malformed_file_is_a_config_error(self):
        broken = self.dir / 'broken.txt'
        broken.write_text('3 8\n111\n')
        with self.assertRaises(ConfigError):
            load_code(broken)

    def test_malformed_generator_header_is_a_config_error(self):
        broken = self.dir / 'header.aut'
        broken.write_text('n eight\n1 0 2 3 4 5 6 7\n')
        with self.assertRaisesMessage(ConfigError, 'bad point count'):
            load_code(self.matrix, broken)

    def test_code_without_generators_has_no_group(self):
        self.assertIsNone(group_of(load_code(self.matrix)))


class CommandTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def run_command(self, *args, **kwargs):
        out = StringIO()
        call_command(*args, stdout=out, **kwargs)
        return out.getvalue()

    def test_inspect_repetition_block_swap(self):
        perm = self.dir / 'p1.perm'
        perm.write_text(format_permutation(Permutation.from_cycles(8, [(0, 3), (1, 4), (2, 5)])))
        output = self.run_command('inspect', code='rep8-3', perm=str(perm))
        self.assertIn('pivots 0 1 7', output)
        self.assertIn('dynamic_frozen 3', output)
        self.assertIn('m_p\n3 8\n10110100\n01010100\n00000001\n', output)
        self.assertIn('e_p\n3 3\n', output)

    def test_inspect_polar_style_code_has_no_dynamic_bits(self):
        matrix = self.dir / 'rm13.txt'
        matrix.write_text(format_matrix(BitMatrix.from_dense(kronecker_power(3)[[3, 5, 6, 7]])))
        output = self.run_command('inspect', code=str(matrix))
        self.assertIn('dynamic_frozen 0', output)
        self.assertIn('pivots 3 5 6 7', output)

    def test_inspect_golay(self):
        output = self.run_command('inspect', code='egolay24-12')
        self.assertIn('k 12', output)
        self.assertIn('embedded_n 32', output)
        self.assertIn('full_rank yes', output)

    def test_inspect_searched_base(self):
        with self.settings(POD_SEARCH_ITERATIONS=50):
            output = self.run_command('inspect', code='egolay24-12', perm='search', design_snr=4.0)
        self.assertIn('full_rank yes', output)
        self.assertIn('sc_bound ', output)
        line = next(row for row in output.splitlines() if row.startswith('perm '))
        self.assertEqual(len(line.split()) - 1, 32)

    def test_inspect_unknown_code(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_command('inspect', code='nope')
        self.assertEqual(ctx.exception.returncode, 1)

    def test_group_info(self):
        self.assertIn('order 960', self.run_command('group_info', code='ebch16-7'))
        output = self.run_command('group_info', code='rep8-3')
        self.assertIn('order 144', output)
        self.assertEqual(output.count(' ok '), 6)

    def test_group_info_golay(self):
        self.assertIn('order 244823040', self.run_command('group_info', code='egolay24-12'))

    def test_group_info_reports_failing_generator(self):
        auts = self.dir / 'bad.aut'
        auts.write_text(format_generator_set(8, [
            Permutation.from_cycles(8, [(0, 1)]), Permutation.from_cycles(8, [(2, 6)]),
        ]))
        with self.assertRaisesMessage(CommandError, 'generators 1 are not automorphisms'):
            self.run_command('group_info', code='rep8-3', automorphisms=str(auts))
        with self.assertRaises(CommandError) as ctx:
            self.run_command('group_info', code='rep8-3', automorphisms=str(auts))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_all_messages_of_small_codes(self):
        for name in ('rep8-3', 'ebch16-7'):
            code = builtin_code(name)
            words = codewords(code.g)
            messages = gray_messages(code.k)
            for message, word in itertools.islice(zip(messages, words), 64):
                np.testing.assert_array_equal(word, message.astype(int) @ code.g.to_dense() % 2)

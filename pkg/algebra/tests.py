import itertools

import numpy as np
from django.test import SimpleTestCase
from scipy.stats import chisquare

from orbitdecoding.exceptions import (
    CapacityError, InconsistentSystemError, ShapeError, SingularMatrixError, ValidationError,
)
from polar.kernel import kronecker_power
from .gf2 import (
    BitMatrix, invert, matmul, pack_bits, rowspan_equal, rref_with_transform, solve_right, unpack_bits, vecmat,
)
from .permgroup import (
    Permutation, act_on_rows, apply, closure, compose, contains, enumerate_group, inverse, matrix_of,
    order, sample_uniform, schreier_sims,
)
from .textio import (
    format_generator_set, format_matrix, format_permutation, parse_generator_set, parse_matrix,
    parse_permutation,
)

REPETITION = BitMatrix.from_rows(['11100000', '00011100', '00000011'])
BLOCK_SWAP = Permutation.from_cycles(8, [(0, 3), (1, 4), (2, 5)])
FIRST_SWAP = Permutation.from_cycles(8, [(0, 1)])


def random_full_rank(rng, rows, cols):
    while True:
        m = BitMatrix.from_dense(rng.integers(0, 2, size=(rows, cols)))
        if m.rank() == rows:
            return m


class BitMatrixTests(SimpleTestCase):
    def test_packing_keeps_tail_bits_zero(self):
        dense = np.ones((3, 70), dtype=np.uint8)
        packed = pack_bits(dense)
        self.assertEqual(packed.shape, (3, 2))
        self.assertEqual(int(packed[0, 1]), (1 << 6) - 1)
        np.testing.assert_array_equal(unpack_bits(packed, 70), dense)

    def test_rejects_bits_past_last_column(self):
        with self.assertRaises(ShapeError):
            BitMatrix(1, 3, np.array([[0b1000]], dtype=np.uint64))

    def test_from_rows_and_indexing(self):
        self.assertEqual(REPETITION.shape, (3, 8))
        self.assertEqual(REPETITION[0, 2], 1)
        self.assertEqual(REPETITION[1, 2], 0)
        self.assertEqual(str(REPETITION).splitlines()[2], '00000011')

    def test_identity_product(self):
        self.assertEqual(matmul(BitMatrix.identity(3), REPETITION), REPETITION)

    def test_kernel_is_self_inverse(self):
        f = BitMatrix.from_rows(['10', '11'])
        self.assertEqual(f @ f, BitMatrix.identity(2))
        g8 = BitMatrix.from_dense(kronecker_power(3))
        self.assertEqual(invert(g8), g8)

    def test_matmul_agrees_with_dense_product(self):
        rng = np.random.default_rng(7)
        a = rng.integers(0, 2, size=(5, 70))
        b = rng.integers(0, 2, size=(70, 9))
        product = matmul(BitMatrix.from_dense(a), BitMatrix.from_dense(b))
        np.testing.assert_array_equal(product.to_dense(), (a @ b) % 2)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            matmul(REPETITION, REPETITION)


class EliminationTests(SimpleTestCase):
    def test_rref_of_reduced_matrix_is_itself(self):
        reduced, elim, pivots = rref_with_transform(REPETITION)
        self.assertEqual(reduced, REPETITION)
        self.assertEqual(elim, BitMatrix.identity(3))
        self.assertEqual(pivots, [0, 3, 6])

    def test_block_swap_needs_a_row_swap(self):
        permuted = act_on_rows(inverse(BLOCK_SWAP), REPETITION)
        reduced, elim, _ = rref_with_transform(permuted)
        self.assertEqual(elim, BitMatrix.from_rows(['010', '100', '001']))
        self.assertEqual(matmul(elim, permuted), REPETITION)
        self.assertEqual(reduced, REPETITION)

    def test_elimination_matrix_reproduces_rref(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            a = random_full_rank(rng, 5, 8)
            reduced, elim, pivots = rref_with_transform(a)
            self.assertEqual(matmul(elim, a), reduced)
            self.assertEqual(elim.rank(), 5)
            self.assertEqual(len(pivots), 5)

    def test_invert_random_matrices(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            a = random_full_rank(rng, 8, 8)
            self.assertEqual(matmul(a, invert(a)), BitMatrix.identity(8))

    def test_invert_singular(self):
        with self.assertRaises(SingularMatrixError):
            invert(BitMatrix.from_rows(['11', '11']))

    def test_rowspan_equal(self):
        swapped = REPETITION.select_rows([1, 0, 2])
        self.assertTrue(rowspan_equal(REPETITION, swapped))
        self.assertTrue(rowspan_equal(REPETITION, act_on_rows(inverse(BLOCK_SWAP), REPETITION)))
        flipped = REPETITION.to_dense()
        flipped[0, 7] ^= 1
        self.assertFalse(rowspan_equal(REPETITION, BitMatrix.from_dense(flipped)))

    def test_solve_right_recovers_messages(self):
        for message in itertools.product((0, 1), repeat=3):
            c = vecmat(message, REPETITION)
            np.testing.assert_array_equal(solve_right(REPETITION, c), message)

    def test_solve_right_inconsistent(self):
        with self.assertRaises(InconsistentSystemError):
            solve_right(BitMatrix.from_rows(['110']), np.ones(3, dtype=np.uint8))


class PermutationTests(SimpleTestCase):
    def test_rejects_non_bijection(self):
        with self.assertRaises(ValidationError):
            Permutation([0, 0, 1])

    def test_identity_and_inverse(self):
        rng = np.random.default_rng(5)
        p = Permutation(rng.permutation(24))
        identity = Permutation.identity(24)
        self.assertEqual(compose(p, identity), p)
        self.assertTrue(compose(p, inverse(p)).is_identity)
        self.assertEqual(inverse(FIRST_SWAP), FIRST_SWAP)

    def test_apply_convention(self):
        p = Permutation([1, 2, 0])
        np.testing.assert_array_equal(apply(p, np.array([7, 8, 9])), [9, 7, 8])
        v = np.arange(3)
        np.testing.assert_array_equal(apply(p, apply(inverse(p), v)), v)

    def test_compose_matches_matrix_product(self):
        product = matmul(matrix_of(BLOCK_SWAP), matrix_of(FIRST_SWAP))
        self.assertEqual(matrix_of(compose(BLOCK_SWAP, FIRST_SWAP)), product)

    def test_apply_matches_row_vector_product(self):
        v = np.array([1, 1, 0, 1, 0, 0, 0, 1], dtype=np.uint8)
        np.testing.assert_array_equal(apply(BLOCK_SWAP, v), vecmat(v, matrix_of(BLOCK_SWAP)))

    def test_automorphism_keeps_codewords(self):
        for message in itertools.product((0, 1), repeat=3):
            c = apply(inverse(BLOCK_SWAP), vecmat(message, REPETITION))
            solve_right(REPETITION, c)

    def test_cycles_and_extension(self):
        self.assertEqual(str(BLOCK_SWAP), '(0 3)(1 4)(2 5)')
        self.assertEqual(str(Permutation.identity(4)), '()')
        extended = FIRST_SWAP.extended(12)
        self.assertEqual(extended.n, 12)
        self.assertEqual(extended.moved_points(), [0, 1])


class SchreierSimsTests(SimpleTestCase):
    def symmetric(self, n):
        return schreier_sims(n, [Permutation.from_cycles(n, [(0, 1)]),
                                 Permutation.from_cycles(n, [tuple(range(n))])])

    def test_trivial_group(self):
        group = schreier_sims(5, [])
        self.assertEqual(order(group), 1)
        self.assertEqual(list(group.elements()), [Permutation.identity(5)])
        self.assertTrue(sample_uniform(group, np.random.default_rng(0)).is_identity)

    def test_symmetric_group_order(self):
        self.assertEqual(self.symmetric(4).order(), 24)
        self.assertEqual(self.symmetric(6).order(), 720)

    def test_membership_against_enumeration(self):
        group = schreier_sims(4, [Permutation([1, 2, 3, 0])])
        members = closure(group.strong_generators)
        for images in itertools.permutations(range(4)):
            p = Permutation(images)
            self.assertEqual(contains(group, p), p in members)

    def test_chain_invariants(self):
        group = self.symmetric(5)
        for level, transversal in enumerate(group.transversals):
            for point, rep in transversal.items():
                self.assertEqual(rep(group.base[level]), point)
        for g in group.strong_generators:
            self.assertTrue(contains(group, g))
        self.assertEqual(group.order(), int(np.prod(group.transversal_sizes)))

    def test_elements_are_distinct_and_closed(self):
        group = self.symmetric(3)
        elements = enumerate_group(group, 100)
        self.assertEqual(len(set(elements)), 6)
        self.assertTrue(elements[0].is_identity)
        for a, b in itertools.product(elements, repeat=2):
            self.assertIn(compose(a, b), elements)

    def test_enumeration_limit(self):
        with self.assertRaises(CapacityError):
            enumerate_group(self.symmetric(6), 100)

    def test_uniform_sampling(self):
        group = self.symmetric(3)
        rng = np.random.default_rng(2026)
        draws = [sample_uniform(group, rng) for _ in range(6000)]
        for s in draws[:50]:
            self.assertTrue(contains(group, s))
        counts = [sum(1 for d in draws if d == e) for e in group.elements()]
        self.assertGreater(chisquare(counts).pvalue, 0.001)

    def test_deterministic_output(self):
        a, b = self.symmetric(5), self.symmetric(5)
        self.assertEqual(a.base, b.base)
        self.assertEqual(a.strong_generators, b.strong_generators)


class TextFormatTests(SimpleTestCase):
    def test_matrix_format(self):
        text = format_matrix(REPETITION)
        self.assertTrue(text.startswith('3 8\n11100000\n'))
        self.assertEqual(parse_matrix(text), REPETITION)

    def test_matrix_format_errors(self):
        with self.assertRaises(ValidationError):
            parse_matrix('2 3\n101\n')
        with self.assertRaises(ValidationError):
            parse_matrix('1 3\n1x1\n')

    def test_permutation_format(self):
        self.assertEqual(format_permutation(BLOCK_SWAP), '3 4 5 0 1 2 6 7\n')
        self.assertEqual(parse_permutation('# block swap\n3 4 5 0 1 2 6 7\n'), BLOCK_SWAP)
        with self.assertRaises(ValidationError):
            parse_permutation('0 0 1\n')

    def test_generator_set_format(self):
        text = format_generator_set(8, [BLOCK_SWAP, FIRST_SWAP])
        self.assertEqual(text.splitlines()[0], 'n 8')
        self.assertEqual(parse_generator_set(text), [BLOCK_SWAP, FIRST_SWAP])
        with self.assertRaises(ValidationError):
            parse_generator_set('n 4\n1 0 2\n')
        with self.assertRaisesMessage(ValidationError, 'bad point count'):
            parse_generator_set('n x\n0 1\n')

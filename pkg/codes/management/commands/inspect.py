"""
Management command to print the polar transform of a code under a permutation.
"""

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from algebra.textio import format_matrix, format_permutation
from codes.services import load_permutation, resolve_code, searched_base
from orbitdecoding.exceptions import OrbitDecodingError, exit_code_for
from polar.orbit import single_transform
from polar.transform import sc_error_bound


class Command(BaseCommand):
    help = 'Show the dynamic frozen matrix M_P and elimination matrix E_P of a code'

    def add_arguments(self, parser):
        parser.add_argument(
            '--code',
            required=True,
            help='Built-in code name (rep8-3, ebch16-7, ...) or path to a generator matrix file',
        )
        parser.add_argument(
            '--perm',
            help="Path to a permutation file, or 'search'; identity when omitted",
        )
        parser.add_argument(
            '--automorphisms',
            help='Path to a generator-set file of automorphisms to verify with the code',
        )
        parser.add_argument(
            '--design-snr',
            type=float,
            default=settings.POD_DESIGN_SNR_DB,
            help='Eb/N0 in dB for the reported SC error bound',
        )

    def handle(self, *args, **options):
        try:
            code = resolve_code(options['code'], options['automorphisms'])
            if options['perm'] == 'search':
                perm = searched_base(code, options['design_snr'])
            else:
                perm = load_permutation(options['perm']) if options['perm'] else None
            result = single_transform(code, perm)
        except OrbitDecodingError as exc:
            raise CommandError(str(exc), returncode=exit_code_for(exc))

        self.stdout.write(f"code {code.name}")
        self.stdout.write(f"n {code.n}")
        if result.spec.n != code.n:
            self.stdout.write(f"embedded_n {result.spec.n}")
        self.stdout.write(f"k {code.k}")
        self.stdout.write(f"rank {len(result.pivots)}")
        self.stdout.write(f"full_rank {'yes' if len(result.pivots) == code.k else 'no'}")
        self.stdout.write('pivots ' + ' '.join(str(p) for p in result.pivots))
        self.stdout.write(f"dynamic_frozen {result.df.dynamic_count}")
        if len(result.pivots) == code.k:
            bound = sc_error_bound(result, options['design_snr'], code.n)
            self.stdout.write(f"sc_bound {bound:.6g} at {options['design_snr']:g} dB")
        if options['perm'] == 'search':
            self.stdout.write('perm ' + format_permutation(result.perm).strip())
        self.stdout.write('m_p')
        self.stdout.write(format_matrix(result.m_p), ending='')
        self.stdout.write('e_p')
        self.stdout.write(format_matrix(result.e_p), ending='')

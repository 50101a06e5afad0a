"""
Management command to report the automorphism group generated by a code's listed generators.
"""

from django.core.management.base import BaseCommand, CommandError

from codes.families import check_generators
from codes.services import group_of, resolve_code
from orbitdecoding.exceptions import EXIT_VERIFICATION, OrbitDecodingError, exit_code_for


class Command(BaseCommand):
    help = 'Verify automorphism generators and print the order of the group they generate'

    def add_arguments(self, parser):
        parser.add_argument(
            '--code',
            required=True,
            help='Built-in code name or path to a generator matrix file',
        )
        parser.add_argument(
            '--automorphisms',
            help='Path to a generator-set file replacing the built-in generators',
        )

    def handle(self, *args, **options):
        try:
            code = resolve_code(options['code'], options['automorphisms'], verify_automorphisms=False)
        except OrbitDecodingError as exc:
            raise CommandError(str(exc), returncode=exit_code_for(exc))

        if not code.aut_generators:
            raise CommandError(f"{code.name} has no automorphism generators", returncode=1)

        self.stdout.write(f"code {code.name} ({code.n},{code.k})")
        failed = []
        for i, (h, ok) in enumerate(check_generators(code.g, code.aut_generators)):
            status = 'ok' if ok else 'FAILED'
            self.stdout.write(f"generator {i} {status} {h}")
            if not ok:
                failed.append(i)
        if failed:
            raise CommandError(
                f"generators {', '.join(map(str, failed))} are not automorphisms of {code.name}",
                returncode=EXIT_VERIFICATION,
            )

        group = group_of(code)
        self.stdout.write(f"base_length {group.base_length}")
        self.stdout.write('base ' + ' '.join(str(b) for b in group.base))
        self.stdout.write('transversal_sizes ' + ' '.join(str(s) for s in group.transversal_sizes))
        self.stdout.write(self.style.SUCCESS(f"order {group.order()}"))

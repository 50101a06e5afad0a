"""
Management command to run BLER experiments described by a config file.
"""

import logging
from pathlib import Path

import orjson
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from codes.services import load_permutation, resolve_code, searched_base
from orbitdecoding.exceptions import OrbitDecodingError, exit_code_for
from simulations.baselines import hd_theoretical_bler
from simulations.experiment import ExperimentConfig
from simulations.services import make_decoder, run_bler, write_csv

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Simulate block error rates of the configured decoders over an SNR sweep'

    def add_arguments(self, parser):
        parser.add_argument(
            '--config',
            required=True,
            help='Path to the experiment config file',
        )
        parser.add_argument(
            '--seed',
            type=int,
            help='Override the seed of the config file',
        )
        parser.add_argument(
            '--out',
            help='Override the CSV output path',
        )
        parser.add_argument(
            '--workers',
            type=int,
            default=settings.SIMULATION_WORKERS,
            help='Processes decoding trial batches in parallel',
        )

    def handle(self, *args, **options):
        try:
            cfg = ExperimentConfig.from_file(options['config'])
            cfg = cfg.with_overrides(seed=options['seed'], out=options['out'])
            code = resolve_code(cfg.code, cfg.automorphisms)
            if cfg.search_base:
                base = searched_base(code)
            else:
                base = load_permutation(cfg.perm) if cfg.perm else None
            decoders = [
                (descriptor, make_decoder(code, descriptor, base, selection=cfg.selection, seed=cfg.seed))
                for descriptor in cfg.decoders
            ]
        except OrbitDecodingError as exc:
            raise CommandError(str(exc), returncode=exit_code_for(exc))

        self.stdout.write(
            f"{code.name} ({code.n},{code.k}): {len(decoders)} decoders x {len(cfg.snr)} points, seed {cfg.seed}"
        )
        records = []
        for descriptor, decoder in decoders:
            try:
                results = run_bler(
                    code, decoder, cfg.snr,
                    min_errors=cfg.min_errors,
                    max_trials=cfg.max_trials,
                    seed=cfg.seed,
                    workers=options['workers'],
                    with_diagnostics=cfg.diagnostics is not None,
                    label=descriptor.text,
                )
            except OrbitDecodingError as exc:
                raise CommandError(f"{descriptor.text}: {exc}", returncode=exit_code_for(exc))
            for record in results:
                self.stdout.write(
                    f"  {record.decoder:<16} {record.eb_n0_db:6.2f} dB  "
                    f"{record.block_errors:>6}/{record.trials:<8} BLER {record.bler:.3e}"
                )
                if descriptor.kind == 'hd':
                    theory = hd_theoretical_bler(code.n, code.k, descriptor.radius, record.eb_n0_db)
                    self.stdout.write(f"  {'theory':<16} {record.eb_n0_db:6.2f} dB  BLER {theory:.3e}")
            records.extend(results)

        path = write_csv(records, cfg.out, timing=cfg.timing)
        if cfg.diagnostics is not None:
            self._write_diagnostics(cfg.diagnostics, records)
        self.stdout.write(self.style.SUCCESS(f"Wrote {len(records)} rows to {path}"))

    def _write_diagnostics(self, path: Path, records):
        path.parent.mkdir(parents=True, exist_ok=True)
        count = 0
        with open(path, 'wb') as handle:
            for record in records:
                for entry in record.diagnostics:
                    line = dict(entry, code=record.code, decoder=record.decoder, ebno_db=record.eb_n0_db)
                    handle.write(orjson.dumps(line) + b'\n')
                    count += 1
        logger.info(f"Wrote {count} diagnostics lines to {path}")

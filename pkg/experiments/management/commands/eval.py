from dataclasses import replace
from pathlib import Path

from django.conf import settings

from experiments.commands import ExperimentCommand
from experiments.config import CONDITIONS
from experiments.evaluation import run_conditions
from experiments.models import ExperimentRun
from experiments.reports import FORMATS, emit_report


class Command(ExperimentCommand):
    help = 'Run the configured training/testing conditions and write the accuracy report.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--workers', type=int, help='Threads for independent subjects.')
        parser.add_argument('--condition', action='append', choices=list(CONDITIONS),
                            help='Override the configured conditions (repeatable).')
        parser.add_argument('--out', help='Report directory (default: OUTPUT_DIR/<name>).')
        parser.add_argument('--format', action='append', choices=FORMATS, dest='formats')

    def run(self, *args, **options):
        config = self.config(options)
        if options['condition']:
            config = replace(config, conditions=tuple(dict.fromkeys(options['condition'])))
        report = run_conditions(config, self.workers(options))
        out = Path(options['out'] or settings.HDEMG['OUTPUT_DIR'] / config.name)
        emit_report(report, out, options['formats'] or FORMATS)
        if settings.HDEMG['RECORD_RUNS']:
            ExperimentRun.record(report, ExperimentRun.CONDITION)
        for name, condition in report.conditions.items():
            self.stdout.write(f'{CONDITIONS[name]}: {condition.average_accuracy:.2f}% '
                              f'(vote {condition.average_vote_accuracy:.2f}%)')
        self.done(f'Report written to {out}')

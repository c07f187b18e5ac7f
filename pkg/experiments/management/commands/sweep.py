from pathlib import Path

from django.conf import settings

from experiments.commands import ExperimentCommand
from experiments.config import CONDITIONS
from experiments.evaluation import sweep_trials
from experiments.models import ExperimentRun
from experiments.reports import FORMATS, emit_report


class Command(ExperimentCommand):
    help = 'Accuracy as a function of the number of training trials (incremental training).'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--workers', type=int, help='Threads for independent subjects.')
        parser.add_argument('--counts', type=int, nargs='+', help='Trial counts (default: sweep_counts).')
        parser.add_argument('--condition', choices=list(CONDITIONS), help='Condition to sweep.')
        parser.add_argument('--out', help='Report directory (default: OUTPUT_DIR/<name>-sweep).')
        parser.add_argument('--format', action='append', choices=FORMATS, dest='formats')

    def run(self, *args, **options):
        config = self.config(options)
        if options['condition']:
            config = config.with_condition(options['condition'])
        report = sweep_trials(config, options['counts'], self.workers(options))
        out = Path(options['out'] or settings.HDEMG['OUTPUT_DIR'] / f'{config.name}-sweep')
        emit_report(report, out, options['formats'] or FORMATS)
        if settings.HDEMG['RECORD_RUNS']:
            ExperimentRun.record(report, ExperimentRun.SWEEP)
        for count, point in sorted(report.curve.items()):
            self.stdout.write(f'{count:>3} trials: {point.average_accuracy:.2f}% '
                              f'(vote {point.average_vote_accuracy:.2f}%)')
        self.done(f'Report written to {out}')

from emg import dataset
from experiments import artifacts
from experiments.commands import ExperimentCommand
from experiments.evaluation import Session, fit_model


class Command(ExperimentCommand):
    help = 'Train an associative memory on the labeled segments of a recording.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('recording', help='Training recording manifest (.json).')
        parser.add_argument('--out', required=True, help='Model file (.npz).')
        parser.add_argument('--trials', type=int, help='Number of training trials (default: train_trials).')

    def run(self, *args, **options):
        config = self.config(options)
        am, norm = fit_model(Session(*dataset.load(options['recording'])), config, options['trials'])
        path = artifacts.save_model(options['out'], am, config.filter, norm)
        counts = ', '.join(f'{label.label}={am.accumulator(label).count}' for label in am.labels)
        self.done(f'Trained {len(am)} labels ({counts}); model written to {path}')

from emg import dataset
from emg.dsp import preprocess
from experiments import artifacts
from experiments.commands import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Filter, rectify, smooth, normalize and decimate a recording into 10 Hz feature frames.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('recording', help='Recording manifest (.json).')
        parser.add_argument('--out', required=True, help='Feature file (.npz).')
        parser.add_argument('--model', help='Reuse the normalization and filter chain stored in this model.')

    def run(self, *args, **options):
        recording, _ = dataset.load(options['recording'])
        if options['model']:
            _, filter_spec, norm = artifacts.load_model(options['model'])
        else:
            filter_spec, norm = self.config(options).filter, None
        frames, norm = preprocess(recording, filter_spec, norm)
        path = artifacts.save_frames(options['out'], frames, norm, filter_spec)
        self.done(f'Wrote {len(frames)} frames x {frames.channels} channels to {path}')

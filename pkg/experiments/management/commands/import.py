from emg import dataset
from emg.importers import import_recording
from experiments.commands import ExperimentCommand


class Command(ExperimentCommand):
    help = ('Convert an external recording into the native format. A YAML format descriptor is required: '
            'format (npy, csv or mat), path, layout, sample_rate and a segments CSV.')
    uses_config = False

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--descriptor', help='Format descriptor (YAML).')
        parser.add_argument('--out', required=True, help='Recording manifest to write (.json).')

    def run(self, *args, **options):
        recording, segments = import_recording(options['descriptor'])
        path = dataset.save(options['out'], recording, segments)
        self.done(f'Imported {recording} with {len(segments)} segments to {path}')

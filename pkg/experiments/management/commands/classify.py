import csv

from django.core.exceptions import ValidationError

from emg import dataset
from emg.dsp import preprocess
from emg.labels import GestureLabel
from experiments import artifacts
from experiments.commands import ExperimentCommand
from hdc.classifier import DEFAULT_VOTE_WINDOW, check_vote_window, vote_stream
from hdc.encoder import stream_encode


class Command(ExperimentCommand):
    help = 'Classify every window of a recording with a trained model and write the predictions as CSV.'
    uses_config = False

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('model', help='Model file written by `train`.')
        parser.add_argument('recording', help='Recording manifest (.json).')
        parser.add_argument('--out', required=True, help='Predictions CSV.')
        parser.add_argument('--vote-window', type=int, default=DEFAULT_VOTE_WINDOW,
                            help='Odd number of trailing windows per vote (default: %(default)s).')

    def run(self, *args, **options):
        check_vote_window(options['vote_window'])
        am, filter_spec, norm = artifacts.load_model(options['model'])
        recording, segments = dataset.load(options['recording'])
        frames, _ = preprocess(recording, filter_spec, norm)
        vectors = stream_encode(frames, am.config.item_memory(), am.config)
        results = am.classify_many(vectors)
        voted = vote_stream(results, options['vote_window'])

        # true label of the segment holding each window's newest frame
        truth = {}
        for segment in dataset.frame_segments(segments, filter_spec.decim_factor, len(frames)):
            truth.update({frame: GestureLabel(segment.label) for frame in range(segment.start_frame, segment.end_frame)})

        labeled = matched = 0
        try:
            with open(options['out'], 'w', newline='') as handle:
                writer = csv.writer(handle, lineterminator='\n')
                writer.writerow(['frame', 'predicted', 'voted', 'label'])
                for result, voted_label in zip(results, voted):
                    label = truth.get(result.time_index)
                    writer.writerow([result.time_index, GestureLabel(result.predicted).label,
                                     GestureLabel(voted_label).label, label.label if label is not None else ''])
                    if label is not None:
                        labeled += 1
                        matched += int(result.predicted) == int(label)
        except OSError as exc:
            raise ValidationError('Cannot write %(path)s: %(error)s', code='unwritable_path',
                                  params={'path': options['out'], 'error': exc})
        summary = f'Classified {len(results)} windows'
        if labeled:
            summary += f'; {100.0 * matched / labeled:.2f}% of {labeled} labeled windows matched'
        self.done(summary)

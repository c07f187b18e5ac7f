from pathlib import Path

from django.core.exceptions import ValidationError

from emg import dataset
from emg.dsp import preprocess
from experiments.commands import ExperimentCommand
from experiments.reports import render_pgm


class Command(ExperimentCommand):
    help = 'Write one 16 x 4 graymap per gesture showing mean normalized activity on the electrode grid.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('recording', help='Recording manifest (.json).')
        parser.add_argument('--out', required=True, help='Output directory.')

    def run(self, *args, **options):
        config = self.config(options)
        recording, segments = dataset.load(options['recording'])
        frames, _ = preprocess(recording, config.filter)
        segments = dataset.frame_segments(segments, config.filter.decim_factor, len(frames))
        maps = dataset.activity_maps(frames, [segment for segment in segments if len(segment)])
        out = Path(options['out'])
        try:
            out.mkdir(parents=True, exist_ok=True)
            for label, activity in maps.items():
                (out / f'{label.label}.pgm').write_text(render_pgm(activity.grid.tolist()))
        except OSError as exc:
            raise ValidationError('Cannot write %(path)s: %(error)s', code='unwritable_path',
                                  params={'path': out, 'error': exc})
        self.done(f'Wrote {len(maps)} heat maps to {out}')

from pathlib import Path

import yaml
from django.core.exceptions import ValidationError

from emg import dataset
from experiments.commands import ExperimentCommand
from experiments.config import ACROSS_SESSIONS, ROTATED, SAME_SESSION
from experiments.evaluation import synthetic_subject


class Command(ExperimentCommand):
    help = ('Write synthetic sessions for every subject (training, same-session test, second session, '
            'rotated pair) plus a dataset.yaml that runs the same experiment on the written files.')

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--out', required=True, help='Output directory.')

    def run(self, *args, **options):
        config = self.config(options)
        out = Path(options['out'])
        subjects = []
        for index in range(config.synthesis.subjects):
            same = synthetic_subject(config, index, SAME_SESSION)
            across = synthetic_subject(config, index, ACROSS_SESSIONS)
            rotated = synthetic_subject(config, index, ROTATED)
            files = {
                'train': same.train,
                'test': same.test,
                'test_across': across.test,
                'train_rotated': rotated.train,
                'test_rotated': rotated.test,
            }
            entry = {'id': same.subject_id}
            for key, session in files.items():
                relative = Path(same.subject_id) / f'{key}.json'
                dataset.save(out / relative, session.recording, session.segments)
                entry[key] = str(relative)
            subjects.append(entry)
            self.stdout.write(f'{same.subject_id}: {len(files)} sessions')

        described = config.to_dict()
        del described['synthesis']
        described['subjects'] = subjects
        try:
            (out / 'dataset.yaml').write_text(yaml.safe_dump(described, sort_keys=False))
        except OSError as exc:
            raise ValidationError('Cannot write %(path)s: %(error)s', code='unwritable_path',
                                  params={'path': out / 'dataset.yaml', 'error': exc})
        self.done(f'Wrote {len(subjects)} synthetic subjects to {out}')

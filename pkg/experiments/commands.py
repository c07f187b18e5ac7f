"""
Shared plumbing for the management commands: config loading and the
translation of library errors into `CommandError` with a machine-readable
category prefix and exit status.
"""

import logging

from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from .config import load_config

logger = logging.getLogger(__name__)

CONFIG_ERRORS = {
    'invalid_config', 'invalid_filter_spec', 'format_mapping_required', 'unsupported_format', 'too_many_trials',
}
DATA_ERRORS = {
    'non_finite_sample', 'sample_rate_mismatch', 'bad_magic', 'unsupported_version', 'checksum_mismatch',
    'shape_mismatch', 'unknown_label', 'overlapping_segments', 'segment_out_of_range', 'empty_segment',
    'missing_gestures', 'bad_model', 'empty_input',
}


def error_category(exc):
    codes = [error.code for error in exc.error_list if error.code]
    return codes[0] if codes else 'invalid_input'


def returncode_for(category):
    if category in CONFIG_ERRORS:
        return 2
    if category in DATA_ERRORS:
        return 3
    return 1


class ExperimentCommand(BaseCommand):
    """Subclasses implement `run(**options)`; `--config` is added for them."""

    uses_config = True

    def add_arguments(self, parser):
        if self.uses_config:
            parser.add_argument('--config', help='Experiment YAML file (defaults to the reference values).')

    def handle(self, *args, **options):
        try:
            return self.run(*args, **options)
        except ValidationError as exc:
            category = error_category(exc)
            raise CommandError(f'{category}: {"; ".join(exc.messages)}', returncode=returncode_for(category))
        except ValueError as exc:
            raise CommandError(f'invalid_input: {exc}', returncode=1)

    def run(self, *args, **options):
        raise NotImplementedError

    def config(self, options):
        return load_config(options.get('config'))

    def workers(self, options):
        return options.get('workers') or settings.HDEMG['WORKERS']

    def done(self, message):
        self.stdout.write(self.style.SUCCESS(message))

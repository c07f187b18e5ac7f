"""
Report output: a per-condition accuracy table, CSV
files and one 16 x 4 portable graymap per gesture activity map.
Output bytes depend only on the report.
"""

import csv
import io
import json
import logging
from pathlib import Path

from django.core.exceptions import ValidationError

from emg.labels import GestureLabel

from .config import CONDITIONS

logger = logging.getLogger(__name__)

FORMATS = ('text', 'csv', 'pgm', 'json')
NAMES = [label.label for label in GestureLabel]
CORNER = 'true \\ predicted'


def _table(report):
    conditions = [name for name in CONDITIONS if name in report.conditions]
    subjects = report.conditions[conditions[0]].subjects if conditions else []
    lines = [f'Classification accuracy (%): {report.name}', '']
    lines.append(f'{"":<10}' + ''.join(f'| {CONDITIONS[name]:<22}' for name in conditions))
    lines.append(f'{"Subject":<10}' + '| No Vote    Vote        ' * len(conditions))
    lines.append('-' * (10 + 24 * len(conditions)))
    for index, subject in enumerate(subjects):
        row = f'{subject.subject_id:<10}'
        for name in conditions:
            result = report.conditions[name].subjects[index]
            row += f'| {result.accuracy:7.2f}  {result.vote_accuracy:7.2f}     '
        lines.append(row.rstrip())
    row = f'{"Avg.":<10}'
    for name in conditions:
        condition = report.conditions[name]
        row += f'| {condition.average_accuracy:7.2f}  {condition.average_vote_accuracy:7.2f}     '
    lines.append(row.rstrip())
    return lines


def _confusion(title, matrix):
    lines = [title, f'{CORNER:<18}' + ''.join(f'{name:>7}' for name in NAMES)]
    for name, row in zip(NAMES, matrix):
        lines.append(f'{name:<18}' + ''.join(f'{count:>7d}' for count in row))
    totals = ', '.join(f'{name}={sum(row)}' for name, row in zip(NAMES, matrix))
    lines.append(f'Windows per label: {totals}; total={sum(map(sum, matrix))}')
    return lines


def _summed(matrices):
    return [[sum(matrix[i][j] for matrix in matrices) for j in range(len(NAMES))] for i in range(len(NAMES))]


def _curve(report):
    if not report.curve:
        return []
    counts = sorted(report.curve)
    subjects = [s.subject_id for s in report.curve[counts[0]].subjects]
    lines = ['Accuracy (%) by number of training trials', f'{"Trials":<8}' + ''.join(f'{s:>9}' for s in subjects)
             + f'{"Avg.":>9}{"Vote":>9}']
    for count in counts:
        point = report.curve[count]
        lines.append(f'{count:<8d}' + ''.join(f'{s.accuracy:9.2f}' for s in point.subjects)
                     + f'{point.average_accuracy:9.2f}{point.average_vote_accuracy:9.2f}')
    return lines


def render_text(report):
    lines = _table(report)
    for name in CONDITIONS:
        if name not in report.conditions:
            continue
        subjects = report.conditions[name].subjects
        lines.append('')
        lines.extend(_confusion(f'Confusion, {CONDITIONS[name]}, no vote (all subjects)',
                                _summed([s.confusion for s in subjects])))
        lines.append('')
        lines.extend(_confusion(f'Confusion, {CONDITIONS[name]}, vote (all subjects)',
                                _summed([s.vote_confusion for s in subjects])))
    curve = _curve(report)
    if curve:
        lines.append('')
        lines.extend(curve)
    provenance = report.provenance
    lines.extend(['', 'Provenance', f'seed: {provenance.get("seed")}', f'im_seed: {provenance.get("im_seed")}',
                  f'voting: {provenance.get("voting")}',
                  'config: ' + json.dumps(provenance.get('config', {}), sort_keys=True)])
    return '\n'.join(lines) + '\n'


def _csv(rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerows(rows)
    return buffer.getvalue()


def render_csv(report):
    rows = [['condition', 'subject', 'windows', 'matched', 'accuracy', 'vote_matched', 'vote_accuracy']]
    for name in CONDITIONS:
        if name not in report.conditions:
            continue
        condition = report.conditions[name]
        for s in condition.subjects:
            rows.append([name, s.subject_id, s.windows, s.matched, f'{s.accuracy:.4f}', s.vote_matched,
                         f'{s.vote_accuracy:.4f}'])
        rows.append([name, 'avg', sum(s.windows for s in condition.subjects),
                     sum(s.matched for s in condition.subjects), f'{condition.average_accuracy:.4f}',
                     sum(s.vote_matched for s in condition.subjects), f'{condition.average_vote_accuracy:.4f}'])
    return _csv(rows)


def render_curve_csv(report):
    rows = [['trials', 'subject', 'windows', 'accuracy', 'vote_accuracy']]
    for count in sorted(report.curve):
        point = report.curve[count]
        for s in point.subjects:
            rows.append([count, s.subject_id, s.windows, f'{s.accuracy:.4f}', f'{s.vote_accuracy:.4f}'])
        rows.append([count, 'avg', '', f'{point.average_accuracy:.4f}', f'{point.average_vote_accuracy:.4f}'])
    return _csv(rows)


def render_pgm(grid):
    """ASCII graymap, one pixel per electrode (width 16, height 4)."""
    height, width = len(grid), len(grid[0])
    lines = ['P2', f'{width} {height}', '255']
    lines.extend(' '.join(str(int(round(value * 255))) for value in row) for row in grid)
    return '\n'.join(lines) + '\n'


def emit_report(report, directory, formats=FORMATS):
    """Write the requested formats under `directory`; returns the written paths."""
    directory = Path(directory)
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValidationError('Unknown report formats: %(formats)s.', code='invalid_config',
                              params={'formats': ', '.join(sorted(unknown))})
    outputs = {}
    if 'text' in formats:
        outputs['report.txt'] = render_text(report)
    if 'csv' in formats:
        outputs['report.csv'] = render_csv(report)
        if report.curve:
            outputs['curve.csv'] = render_curve_csv(report)
    if 'json' in formats:
        outputs['report.json'] = json.dumps(report.to_dict(), indent=2, sort_keys=True) + '\n'
    if 'pgm' in formats:
        for name, grid in sorted(report.activity_maps.items()):
            outputs[f'heatmaps/{name}.pgm'] = render_pgm(grid)

    written = []
    try:
        for name, content in outputs.items():
            path = directory / name
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', newline='\n') as handle:
                handle.write(content)
            written.append(path)
    except OSError as exc:
        raise ValidationError('Cannot write report to %(path)s: %(error)s', code='unwritable_path',
                              params={'path': directory, 'error': exc}) from exc
    logger.info('Wrote %d report files to %s', len(written), directory)
    return written

from django.db import models


class ExperimentRun(models.Model):
    CONDITION = 'condition'
    SWEEP = 'sweep'
    choices = [
        (CONDITION, 'condition'),
        (SWEEP, 'trials sweep'),
    ]

    kind = models.CharField(max_length=20, choices=choices)
    name = models.CharField(max_length=200)
    seed = models.BigIntegerField()
    config = models.JSONField()
    report = models.JSONField()
    run_date = models.DateTimeField('run', auto_now_add=True)

    class Meta:
        ordering = ['-run_date']

    @classmethod
    def record(cls, report, kind=CONDITION):
        data = report.to_dict()
        provenance = data['provenance']
        return cls.objects.create(kind=kind, name=report.name, seed=provenance.get('seed', 0),
                                  config=provenance.get('config', {}), report=data)

    def _averages(self, key):
        return [condition[key] for condition in self.report.get('conditions', {}).values()]

    @property
    def average_accuracy(self):
        values = self._averages('average_accuracy')
        return sum(values) / len(values) if values else 0.0

    @property
    def average_vote_accuracy(self):
        values = self._averages('average_vote_accuracy')
        return sum(values) / len(values) if values else 0.0

    def __str__(self):
        return f'{self.name} ({self.get_kind_display()}, seed {self.seed}): {self.average_accuracy:.2f}%'

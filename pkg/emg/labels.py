from django.db import models


class GestureLabel(models.IntegerChoices):
    FIST = 0, 'fist'
    RAISE = 1, 'raise'
    LOWER = 2, 'lower'
    OPEN = 3, 'open'
    REST = 4, 'rest'

    @classmethod
    def hard_gestures(cls):
        return [cls.FIST, cls.RAISE, cls.LOWER, cls.OPEN]

    @classmethod
    def from_name(cls, name):
        for label in cls:
            if label.label == str(name).strip().lower():
                return label
        raise KeyError(name)

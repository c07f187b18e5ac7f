from django.core.exceptions import ValidationError
from django.utils.translation import gettext as _


class FilterSpecValidator:
    def validate(self, spec):
        errors = []
        nyquist = spec.sample_rate / 2
        if spec.sample_rate <= 0:
            errors.append(_("Sample rate must be positive."))
        if not 0 < spec.bp_low < spec.bp_high < nyquist:
            errors.append(_("Band-pass edges must satisfy 0 < low < high < sample_rate / 2."))
        if not 0 < spec.notch_freq < nyquist:
            errors.append(_("Notch frequency must lie between 0 and sample_rate / 2."))
        if spec.notch_q <= 0:
            errors.append(_("Notch Q-factor must be positive."))
        if spec.bp_order < 2 or spec.bp_order % 2:
            errors.append(_("Band-pass order must be even and at least 2."))
        if spec.ma_window < 1:
            errors.append(_("Moving-average window must be at least one sample."))
        if spec.decim_factor < 1:
            errors.append(_("Decimation factor must be at least 1."))

        if errors:
            raise ValidationError([ValidationError(error, code='invalid_filter_spec') for error in errors])


class SessionPlanValidator:
    def validate(self, plan):
        errors = []
        if plan.trials < 1:
            errors.append(_("A session needs at least one trial."))
        if not plan.gestures:
            errors.append(_("A trial needs at least one gesture."))
        if plan.hold_duration <= 0:
            errors.append(_("Hold duration must be positive."))
        if not 0 < plan.labeled_duration <= plan.hold_duration:
            errors.append(_("Labeled duration must be positive and no longer than the hold."))

        if errors:
            raise ValidationError([ValidationError(error, code='invalid_config') for error in errors])

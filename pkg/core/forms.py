"""Run configuration: one Django form per scenario, validated before anything is computed.

A configuration document is a flat JSON object. Missing keys take the form's
initial values, command-line flags override document values, and the cleaned
values form the configuration echo written into every output.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from django import forms
from django.conf import settings

from core.exceptions import ConfigValidationError

logger = logging.getLogger(__name__)

MAX_SEED = 2**64 - 1


def _number_list(value, key: str, minimum=None, length=None) -> list[float]:
    if not isinstance(value, list) or not value:
        raise forms.ValidationError(f"{key} must be a non-empty list of numbers")
    if length is not None and len(value) != length:
        raise forms.ValidationError(f"{key} must have {length} entries")
    numbers = []
    for item in value:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise forms.ValidationError(f"{key} entries must be numbers, got {item!r}")
        if minimum is not None and item <= minimum:
            raise forms.ValidationError(f"{key} entries must exceed {minimum}, got {item}")
        numbers.append(float(item))
    return numbers


# ── Shared fields ────────────────────────────────────────────


class BaseRunForm(forms.Form):
    seed = forms.IntegerField(min_value=0, max_value=MAX_SEED, initial=settings.LAB_DEFAULT_SEED)
    threads = forms.IntegerField(min_value=0, initial=settings.LAB_THREADS)
    out = forms.CharField(required=False, initial="", empty_value="")


class WalkFieldsMixin(forms.Form):
    trials = forms.IntegerField(min_value=0, initial=1000)
    epsilon = forms.FloatField(min_value=1e-6, max_value=0.3, initial=0.15)
    step_angle = forms.FloatField(min_value=1e-6, max_value=0.3, initial=0.05)
    max_steps = forms.IntegerField(min_value=1, initial=settings.LAB_CENSOR_STEPS)
    z_limit = forms.FloatField(min_value=0.0, initial=3.0)

    def clean_epsilon(self):
        epsilon = self.cleaned_data["epsilon"]
        if epsilon <= 0:
            raise forms.ValidationError("epsilon must be positive")
        return epsilon


class GridFieldsMixin(forms.Form):
    points = forms.IntegerField(min_value=16, initial=128)
    axis_min = forms.FloatField(initial=-16.0)
    axis_max = forms.FloatField(initial=16.0)
    sigma = forms.FloatField(min_value=1e-6, initial=1.0)
    mass = forms.FloatField(min_value=1e-12, initial=1.0)

    def clean(self):
        cleaned = super().clean()
        low, high = cleaned.get("axis_min"), cleaned.get("axis_max")
        if low is not None and high is not None and high <= low:
            self.add_error("axis_max", "axis_max must exceed axis_min")
        return cleaned


# ── Scenario forms ───────────────────────────────────────────


class BornForm(WalkFieldsMixin, BaseRunForm):
    weights = forms.JSONField(initial=[[0.3, 0.7], [0.5, 0.5], [0.2, 0.3, 0.5]])
    epsilons = forms.JSONField(initial=[0.1, 0.15, 0.2])
    censored_limit = forms.FloatField(min_value=0.0, max_value=1.0, initial=0.01)
    trials = forms.IntegerField(min_value=0, initial=2000)
    max_steps = forms.IntegerField(min_value=1, initial=200_000)

    def clean_weights(self):
        rows = self.cleaned_data["weights"]
        if not isinstance(rows, list) or not rows:
            raise forms.ValidationError("weights must be a non-empty list of weight vectors")
        cleaned = []
        for row in rows:
            numbers = _number_list(row, "weights", minimum=None)
            if len(numbers) < 2 or any(w < 0 for w in numbers) or abs(sum(numbers) - 1.0) > 1e-9:
                raise forms.ValidationError("each weight vector needs >= 2 non-negative entries summing to 1")
            cleaned.append(numbers)
        return cleaned

    def clean_epsilons(self):
        epsilons = _number_list(self.cleaned_data["epsilons"], "epsilons", minimum=0.0)
        if any(e >= 0.3 for e in epsilons):
            raise forms.ValidationError("epsilons must stay below 0.3 (5 epsilon must fit between orthogonal targets)")
        return epsilons


class WalkForm(BaseRunForm):
    points = forms.IntegerField(min_value=16, initial=32)
    axis_min = forms.FloatField(initial=-16.0)
    axis_max = forms.FloatField(initial=16.0)
    sigma = forms.FloatField(min_value=1e-6, initial=2.0)
    start = forms.FloatField(initial=0.0)
    step_angle = forms.FloatField(min_value=1e-6, max_value=0.3, initial=0.05)
    walkers = forms.IntegerField(min_value=8, initial=1000)
    step_counts = forms.JSONField(initial=[10, 20, 30, 40, 50])
    skewness_limit = forms.FloatField(min_value=0.0, initial=0.05)
    kurtosis_limit = forms.FloatField(min_value=0.0, initial=0.1)
    r2_limit = forms.FloatField(min_value=0.0, max_value=1.0, initial=0.999)

    def clean_step_counts(self):
        counts = self.cleaned_data["step_counts"]
        if (
            not isinstance(counts, list)
            or len(counts) < 3
            or any(isinstance(c, bool) or not isinstance(c, int) or c < 1 for c in counts)
        ):
            raise forms.ValidationError("step_counts must list at least 3 positive integers")
        return sorted(set(counts))


class DoubleSlitForm(WalkFieldsMixin, GridFieldsMixin, BaseRunForm):
    points = forms.IntegerField(min_value=16, initial=256)
    axis_min = forms.FloatField(initial=-32.0)
    axis_max = forms.FloatField(initial=32.0)
    sigma = forms.FloatField(min_value=1e-6, initial=0.5)
    slit_separation = forms.FloatField(min_value=0.0, initial=4.0)
    t_plate = forms.FloatField(min_value=0.0, initial=4.0)
    dt = forms.FloatField(min_value=1e-9, initial=0.01)
    plate_sites = forms.IntegerField(min_value=2, max_value=8, initial=3)
    plate_stride = forms.IntegerField(min_value=1, initial=12)
    symmetry_p_limit = forms.FloatField(min_value=0.0, max_value=1.0, initial=0.01)
    on_slit_margin = forms.FloatField(min_value=0.0, initial=0.0)
    unimodal_limit = forms.IntegerField(min_value=1, initial=1)

    def clean(self):
        cleaned = super().clean()
        separation, sigma = cleaned.get("slit_separation"), cleaned.get("sigma")
        if separation is not None and sigma is not None and separation < 6.0 * sigma:
            self.add_error("slit_separation", "slit separation must be at least 6 sigma")
        return cleaned


class BoxEscapeForm(GridFieldsMixin, BaseRunForm):
    points = forms.IntegerField(min_value=16, initial=256)
    axis_min = forms.FloatField(initial=-64.0)
    axis_max = forms.FloatField(initial=64.0)
    center = forms.FloatField(initial=0.0)
    distant_offset = forms.FloatField(initial=10.0)
    t_end = forms.FloatField(min_value=0.0, initial=8.0)
    dt = forms.FloatField(min_value=1e-9, initial=0.05)
    monotone_slack = forms.FloatField(min_value=0.0, initial=1e-6)
    spreading_limit = forms.FloatField(min_value=0.0, initial=1e-3)


class EprForm(WalkFieldsMixin, GridFieldsMixin, BaseRunForm):
    points = forms.IntegerField(min_value=16, initial=32)
    axis_min = forms.FloatField(initial=-8.0)
    axis_max = forms.FloatField(initial=8.0)
    sigma = forms.FloatField(min_value=1e-6, initial=0.5)
    center = forms.FloatField(initial=3.0)
    delta = forms.FloatField(initial=2.0)
    samples_per_factor = forms.IntegerField(min_value=2, initial=32)
    momentum_range = forms.FloatField(min_value=0.0, initial=3.5)
    pair_sites = forms.JSONField(initial=[-5.0, -1.0, 3.0])
    trials = forms.IntegerField(min_value=0, initial=500)
    separation_limit = forms.FloatField(min_value=0.0, initial=1.4)
    on_manifold_limit = forms.FloatField(min_value=0.0, initial=1e-6)
    landing_limit = forms.FloatField(min_value=0.0, max_value=1.0, initial=0.99)

    def clean_pair_sites(self):
        sites = _number_list(self.cleaned_data["pair_sites"], "pair_sites")
        if len(sites) < 2:
            raise forms.ValidationError("pair_sites needs at least 2 sites")
        return sites


class CatForm(GridFieldsMixin, BaseRunForm):
    points = forms.IntegerField(min_value=16, initial=48)
    axis_min = forms.FloatField(initial=-8.0)
    axis_max = forms.FloatField(initial=8.0)
    device_sigma = forms.FloatField(min_value=1e-6, initial=1.0)
    device_mass = forms.FloatField(min_value=1e-12, initial=1.0)
    particle_center = forms.FloatField(initial=0.0)
    device_center = forms.FloatField(initial=0.0)
    coupling = forms.FloatField(min_value=0.0, initial=0.5)
    t_end = forms.FloatField(min_value=0.0, initial=1.0)
    dt = forms.FloatField(min_value=1e-9, initial=0.01)
    product_limit = forms.FloatField(min_value=0.0, initial=1e-10)
    entangled_min = forms.FloatField(min_value=0.0, initial=0.1)
    constrained_limit = forms.FloatField(min_value=0.0, initial=0.01)


class NewtonForm(GridFieldsMixin, BaseRunForm):
    potential = forms.ChoiceField(choices=[("free", "free"), ("uniform_force", "uniform_force"), ("harmonic", "harmonic")], initial="harmonic")
    strength = forms.FloatField(initial=0.5)
    a0 = forms.FloatField(initial=3.0)
    p0 = forms.FloatField(initial=0.0)
    t_end = forms.FloatField(min_value=0.0, required=False, initial=None)
    dt = forms.FloatField(min_value=1e-9, initial=0.01)
    trajectory_limit = forms.FloatField(min_value=0.0, initial=0.01)
    energy_limit = forms.FloatField(min_value=0.0, initial=0.01)
    momentum_limit = forms.FloatField(min_value=0.0, initial=0.01)
    rest_limit = forms.FloatField(min_value=0.0, initial=1.0)

    def clean(self):
        cleaned = super().clean()
        if cleaned.get("potential") == "harmonic" and cleaned.get("strength") is not None and cleaned["strength"] <= 0:
            self.add_error("strength", "harmonic strength (angular frequency) must be positive")
        return cleaned


class DriftForm(WalkFieldsMixin, GridFieldsMixin, BaseRunForm):
    site_separation = forms.FloatField(min_value=0.0, initial=8.0)
    epsilon = forms.FloatField(min_value=1e-6, max_value=0.3, initial=0.3)
    drift_ratio = forms.FloatField(min_value=0.0, initial=1.0)
    trials = forms.IntegerField(min_value=0, initial=1000)
    p_limit = forms.FloatField(min_value=0.0, max_value=1.0, initial=0.01)
    orthogonality_limit = forms.FloatField(min_value=0.0, initial=1e-8)
    speedup_limit = forms.FloatField(min_value=0.0, initial=1.0)


SCENARIO_FORMS: dict[str, type[BaseRunForm]] = {
    "born": BornForm,
    "walk": WalkForm,
    "double-slit": DoubleSlitForm,
    "box-escape": BoxEscapeForm,
    "epr": EprForm,
    "cat": CatForm,
    "newton": NewtonForm,
    "drift": DriftForm,
}


# ── Parsing ──────────────────────────────────────────────────


@dataclass(frozen=True)
class RunConfig:
    """A fully validated run: scenario name and the configuration echo."""

    scenario: str
    values: dict

    @property
    def seed(self) -> int:
        return self.values["seed"]

    @property
    def threads(self) -> int:
        return self.values["threads"]

    @property
    def out_dir(self) -> Path:
        if self.values["out"]:
            return Path(self.values["out"])
        return Path(settings.LAB_OUTPUT_DIR) / f"{self.scenario}-{self.seed}"

    def echo(self) -> dict:
        return dict(self.values)


def load_document(path) -> dict:
    """Read a JSON configuration document."""
    try:
        document = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigValidationError("config", f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigValidationError("config", f"{path} is not valid JSON: {e}") from e
    if not isinstance(document, dict):
        raise ConfigValidationError("config", "configuration document must be a JSON object")
    return document


def parse_and_validate(scenario: str, document: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Validate ``document`` with ``overrides`` applied on top; errors name the offending key."""
    if scenario not in SCENARIO_FORMS:
        raise ConfigValidationError("scenario", f"unknown scenario {scenario!r}")
    form_class = SCENARIO_FORMS[scenario]
    fields = form_class.base_fields
    document, overrides = dict(document or {}), {k: v for k, v in (overrides or {}).items() if v is not None}
    document.pop("scenario", None)

    for key in list(document) + list(overrides):
        if key not in fields:
            raise ConfigValidationError(key, "unknown configuration key")

    data = {name: field.initial for name, field in fields.items()}
    data.update(document)
    data.update(overrides)
    form = form_class(data)
    if not form.is_valid():
        key, errors = next(iter(form.errors.items()))
        raise ConfigValidationError(key, "; ".join(errors))
    values = {name: form.cleaned_data[name] for name in fields}
    logger.debug(f"Validated {scenario} configuration: {values}")
    return RunConfig(scenario=scenario, values=values)

"""Synthetic job-application data with controlled bias injection.

Population model: four skill scores drawn i.i.d. uniform on [0, 1] and a
university drawn from a fixed ten-member roster.  The labeling rule invites
an applicant whose score is strictly above 0.7 in at least two skills; the
university never enters the rule.

Three injectors distort the sampled population without ever touching the
rule, so bias lives purely in the feature/label distribution:

* ``CovariateShift`` caps one skill, leaving a score region that deployment
  data covers but training data does not.
* ``SelectionBias`` ties the university draw to the high-skill profile
  (statistics and python both above 0.7); skill marginals stay uniform.
* ``Imbalance`` resamples the unbiased population until the invite fraction
  matches a requested ratio.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping, Union

import numpy as np

from .seeding import check_seed, substream
from .serialization import SCHEMA_VERSION, check_schema_version, read_json, write_json

SKILLS = ("statistics", "python", "pytorch", "matlab")
UNIVERSITIES = tuple(f"University{i}" for i in range(1, 11))
INVITE_THRESHOLD = 0.7
SPLIT_TAGS = ("train", "test")

_UNIVERSITY_INDEX = {name: i for i, name in enumerate(UNIVERSITIES)}

# Weights used when the high-skill profile (statistics & python > 0.7) picks
# its university: University10 dominates, University9/3 follow, the rest share
# the remainder evenly.
DEFAULT_FAVORED: Mapping[str, float] = {
    "University10": 0.60,
    "University9": 0.15,
    "University3": 0.15,
    **{f"University{i}": 0.10 / 7 for i in (1, 2, 4, 5, 6, 7, 8)},
}


class DatagenError(ValueError):
    """Invalid inputs to the data generator."""


class UnknownUniversityError(DatagenError):
    pass


class UnattainableRatioError(DatagenError):
    """Requested invite ratio cannot be realized at the requested size."""


class EmptySelectionError(DatagenError):
    """A predicate or brush selected zero examples where at least one is required."""


class Decision(str, Enum):
    INVITE = "invite"
    REJECT = "reject"


@dataclass(frozen=True)
class Applicant:
    statistics: float
    python: float
    pytorch: float
    matlab: float
    university: str

    def __post_init__(self) -> None:
        for name in SKILLS:
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise DatagenError(f"skill {name!r} must be a number") from None
            if not 0.0 <= value <= 1.0:
                raise DatagenError(f"skill {name!r} must lie in [0, 1], got {value}")
            object.__setattr__(self, name, value)
        if self.university not in _UNIVERSITY_INDEX:
            raise UnknownUniversityError(
                f"unknown university {self.university!r}; roster is "
                f"{UNIVERSITIES[0]}..{UNIVERSITIES[-1]}"
            )

    def skill_scores(self) -> tuple[float, float, float, float]:
        return (self.statistics, self.python, self.pytorch, self.matlab)


@dataclass(frozen=True)
class LabeledExample:
    applicant: Applicant
    label: Decision


@dataclass(frozen=True)
class NoBias:
    kind: str = field(default="none", init=False)


@dataclass(frozen=True)
class CovariateShift:
    feature: str = "pytorch"
    cap: float = 0.7
    kind: str = field(default="covariate_shift", init=False)

    def __post_init__(self) -> None:
        if self.feature not in SKILLS:
            raise DatagenError(f"unknown skill {self.feature!r}; expected one of {SKILLS}")
        if not 0.0 < self.cap <= 1.0:
            raise DatagenError(f"cap must lie in (0, 1], got {self.cap}")


@dataclass(frozen=True)
class SelectionBias:
    favored: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_FAVORED))
    kind: str = field(default="selection_bias", init=False)

    def __post_init__(self) -> None:
        unknown = set(self.favored) - set(UNIVERSITIES)
        if unknown:
            raise UnknownUniversityError(f"favored map names unknown universities: {sorted(unknown)}")
        weights = [float(self.favored.get(u, 0.0)) for u in UNIVERSITIES]
        if any(w < 0 for w in weights):
            raise DatagenError("favored weights must be nonnegative")
        total = sum(weights)
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise DatagenError(f"favored weights must sum to 1, got {total}")
        object.__setattr__(self, "favored", dict(self.favored))

    def weight_vector(self) -> np.ndarray:
        return np.array([self.favored.get(u, 0.0) for u in UNIVERSITIES], dtype=float)


@dataclass(frozen=True)
class Imbalance:
    invite_ratio: float
    kind: str = field(default="imbalance", init=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.invite_ratio < 1.0:
            raise DatagenError(f"invite_ratio must lie in (0, 1), got {self.invite_ratio}")


BiasSpec = Union[NoBias, CovariateShift, SelectionBias, Imbalance]
NO_BIAS = NoBias()


@dataclass
class Dataset:
    examples: list[LabeledExample]
    seed: int
    bias: BiasSpec
    split_tag: str

    def __post_init__(self) -> None:
        if self.split_tag not in SPLIT_TAGS:
            raise DatagenError(f"split_tag must be one of {SPLIT_TAGS}, got {self.split_tag!r}")

    def __len__(self) -> int:
        return len(self.examples)

    def invite_fraction(self) -> float:
        if not self.examples:
            return 0.0
        invited = sum(1 for ex in self.examples if ex.label is Decision.INVITE)
        return invited / len(self.examples)


def hr_decision(applicant: Applicant) -> Decision:
    """The ground-truth rule: invite iff strictly more than 0.7 in two skills."""
    high = sum(1 for score in applicant.skill_scores() if score > INVITE_THRESHOLD)
    return Decision.INVITE if high >= 2 else Decision.REJECT


def _draw_base(n: int, rng: np.random.Generator, bias: BiasSpec) -> tuple[np.ndarray, np.ndarray]:
    """Skill matrix (n, 4) and university indices (n,) for the non-resampling biases."""
    skills = rng.random((n, 4))
    if isinstance(bias, CovariateShift):
        skills[:, SKILLS.index(bias.feature)] *= bias.cap
    u = rng.random(n)
    uniform_idx = np.minimum((u * len(UNIVERSITIES)).astype(np.int64), len(UNIVERSITIES) - 1)
    if isinstance(bias, SelectionBias):
        cum = np.cumsum(bias.weight_vector())
        favored_idx = np.minimum(
            np.searchsorted(cum, u, side="right"), len(UNIVERSITIES) - 1
        )
        qualified = (skills[:, 0] > INVITE_THRESHOLD) & (skills[:, 1] > INVITE_THRESHOLD)
        uni_idx = np.where(qualified, favored_idx, uniform_idx)
    else:
        uni_idx = uniform_idx
    return skills, uni_idx


def _invite_mask(skills: np.ndarray) -> np.ndarray:
    return (skills > INVITE_THRESHOLD).sum(axis=1) >= 2


def _draw_imbalanced(n: int, seed: int, bias: Imbalance) -> tuple[np.ndarray, np.ndarray]:
    """Resample the unbiased population until the invite count hits its target."""
    target_invites = round(n * bias.invite_ratio)
    if target_invites < 1 or target_invites > n - 1:
        raise UnattainableRatioError(
            f"invite_ratio={bias.invite_ratio} at n={n} needs {target_invites} invited "
            f"examples; both labels must appear at least once"
        )
    target_rejects = n - target_invites
    rng = substream(seed, "datagen")
    inv_skills: list[np.ndarray] = []
    inv_uni: list[np.ndarray] = []
    rej_skills: list[np.ndarray] = []
    rej_uni: list[np.ndarray] = []
    got_inv = got_rej = 0
    chunk = max(2048, n)
    while got_inv < target_invites or got_rej < target_rejects:
        skills, uni_idx = _draw_base(chunk, rng, NO_BIAS)
        invited = _invite_mask(skills)
        if got_inv < target_invites:
            take = np.flatnonzero(invited)[: target_invites - got_inv]
            inv_skills.append(skills[take])
            inv_uni.append(uni_idx[take])
            got_inv += len(take)
        if got_rej < target_rejects:
            take = np.flatnonzero(~invited)[: target_rejects - got_rej]
            rej_skills.append(skills[take])
            rej_uni.append(uni_idx[take])
            got_rej += len(take)
    skills = np.concatenate(inv_skills + rej_skills)
    uni_idx = np.concatenate(inv_uni + rej_uni)
    order = substream(seed, "datagen-order").permutation(n)
    return skills[order], uni_idx[order]


def generate(n: int, seed: int, bias: BiasSpec = NO_BIAS, split_tag: str = "train") -> Dataset:
    """Generate ``n`` labeled examples; (n, seed, bias) fully determine them."""
    if n < 1:
        raise DatagenError(f"n must be at least 1, got {n}")
    check_seed(seed)
    if isinstance(bias, Imbalance):
        skills, uni_idx = _draw_imbalanced(n, seed, bias)
    else:
        skills, uni_idx = _draw_base(n, substream(seed, "datagen"), bias)
    examples = []
    for row, ui in zip(skills, uni_idx):
        applicant = Applicant(
            statistics=float(row[0]),
            python=float(row[1]),
            pytorch=float(row[2]),
            matlab=float(row[3]),
            university=UNIVERSITIES[int(ui)],
        )
        examples.append(LabeledExample(applicant, hr_decision(applicant)))
    return Dataset(examples=examples, seed=seed, bias=bias, split_tag=split_tag)


def conditional_university_share(
    dataset: Dataset, predicate: Callable[[Applicant], bool]
) -> dict[str, float]:
    """Per-university share of the examples selected by ``predicate``.

    Used to audit the selection-bias construction: conditioning on the
    high-skill profile should expose the favored-university weights, while
    any other slice stays close to uniform.
    """
    counts: Counter[str] = Counter()
    total = 0
    for ex in dataset.examples:
        if predicate(ex.applicant):
            counts[ex.applicant.university] += 1
            total += 1
    if total == 0:
        raise EmptySelectionError("predicate selected no examples")
    return {u: counts.get(u, 0) / total for u in UNIVERSITIES}


def bias_to_json(bias: BiasSpec) -> dict:
    if isinstance(bias, NoBias):
        return {"kind": "none"}
    if isinstance(bias, CovariateShift):
        return {"kind": "covariate_shift", "feature": bias.feature, "cap": bias.cap}
    if isinstance(bias, SelectionBias):
        return {"kind": "selection_bias", "favored": {u: bias.favored.get(u, 0.0) for u in UNIVERSITIES}}
    if isinstance(bias, Imbalance):
        return {"kind": "imbalance", "invite_ratio": bias.invite_ratio}
    raise DatagenError(f"unknown bias spec {bias!r}")


def bias_from_json(doc: Mapping) -> BiasSpec:
    kind = doc.get("kind")
    if kind == "none":
        return NO_BIAS
    if kind == "covariate_shift":
        return CovariateShift(feature=doc["feature"], cap=doc["cap"])
    if kind == "selection_bias":
        return SelectionBias(favored=doc["favored"])
    if kind == "imbalance":
        return Imbalance(invite_ratio=doc["invite_ratio"])
    raise DatagenError(f"unknown bias kind {kind!r}")


def example_to_json(ex: LabeledExample) -> dict:
    a = ex.applicant
    return {
        "skills": {name: getattr(a, name) for name in SKILLS},
        "university": a.university,
        "label": ex.label.value,
    }


def example_from_json(doc: Mapping) -> LabeledExample:
    applicant = Applicant(university=doc["university"], **doc["skills"])
    return LabeledExample(applicant, Decision(doc["label"]))


def dataset_to_json(dataset: Dataset) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": dataset.seed,
        "split_tag": dataset.split_tag,
        "bias": bias_to_json(dataset.bias),
        "examples": [example_to_json(ex) for ex in dataset.examples],
    }


def dataset_from_json(doc: Mapping, source: str = "dataset") -> Dataset:
    check_schema_version(doc, source)
    return Dataset(
        examples=[example_from_json(e) for e in doc["examples"]],
        seed=doc["seed"],
        bias=bias_from_json(doc["bias"]),
        split_tag=doc["split_tag"],
    )


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    write_json(dataset_to_json(dataset), path)


def load_dataset(path: str | Path) -> Dataset:
    return dataset_from_json(read_json(path), source=str(path))

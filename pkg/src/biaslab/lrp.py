"""Layer-wise relevance propagation over the trained dense network.

The output logit is redistributed backwards layer by layer: each unit's
relevance is split over its inputs in proportion to their contributions
``a_i * w_ij``, with a small signed stabilizer epsilon added to the
pre-activation in the denominator.  The leftover share a unit would keep
(its bias plus the stabilizer term) is handed back to its inputs in
proportion to their contribution magnitudes, so the input relevances
conserve the logit; a unit with no input contribution at all keeps nothing
to hand back, which is why an all-zero input yields all-zero relevance.

Per-feature percentages ("relative relevance") are the absolute relevances
normalized to sum to 100, with the ten one-hot university slots also rolled
up into a single university share for display.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .datagen import SKILLS, UNIVERSITIES, Applicant, EmptySelectionError
from .model import FEATURE_DIM, ForwardTrace, NetworkParams, encode, forward
from .serialization import SCHEMA_VERSION

N_SKILLS = len(SKILLS)


class LrpError(ValueError):
    pass


class NonFiniteRelevanceError(RuntimeError):
    pass


@dataclass(frozen=True)
class LrpConfig:
    epsilon: float = 0.01

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise LrpError(f"epsilon must be positive, got {self.epsilon}")


@dataclass
class RelevanceVector:
    absolute: np.ndarray  # aligned with the feature vector
    logit: float
    probability: float
    skill_shares: dict[str, float]  # percentages
    university_share: float  # percentage, sum of the one-hot slots
    per_university_shares: dict[str, float]


def input_relevance(
    params: NetworkParams, x: np.ndarray, cfg: LrpConfig = LrpConfig()
) -> tuple[np.ndarray, ForwardTrace]:
    """Backward relevance pass from the logit down to the input features."""
    trace = forward(params, x)
    relevance = np.array([trace.logit])
    for l in reversed(range(len(params.layers))):
        layer = params.layers[l]
        a_in = trace.activations[l]
        contributions = layer.weights * a_in[None, :]  # (out, in)
        z = contributions.sum(axis=1) + layer.bias
        denom = z + cfg.epsilon * np.where(z >= 0.0, 1.0, -1.0)
        shares = contributions * (relevance / denom)[:, None]
        # hand each unit's leftover (bias + stabilizer share) back to its
        # inputs by contribution magnitude; units with no contribution at all
        # have nothing to attribute and drop theirs
        residual = relevance - shares.sum(axis=1)
        magnitudes = np.abs(contributions)
        magnitude_totals = magnitudes.sum(axis=1)
        has_input = magnitude_totals > 0.0
        shares[has_input] += (
            residual[has_input, None] * magnitudes[has_input] / magnitude_totals[has_input, None]
        )
        relevance = shares.sum(axis=0)
        if not np.all(np.isfinite(relevance)):
            raise NonFiniteRelevanceError(f"non-finite relevance below layer {l}")
    return relevance, trace


def _shares(absolute: np.ndarray) -> np.ndarray:
    magnitude = np.abs(absolute)
    total = magnitude.sum()
    if total == 0.0:
        return np.full(len(absolute), 100.0 / len(absolute))
    return magnitude / total * 100.0


def explain(
    params: NetworkParams, x: np.ndarray, cfg: LrpConfig = LrpConfig()
) -> RelevanceVector:
    """Relevance report for one encoded applicant."""
    x = np.asarray(x, dtype=float)
    if x.shape != (FEATURE_DIM,):
        raise LrpError(f"expected a {FEATURE_DIM}-component feature vector, got shape {x.shape}")
    absolute, trace = input_relevance(params, x, cfg)
    shares = _shares(absolute)
    return RelevanceVector(
        absolute=absolute,
        logit=trace.logit,
        probability=trace.probability,
        skill_shares={name: float(shares[i]) for i, name in enumerate(SKILLS)},
        university_share=float(shares[N_SKILLS:].sum()),
        per_university_shares={
            name: float(shares[N_SKILLS + i]) for i, name in enumerate(UNIVERSITIES)
        },
    )


def explain_applicant(
    params: NetworkParams, applicant: Applicant, cfg: LrpConfig = LrpConfig()
) -> RelevanceVector:
    return explain(params, encode(applicant), cfg)


@dataclass
class GroupRelevance:
    count: int
    skill_shares: dict[str, float]
    university_share: float
    per_university_shares: dict[str, float]


def mean_group_relevance(
    params: NetworkParams,
    applicants: Iterable[Applicant],
    cfg: LrpConfig = LrpConfig(),
) -> GroupRelevance:
    """Arithmetic mean of the relative shares over a selected applicant group."""
    skill_sums = {name: 0.0 for name in SKILLS}
    uni_sums = {name: 0.0 for name in UNIVERSITIES}
    uni_total = 0.0
    count = 0
    for applicant in applicants:
        rv = explain_applicant(params, applicant, cfg)
        for name in SKILLS:
            skill_sums[name] += rv.skill_shares[name]
        for name in UNIVERSITIES:
            uni_sums[name] += rv.per_university_shares[name]
        uni_total += rv.university_share
        count += 1
    if count == 0:
        raise EmptySelectionError("relevance group is empty")
    return GroupRelevance(
        count=count,
        skill_shares={k: v / count for k, v in skill_sums.items()},
        university_share=uni_total / count,
        per_university_shares={k: v / count for k, v in uni_sums.items()},
    )


def relevance_to_json(rv: RelevanceVector) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "probability": rv.probability,
        "logit": rv.logit,
        "absolute": [float(r) for r in rv.absolute],
        "relative": {
            **rv.skill_shares,
            "university": rv.university_share,
            "per_university": dict(rv.per_university_shares),
        },
    }

"""Deterministic situation scorer: questionnaire answers plus a vitals
snapshot ranked into disease groups.

Scoring is linear and additive. Each question carries a per-group weight
vector that fires when the answer is in the question's firing set; vitals
rules add a bonus when a reading satisfies their comparator. Ties rank by
group id so results are reproducible.
"""

from __future__ import annotations

import json
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .ioutil import read_text_or_literal
from .model import EdgeKind, Graph, Node, NodeKind

Answer = Union[bool, str]

_COMPARATORS = {
    "<=": operator.le,
    ">=": operator.ge,
    "<": operator.lt,
    ">": operator.gt,
    "==": operator.eq,
}


class QuestionnaireError(ValueError):
    pass


class AnswerDomainError(QuestionnaireError):
    pass


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    domain: Union[str, tuple[str, ...]]  # "boolean" or enumerated options
    weights: dict[str, float]  # disease-group id -> weight
    fires_on: tuple[Answer, ...] = (True,)

    def fires(self, answer: Answer) -> bool:
        if self.domain == "boolean":
            if not isinstance(answer, bool):
                raise AnswerDomainError(
                    f"question {self.id} expects a boolean, got {answer!r}")
        elif answer not in self.domain:
            raise AnswerDomainError(
                f"question {self.id} got {answer!r}, allowed: "
                f"{', '.join(self.domain)}")
        return answer in self.fires_on


@dataclass(frozen=True)
class VitalsRule:
    parameter: str
    comparator: str
    threshold: float
    group: str
    bonus: float

    def applies(self, reading: float) -> bool:
        return _COMPARATORS[self.comparator](reading, self.threshold)


@dataclass(frozen=True)
class Questionnaire:
    questions: tuple[Question, ...]
    vitals_rules: tuple[VitalsRule, ...]
    groups: tuple[str, ...]  # every weight vector covers exactly these


@dataclass(frozen=True)
class SituationScore:
    scores: dict[str, float]

    @property
    def ranking(self) -> list[str]:
        """All groups, best first; ties broken by group id."""
        return sorted(self.scores, key=lambda g: (-self.scores[g], g))


def load_questionnaire(source: Union[str, Path, dict]) -> Questionnaire:
    """Read the questionnaire section of a corpus file (or a parsed dict)."""
    if isinstance(source, dict):
        document = source
    else:
        document = json.loads(read_text_or_literal(source))
    section = document.get("questionnaire", document)
    questions = []
    group_sets = []
    for raw in section.get("questions", []):
        domain = raw["domain"]
        if domain != "boolean":
            domain = tuple(domain)
        fires_on = tuple(raw.get("fires_on", (True,)))
        weights = {g: float(w) for g, w in raw["weights"].items()}
        group_sets.append(frozenset(weights))
        questions.append(Question(id=raw["id"], text=raw["text"],
                                  domain=domain, weights=weights,
                                  fires_on=fires_on))
    if not questions:
        raise QuestionnaireError("no questions declared")
    if len(set(group_sets)) != 1:
        raise QuestionnaireError(
            "weight vectors do not all cover the same disease groups")
    groups = tuple(sorted(group_sets[0]))
    rules = tuple(
        VitalsRule(parameter=raw["parameter"], comparator=raw["comparator"],
                   threshold=float(raw["threshold"]), group=raw["group"],
                   bonus=float(raw["bonus"]))
        for raw in section.get("vitals_rules", []))
    for rule in rules:
        if rule.comparator not in _COMPARATORS:
            raise QuestionnaireError(f"unknown comparator {rule.comparator!r}")
        if rule.group not in groups:
            raise QuestionnaireError(
                f"rule bonus references unknown group {rule.group!r}")
    return Questionnaire(questions=tuple(questions), vitals_rules=rules,
                         groups=groups)


def score(questionnaire: Questionnaire, answers: dict[str, Answer],
          vitals: Optional[dict[str, float]] = None) -> SituationScore:
    """Weighted sum over fired questions plus vitals rule bonuses.

    Unanswered questions contribute nothing. Raises AnswerDomainError for an
    answer outside its question's domain.
    """
    totals = {group: 0.0 for group in questionnaire.groups}
    for question in questionnaire.questions:
        if question.id not in answers:
            continue
        if question.fires(answers[question.id]):
            for group, weight in question.weights.items():
                totals[group] += weight
    for rule in questionnaire.vitals_rules:
        reading = (vitals or {}).get(rule.parameter)
        if reading is not None and rule.applies(reading):
            totals[rule.group] += rule.bonus
    return SituationScore(scores=totals)


def recommend_entry(graph: Graph, situation: SituationScore,
                    k: int) -> list[tuple[Node, list[Node]]]:
    """Top-k disease groups with the treatment paths linked from each."""
    if not situation.scores:
        raise QuestionnaireError("empty score map")
    for group_id in situation.scores:
        node = graph.nodes.get(group_id)
        if node is None or node.kind is not NodeKind.DISEASE_GROUP:
            raise QuestionnaireError(
                f"score references unknown disease group {group_id!r}")
    result = []
    for group_id in situation.ranking[:max(k, 0)]:
        group = graph.nodes[group_id]
        linked = graph.related_links(group_id).bpr
        result.append((group, [target for _, target in linked]))
    return result

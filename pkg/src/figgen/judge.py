"""Reference-based VLM-as-judge scoring and aggregation.

Four dimensions are compared pairwise against the human reference; the
overall winner is derived hierarchically (faithfulness and readability
first, conciseness and aesthetics only on a primary tie).
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass

from scipy import stats

from .errors import AlignmentError, DegenerateError, JudgeError, ParseError
from .gateway import GenParams, image_part, text_part
from .prompts import load_prompt
from .textparse import extract_json_object

logger = logging.getLogger(__name__)


class Dimension(str, enum.Enum):
    FAITHFULNESS = "faithfulness"
    CONCISENESS = "conciseness"
    READABILITY = "readability"
    AESTHETICS = "aesthetics"


PRIMARY_DIMENSIONS = (Dimension.FAITHFULNESS, Dimension.READABILITY)
SECONDARY_DIMENSIONS = (Dimension.CONCISENESS, Dimension.AESTHETICS)

# Dimensions whose prompts receive the source context; the rest see the
# intent only.
CONTEXT_DIMENSIONS = (Dimension.FAITHFULNESS, Dimension.CONCISENESS)


class Outcome(str, enum.Enum):
    MODEL = "model"
    HUMAN = "human"
    BOTH_GOOD = "both_good"
    BOTH_BAD = "both_bad"


class OverallOutcome(str, enum.Enum):
    MODEL = "model"
    HUMAN = "human"
    TIE = "tie"


class EnhancementOutcome(str, enum.Enum):
    ENHANCED_WINS = "enhanced_wins"
    ORIGINAL_WINS = "original_wins"
    TIE = "tie"


# Fixed verdict-to-score mapping; no other values ever appear.
OUTCOME_SCORE = {
    Outcome.MODEL: 100,
    Outcome.HUMAN: 0,
    Outcome.BOTH_GOOD: 50,
    Outcome.BOTH_BAD: 50,
}

OVERALL_SCORE = {
    OverallOutcome.MODEL: 100,
    OverallOutcome.HUMAN: 0,
    OverallOutcome.TIE: 50,
}

_WINNER_TOKENS = {
    "model": Outcome.MODEL,
    "human": Outcome.HUMAN,
    "both are good": Outcome.BOTH_GOOD,
    "both are bad": Outcome.BOTH_BAD,
}


@dataclass(frozen=True)
class DimensionVerdict:
    dimension: Dimension
    outcome: Outcome
    reasoning: str = ""

    @property
    def score(self) -> int:
        return OUTCOME_SCORE[self.outcome]


@dataclass(frozen=True)
class ScoreCard:
    case_id: str
    verdicts: tuple[DimensionVerdict, ...]
    overall_outcome: OverallOutcome
    overall_score: int

    def verdict(self, dim: Dimension) -> DimensionVerdict:
        for v in self.verdicts:
            if v.dimension is dim:
                return v
        raise KeyError(dim)

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "per_dimension": {
                v.dimension.value: {"outcome": v.outcome.value, "score": v.score,
                                    "reasoning": v.reasoning}
                for v in self.verdicts
            },
            "overall_outcome": self.overall_outcome.value,
            "overall_score": self.overall_score,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ScoreCard":
        verdicts = tuple(
            DimensionVerdict(Dimension(d), Outcome(v["outcome"]),
                             v.get("reasoning", ""))
            for d, v in obj["per_dimension"].items()
        )
        return cls(
            case_id=obj["case_id"],
            verdicts=verdicts,
            overall_outcome=OverallOutcome(obj["overall_outcome"]),
            overall_score=obj["overall_score"],
        )


def normalize_winner(token: str) -> Outcome:
    """Map a raw winner string onto the closed four-token vocabulary."""
    key = token.strip().lower()
    if key not in _WINNER_TOKENS:
        raise JudgeError(f"winner {token!r} outside the closed vocabulary")
    return _WINNER_TOKENS[key]


def judge_dimension(dim: Dimension, candidate: bytes, reference: bytes,
                    source_context: str, intent: str, gateway,
                    params: GenParams | None = None,
                    swap_positions: bool = False) -> DimensionVerdict:
    """One pairwise comparison. The candidate sits in the "Model" slot and
    the reference in the "Human" slot unless ``swap_positions`` is set."""
    template = load_prompt(f"judge_{dim.value}")
    if dim in CONTEXT_DIMENSIONS:
        prompt = template.format(source_context=source_context, intent=intent)
    else:
        prompt = template.format(intent=intent)
    human_slot, model_slot = (candidate, reference) if swap_positions \
        else (reference, candidate)
    parts = [
        text_part(prompt),
        text_part("Human-drawn illustration:"),
        image_part(human_slot),
        text_part("Model-generated illustration:"),
        image_part(model_slot),
    ]
    params = params or GenParams()
    last_error: Exception | None = None
    for _ in range(2):  # one retry on unparseable output
        raw = gateway.complete(parts, params, agent=f"judge_{dim.value}")
        try:
            obj = extract_json_object(raw, required_key="winner")
            outcome = normalize_winner(str(obj["winner"]))
            return DimensionVerdict(dim, outcome,
                                    reasoning=str(obj.get("comparison_reasoning", "")))
        except (ParseError, JudgeError) as exc:
            last_error = exc
    raise JudgeError(f"unparseable {dim.value} verdict: {last_error}")


def _pair_winner(a: Outcome, b: Outcome) -> OverallOutcome | None:
    """Winner over a dimension pair: a side must win both, or win one with
    the other tied. A 1-1 split or double tie is undecided."""
    model = sum(1 for o in (a, b) if o is Outcome.MODEL)
    human = sum(1 for o in (a, b) if o is Outcome.HUMAN)
    if model > 0 and human == 0:
        return OverallOutcome.MODEL
    if human > 0 and model == 0:
        return OverallOutcome.HUMAN
    return None


def aggregate_overall(verdicts) -> tuple[OverallOutcome, int]:
    """Hierarchical aggregation: primary pair decides; on a primary tie the
    same rule applies to the secondary pair; otherwise a tie."""
    by_dim = {v.dimension: v.outcome for v in verdicts}
    if set(by_dim) != set(Dimension) or len(verdicts) != 4:
        raise JudgeError("aggregation requires exactly one verdict per dimension")
    primary = _pair_winner(by_dim[Dimension.FAITHFULNESS], by_dim[Dimension.READABILITY])
    if primary is not None:
        return primary, OVERALL_SCORE[primary]
    secondary = _pair_winner(by_dim[Dimension.CONCISENESS], by_dim[Dimension.AESTHETICS])
    if secondary is not None:
        return secondary, OVERALL_SCORE[secondary]
    return OverallOutcome.TIE, OVERALL_SCORE[OverallOutcome.TIE]


def judge_case(case_id: str, candidate: bytes, reference: bytes,
               source_context: str, intent: str, gateway,
               params: GenParams | None = None,
               swap_positions: bool = False) -> ScoreCard:
    verdicts = tuple(
        judge_dimension(dim, candidate, reference, source_context, intent,
                        gateway, params, swap_positions)
        for dim in Dimension
    )
    outcome, score = aggregate_overall(verdicts)
    return ScoreCard(case_id, verdicts, outcome, score)


@dataclass(frozen=True)
class ScoreTable:
    per_dimension: dict
    overall: float
    n_cases: int
    n_invalid: int

    def to_dict(self) -> dict:
        return {
            "per_dimension": dict(self.per_dimension),
            "overall": self.overall,
            "n_cases": self.n_cases,
            "n_invalid": self.n_invalid,
        }

    def to_text(self) -> str:
        lines = [f"{'dimension':<14}{'mean':>8}"]
        for dim in Dimension:
            lines.append(f"{dim.value:<14}{self.per_dimension[dim.value]:>8.1f}")
        lines.append(f"{'overall':<14}{self.overall:>8.1f}")
        lines.append(f"cases={self.n_cases} invalid={self.n_invalid}")
        return "\n".join(lines)


def batch_scores(cards, n_invalid: int = 0) -> ScoreTable:
    """Per-dimension and overall means in [0, 100], one-decimal precision."""
    cards = list(cards)
    if not cards:
        raise JudgeError("batch_scores requires at least one score card")
    per_dim = {}
    for dim in Dimension:
        values = [c.verdict(dim).score for c in cards]
        per_dim[dim.value] = round(sum(values) / len(values), 1)
    overall = round(sum(c.overall_score for c in cards) / len(cards), 1)
    return ScoreTable(per_dim, overall, len(cards), n_invalid)


def judge_enhancement(original: bytes, enhanced: bytes, intent: str, gateway,
                      params: GenParams | None = None) -> EnhancementOutcome:
    """Aesthetics-only comparison of an enhanced diagram against its original
    (enhanced in the Model slot, original in the Human slot)."""
    verdict = judge_dimension(Dimension.AESTHETICS, enhanced, original,
                              source_context="", intent=intent,
                              gateway=gateway, params=params)
    if verdict.outcome is Outcome.MODEL:
        return EnhancementOutcome.ENHANCED_WINS
    if verdict.outcome is Outcome.HUMAN:
        return EnhancementOutcome.ORIGINAL_WINS
    return EnhancementOutcome.TIE


def kendall_tau(x, y) -> float:
    """Kendall tau-b (tie-corrected) over two equal-length score vectors."""
    x = list(x)
    y = list(y)
    if len(x) != len(y):
        raise AlignmentError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise DegenerateError("kendall_tau requires at least 2 observations")
    if len(set(x)) == 1 or len(set(y)) == 1:
        raise DegenerateError("kendall_tau undefined for a constant vector")
    tau = float(stats.kendalltau(x, y, variant="b").statistic)
    # perfect agreement must be exactly +/-1; the sqrt in the tie correction
    # loses one ulp, and the nearest distinct tau is ~2/n^2 away
    if abs(tau) > 1 - 1e-9:
        return math.copysign(1.0, tau)
    return tau


def correlation_report(judge_cards, other_cards) -> dict:
    """Per-dimension and overall tau-b between two aligned score-card sets."""
    a = {c.case_id: c for c in judge_cards}
    b = {c.case_id: c for c in other_cards}
    if set(a) != set(b):
        missing = set(a) ^ set(b)
        raise AlignmentError(f"case id mismatch: {sorted(missing)[:5]}...")
    ids = sorted(a)
    report = {}
    for dim in Dimension:
        xs = [a[i].verdict(dim).score for i in ids]
        ys = [b[i].verdict(dim).score for i in ids]
        report[dim.value] = kendall_tau(xs, ys)
    report["overall"] = kendall_tau(
        [a[i].overall_score for i in ids], [b[i].overall_score for i in ids]
    )
    return report


def save_cards_jsonl(cards, path):
    with open(path, "w", encoding="utf-8") as fh:
        for card in cards:
            fh.write(json.dumps(card.to_dict()) + "\n")


def load_cards_jsonl(path):
    cards = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                cards.append(ScoreCard.from_dict(json.loads(line)))
    return cards

"""Walkthrough: reference-based judging, score tables, and rank agreement.

Scores a batch of candidate/reference pairs with a scripted judge, prints the
per-dimension table, and measures Kendall tau-b agreement between two score
sets (the judge against a noisier copy of itself).
"""

import json
import random

from figgen import ScriptedGateway, batch_scores, judge_case, kendall_tau
from figgen.imaging import make_placeholder_png
from figgen.judge import Dimension

rng = random.Random(0)
N_CASES = 20
WINNERS = ["Model", "Human", "Both are good", "Both are bad"]


def verdict(winner):
    return {"text": json.dumps({"comparison_reasoning": "scripted",
                                "winner": winner})}


# Script one verdict per dimension per case; occurrence k is case k.
scenario = {}
scripted_winners = []
for k in range(1, N_CASES + 1):
    per_case = {dim: rng.choice(WINNERS) for dim in Dimension}
    scripted_winners.append(per_case)
    for dim, winner in per_case.items():
        scenario[f"judge_{dim.value}#{k}"] = verdict(winner)

gateway = ScriptedGateway(scenario)
cards = []
for i in range(N_CASES):
    candidate = make_placeholder_png(320, 180, key=f"cand-{i}")
    reference = make_placeholder_png(320, 180, key=f"ref-{i}")
    cards.append(judge_case(f"case-{i:02d}", candidate, reference,
                            source_context=f"method text {i}",
                            intent=f"caption {i}", gateway=gateway))

print(batch_scores(cards).to_text())
print()

# Rank agreement: perturb a quarter of the overall scores and compare.
scores = [c.overall_score for c in cards]
noisy = list(scores)
for idx in rng.sample(range(N_CASES), N_CASES // 4):
    noisy[idx] = rng.choice([0, 50, 100])
print(f"tau-b(self)  = {kendall_tau(scores, scores):+.3f}")
print(f"tau-b(noisy) = {kendall_tau(scores, noisy):+.3f}")

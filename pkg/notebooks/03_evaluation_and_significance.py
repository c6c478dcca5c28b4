# %% [markdown]
# # Span-exact scoring, run aggregation and significance
#
# A predicted span counts only when its start, end and type all match gold.

# %%
from lexborrow.bio import Span
from lexborrow.corpus import Dataset, LabeledSentence
from lexborrow.evaluation import (
    Counts,
    aggregate_runs,
    cohens_kappa,
    evaluate,
    match_spans,
    prf,
    wilcoxon_rank_sum,
)

c = match_spans([Span(0, 2, "ENG")], [Span(0, 1, "ENG")])
c.all

# %%
toks = ["el", "big", "data", "y", "el", "buffet"]
gold = Dataset([LabeledSentence(toks, ["O", "B-ENG", "I-ENG", "O", "O", "B-OTHER"])])
pred = Dataset([LabeledSentence(toks, ["O", "B-ENG", "I-ENG", "O", "O", "B-ENG"])])
report = evaluate(gold, pred)
print(report.format_table())

# %% [markdown]
# Scores are percentages with 0/0 taken as 0.

# %%
prf(Counts(tp=4, fp=3, fn=42))

# %% [markdown]
# Several runs of a model (different seeds) aggregate into mean and sample
# standard deviation.

# %%
runs = [evaluate(gold, pred), evaluate(gold, gold)]
print(aggregate_runs(runs).format_table())

# %% [markdown]
# Comparing two systems over per-run F1: the rank-sum test is exact for small
# samples without ties.

# %%
system_a = [71.2, 70.8, 72.5, 71.9, 70.1]
system_b = [73.0, 74.2, 72.8, 73.9, 74.5]
wilcoxon_rank_sum(system_a, system_b)

# %% [markdown]
# Agreement between two annotators is measured token by token.

# %%
a = ["O"] * 4 + ["B-ENG"] * 4 + ["O", "B-ENG"]
b = ["O"] * 4 + ["B-ENG"] * 4 + ["B-ENG", "O"]
cohens_kappa(a, b)

# %% [markdown]
# # Errors shared across models
#
# Several prediction files for the same gold corpus are aligned. We look at
# spans every model missed, false positives every model made, and tokens only
# one model got right.

# %%
from lexborrow.corpus import Dataset, LabeledSentence
from lexborrow.error_analysis import (
    align_outputs,
    analysis_report,
    categorize_error,
    common_errors,
    format_report,
    unique_answers,
)

toks = ["Youtuber", "de", "GPS", "y", "primer", "online", "para", "el", "streaming"]


def ds(tags):
    return Dataset([LabeledSentence(toks, tags)])


gold = ds(["B-ENG", "O", "B-ENG", "O", "O", "B-ENG", "O", "O", "B-ENG"])
crf = ds(["O", "O", "O", "O", "B-ENG", "B-ENG", "O", "O", "O"])
beto = ds(["O", "O", "O", "O", "B-ENG", "O", "O", "O", "B-ENG"])
mbert = ds(["O", "O", "O", "O", "B-ENG", "B-ENG", "O", "O", "O"])

matrix = align_outputs(gold, [crf, beto, mbert], ["crf", "beto", "mbert"])
common = common_errors(matrix)
[(r.span, " ".join(toks[r.span.start:r.span.end])) for r in common.missed_by_all]

# %%
common.false_positive_by_all

# %% [markdown]
# Missed spans fall into orthographic categories, checked in a fixed order.

# %%
lexicon = {"primer", "de", "para"}
for ref in common.missed_by_all:
    span_toks = toks[ref.span.start:ref.span.end]
    print(span_toks, categorize_error(span_toks, ref.span.start, lexicon).value)

# %%
unique_answers(matrix, 1)

# %%
print(format_report(analysis_report(matrix, lexicon)))

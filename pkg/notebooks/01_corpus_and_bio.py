# %% [markdown]
# # Corpus files and BIO spans
#
# A corpus file has one token per line with its tag, and a blank line between
# sentences. Tags are BIO over two borrowing types, `ENG` and `OTHER`.

# %%
from lexborrow.bio import RepairMode, Span, decode_tags, encode_spans, repair
from lexborrow.corpus import corpus_stats, read_conll, validate, write_conll

raw = """\
Benching\tB-ENG
,\tO
el\tO
último\tO
grito\tO

Un\tO
buffet\tB-OTHER
de\tO
big\tI-ENG
data\tI-ENG
"""
corpus = read_conll(raw.encode())
len(corpus), corpus.token_count

# %% [markdown]
# The second sentence opens an `ENG` span with `I-ENG`. Validation flags it as
# a warning; it is still readable.

# %%
for v in validate(corpus):
    print(v.sentence, v.severity, v.message)

# %% [markdown]
# Decoding follows conlleval: an orphan `I-` starts a new chunk. The other
# mode throws such runs away.

# %%
tags = corpus[1].tags
print(decode_tags(tags))
print(decode_tags(tags, RepairMode.DISCARD))
print(repair(tags))

# %%
encode_spans(5, [Span(0, 1, "ENG"), Span(3, 5, "OTHER")])

# %% [markdown]
# Statistics count repaired spans. Unique borrowings are compared case-folded,
# and OOV rates need a reference vocabulary (normally the training split).

# %%
reference = read_conll(b"buffet\tB-OTHER\n")
stats = corpus_stats(corpus, reference)
stats.to_dict()

# %%
assert read_conll(write_conll(corpus)) == corpus

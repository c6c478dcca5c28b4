# %% [markdown]
# # Training the CRF on a toy corpus
#
# The tagger is a linear-chain CRF over handcrafted token features. Training
# minimizes the negative log-likelihood with an elastic-net penalty; the L1
# part is handled by an orthant-wise L-BFGS.

# %%
import io

import numpy as np

from lexborrow.corpus import Dataset, LabeledSentence
from lexborrow.crf import TrainConfig, forward_backward, load_model, save_model, tag, train
from lexborrow.features import FeatureConfig, extract_token_attributes, vectorize

rng = np.random.default_rng(0)
spanish = ["el", "la", "de", "que", "casa", "nuevo", "partido", "gobierno", "muy", "para"]
english = ["online", "crush", "streaming", "feedback", "smartphone", "hashtag"]


def sentence():
    toks, tags = [], []
    for _ in range(rng.integers(5, 12)):
        if rng.random() < 0.15:
            toks.append(str(rng.choice(english)))
            tags.append("B-ENG")
        else:
            toks.append(str(rng.choice(spanish)))
            tags.append("O")
    return LabeledSentence(toks, tags)


train_set = Dataset([sentence() for _ in range(200)], "toy")
train_set.token_count

# %% [markdown]
# Each position gets string attributes from a window of neighbours.

# %%
extract_token_attributes(["un", "crush", "nuevo"], 1, FeatureConfig(window=1))

# %%
model, report = train(train_set, FeatureConfig(), TrainConfig(c1=0.05, c2=0.01))
report.iterations, report.converged, report.active_features, report.n_attributes

# %%
# penalized objective per iteration
np.round(report.objective_trace[:10], 2)

# %% [markdown]
# Unknown words still get tags: shape, affix and window features fire even when
# the word itself was never seen.

# %%
tag(model, [["el", "nuevo", "podcast", "de", "la", "casa"], ["feedback", "muy", "online"]])

# %%
feats = vectorize([LabeledSentence(["un", "crush"], ["O", "O"])], model.vocabulary, model.config)
log_z, marginals, pairwise = forward_backward(model, feats)
np.round(marginals, 3)

# %% [markdown]
# Models save to a checksummed binary container and load back unchanged.

# %%
buf = io.BytesIO()
save_model(model, buf)
again = load_model(buf.getvalue())
assert tag(again, train_set) == tag(model, train_set)
len(buf.getvalue())

"""Beam search mechanics on a hand-built model, then the evaluation metrics.

Run: python3 demos/05_decoding_and_metrics.py
"""

import math

import numpy as np

from emogen import BeamConfig, beam_search
from emogen.metrics import avg_len, bleu, classification_scores, distinct_n
from emogen.text import BOS_ID, EOS_ID, TokenSeq

NEG = -1e9


class TableModel:
    """Next-token probabilities from a lookup table; vocab [PAD,BOS,EOS,a,b]."""

    table = {
        (BOS_ID,): {3: 0.6, 4: 0.4},
        (BOS_ID, 3): {EOS_ID: 0.55, 4: 0.45},
        (BOS_ID, 4): {EOS_ID: 0.9, 3: 0.1},
    }

    def begin_decode(self, ids):
        return {}

    def next_token_logits(self, ctx, prefixes):
        rows = []
        for prefix in prefixes:
            probs = self.table.get(tuple(prefix), {EOS_ID: 1.0})
            row = np.full(5, NEG)
            for token, p in probs.items():
                row[token] = math.log(p)
            rows.append(row)
        return np.array(rows)


model = TableModel()
utt = TokenSeq([EOS_ID], "utterance")
print("== greedy vs beam on a model where greedy is suboptimal ==")
print("p(3)=0.6 then p(EOS|3)=0.55  vs  p(4)=0.4 then p(EOS|4)=0.9")
for width in (1, 2):
    config = BeamConfig(beam_width=width, max_len=6, no_repeat_ngram=0,
                        length_penalty=0.0)
    out = beam_search(model, utt, config)
    print(f"  beam_width={width}: token ids {out.ids}")
print("beam 1 follows the greedy path (3); beam 2 finds the better sequence (4)")

print("\n== metrics ==")
hyps = ["the cat sat", "a b a"]
refs = ["the cat sat down", "a b c"]
print("corpus BLEU:", round(bleu(hyps, refs), 4))
print("distinct-1 :", round(distinct_n(hyps, 1), 4))
print("distinct-2 :", round(distinct_n(hyps, 2), 4))
print("avg length :", avg_len(hyps))
acc, f1 = classification_scores(["joy", "anger", "joy"], ["joy", "joy", "joy"],
                                ["anger", "joy"])
print("accuracy   :", round(acc, 4), " macro-F1:", round(f1, 4))

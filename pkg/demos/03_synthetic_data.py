"""The synthetic corpora: planted keywords, a 12 -> 6 -> 2 label hierarchy,
and topic-keyed responses.

Run: python3 demos/03_synthetic_data.py
"""

from collections import Counter

from emogen import gen_synthetic, split_811
from emogen.data import COARSE_TO_POLARITY, FINE_TO_COARSE, KEYWORDS

print("== keyword families (one per fine label) ==")
for fine in list(KEYWORDS)[:4]:
    print(f"  {fine:12s} -> {FINE_TO_COARSE[fine]:8s} -> "
          f"{COARSE_TO_POLARITY[FINE_TO_COARSE[fine]]:8s}  {KEYWORDS[fine]}")
print("  ...")

print("\n== generation pairs (response depends only on the topic) ==")
for ex in gen_synthetic("generation", 10, seed=1)[:5]:
    print(f"  {ex.utterance!r:55s} -> {ex.response!r}")

print("\n== the same texts labeled at three granularities ==")
fine = gen_synthetic("e12", 10, seed=2)
mid = gen_synthetic("e6", 10, seed=2)
coarse = gen_synthetic("e2", 10, seed=2)
for f, m, c in list(zip(fine, mid, coarse))[:5]:
    print(f"  {f.text!r:55s} {f.label:12s} {m.label:9s} {c.label}")

print("\n== deterministic 8:1:1 split ==")
examples = gen_synthetic("e6", 1000, seed=3)
train, valid, test = split_811(examples, seed=3)
print(f"  sizes: {len(train)}/{len(valid)}/{len(test)}")
print("  train label balance:", dict(Counter(ex.label for ex in train)))

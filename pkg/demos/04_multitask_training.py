"""A small joint training run: pooled mini-batch schedule, weighted losses.

Trains response generation together with 6-way emotion recognition on
synthetic data for a couple of minutes, then decodes a few test utterances.

Run: python3 demos/04_multitask_training.py
"""

import numpy as np

from emogen import BeamConfig, ModelConfig, TaskSpec, beam_search, gen_synthetic, init_parameters, split_811
from emogen.commands import predict_labels
from emogen.data import E6_LABELS
from emogen.text import encode
from emogen.trainer import TrainPlan, build_schedule, build_shared_vocab, train

gen = gen_synthetic("generation", 600, seed=11)
e6 = gen_synthetic("e6", 400, seed=12)
gtr, gva, gte = split_811(gen, seed=11)
ctr, cva, cte = split_811(e6, seed=11)
task_data = {
    "response": {"train": gtr, "valid": gva, "test": gte},
    "e6": {"train": ctr, "valid": cva, "test": cte},
}

tasks = [
    TaskSpec(name="response", kind="generation"),
    TaskSpec(name="e6", kind="classification", labels=E6_LABELS, weight=0.5),
]
plan = TrainPlan(tasks=tasks, batch_size=32, epochs=15, seed=11, max_len=16,
                 lr=1e-3, save_every_epoch=False)
vocab = build_shared_vocab(task_data, tasks)
config = ModelConfig(vocab_size=vocab.size, d_model=64, n_heads=4,
                     n_enc_layers=1, n_dec_layers=1, d_ff=256, max_len=16,
                     dropout=0.0, cls_heads=(("e6", 6),))
model = init_parameters(config, seed=11)

print("== one epoch's pooled schedule (first 12 tickets) ==")
counts = {"response": int(np.ceil(len(gtr) / 32)), "e6": int(np.ceil(len(ctr) / 32))}
for ticket in build_schedule(counts, epoch=0, seed=11)[:12]:
    print(f"  {ticket.task_name}[{ticket.batch_index}]", end="")
print("  ...")

print("\n== training (weight 1.0 on generation, 0.5 on e6) ==")
model, report = train(plan, task_data, model, vocab)
for epoch in (0, 4, 9, 14):
    t = report.epoch_train_mean[epoch]
    v = report.epoch_valid[epoch]
    print(f"  epoch {epoch:2d}: train " +
          " ".join(f"{k}={t[k]:.3f}" for k in t) +
          " | valid " + " ".join(f"{k}={v[k]:.3f}" for k in v))

print("\n== emotion recognition on the test split ==")
pred = predict_labels(model, tasks[1], cte, vocab, plan.max_len)
accuracy = float(np.mean([p == ex.label for p, ex in zip(pred, cte)]))
print(f"  e6 accuracy: {accuracy:.3f}")

print("\n== beam-decoded responses ==")
model.eval()
beam = BeamConfig(beam_width=5, max_len=16, no_repeat_ngram=3)
for ex in gte[:4]:
    seq = encode(ex.utterance, vocab, 16)
    out = beam_search(model, seq, beam)
    print(f"  {ex.utterance!r}")
    print(f"    -> {' '.join(vocab.decode(out.ids))!r}  (gold: {ex.response!r})")

"""Tour of the numeric core: tensors, backward passes, losses, AdamW.

Run: python3 demos/01_autograd_and_losses.py
"""

import numpy as np

from emogen import AdamW, Tensor, classification_nll, label_smoothed_nll, softmax
from emogen import tensor as T

print("== reverse-mode autodiff ==")
w = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
loss = T.mul(w, w).sum()  # sum of squares
loss.backward()
print("w      :", w.data)
print("d/dw   :", w.grad, "(= 2w)")

print("\n== stabilized softmax ==")
p = softmax(Tensor([1.0, 2.0, 3.0]), axis=-1)
print("softmax([1,2,3]) =", p.data, "sum:", p.data.sum())

print("\n== the two task losses ==")
logits = Tensor([[2.0, 0.5, -1.0, 0.0]])
plain = label_smoothed_nll(logits, np.array([0]), epsilon=0.0, ignore_index=-1)
smooth = label_smoothed_nll(logits, np.array([0]), epsilon=0.1, ignore_index=-1)
print("sequence NLL  eps=0.0:", plain.item())
print("sequence NLL  eps=0.1:", smooth.item(), "(smoothing spreads mass over the vocab)")
print("classification NLL   :", classification_nll(Tensor([2.0, 0.5, -1.0, 0.0]), 0).item())

print("\n== a few AdamW steps on a quadratic ==")
theta = Tensor(np.array([4.0]), requires_grad=True)
opt = AdamW({"theta": theta}, lr=0.3, weight_decay=0.0)
for step in range(8):
    theta.zero_grad()
    loss = T.mul(theta, theta).sum()
    loss.backward()
    opt.step()
    print(f"step {step}: theta = {theta.data[0]: .4f}  loss = {loss.item():.4f}")

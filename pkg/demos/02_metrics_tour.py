#!/usr/bin/env python3
"""Tour of the evaluation metrics on tiny hand-checkable inputs."""

from stresskit.evalkit import (
    correlation,
    evaluate_ssd,
    label_accuracy,
    majority_vote,
    word_error_rate,
)

print("word error rate")
for ref, hyp in [("a b c", "a b c"), ("a b c", "a x c"), ("a b", "a b c")]:
    print(f"   WER({ref!r}, {hyp!r}) = {word_error_rate(ref, hyp):.3f}")

print("\nstressed-word precision/recall/F1 (set semantics)")
scores = evaluate_ssd([(["lovely", "we", "have"], ["lovely"])])
print(f"   pred [lovely, we, have] vs gold [lovely] -> "
      f"P={scores.precision:.3f} R={scores.recall:.3f} F1={scores.f1:.3f}")

print("\nmicro vs macro over two records")
pairs = [(["a"], ["a"]), (["x"], ["y", "z"])]
micro = evaluate_ssd(pairs, averaging="micro")
macro = evaluate_ssd(pairs, averaging="macro")
print(f"   micro F1={micro.f1:.3f}   macro F1={macro.f1:.3f}")

print("\nmajority vote (odd number of annotators)")
print("   [1, 1, 2] ->", majority_vote([1, 1, 2]))

print("\ncorrelation between two score series")
out = correlation([1, 2, 3, 4], [1, 3, 2, 4])
print(f"   pearson r={out['pearson_r']:.3f}  spearman rho={out['spearman_rho']:.3f}")

print("\nlabel accuracy under word normalization")
print("   ", label_accuracy(["Happy.", "sad"], ["happy", "angry"]))

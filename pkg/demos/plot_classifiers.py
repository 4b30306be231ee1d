"""
Classifying corrupted and occluded test images
==============================================

SRC fits a test image over the whole gallery with an l1 error term and
picks the class with the smallest residual. The two l2 alternatives fit
by least squares, the second with an extra basis of block indicators.
"""

import numpy as np

from sparseface.classify import classify_l2_occlusion, classify_l2_plain, classify_src
from sparseface.gallery import SynthSpec, build_occlusion_basis, synth_gallery
from sparseface.numcore import make_rng
from sparseface.perturb import NOISE, corrupt_pixels, occlude_block

spec = SynthSpec(10, 5, 10, 500, seed=0, tests_per_class=2, class_similarity=0.92)
g, tests = synth_gallery(spec)
w = build_occlusion_basis(g.image_shape, (4, 4))
print("gallery:", g.a.shape, "image shape:", g.image_shape, "W:", w.w.shape)

for name, perturb in [
    ("40% corrupted pixels", lambda y, r: corrupt_pixels(y, 0.4, r)),
    ("30% block occlusion", lambda y, r: occlude_block(y, g.image_shape, 0.3, NOISE, r)),
]:
    hits = np.zeros(3, dtype=int)
    for j, (y, label) in enumerate(tests):
        bad = perturb(y, make_rng(5, j)).y
        hits += [classify_src(g, bad).label == label,
                 classify_l2_plain(g, bad).label == label,
                 classify_l2_occlusion(g, w, bad).label == label]
    print(f"{name}: src {hits[0]}/{len(tests)}  l2 {hits[1]}/{len(tests)}  l2w {hits[2]}/{len(tests)}")

# The per-class residuals behind one SRC decision.
y, label = next(iter(tests))
dec = classify_src(g, corrupt_pixels(y, 0.4, make_rng(6)).y)
print("true class", label, "residuals", np.round(dec.residuals, 3))

"""
Low-rank structure behind sparse corruption
===========================================

Each class of a synthetic gallery spans a 9-dimensional subspace. A tenth
of every image is replaced by noise. The plain singular values of each
class no longer reveal the rank; the low-rank part recovered by robust
PCA does.
"""

import numpy as np

from sparseface.gallery import Gallery, SynthSpec, synth_gallery
from sparseface.numcore import make_rng
from sparseface.perturb import corrupt_pixels
from sparseface.rpca import numerical_rank, spectrum, whole_spectrum

g, _ = synth_gallery(SynthSpec(6, 9, 40, 300, seed=3, tests_per_class=0))
blocks = []
for k, cid in enumerate(g.class_ids):
    cols = [corrupt_pixels(c, 0.1, make_rng(4, k, j)).y for j, c in enumerate(g.block(cid).T)]
    blocks.append(np.column_stack(cols))
corrupted = Gallery.from_blocks(blocks, g.class_ids, g.image_shape)

plain = spectrum(corrupted, "svd").normalized()
robust = spectrum(corrupted, "rpca").normalized()
print(" i   plain      robust")
for i in range(12):
    print(f"{i + 1:2d}  {plain[i]:.3e}  {robust[i]:.3e}")
print("numerical rank, plain:", numerical_rank(plain), " robust:", numerical_rank(robust))

# The whole dictionary at once mixes all classes: the union of six
# 9-dimensional subspaces has rank 54, so one low-rank model fits badly.
print("whole-gallery rank:", numerical_rank(whole_spectrum(g).mean_sigmas, 1e-8))

"""
Galleries from image folders
============================

Real datasets are folders of 8-bit grayscale images, one folder per
class. Images are read in sorted order, optionally resized, stacked as
column-major vectors and scaled to unit norm.
"""

import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from sparseface.classify import classify_src
from sparseface.gallery import load_gallery, load_testset
from sparseface.perturb import NOISE, occlude_block
from sparseface.numcore import make_rng

rng = make_rng(8)
root = Path(tempfile.mkdtemp())

# Three "people": a smooth face-like template each, imaged under random lighting.
yy, xx = np.mgrid[0:24, 0:20]
for k in range(3):
    template = np.cos((xx - 10) / (3 + k)) * np.exp(-((yy - 12 - 2 * k) / 9) ** 2) + 1.2
    for split, count in [("train", 6), ("test", 2)]:
        d = root / split / f"person{k}"
        d.mkdir(parents=True)
        for i in range(count):
            light = 0.6 + 0.4 * rng.random() + 0.2 * rng.random() * xx / 20
            img = np.clip(80 * template * light, 0, 255).astype(np.uint8)
            Image.fromarray(img).save(d / f"{i:02d}.png")

g = load_gallery(root / "train", resize_to=(12, 10))
tests = load_testset(root / "test", resize_to=(12, 10))
print("classes:", g.class_ids, "dictionary:", g.a.shape)

for y, label in tests:
    hidden = occlude_block(y, tests.image_shape, 0.2, NOISE, rng).y
    print(label, "->", classify_src(g, hidden).label)

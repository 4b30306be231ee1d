"""
What random projections cost under occlusion
============================================

Projecting images to a few random features before solving throws away
the pixel locality that makes occlusion a sparse error. With ``d``
features, a vertex solution of the feature-space error program has at
most ``d`` nonzeros, so it cannot describe an occlusion larger than that.
"""

from sparseface.bench import ExperimentSpec, format_csv, run_projected_comparison
from sparseface.classify import Method
from sparseface.gallery import SynthSpec
from sparseface.perturb import Perturbation

gallery = SynthSpec(10, 5, 10, 500, seed=0, tests_per_class=3, class_similarity=0.92)
spec = ExperimentSpec(gallery, (Method("src"), Method("l2")), (Perturbation("occlude", 0.3),), seed=7)

report = run_projected_comparison(spec, d=30, timing=False)
print(format_csv(report))
print("largest feature-space error support:", report.diagnostics["max_nnz_projected_e"])

# With the identity in place of a random matrix nothing is lost.
same = run_projected_comparison(spec, d=500, identity=True, timing=False)
print("identity projection:", same.rate("src", 0.3), "vs", same.rate("src_proj", 0.3))

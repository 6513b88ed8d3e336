"""Compare affine registration on the image scale and on the standardized scale.

    python scripts/run_affine_experiment.py --pairs 30
"""
from _batch import build_pairs, compare_scales, parse_args

from elreg.evaluation import Mode

if __name__ == "__main__":
    args = parse_args(__doc__.splitlines()[0], default_pairs=30)
    print(compare_scales(build_pairs("affine", args), Mode.AFFINE, args))

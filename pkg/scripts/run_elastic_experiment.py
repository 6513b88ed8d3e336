"""Compare elastic registration on the image scale and on the standardized scale.

    python scripts/run_elastic_experiment.py --pairs 10
"""
from _batch import build_pairs, compare_scales, parse_args

from elreg.evaluation import Mode

if __name__ == "__main__":
    args = parse_args(__doc__.splitlines()[0], default_pairs=10)
    print(compare_scales(build_pairs("nonlinear", args), Mode.ELASTIC, args))

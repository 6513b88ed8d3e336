"""Shared batch builder for the experiment scripts."""
import argparse

from elreg import standardization as stdz
from elreg.evaluation import EvalPair, batch_evaluate, format_table
from elreg.image import warp_affine, warp_field
from elreg.config import RegistrationConfig
from elreg.synth import perturb_intensity, phantom, random_affine_warp, random_nonlinear_warp


def parse_args(description: str, default_pairs: int) -> argparse.Namespace:
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--pairs", type=int, default=default_pairs)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--rms", type=float, default=12.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--no-perturb", action="store_true", help="keep source intensities untouched")
    ap.add_argument("--jobs", type=int, default=1)
    return ap.parse_args()


def build_pairs(kind: str, args: argparse.Namespace) -> list[EvalPair]:
    base = phantom(args.size, seed=args.seed)
    pairs = []
    for k in range(args.pairs):
        seed = args.seed + k
        if kind == "affine":
            truth = random_affine_warp(args.size, args.size, args.rms, seed)
            target = warp_affine(base, truth)
        else:
            truth = random_nonlinear_warp(args.size, args.size, args.rms, seed)
            target = warp_field(base, truth)
        source = base if args.no_perturb else perturb_intensity(base, seed=1000 + seed)
        pairs.append(EvalPair(str(seed), source, target, truth))
    return pairs


def compare_scales(pairs: list[EvalPair], mode, args: argparse.Namespace) -> str:
    std = stdz.train([img for p in pairs for img in (p.source, p.target)])
    cfg = RegistrationConfig()
    reports = {
        "Image": batch_evaluate(pairs, mode, cfg, None, jobs=args.jobs),
        "Standard": batch_evaluate(pairs, mode, cfg, std, jobs=args.jobs),
    }
    return format_table(reports)

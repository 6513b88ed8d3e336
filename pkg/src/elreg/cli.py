"""Command-line front end.

Exit codes: 0 success, 2 I/O, 3 standardization, 4 registration, 64 usage.
Every command first prints its fully resolved configuration as one JSON line.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import io
from . import standardization as stdz
from .config import RegistrationConfig
from .elastic import register_elastic
from .errors import ImageError, RegistrationError, StandardizationError
from .evaluation import BatchReport, EvalPair, Mode, PairResult, batch_evaluate, checkerboard, format_table
from .global_affine import register_global
from .image import warp_affine, warp_field
from .pyramid import build_pyramid, clamp_depth
from .synth import phantom, random_affine_warp, random_nonlinear_warp

log = logging.getLogger("elreg")

EXIT_OK, EXIT_IO, EXIT_STD, EXIT_REG, EXIT_USAGE = 0, 2, 3, 4, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _lambdas(text: str) -> tuple[float, ...]:
    parts = [float(v) for v in text.split(",")]
    if len(parts) == 1:
        parts *= 6
    if len(parts) != 6:
        raise argparse.ArgumentTypeError("--lambda takes one value or six comma-separated values")
    return tuple(parts)


def _add_registration_flags(p: argparse.ArgumentParser) -> None:
    d = RegistrationConfig()
    p.add_argument("--levels", type=int, default=d.depth, help="pyramid depth")
    p.add_argument("--iters", type=int, default=d.iters_per_level, help="affine iterations per level")
    p.add_argument("--sweeps", type=int, default=d.elastic_sweeps, help="smoothness sweeps per elastic pass")
    p.add_argument("--passes", type=int, default=d.elastic_passes, help="elastic passes per level")
    p.add_argument("--lambda", dest="lambdas", type=_lambdas, default=d.lambdas, help="smoothness weights")
    p.add_argument("--neighborhood", type=int, default=d.neighborhood)
    p.add_argument("--interp", choices=("bilinear", "cubic"), default=d.interp.value)
    p.add_argument("--std", dest="std_params", default=None, help="trained standard-scale parameter file")
    p.add_argument("--no-restandardize", action="store_true", help="do not re-standardize after warps")
    p.add_argument("--eps", type=float, default=d.convergence_eps, help="convergence threshold")


def _registration_config(args) -> RegistrationConfig:
    try:
        return RegistrationConfig(
            depth=args.levels,
            iters_per_level=args.iters,
            interp=args.interp,
            lambdas=args.lambdas,
            neighborhood=args.neighborhood,
            elastic_sweeps=args.sweeps,
            elastic_passes=args.passes,
            standardize_each_warp=not args.no_restandardize,
            convergence_eps=args.eps,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_std(path):
    if path is None:
        return None
    if not os.path.exists(path):
        raise FileNotFoundError(f"standard-scale parameter file not found: {path}")
    return stdz.load_params(path)


def _echo(command: str, args, extra: dict | None = None) -> None:
    conf = {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(vars(args).items()) if k != "func"}
    if extra:
        conf.update(extra)
    print(json.dumps({"command": command, "config": conf}, sort_keys=True))


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _image_suffix(args) -> str:
    return ".pgm" if getattr(args, "format", "elrg") == "pgm" else ".elrg"


def cmd_std_train(args) -> int:
    _echo("std-train", args)
    images = []
    for path in args.images:
        try:
            images.append(io.read_image(path))
        except (OSError, ImageError) as exc:
            raise OSError(f"cannot read {path}: {exc}") from None
    cfg = stdz.StandardScaleConfig(pc1=args.pc1, pc2=args.pc2, s1=args.s1, s2=args.s2, nbins=args.nbins)
    for path, img in zip(args.images, images):
        try:
            stdz.detect_landmarks(img, cfg)
        except StandardizationError as exc:
            raise type(exc)(f"{path}: {exc}") from None
    trained = stdz.train(images, cfg)
    stdz.save_params(args.out, trained)
    print(f"mu_s={stdz.format_decimal(trained.mu_s)}")
    return EXIT_OK


def cmd_std_apply(args) -> int:
    _echo("std-apply", args)
    cfg = _load_std(args.std_params)
    img = io.read_image(args.image)
    io.write_image(args.out, stdz.standardize_image(img, cfg))
    return EXIT_OK


def cmd_register(args) -> int:
    cfg = _registration_config(args)
    _echo("register", args, {"registration": cfg.to_dict()})
    std = _load_std(args.std_params)
    source = io.read_image(args.source)
    target = io.read_image(args.target)
    out = _out_dir(args)
    if args.mode == "affine":
        transform, registered, report = register_global(source, target, cfg, std)
        io.write_affine(out / "transform.txt", transform)
    else:
        transform, registered, report = register_elastic(source, target, cfg, std)
        io.write_field(out / "field.eldf", transform)
    io.write_image(out / f"registered{_image_suffix(args)}", registered)
    doc = report.to_dict()
    doc["config"] = cfg.to_dict()
    (out / "report.json").write_text(json.dumps(doc, indent=2) + "\n")
    print(f"final_mse={report.final_mse:.6g} initial_mse={report.initial_mse:.6g} scale={report.scale}")
    return EXIT_OK


def cmd_synth(args) -> int:
    _echo("synth", args)
    out = _out_dir(args)
    suffix = _image_suffix(args)
    if args.phantom:
        base = phantom(args.phantom, seed=args.seed)
        stem = f"phantom{args.phantom}"
        io.write_image(out / f"{stem}{suffix}", base)
    else:
        base = io.read_image(args.target)
        stem = Path(args.target).stem
    name = f"{stem}_{args.kind}_s{args.seed}"
    if args.kind == "affine":
        A = random_affine_warp(base.width, base.height, args.rms, args.seed)
        warped = warp_affine(base, A)
        io.write_affine(out / f"{name}_truth.txt", A)
    else:
        u = random_nonlinear_warp(base.width, base.height, args.rms, args.seed)
        warped = warp_field(base, u)
        io.write_field(out / f"{name}_truth.eldf", u)
    io.write_image(out / f"{name}{suffix}", warped)
    print(out / f"{name}{suffix}")
    return EXIT_OK


def read_manifest(path) -> list[tuple[str, list[str]]]:
    """``(pair id, [source, target, truth?])`` per non-comment line; paths relative to the manifest."""
    base = Path(path).parent
    entries = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) not in (2, 3):
                raise UsageError(f"{path}:{lineno}: expected 'source target [truth]'")
            entries.append((f"{lineno}", [str(base / f) for f in fields]))
    return entries


def _load_pair(pair_id: str, paths: list[str]) -> EvalPair:
    source, target = io.read_image(paths[0]), io.read_image(paths[1])
    truth = None
    if len(paths) == 3:
        truth = io.read_affine(paths[2]) if paths[2].endswith(".txt") else io.read_field(paths[2])
    return EvalPair(pair_id, source, target, truth)


def cmd_eval(args) -> int:
    cfg = _registration_config(args)
    _echo("eval", args, {"registration": cfg.to_dict()})
    std = _load_std(args.std_params)
    entries = read_manifest(args.manifest)
    loaded, failed = [], {}
    for pair_id, paths in entries:
        try:
            loaded.append(_load_pair(pair_id, paths))
        except (OSError, ImageError) as exc:
            log.warning("pair %s skipped: %s", pair_id, exc)
            failed[pair_id] = PairResult(pair_id, None, error=f"{type(exc).__name__}: {exc}")
    if loaded:
        report = batch_evaluate(loaded, Mode(args.mode), cfg, std, jobs=args.jobs)
    else:
        report = BatchReport(args.mode, "standard" if std is not None else "image")
    by_id = {p.id: p for p in report.pairs}
    by_id.update(failed)
    report.pairs = [by_id[pid] for pid, _ in entries]
    for p in report.pairs:
        if p.error and p.id not in failed:
            log.warning("pair %s failed: %s", p.id, p.error)
    out = _out_dir(args)
    (out / "report.json").write_text(report.to_json() + "\n")
    label = "On Standard Scale" if std is not None else "On Image Scale"
    table = format_table({label: report})
    (out / "table.txt").write_text(table + "\n")
    print(table)
    return EXIT_OK


def cmd_checkerboard(args) -> int:
    _echo("checkerboard", args)
    a, b = io.read_image(args.a), io.read_image(args.b)
    io.write_image(args.out, checkerboard(a, b, args.square))
    return EXIT_OK


def cmd_pyramid_dump(args) -> int:
    _echo("pyramid-dump", args)
    img = io.read_image(args.image)
    depth = clamp_depth(img.width, img.height, args.levels)
    out = _out_dir(args)
    for k, level in enumerate(build_pyramid(img, depth)):
        io.write_image(out / f"level{k}{_image_suffix(args)}", level)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="elreg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("std-train", help="learn the standard-scale mode from training images")
    p.add_argument("images", nargs="+")
    p.add_argument("--out", required=True)
    d = stdz.StandardScaleConfig()
    p.add_argument("--pc1", type=float, default=d.pc1)
    p.add_argument("--pc2", type=float, default=d.pc2)
    p.add_argument("--s1", type=float, default=d.s1)
    p.add_argument("--s2", type=float, default=d.s2)
    p.add_argument("--nbins", type=int, default=d.nbins)
    p.set_defaults(func=cmd_std_train)

    p = sub.add_parser("std-apply", help="map an image onto a trained standard scale")
    p.add_argument("image")
    p.add_argument("--std", dest="std_params", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_std_apply)

    p = sub.add_parser("register", help="register a source image to a target image")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--mode", choices=("affine", "elastic"), default="affine")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--format", choices=("elrg", "pgm"), default="elrg")
    _add_registration_flags(p)
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("synth", help="deform an image with a random ground-truth warp")
    p.add_argument("target", nargs="?")
    p.add_argument("--phantom", type=int, default=0, metavar="SIZE", help="generate a SIZE x SIZE phantom instead")
    p.add_argument("--kind", choices=("affine", "nonlinear"), default="affine")
    p.add_argument("--rms", type=float, default=12.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--format", choices=("elrg", "pgm"), default="elrg")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="register every pair of a manifest and tabulate MSE")
    p.add_argument("manifest")
    p.add_argument("--mode", choices=("affine", "elastic"), default="affine")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", default=".")
    _add_registration_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("checkerboard", help="interleave two images in alternating squares")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--square", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_checkerboard)

    p = sub.add_parser("pyramid-dump", help="write every Gaussian pyramid level")
    p.add_argument("image")
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--format", choices=("elrg", "pgm"), default="pgm")
    p.set_defaults(func=cmd_pyramid_dump)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.command == "synth" and not args.phantom and not args.target:
        parser.error("synth needs a target image or --phantom SIZE")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"elreg: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StandardizationError as exc:
        print(f"elreg: standardization failed: {exc}", file=sys.stderr)
        return EXIT_STD
    except RegistrationError as exc:
        print(f"elreg: registration failed: {exc}", file=sys.stderr)
        return EXIT_REG
    except (OSError, ImageError) as exc:
        print(f"elreg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

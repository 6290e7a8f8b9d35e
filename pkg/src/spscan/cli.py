"""Command-line entry point: ``spscan <subcommand> [--config c.json] [--seed N] [--out DIR]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path


from . import __version__
from .experiments import (
    ALGORITHMS,
    RunConfig,
    build_dataset,
    run_algorithm,
    run_multilevel,
    run_probe_sweep,
    run_table1,
    write_multilevel,
    write_sweep,
    write_table1,
)
from .io import write_pgm
from .metrics import image_psnr, quantize


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="spscan", description="Single-pixel scanning simulation suite")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-data", parents=[common], help="generate and persist the dead-leaves dataset")
    sw = sub.add_parser("sweep", parents=[common], help="grid-sampling probe-size sweep")
    sw.add_argument("--shape", choices=["square", "circle"], default="square")
    sub.add_parser("table1", parents=[common], help="seven-algorithm tournament with Bayesian comparisons")
    sub.add_parser("multilevel", parents=[common], help="t-walk exploration of single- vs multi-level sampling")
    rc = sub.add_parser("reconstruct", parents=[common], help="reconstruct one dataset image")
    rc.add_argument("--image", type=int, default=0)
    rc.add_argument("--algorithm", choices=ALGORITHMS, default="CS-Square")
    sub.add_parser("show-config", parents=[common], help="print the effective configuration")
    return p


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.out is not None:
        cfg = cfg.replace(output_dir=args.out)
    return cfg


def _run(args) -> None:
    cfg = _config(args)
    if args.command == "show-config":
        print(cfg.to_json(), end="")
        return
    if args.command == "gen-data":
        images = build_dataset(cfg, persist=True)
        print(f"wrote {len(images)} images to {cfg.output_dir}/dataset (config {cfg.config_hash()})")
        return
    images = build_dataset(cfg)
    if args.command == "sweep":
        res = run_probe_sweep(args.shape, cfg.sweep.sizes(), cfg, images)
        path = write_sweep(cfg, res)
        print(f"{args.shape} sweep: argmax size {res.argmax_size:.2f} px, peak {res.peak:.3f} dB -> {path}")
        print(f"HDI band: {', '.join(f'{s:.2f}' for s in res.band) or '(empty)'}")
    elif args.command == "table1":
        res = run_table1(cfg, images)
        paths = write_table1(cfg, res)
        for name in reversed(res.algorithms):
            print(f"{name:>10}: {res.means[name]:.2f} ({res.sds[name]:.2f}) dB")
        print(f"wrote {paths['table1']}")
    elif args.command == "multilevel":
        res = run_multilevel(cfg, images)
        paths = write_multilevel(cfg, res)
        print(f"single-level mean PSNR {res.single_mean:.3f} dB, multi-level {res.multi_mean:.3f} dB")
        print(f"wrote {paths['distribution']}")
    elif args.command == "reconstruct":
        if not 0 <= args.image < len(images):
            raise ValueError(f"image index {args.image} outside 0..{len(images) - 1}")
        img = images[args.image]
        rec = run_algorithm(cfg, args.algorithm, img[None])[0]
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        name = args.algorithm.lower()
        write_pgm(out / f"original_{args.image:04d}.pgm", quantize(img))
        write_pgm(out / f"recon_{name}_{args.image:04d}.pgm", quantize(rec))
        print(f"{args.algorithm} image {args.image}: {image_psnr(rec, img):.3f} dB")


def cli_main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(message)s",
    )
    try:
        _run(args)
    except Exception as exc:  # noqa: BLE001
        print(f"spscan: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()

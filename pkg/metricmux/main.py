import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from metricmux.afm import afm_to_metrics, emit_map_line, parse_afm
from metricmux.compose import compose, load_plan
from metricmux.config import Settings
from metricmux.encodings import locate_enc, names_vector, parse_enc, read_enc
from metricmux.errors import MetricMuxError, UsageError
from metricmux.manifest import read_manifest
from metricmux.optical import PRESETS, OpticalParams, ew_metrics, unslant
from metricmux.pl import CharcodeFormat, emit_pl, parse_pl
from metricmux.tfm import emit_tfm, parse_tfm
from metricmux.type1 import read_type1
from metricmux.utils import configure_logging, find_font_files
from metricmux.vf import emit_vf, emit_vpl, parse_vf, parse_vpl
from metricmux.worker import BuildRunner, load_metrics

logger = logging.getLogger("metricmux")

MANIFEST_DIR = Path(__file__).parent.parent / "manifests"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


def check_dependencies():
    """Check if optional dependencies are available"""
    missing = []

    # Check psutil (optional for the default job count)
    try:
        import psutil
    except ImportError:
        missing.append("psutil (optional)")

    return missing


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def with_suffix(name: str, suffix: str) -> Path:
    """tftopl-style naming: a bare font name gets the expected extension."""
    path = Path(name)
    return path if path.suffix else path.with_suffix(suffix)


def write_output(target: Optional[str], data, suffix: str):
    if target is None or target == "-":
        if isinstance(data, bytes):
            sys.stdout.buffer.write(data)
        else:
            sys.stdout.write(data)
        return
    path = with_suffix(target, suffix)
    if isinstance(data, bytes):
        path.write_bytes(data)
    else:
        path.write_text(data, encoding="latin-1")
    logger.info("wrote %s", path)


def read_text(path: Path) -> str:
    return path.read_text(encoding="latin-1")


# Subcommands

def cmd_tftopl(args, settings: Settings) -> int:
    m = parse_tfm(with_suffix(args.tfm, ".tfm").read_bytes())
    fmt = CharcodeFormat(args.charcode_format or settings.charcode_format)
    names = None
    if fmt == CharcodeFormat.NAMES:
        if not args.enc:
            raise UsageError("--charcode-format=names needs --enc")
        names = names_vector(args.declare or m.coding_scheme, args.enc, settings.enc_path)
    write_output(args.pl, emit_pl(m, fmt, names), ".pl")
    return EXIT_OK


def cmd_pltotf(args, settings: Settings) -> int:
    m = parse_pl(read_text(with_suffix(args.pl, ".pl")))
    write_output(args.tfm or str(Path(args.pl).with_suffix(".tfm")), emit_tfm(m), ".tfm")
    return EXIT_OK


def cmd_afm2tfm(args, settings: Settings) -> int:
    afm_path = with_suffix(args.afm, ".afm")
    afm = parse_afm(read_text(afm_path))
    reenc = None
    enc_file = None
    if args.encoding:
        enc_path = locate_enc(args.encoding, settings.enc_path)
        reenc = read_enc(enc_path)
        enc_file = Path(args.encoding).name
    tfm = args.output or args.tfm or afm_path.stem
    design = args.design if args.design is not None else settings.design_size
    result = afm_to_metrics(
        afm, reenc, design,
        tfm_name=with_suffix(tfm, ".tfm").stem,
        enc_file=enc_file,
        pfb_file=args.pfb,
        vpl=bool(args.vpl),
        vpl_format=CharcodeFormat.OCTAL if args.octal else CharcodeFormat.DEFAULT,
    )
    if args.vpl:
        write_output(args.vpl, result.vpl.text(), ".vpl")
    write_output(tfm, emit_tfm(result.metrics), ".tfm")
    if args.map:
        print(emit_map_line(result.map_line))
    return EXIT_OK


def cmd_vptovf(args, settings: Settings) -> int:
    vpl_path = with_suffix(args.vpl, ".vpl")
    v, m = parse_vpl(read_text(vpl_path))
    write_output(args.vf or str(vpl_path.with_suffix(".vf")), emit_vf(v), ".vf")
    write_output(args.tfm or str(vpl_path.with_suffix(".tfm")), emit_tfm(m), ".tfm")
    return EXIT_OK


def cmd_vftovp(args, settings: Settings) -> int:
    vf_path = with_suffix(args.vf, ".vf")
    v = parse_vf(vf_path.read_bytes())
    m = parse_tfm(with_suffix(args.tfm or str(vf_path.with_suffix("")), ".tfm").read_bytes())
    fmt = CharcodeFormat(args.charcode_format or settings.charcode_format)
    write_output(args.vpl, emit_vpl(v, m, fmt), ".vpl")
    return EXIT_OK


def cmd_optical(args, settings: Settings) -> int:
    m = load_metrics(Path(args.input))
    if args.preset:
        if args.preset not in PRESETS:
            raise UsageError(f"unknown preset {args.preset!r}")
        preset = PRESETS[args.preset]
        params = preset.params.replace(scale_kerns=not args.no_kern_scaling)
        for _ in range(preset.iterations):
            m = ew_metrics(m, params)
    else:
        params = OpticalParams(
            vstem_scale=args.vstem_scale, width_scale=args.width_scale,
            lsb_delta=args.lsb_delta, rsb_delta=args.rsb_delta,
            scale_kerns=not args.no_kern_scaling,
        )
        for _ in range(args.iterations):
            m = ew_metrics(m, params)
    _write_metrics(args.output, m)
    return EXIT_OK


def _write_metrics(target: str, m):
    if target.lower().endswith(".pl"):
        write_output(target, emit_pl(m), ".pl")
    else:
        write_output(target, emit_tfm(m), ".tfm")


def cmd_unslant(args, settings: Settings) -> int:
    _write_metrics(args.output, unslant(load_metrics(Path(args.input))))
    return EXIT_OK


def cmd_compose(args, settings: Settings) -> int:
    plan_path = Path(args.plan)
    plan = load_plan(plan_path.read_text(encoding="utf-8"))
    sources = {
        name: load_metrics(plan_path.parent / plan.fonts.get(name, name + ".tfm"))
        for name in plan.font_names()
    }
    v, m = compose(plan, sources)
    write_output(args.vf, emit_vf(v), ".vf")
    write_output(args.tfm or str(with_suffix(args.vf, ".vf").with_suffix(".tfm")), emit_tfm(m), ".tfm")
    return EXIT_OK


def cmd_map(args, settings: Settings) -> int:
    afm = parse_afm(read_text(with_suffix(args.afm, ".afm")))
    reenc = read_enc(locate_enc(args.encoding, settings.enc_path)) if args.encoding else None
    result = afm_to_metrics(
        afm, reenc, settings.design_size,
        tfm_name=args.tfm,
        enc_file=Path(args.encoding).name if args.encoding else None,
        pfb_file=args.pfb,
    )
    print(emit_map_line(result.map_line))
    return EXIT_OK


def cmd_build(args, settings: Settings) -> int:
    manifest_path = Path(args.manifest)
    if not manifest_path.exists() and (MANIFEST_DIR / args.manifest).exists():
        manifest_path = MANIFEST_DIR / args.manifest
    manifest = read_manifest(manifest_path)
    base_dir = Path(args.base_dir) if args.base_dir else manifest_path.resolve().parent
    cache_dir = Path(args.cache) if args.cache else settings.cache_dir_for(manifest_path)
    jobs = args.jobs or settings.jobs
    if jobs < 1:
        raise UsageError("--jobs must be a positive integer")
    runner = BuildRunner(manifest, base_dir, cache_dir, jobs=jobs,
                         dry_run=args.dry_run, verify=args.verify)
    report = runner.run()
    for line in report.lines(manifest):
        print(line)
    return EXIT_OK if report.ok else EXIT_DATA


def _inspect_file(path: Path, glyph: Optional[str]) -> List[str]:
    suffix = path.suffix.lower()
    if suffix in (".tfm", ".pl"):
        m = load_metrics(path)
        return [f"{path}: {len(m.chars)} characters, {len(m.kerns)} kerns, "
                f"{len(m.params)} parameters, scheme {m.coding_scheme or '-'}, "
                f"design size {m.design_size}"]
    if suffix == ".afm":
        afm = parse_afm(read_text(path))
        return [f"{path}: {afm.font_name}, {len(afm.glyphs)} glyphs, {len(afm.kern_pairs)} kern pairs"]
    if suffix == ".vf":
        v = parse_vf(path.read_bytes())
        fonts = ", ".join(b.name for b in v.base_fonts)
        return [f"{path}: {len(v.packets)} packets over {fonts or 'no fonts'}"]
    if suffix == ".vpl":
        v, m = parse_vpl(read_text(path))
        return [f"{path}: {len(v.packets)} packets, {len(m.chars)} characters"]
    if suffix == ".enc":
        vector = parse_enc(read_text(path))
        return [f"{path}: {vector.name}, {len(vector.encoded())} encoded slots"]
    if suffix in (".pfb", ".pfa"):
        font = read_type1(path.read_bytes())
        lines = [f"{path}: {font.name}, {len(font.charstrings)} glyphs, "
                 f"{len(font.subrs)} subroutines, {font.units_per_em} units per em"]
        if glyph:
            g = font.glyph(glyph)
            lines.append(f"  {glyph}: advance {g.advance}, side bearing {g.sidebearing_x}")
            for stem in g.vstems:
                lines.append(f"  vstem {stem.position} width {stem.extent}")
            for stem in g.hstems:
                lines.append(f"  hstem {stem.position} height {stem.extent}")
        return lines
    return [f"{path}: unknown file type"]


def cmd_inspect(args, settings: Settings) -> int:
    files = find_font_files(args.paths)
    if not files:
        raise UsageError("no font files found")
    status = EXIT_OK
    for path in files:
        try:
            for line in _inspect_file(path, args.glyph):
                print(line)
        except MetricMuxError as e:
            logger.error("%s: %s", path, e)
            status = EXIT_DATA
    return status


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="metricmux", description="TeX font metric tools and build runner")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log progress")
    verbosity.add_argument("--debug", action="store_true", help="log everything")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log errors only")
    sub = parser.add_subparsers(dest="command", parser_class=ArgumentParser)
    formats = [f.value for f in CharcodeFormat]

    p = sub.add_parser("tftopl", help="TFM to property list")
    p.add_argument("tfm")
    p.add_argument("pl", nargs="?")
    p.add_argument("--charcode-format", choices=formats)
    p.add_argument("--enc", help="encoding file naming the slots (names format)")
    p.add_argument("--declare", metavar="SCHEME",
                   help="coding scheme to redeclare to the --enc vector (default: the font's)")
    p.set_defaults(func=cmd_tftopl)

    p = sub.add_parser("pltotf", help="property list to TFM")
    p.add_argument("pl")
    p.add_argument("tfm", nargs="?")
    p.set_defaults(func=cmd_pltotf)

    p = sub.add_parser("afm2tfm", help="AFM to raw TFM, optional VPL and map line")
    p.add_argument("afm")
    p.add_argument("tfm", nargs="?")
    p.add_argument("-T", dest="encoding", metavar="ENC", help="re-encode through this .enc file")
    p.add_argument("-v", dest="vpl", metavar="VPL", help="also write a virtual property list")
    p.add_argument("-o", dest="output", metavar="TFM", help="raw TFM to write")
    p.add_argument("-O", dest="octal", action="store_true", help="octal character codes in the VPL")
    p.add_argument("--map", action="store_true", help="print the map line")
    p.add_argument("--design", type=float, help="design size in points")
    p.add_argument("--pfb", help="font file to download in the map line")
    p.set_defaults(func=cmd_afm2tfm)

    p = sub.add_parser("vptovf", help="VPL to VF and TFM")
    p.add_argument("vpl")
    p.add_argument("vf", nargs="?")
    p.add_argument("tfm", nargs="?")
    p.set_defaults(func=cmd_vptovf)

    p = sub.add_parser("vftovp", help="VF and TFM to VPL")
    p.add_argument("vf")
    p.add_argument("tfm", nargs="?")
    p.add_argument("vpl", nargs="?")
    p.add_argument("--charcode-format", choices=[CharcodeFormat.DEFAULT.value, CharcodeFormat.OCTAL.value])
    p.set_defaults(func=cmd_vftovp)

    p = sub.add_parser("optical", help="EW optical-size transform of metrics")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--vstem-scale", default="1.08")
    p.add_argument("--width-scale", default="1.07")
    p.add_argument("--lsb-delta", default="0")
    p.add_argument("--rsb-delta", default="0")
    p.add_argument("--iterations", type=int, choices=(1, 2), default=1)
    p.add_argument("--no-kern-scaling", action="store_true")
    p.set_defaults(func=cmd_optical)

    p = sub.add_parser("unslant", help="set the slant parameter to zero")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_unslant)

    p = sub.add_parser("compose", help="build a virtual font from a composition plan")
    p.add_argument("plan")
    p.add_argument("vf")
    p.add_argument("tfm", nargs="?")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("map", help="print the map line for an AFM")
    p.add_argument("afm")
    p.add_argument("--tfm", help="TFM name (default: the PostScript name)")
    p.add_argument("-T", dest="encoding", metavar="ENC")
    p.add_argument("--pfb")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("build", help="run a build manifest")
    p.add_argument("manifest")
    p.add_argument("--jobs", type=int)
    p.add_argument("--cache", metavar="DIR")
    p.add_argument("--base-dir", metavar="DIR", help="directory the manifest paths are relative to")
    p.add_argument("--dry-run", action="store_true")
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("inspect", help="summarise font files or directories")
    p.add_argument("paths", nargs="+")
    p.add_argument("--glyph", help="Type 1 glyph whose stems to print")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    settings = Settings()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
    except UsageError as e:
        configure_logging(logging.ERROR)
        logger.error("usage: %s", e)
        return EXIT_USAGE

    if args.debug:
        level = logging.DEBUG
    elif args.verbose:
        level = logging.INFO
    elif args.quiet:
        level = logging.ERROR
    else:
        level = settings.log_level
    configure_logging(level)

    for dep in check_dependencies():
        logger.debug("missing dependency: %s", dep)

    try:
        return args.func(args, settings)
    except UsageError as e:
        logger.error("usage: %s", e)
        return EXIT_USAGE
    except (MetricMuxError, OSError, ValueError) as e:
        logger.error("%s", e)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

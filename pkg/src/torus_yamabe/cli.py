"""Command-line front end.

Exit status: 0 on success or an issued verdict, 2 when a verdict is withheld
because the theorem's hypotheses are unmet (or a checked cocycle fails), 1 on
malformed input.  ``--format structured`` prints one JSON record per line.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .bundle import (
    BundleSpec,
    MetricData,
    certify_zero_yamabe,
    index_computation,
    load_bundle_spec,
    parse_json_document,
)
from .charclass import (
    DEFAULT_DEGREE_BOUND,
    PontryaginData,
    ahat_genus,
    ahat_polynomials,
    parse_partition_key,
    partition_key,
)
from .cocycle import lattice_cover, orientation_double_cover, stabilize_odd, validate_cocycle
from .constants import vol_sphere, yamabe_kahler, yamabe_sphere, yamabe_surface
from .errors import HypothesisUnmet, YamabeError
from .metric import BlockMetric, decay_rate, max_omega_norm, weitzenbock_threshold

EXIT_OK, EXIT_INPUT, EXIT_WITHHELD = 0, 1, 2
COMMANDS = ("certify", "index", "ahat", "cocycle-check", "cover", "stabilize", "orient",
            "decay", "threshold", "constants")
FILE_COMMANDS = {"certify", "index", "cocycle-check", "cover", "stabilize", "orient", "decay"}
DEGREE_CAP_ENV = "YAMABE_CERT_DEGREE_CAP"


@dataclass
class RunConfig:
    command: str
    input_path: str | None = None
    output_format: str = "text"
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.command in FILE_COMMANDS and not self.input_path:
            raise ValueError(f"{self.command} needs an input file")
        if self.output_format not in ("text", "structured"):
            raise ValueError(f"unknown output format {self.output_format!r}")


@dataclass
class RunResult:
    status: int
    output: str
    error: str = ""


def _frac(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _lines(records) -> str:
    return "\n".join(json.dumps(r, ensure_ascii=False) for r in records)


def degree_bound() -> int:
    raw = os.environ.get(DEGREE_CAP_ENV)
    if raw is None:
        return DEFAULT_DEGREE_BOUND
    try:
        value = int(raw)
    except ValueError:
        raise YamabeError(f"{DEGREE_CAP_ENV} must be an integer, got {raw!r}") from None
    if value < 0:
        raise YamabeError(f"{DEGREE_CAP_ENV} must be nonnegative")
    return value


def _load_json(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise YamabeError(f"{path}: {exc.strerror}") from None
    return parse_json_document(text, str(path))


def _load_spec(path) -> BundleSpec:
    try:
        return load_bundle_spec(path)
    except OSError as exc:
        raise YamabeError(f"{path}: {exc.strerror}") from None


def _load_metric(path) -> tuple[BlockMetric, float | None]:
    data = _load_json(path)
    try:
        return BlockMetric.from_dict(data)
    except YamabeError as exc:
        raise YamabeError(f"{path}: {exc}") from None


# -- commands ----------------------------------------------------------------------

def _certify_one(path, cfg: RunConfig) -> RunResult:
    try:
        spec = _load_spec(path)
        metric = None
        if cfg.flags.get("metric"):
            h, s_min = _load_metric(cfg.flags["metric"])
            metric = MetricData(h, s_min, cfg.flags.get("C"))
        cert = certify_zero_yamabe(spec, metric, degree_bound(), cfg.flags.get("dump_classes", False))
    except YamabeError as exc:
        return RunResult(EXIT_INPUT, "", f"{exc}")
    if cfg.output_format == "structured":
        recs = [{"record": "input", "path": str(path)}] + cert.to_records()
        out = _lines(recs)
    else:
        out = cert.render()
        if cert.classes is not None:
            out += "\nclasses: " + json.dumps(cert.classes, ensure_ascii=False)
    return RunResult(EXIT_OK if cert.issued else EXIT_WITHHELD, out)


def cmd_certify(cfg: RunConfig) -> RunResult:
    paths = [cfg.input_path] + list(cfg.flags.get("more_paths", []))
    jobs = max(1, int(cfg.flags.get("jobs", 1)))
    if jobs > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda p: _certify_one(p, cfg), paths))
    else:
        results = [_certify_one(p, cfg) for p in paths]
    if len(results) == 1:
        return results[0]
    outs, errs = [], []
    for p, r in zip(paths, results):
        if cfg.output_format == "text":
            outs.append(f"== {p}\n{r.output}" if r.output else f"== {p}")
        elif r.output:
            outs.append(r.output)
        if r.error:
            errs.append(r.error)
    statuses = {r.status for r in results}
    status = EXIT_INPUT if EXIT_INPUT in statuses else (EXIT_WITHHELD if EXIT_WITHHELD in statuses else EXIT_OK)
    return RunResult(status, "\n".join(outs), "\n".join(errs))


def cmd_index(cfg: RunConfig) -> RunResult:
    spec = _load_spec(cfg.input_path)
    from .bundle import reduce_to_symplectic

    reduced, steps = reduce_to_symplectic(spec)
    comp = index_computation(reduced, degree_bound())
    if cfg.output_format == "structured":
        rec = {"record": "index", "index": comp.index, "ahat_genus": _frac(comp.ahat_genus),
               "fiber_integral": _frac(comp.fiber_integral), "reductions": steps,
               "ahat_top_coefficients": {partition_key(p): _frac(c) for p, c in comp.ahat_top.items()}}
        recs = [rec]
        if cfg.flags.get("dump_classes"):
            recs.append({"record": "classes", **comp.dump_classes()})
        return RunResult(EXIT_OK, _lines(recs))
    lines = [f"index = {comp.index}", f"Â(B)[B] = {comp.ahat_genus}", f"∫ω^k/k! = {comp.fiber_integral}"]
    lines += [f"reduction: {s}" for s in steps]
    if cfg.flags.get("dump_classes"):
        lines.append("classes: " + json.dumps(comp.dump_classes(), ensure_ascii=False))
    return RunResult(EXIT_OK, "\n".join(lines))


def cmd_ahat(cfg: RunConfig) -> RunResult:
    f = cfg.flags
    bound = degree_bound()
    if f.get("dim") is None:
        d = f.get("degree") or 3
        if d > bound:
            raise YamabeError(f"degree {d} exceeds the degree bound {bound}")
        series = ahat_polynomials(d)
        if cfg.output_format == "structured":
            recs = [{"record": "ahat", "degree": j,
                     "coefficients": {partition_key(p): _frac(c) for p, c in series.component(j).items()}}
                    for j in range(d + 1)]
            return RunResult(EXIT_OK, _lines(recs))
        return RunResult(EXIT_OK, "\n".join(f"Â_{j} = {series.render(j)}" for j in range(d + 1)))
    dim = f["dim"]
    if dim % 4:
        raise YamabeError(f"--dim must be a multiple of 4, got {dim}")
    d = dim // 4
    numbers = {}
    for i, v in (f.get("p") or {}).items():
        if i != d:
            raise YamabeError(f"--p{i} names the partition ({i}) which does not partition d = {d}; use --number")
        numbers[(i,)] = v
    for item in f.get("number") or []:
        key, _, val = item.partition("=")
        try:
            numbers[parse_partition_key(key)] = int(val)
        except ValueError:
            raise YamabeError(f"--number expects KEY=INT, got {item!r}") from None
    base = PontryaginData(dim, numbers, not f.get("non_spin", False))
    import warnings

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        genus = ahat_genus(base, bound)
    notes = [str(w.message) for w in caught]
    if cfg.output_format == "structured":
        return RunResult(EXIT_OK, _lines([{"record": "ahat_genus", "dimension": dim, "value": _frac(genus),
                                           "spin": base.spin, "warnings": notes}]))
    text = f"Â-genus = {genus}"
    if notes:
        text += "\n" + "\n".join(f"warning: {n}" for n in notes)
    return RunResult(EXIT_OK, text)


def cmd_cocycle_check(cfg: RunConfig) -> RunResult:
    spec = _load_spec(cfg.input_path)
    report = validate_cocycle(spec.cocycle, modulo_lattice=not cfg.flags.get("exact", False))
    status = EXIT_OK if report.valid else EXIT_WITHHELD
    if cfg.output_format == "structured":
        return RunResult(status, _lines([{"record": "cocycle", **report.to_dict()}]))
    mode = "modulo lattice" if report.modulo_lattice else "exact"
    if report.valid:
        text = f"cocycle valid ({mode}; {report.checked_triples} triples checked)"
    else:
        text = f"cocycle INVALID ({mode}); failing triples: {[list(t) for t in report.failing_triples]}"
        if report.failing_pairs:
            text += f"; failing pairs: {[list(p) for p in report.failing_pairs]}"
    return RunResult(status, text)


def _spec_output(cfg, spec: BundleSpec, extra: dict) -> RunResult:
    doc = spec.to_dict()
    if cfg.output_format == "structured":
        return RunResult(EXIT_OK, _lines([{"record": "bundle", **extra, "spec": doc}]))
    head = "; ".join(f"{k} = {v}" for k, v in extra.items())
    return RunResult(EXIT_OK, head + "\n" + json.dumps(doc, indent=2, ensure_ascii=False))


def cmd_cover(cfg: RunConfig) -> RunResult:
    spec = _load_spec(cfg.input_path)
    n = cfg.flags.get("n") or 1
    c = lattice_cover(spec.cocycle, n)
    out = BundleSpec(spec.base, spec.fiber_rank, c, spec.omega_is_generator)
    exact = validate_cocycle(c, modulo_lattice=False)
    return _spec_output(cfg, out, {"lattice_scale": c.lattice_scale, "covering_degree": n ** c.rank,
                                   "exact_cocycle": exact.valid})


def cmd_stabilize(cfg: RunConfig) -> RunResult:
    spec = _load_spec(cfg.input_path)
    c = stabilize_odd(spec.cocycle)
    out = BundleSpec(spec.base, c.rank, c, spec.omega_is_generator)
    return _spec_output(cfg, out, {"fiber_rank": c.rank})


def cmd_orient(cfg: RunConfig) -> RunResult:
    spec = _load_spec(cfg.input_path)
    c, base = orientation_double_cover(spec.cocycle, spec.base)
    out = BundleSpec(base, spec.fiber_rank, c, spec.omega_is_generator)
    return _spec_output(cfg, out, {"charts": len(c.nerve.charts),
                                   "sheets_connected": any(g.det == -1 for g in spec.cocycle.maps.values())})


def cmd_decay(cfg: RunConfig) -> RunResult:
    h, _ = _load_metric(cfg.input_path)
    ns = cfg.flags.get("n") or [1, 2, 4, 8, 16, 32, 64]
    rep = decay_rate(h, cfg.flags.get("k"), ns)
    if cfg.output_format == "structured":
        recs = [{"record": "decay_point", "n": n, "norm": v} for n, v in zip(rep.n_values, rep.norms)]
        recs.append({"record": "decay_fit", "fitted_slope": rep.fitted_slope, "r_squared": rep.r_squared,
                     "intercept": rep.intercept})
        return RunResult(EXIT_OK, _lines(recs))
    return RunResult(EXIT_OK, rep.to_csv() + rep.summary())


def cmd_threshold(cfg: RunConfig) -> RunResult:
    f = cfg.flags
    s_min, dim, norm = f.get("s_min"), f.get("dim"), f.get("norm")
    if cfg.input_path:
        h, file_s_min = _load_metric(cfg.input_path)
        norm = max_omega_norm(h, f.get("k")) if norm is None else norm
        dim = h.dim if dim is None else dim
        s_min = file_s_min if s_min is None else s_min
    missing = [name for name, v in (("--s-min", s_min), ("--dim", dim), ("--norm", norm)) if v is None]
    if missing:
        raise YamabeError(f"threshold needs {', '.join(missing)} (or a metric file)")
    if not s_min > 0:
        raise HypothesisUnmet(f"s_min = {s_min} is not positive; no Weitzenböck threshold")
    n = weitzenbock_threshold(s_min, dim, norm, f.get("C"))
    if cfg.output_format == "structured":
        return RunResult(EXIT_OK, _lines([{"record": "threshold", "n_star": n, "s_min": s_min, "dim": dim,
                                           "norm_at_1": norm, "C": f.get("C")}]))
    return RunResult(EXIT_OK, f"n* = {n}")


def cmd_constants(cfg: RunConfig) -> RunResult:
    f = cfg.flags
    which = f.get("which")
    args = f.get("values") or []
    try:
        ints = [int(a) for a in args]
    except ValueError:
        raise YamabeError(f"constants expects integer arguments, got {args}") from None
    expected = {"vol": 1, "sphere": 1, "surface": 1, "kahler": 2}
    if which not in expected or len(ints) != expected[which]:
        raise YamabeError("usage: constants vol N | sphere N | surface CHI | kahler CHI TAU [--cp2]")
    if which == "vol":
        rec = {"formula": "vol_sphere", "inputs": {"n": ints[0]}, "value": vol_sphere(ints[0])}
    elif which == "sphere":
        rec = yamabe_sphere(ints[0]).to_dict()
    elif which == "surface":
        rec = yamabe_surface(ints[0]).to_dict()
    else:
        rec = yamabe_kahler(ints[0], ints[1], f.get("cp2", False)).to_dict()
    if cfg.output_format == "structured":
        return RunResult(EXIT_OK, _lines([{"record": "constant", **rec}]))
    inputs = ", ".join(f"{k}={v}" for k, v in rec["inputs"].items())
    return RunResult(EXIT_OK, f"{rec['formula']}({inputs}) = {rec['value']:.15g}")


HANDLERS = {
    "certify": cmd_certify,
    "index": cmd_index,
    "ahat": cmd_ahat,
    "cocycle-check": cmd_cocycle_check,
    "cover": cmd_cover,
    "stabilize": cmd_stabilize,
    "orient": cmd_orient,
    "decay": cmd_decay,
    "threshold": cmd_threshold,
    "constants": cmd_constants,
}


def run(config: RunConfig) -> RunResult:
    try:
        return HANDLERS[config.command](config)
    except HypothesisUnmet as exc:
        return RunResult(EXIT_WITHHELD, "", f"hypothesis unmet: {exc}")
    except YamabeError as exc:
        return RunResult(EXIT_INPUT, "", str(exc))


# -- argument parsing ------------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="output_format", choices=("text", "structured"), default="text")

    p = argparse.ArgumentParser(prog="torus-yamabe", description="Zero-Yamabe certificates for torus bundles.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("certify", parents=[common], help="two-sided Y(M) = 0 certificate")
    s.add_argument("input", nargs="+")
    s.add_argument("--metric", help="metric data file; attaches the Weitzenböck threshold")
    s.add_argument("--C", type=float, help="override the Weitzenböck constant")
    s.add_argument("--dump-classes", action="store_true")
    s.add_argument("--jobs", type=int, default=1)

    s = sub.add_parser("index", parents=[common], help="twisted Dirac index")
    s.add_argument("input")
    s.add_argument("--dump-classes", action="store_true")

    s = sub.add_parser("ahat", parents=[common], help="Â polynomials or Â-genus")
    s.add_argument("--dim", type=int)
    s.add_argument("--degree", type=int)
    for i in range(1, 7):
        s.add_argument(f"--p{i}", type=int, dest=f"p{i}")
    s.add_argument("--number", action="append", help="Pontryagin number KEY=INT, e.g. p1^2=4")
    s.add_argument("--non-spin", action="store_true")

    s = sub.add_parser("cocycle-check", parents=[common], help="validate transition cocycle")
    s.add_argument("input")
    s.add_argument("--exact", action="store_true", help="compose translations exactly, not modulo the lattice")

    s = sub.add_parser("cover", parents=[common], help="lattice cover R^m/nΛ")
    s.add_argument("input")
    s.add_argument("--n", type=int, default=1)

    s = sub.add_parser("stabilize", parents=[common], help="odd rank m -> m+1")
    s.add_argument("input")

    s = sub.add_parser("orient", parents=[common], help="orientation double cover")
    s.add_argument("input")

    s = sub.add_parser("decay", parents=[common], help="fit the decay of |ω|_{h_n}")
    s.add_argument("input")
    s.add_argument("--n", type=_int_list)
    s.add_argument("--k", type=int)

    s = sub.add_parser("threshold", parents=[common], help="Weitzenböck threshold n*")
    s.add_argument("input", nargs="?")
    s.add_argument("--s-min", type=float, dest="s_min")
    s.add_argument("--dim", type=int)
    s.add_argument("--norm", type=float)
    s.add_argument("--k", type=int)
    s.add_argument("--C", type=float)

    s = sub.add_parser("constants", parents=[common], help="closed-form Yamabe values")
    s.add_argument("which", choices=("vol", "sphere", "surface", "kahler"))
    s.add_argument("values", nargs="+")
    s.add_argument("--cp2", action="store_true")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "output_format", "input")}
    inp = getattr(ns, "input", None)
    if isinstance(inp, list):
        inp, flags["more_paths"] = inp[0], inp[1:]
    if ns.command == "ahat":
        flags["p"] = {i: flags.pop(f"p{i}") for i in range(1, 7) if flags.get(f"p{i}") is not None}
        for i in range(1, 7):
            flags.pop(f"p{i}", None)
    return RunConfig(ns.command, inp, ns.output_format, flags)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg = config_from_args(ns)
    result = run(cfg)
    if result.output:
        print(result.output)
    if result.error:
        print(f"error: {result.error}" if result.status == EXIT_INPUT else result.error, file=sys.stderr)
    return result.status


if __name__ == "__main__":
    sys.exit(main())

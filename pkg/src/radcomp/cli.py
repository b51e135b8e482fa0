"""Command-line front end.

Every subcommand accepts ``--config FILE.json`` whose keys are flag names
with dashes replaced by underscores; explicit flags win over the file.
Exit status is 2 for unparsable input and 3 for domain errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import charts, diagnostics, odebench, rc, thurston
from .errors import DomainError, RadcompError
from .manifold import ManifoldSpec, default_pole, exp_map, sample_uniform_direction, south_pole
from .radial import RadialLaw, ReflectedLaw, parse_law

EXIT_PARSE = 2
EXIT_DOMAIN = 3


@dataclass
class RunConfig:
    """Merged run settings; ``RunConfig.parse(cfg.render()) == cfg``."""

    manifold: str = "sphere"
    dim: int = 2
    rc: float = 1.0
    law: str | None = None
    chart: list = field(default_factory=lambda: ["exp"])
    n: int = 1000
    seed: int = 0
    seeds: int = 1
    base_convention: str | None = None
    alphas: list = field(default_factory=lambda: [0.25, 0.5, 0.75, 1.0])
    tol: float = 1e-6
    trajectories: int = 50
    delta: float = 0.3
    width: float = 1.0
    rc_tilde: float = 1.2
    r0: float = 0.1
    alpha: float = 1.0
    kl_method: str = "kde"
    strict: bool = False
    out: str | None = None
    format: str = "csv"

    def render(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        for key, value in data.items():
            expected = _CONFIG_TYPES[key]
            if value is None and key in _NULLABLE:
                continue
            if isinstance(value, bool) and expected is not bool:
                raise ValueError(f"config key {key!r} has the wrong type")
            if not isinstance(value, expected):
                raise ValueError(f"config key {key!r} has type {type(value).__name__}")
        if isinstance(data.get("chart"), str):
            data["chart"] = [data["chart"]]
        return cls(**data)

    def spec(self) -> ManifoldSpec:
        return ManifoldSpec(self.manifold, self.dim, self.rc)

    def parsed_law(self, spec: ManifoldSpec) -> RadialLaw:
        text = self.law or default_law_text(spec)
        return parse_law(text, spec.r_max)


_CONFIG_TYPES = {
    "manifold": str, "dim": int, "rc": (int, float), "law": str, "chart": (list, str), "n": int,
    "seed": int, "seeds": int, "base_convention": str, "alphas": list, "tol": (int, float),
    "trajectories": int, "delta": (int, float), "width": (int, float), "rc_tilde": (int, float),
    "r0": (int, float), "alpha": (int, float), "kl_method": str, "strict": bool, "out": str, "format": str,
}
_NULLABLE = {"law", "base_convention", "out"}


def default_law_text(spec: ManifoldSpec) -> str:
    if spec.kind == "sphere":
        return f"truncnormal:mu={1.0 * spec.rc:g},sigma={0.35 * spec.rc:g}"
    return f"halfnormal:sigma={0.8 * spec.rc:g}"


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    p.add_argument("--config", help="JSON file with run settings (flags win on conflict)")
    p.add_argument("--manifold", choices=["sphere", "hyperbolic", "flat"], default=S, help="model space")
    p.add_argument("--dim", type=int, default=S, help="intrinsic dimension n")
    p.add_argument("--rc", type=float, default=S, help="curvature radius R_c")
    p.add_argument("--law", default=S, help="radial law, e.g. truncnormal:mu=1.0,sigma=0.35")
    p.add_argument("--chart", action="append", default=S, help="chart: exp, lambert, bexp:alpha=A or gcl (repeatable)")
    p.add_argument("--base-convention", choices=["paper", "equal-area"], default=S, help="Lambert base radius map")
    p.add_argument("--n", type=int, default=S, help="samples per seed")
    p.add_argument("--seed", type=int, default=S, help="base seed")
    p.add_argument("--seeds", type=int, default=S, help="number of seeds (seed_i = seed + i)")
    p.add_argument("--out", default=S, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="radcomp", description="Radial Compensation samplers and diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="write RC samples as CSV")
    _add_common(p)

    p = sub.add_parser("verify-e1", help="reproduce the synthetic radius tables")
    _add_common(p)
    p.add_argument("--strict", action="store_true", default=S, help="exit 1 if any tolerance fails")
    p.add_argument("--kl-method", choices=["kde", "hist"], default=S, help="empirical density for the radius KL")

    p = sub.add_parser("alpha-sweep", help="chart-term variance ratios over alpha")
    _add_common(p)
    p.add_argument("--alphas", type=_float_list, default=S, help="comma-separated alphas")

    p = sub.add_parser("atlas-check", help="partition, seam and gradient checks of the two-chart atlas")
    _add_common(p)
    p.add_argument("--delta", type=float, default=S, help="cut-locus exclusion margin")
    p.add_argument("--width", type=float, default=S, help="gate transition width")

    p = sub.add_parser("misspec", help="curvature mis-specification sensitivity")
    _add_common(p)
    p.add_argument("--rc-tilde", type=float, default=S, help="curvature radius assumed by the chart")
    p.add_argument("--r0", type=float, default=S, help="radius shell R0")
    p.add_argument("--alpha", type=float, default=S, help="chart dial")

    for name in ("thurston", "thurston-check"):
        p = sub.add_parser(name, help="unit-volume residuals of the Thurston base charts")
        _add_common(p)

    p = sub.add_parser("cnf-bench", help="NFE of the chart-conditioned synthetic CNF")
    _add_common(p)
    p.add_argument("--alphas", type=_float_list, default=S, help="comma-separated alphas in (0, 1]")
    p.add_argument("--tol", type=float, default=S, help="solver rtol = atol")
    p.add_argument("--trajectories", type=int, default=S, help="trajectories per alpha")
    p.add_argument("--format", choices=["csv", "json"], default=S, help="output format")
    return parser


# per-command defaults, applied beneath the config file and the flags
COMMAND_DEFAULTS = {
    "verify-e1": {"n": 20000, "seeds": 5},
    "alpha-sweep": {"n": 100000},
}


def merge_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then per-command defaults, then ``--config``, then explicit flags."""
    cfg = RunConfig()
    data = dict(COMMAND_DEFAULTS.get(args.command, {}))
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        RunConfig.parse(text)  # validates keys and types before anything runs
        data.update(json.loads(text))
    explicit = {k: v for k, v in vars(args).items() if k not in ("config", "command")}
    data.update(explicit)
    for k, v in data.items():
        setattr(cfg, k, v)
    if isinstance(cfg.chart, str):
        cfg.chart = [cfg.chart]
    return cfg


# --------------------------------------------------------------------------
# commands


def _emit(cfg: RunConfig, text: str):
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def cmd_sample(cfg, spec, law):
    chart = charts.make_chart(spec, cfg.chart[0], cfg.base_convention)
    model = rc.RcModel(chart, law)
    batches = []
    for i in range(cfg.seeds):
        seed = cfg.seed + i
        batches.append((seed, rc.sample_rc(model, cfg.n, diagnostics.make_rng(seed))))
    _emit(cfg, diagnostics.samples_csv_text(batches))
    return 0


def cmd_verify_e1(cfg, spec, law):
    blocks = diagnostics.standard_blocks(cfg.rc)
    reports = diagnostics.run_e1(blocks, cfg.n, cfg.seed, cfg.seeds, cfg.kl_method)
    checks = diagnostics.check_e1(reports)
    out = {
        "schema_version": diagnostics.SCHEMA_VERSION,
        "reports": [r.to_dict() for r in reports],
        "checks": [{"row": name, "pass": ok, "detail": d} for name, ok, d in checks],
    }
    _emit(cfg, _json(out))
    if cfg.strict and not all(ok for _, ok, _ in checks):
        return 1
    return 0


def cmd_alpha_sweep(cfg, spec, law):
    model = rc.RcModel(charts.make_chart(spec, cfg.chart[0], cfg.base_convention), law)
    alphas = np.asarray(cfg.alphas, dtype=float)
    res = rc.chart_term_variance(model, alphas, cfg.n, diagnostics.make_rng(cfg.seed))
    out = {
        "schema_version": diagnostics.SCHEMA_VERSION,
        "manifold": diagnostics.describe_spec(spec),
        "law": law.render(),
        "alphas": alphas.tolist(),
        "variance": res.variance.tolist(),
        "ratio": res.ratio.tolist(),
        "stderr_alpha1": res.stderr_alpha1,
        "oracle_alpha1": rc.chart_term_variance_oracle(spec, law),
    }
    _emit(cfg, _json(out))
    return 0


def cmd_atlas_check(cfg, spec, law):
    if spec.kind != "sphere":
        raise DomainError("--manifold: the two-chart atlas needs the sphere")
    gate = charts.AtlasGate(cfg.delta, cfg.width)
    gate.check(spec)
    north = rc.RcModel(charts.make_chart(spec, cfg.chart[0], cfg.base_convention), law)
    south = rc.RcModel(charts.make_chart(spec, cfg.chart[-1], cfg.base_convention, south_pole(spec)), ReflectedLaw(law))
    rng = diagnostics.make_rng(cfg.seed)
    m = 10000
    R = np.arccos(rng.uniform(-1.0, 1.0, m)) * spec.rc
    pts = exp_map(spec, default_pole(spec), R, sample_uniform_direction(spec.n, rng, m))
    part = np.abs(gate.psi_plus(spec, pts) + gate.psi_minus(spec, pts) - 1.0)
    out = {
        "schema_version": diagnostics.SCHEMA_VERSION,
        "manifold": diagnostics.describe_spec(spec),
        "law": law.render(),
        "delta": cfg.delta,
        "width": cfg.width,
        "seam_radius": gate.seam_radius(spec),
        "partition_max_error": float(part.max()),
    }
    if spec.n == 2:
        seam = gate.seam_radius(spec)
        band = (max(seam - 0.5 * spec.rc, 0.05), min(seam + 0.5 * spec.rc, spec.r_max - cfg.delta))
        out["seam_gradient_jump"] = charts.atlas_seam_gradient_jump(gate, north, south)
        out["band"] = list(band)
        out["band_sup_gradient"] = charts.atlas_gradient_sup(gate, north, south, band)
    _emit(cfg, _json(out))
    return 0


def cmd_misspec(cfg, spec, law):
    res = rc.misspec_sensitivity(spec, spec.with_rc(cfg.rc_tilde), cfg.r0, cfg.alpha)
    out = {"schema_version": diagnostics.SCHEMA_VERSION, "manifold": diagnostics.describe_spec(spec),
           "rc_tilde": cfg.rc_tilde, "R0": cfg.r0, **res._asdict()}
    _emit(cfg, _json(out))
    return 0


def cmd_thurston(cfg, spec, law):
    rng = diagnostics.make_rng(cfg.seed)
    n = cfg.n
    rows = {}
    for kind in thurston.KINDS:
        variants = [thurston.TABLE] + ([thurston.VOLUME_MATCHED] if kind in ("S3", "H3") else [])
        for variant in variants:
            x = thurston.random_interior_points(kind, n, rng, variant)
            resid = float(np.max(thurston.volume_check(kind, x, variant=variant)))
            key = kind if variant == thurston.TABLE else f"{kind}/{variant}"
            rows[key] = {"max_residual": resid, "asserted": kind in thurston.ASSERTED, "pass": resid <= 1e-6}
    _emit(cfg, _json({"schema_version": diagnostics.SCHEMA_VERSION, "residuals": rows}))
    return 0


def cmd_cnf_bench(cfg, spec, law):
    res = odebench.chart_cnf_bench(spec, law, cfg.alphas, cfg.tol, cfg.trajectories, diagnostics.make_rng(cfg.seed))
    if cfg.format == "json":
        out = {
            "schema_version": diagnostics.SCHEMA_VERSION,
            "alphas": res.alphas.tolist(),
            "mean_nfe": res.mean_nfe.tolist(),
            "sd_nfe": res.sd_nfe.tolist(),
            "fit_a": res.fit_a,
            "fit_b": res.fit_b,
            "r_squared": res.r_squared,
            "chart_var": res.chart_var.tolist(),
        }
        _emit(cfg, _json(out))
        return 0
    lines = ["alpha,mean_nfe,sd_nfe,fit_a,fit_b,chart_var"]
    for a, m, s, v in zip(res.alphas, res.mean_nfe, res.sd_nfe, res.chart_var):
        row = (a, m, s, res.fit_a, res.fit_b, v)
        lines.append(",".join(repr(float(x)) for x in row))
    _emit(cfg, "\n".join(lines) + "\n")
    return 0


COMMANDS = {
    "sample": cmd_sample,
    "verify-e1": cmd_verify_e1,
    "alpha-sweep": cmd_alpha_sweep,
    "atlas-check": cmd_atlas_check,
    "misspec": cmd_misspec,
    "thurston": cmd_thurston,
    "thurston-check": cmd_thurston,
    "cnf-bench": cmd_cnf_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = merge_config(args)
    except (OSError, ValueError, TypeError) as exc:
        print(f"radcomp: error: --config: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        spec = cfg.spec()
    except DomainError as exc:
        print(f"radcomp: error: --manifold/--dim/--rc: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        law = cfg.parsed_law(spec)
    except DomainError as exc:
        print(f"radcomp: error: --law: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        for c in cfg.chart:
            charts.make_chart(spec, c, cfg.base_convention)
    except DomainError as exc:
        print(f"radcomp: error: --chart: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        return COMMANDS[args.command](cfg, spec, law)
    except RadcompError as exc:
        print(f"radcomp: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver for the property suites and counterexample families."""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bundle_metrics as bm
from . import experiments as ex
from .errors import SobolevLabError
from .hom_bundle import DEFAULT_SEED, HomElement, reduce_frobenius_by_postcomposition
from .manifolds import Euclidean
from .sobolev_maps import P_MAX, P_MIN, read_sampled_map, sobolev_energy

COMMANDS = ("props", "family", "chiron", "energy")
FAMILIES = {
    "cg-sasaki": ex.family_cg_vs_sasaki,
    "sasaki-embedding": ex.family_sasaki_vs_embedding,
    "s1-disk": ex.family_s1_disk,
}
MIN_NODES = 64


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    name: str = "cg-sasaki"
    p: float = 2.0
    lambdas: list = field(default_factory=list)
    ells: list = field(default_factory=lambda: list(ex.DEFAULT_ELLS))
    nodes: int = 0
    samples: int = 10_000
    seed: int = DEFAULT_SEED
    n: int = 2
    out: str = "sobolev_lab_out"
    format: str = "csv"
    input: str = ""

    @property
    def delimiter(self) -> str:
        return "\t" if self.format == "tsv" else ","

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not (P_MIN <= self.p <= P_MAX):
            raise ConfigError(f"p must lie in [{P_MIN:g}, {P_MAX:g}], got {self.p:g}")
        if self.nodes < MIN_NODES:
            raise ConfigError(f"nodes must be at least {MIN_NODES}, got {self.nodes}")
        if any(not math.isfinite(x) or x <= 0 for x in self.lambdas):
            raise ConfigError("lambdas must be positive and finite")
        if any(e < 1 for e in self.ells):
            raise ConfigError("ells must be positive integers")
        if self.samples < 1:
            raise ConfigError("samples must be positive")
        if self.format not in ("csv", "tsv"):
            raise ConfigError(f"format must be csv or tsv, got {self.format!r}")
        if self.command == "family" and self.name not in FAMILIES:
            raise ConfigError(f"unknown family {self.name!r}; choose from {', '.join(FAMILIES)}")
        if self.command == "energy" and not self.input:
            raise ConfigError("energy needs --input <sampled map csv>")


_DEFAULT_NODES = {"cg-sasaki": 8192, "sasaki-embedding": 4097, "s1-disk": 32769, "chiron": 8192}
_DEFAULT_LAMBDAS = {"cg-sasaki": ex.DEFAULT_LAMBDAS, "sasaki-embedding": (1.0, 0.1, 0.01),
                    "s1-disk": ex.DISK_LAMBDAS}


def _float_list(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def _int_list(text):
    return [int(x) for x in str(text).split(",") if x.strip()]


_PARSERS = {"p": float, "lambdas": _float_list, "ells": _int_list, "nodes": int, "samples": int,
            "seed": int, "n": int, "name": str, "out": str, "format": str, "input": str}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI-style file of key=value defaults")
    common.add_argument("--p", help="Sobolev exponent in [1, 16]")
    common.add_argument("--lambdas", help="comma-separated scale parameters")
    common.add_argument("--ells", help="comma-separated sawtooth frequencies")
    common.add_argument("--nodes", help="grid nodes (radial nodes for the disk)")
    common.add_argument("--samples", help="random samples for property checks")
    common.add_argument("--seed", help="RNG seed (default: $SOBOLEV_LAB_SEED)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", help="csv or tsv")

    parser = argparse.ArgumentParser(prog="sobolev-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("props", parents=[common], help="bundle-metric property suite")
    fam = sub.add_parser("family", parents=[common], help="a counterexample family")
    fam.add_argument("--name", help=", ".join(FAMILIES))
    fam.add_argument("--n", help="target dimension for cg-sasaki and sasaki-embedding")
    sub.add_parser("chiron", parents=[common], help="Chiron non-completeness sequence")
    en = sub.add_parser("energy", parents=[common], help="Sobolev energy of a sampled map file")
    en.add_argument("--input", help="sampled map CSV")
    return parser


def resolve_config(args: argparse.Namespace, env=None) -> RunConfig:
    """Defaults < $SOBOLEV_LAB_SEED < config file < flags."""
    env = os.environ if env is None else env
    values = {}
    if env.get("SOBOLEV_LAB_SEED"):
        values["seed"] = env["SOBOLEV_LAB_SEED"]
    if args.config:
        parser = configparser.ConfigParser()
        try:
            with open(args.config) as fh:
                parser.read_string("[run]\n" + fh.read())
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        for key, value in parser["run"].items():
            if key not in _PARSERS:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = value
    for key in _PARSERS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag

    cfg = RunConfig(args.command)
    try:
        for key, raw in values.items():
            setattr(cfg, key, _PARSERS[key](raw))
    except ValueError as exc:
        raise ConfigError(f"bad value: {exc}") from None
    key = cfg.name if cfg.command == "family" else cfg.command
    if "nodes" not in values:
        cfg.nodes = _DEFAULT_NODES.get(key, 4096)
    if "lambdas" not in values:
        cfg.lambdas = list(_DEFAULT_LAMBDAS.get(key, ()))
    if cfg.command == "family" and cfg.name == "s1-disk" and "p" not in values:
        cfg.p = 1.0
    if cfg.command == "chiron" and "p" not in values:
        cfg.p = 1.0
    cfg.validate()
    return cfg


# -- summary records ----------------------------------------------------

class Summary:
    def __init__(self):
        self.lines = []
        self.failures = []

    def check(self, name, ok, detail):
        status = "PASS" if ok else "FAIL"
        self.lines.append(f"{status} {name}: {detail}")
        if not ok:
            self.failures.append(name)

    def info(self, name, detail):
        self.lines.append(f"INFO {name}: {detail}")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _g(x) -> str:
    return f"{x:.6g}"


def _table(header, rows, delimiter):
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# -- suites ---------------------------------------------------------------

def run_props(cfg: RunConfig, summary: Summary):
    rows = []
    tol = 1e-12
    for lam in (bm.DEGENERATE, bm.CHEEGER_GROMOLL, bm.SASAKI):
        rep = bm.check_strong_concordance(lam, cfg.samples, cfg.seed)
        for clause, value in (("projection", rep.projection_violation),
                              ("differential", rep.differential_violation),
                              ("vertical_lift", rep.vertical_lift_error)):
            name = f"strong_concordance.{clause}[lambda={lam:g}]"
            summary.check(name, value < tol, f"violation={_g(value)} tol={_g(tol)}")
            rows.append((name, value, tol, value < tol))
    cg = bm.check_cg_le_sasaki(cfg.samples, cfg.seed)
    summary.check("cg_le_sasaki", cg < tol, f"violation={_g(max(cg, 0.0))} tol={_g(tol)}")
    rows.append(("cg_le_sasaki", max(cg, 0.0), tol, cg < tol))

    flat = Euclidean(2)
    e1 = HomElement.at(flat, flat, [0.0, 0.0], [0.0, 0.0])
    e2 = HomElement.at(flat, flat, [3.0, 0.0], [0.0, 0.0], matrix=[[0.0, 0.0], [0.0, 4.0]])
    err = abs(bm.sasaki_distance_flat(e1, e2) - 5.0)
    summary.check("flat_sasaki_3_4_5", err < tol, f"error={_g(err)} tol={_g(tol)}")
    rows.append(("flat_sasaki_3_4_5", err, tol, err < tol))

    rng = np.random.default_rng(cfg.seed)
    worst_err, worst_gap = 0.0, np.inf
    for shape in ((3, 2), (4, 3)):
        for _ in range(min(cfg.samples, 1000)):
            xi = rng.standard_normal(shape)
            red = reduce_frobenius_by_postcomposition(xi, k=shape[0], samples=20,
                                                      seed=int(rng.integers(2 ** 31)))
            worst_err = max(worst_err, abs(red.value - np.linalg.norm(xi)))
            worst_gap = min(worst_gap, red.sample_gap)
    summary.check("frobenius_reduction", worst_err < 1e-9, f"error={_g(worst_err)} tol=1e-09")
    summary.check("frobenius_nonexpansive_samples", worst_gap >= -1e-12, f"min_gap={_g(worst_gap)}")
    rows.append(("frobenius_reduction", worst_err, 1e-9, worst_err < 1e-9))

    ladder = bm.lambda_ladder_report(cfg.samples, cfg.seed)
    summary.info("lambda_ladder", ", ".join(f"{k}={_g(v)}" for k, v in ladder.items()))
    header = ("check", "value", "tolerance", "passed")
    body = [(n, ex._fmt(v), ex._fmt(t), "true" if ok else "false") for n, v, t, ok in rows]
    return _table(header, body, cfg.delimiter)


def _slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def run_family(cfg: RunConfig, summary: Summary):
    func = FAMILIES[cfg.name]
    if cfg.name == "s1-disk":
        results = func(cfg.p, cfg.lambdas, cfg.nodes)
    else:
        results = func(cfg.p, cfg.n, cfg.lambdas, cfg.nodes)
    by_lam = sorted(results, key=lambda r: -r.parameter)
    lams = [r.parameter for r in by_lam]

    if cfg.name == "cg-sasaki":
        for r in results:
            margin = r.closed_form_bound - r.cheeger_gromoll.value
            summary.check(f"cg_bound[lambda={r.parameter:g}]", margin >= 0, f"margin={_g(margin)}")
            closed = r.extras["sasaki_closed_form"]
            rel = abs(r.sasaki.value - closed) / closed
            summary.check(f"sasaki_grid_vs_closed_form[lambda={r.parameter:g}]", rel < 1e-4,
                          f"rel_error={_g(rel)} tol=0.0001")
        if len(lams) >= 2:
            summary.info("cg_slope", f"{_g(_slope(lams, [r.cheeger_gromoll.value for r in by_lam]))} "
                                     f"(expected {_g(1 / cfg.p)})")
            summary.info("sasaki_slope", f"{_g(_slope(lams, [r.sasaki.value for r in by_lam]))} "
                                         f"(expected {_g(-(1 - 1 / cfg.p))})")
    elif cfg.name == "sasaki-embedding":
        for r in results:
            margin = r.extras["support_bound"] - r.sasaki.value
            summary.check(f"sasaki_support_bound[lambda={r.parameter:g}]", margin >= 0,
                          f"margin={_g(margin)}")
            summary.info(f"sasaki_displayed_bound[lambda={r.parameter:g}]",
                         f"margin={_g(r.closed_form_bound - r.sasaki.value)}")
        ratios = [r.extras["ratio_sasaki_iota"] for r in by_lam]
        dec = all(b < a for a, b in zip(ratios, ratios[1:]))
        summary.check("ratio_sasaki_iota_decreasing", dec,
                      "ratios=" + ",".join(_g(x) for x in ratios))
    else:
        iotas = [r.iota.value for r in by_lam]
        dec = all(b < a for a, b in zip(iotas, iotas[1:]))
        summary.check("iota_decreasing", dec, "values=" + ",".join(_g(x) for x in iotas))
        for r in results:
            margin = r.sasaki.value - r.closed_form_bound
            summary.check(f"sasaki_above_limit[lambda={r.parameter:g}]", margin >= -1e-3 * r.closed_form_bound,
                          f"margin={_g(margin)}")
            dev = r.sasaki.value / r.closed_form_bound - 1
            summary.info(f"sasaki_relative_to_limit[lambda={r.parameter:g}]",
                         f"{_g(dev)} (core part {_g(r.extras['core_part'])})")
        jump = max(_seam_jump(lam, cfg.p) for lam in lams)
        summary.check("profile_seam_continuity", jump <= 1e-12, f"max_jump={_g(jump)}")
    return ex.write_family_csv(results, None, cfg.delimiter)


def _seam_jump(lam, p):
    worst = 0.0
    for seam in (lam, 2 * lam):
        below, _ = ex.disk_profile(np.nextafter(seam, 0.0), lam, p)
        at, _ = ex.disk_profile(seam, lam, p)
        worst = max(worst, float(abs(below - at)))
    return worst


def run_chiron(cfg: RunConfig, summary: Summary, out: Path):
    rep = ex.chiron_cauchy_not_convergent(cfg.p, cfg.ells, cfg.nodes)
    for ell, e in zip(rep.ells, rep.energies):
        summary.check(f"energy[ell={ell}]", 0.99 <= e <= 1.01, f"value={_g(e)} range=[0.99,1.01]")
    dmax = float(np.max(rep.derivative_terms))
    summary.check("derivative_term_zero", dmax == 0.0, f"max={_g(dmax)}")
    tail = [rep.cauchy[i, i + 1] for i in range(len(rep.ells) - 1)]
    dec = all(b < a for a, b in zip(tail, tail[1:]))
    summary.check("cauchy_tail_decreasing", dec, "values=" + ",".join(_g(x) for x in tail))
    summary.check("limit_energy_zero", rep.limit_energy == 0.0, f"value={_g(rep.limit_energy)}")
    (out / f"cauchy.{cfg.format}").write_text(rep.cauchy_csv(cfg.delimiter))
    return ex.write_family_csv(rep.rows, None, cfg.delimiter)


def run_energy(cfg: RunConfig, summary: Summary):
    u = read_sampled_map(cfg.input)
    energy = sobolev_energy(u, cfg.p)
    summary.info("energy", f"p={_g(cfg.p)} value={_g(energy)}")
    rows = [("domain", str(u.domain)), ("target", str(u.target)), ("nodes", str(u.grid.size)),
            ("p", ex._fmt(cfg.p)), ("energy", ex._fmt(energy))]
    return _table(("quantity", "value"), rows, cfg.delimiter)


def run(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = Summary()
    if cfg.command == "props":
        table = run_props(cfg, summary)
    elif cfg.command == "family":
        table = run_family(cfg, summary)
    elif cfg.command == "chiron":
        table = run_chiron(cfg, summary, out)
    else:
        table = run_energy(cfg, summary)
    (out / f"results.{cfg.format}").write_text(table)
    (out / "summary.txt").write_text(summary.text())
    sys.stdout.write(summary.text())
    if summary.failures:
        print("failed: " + ", ".join(summary.failures), file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"sobolev-lab: invalid configuration: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except (SobolevLabError, OSError) as exc:
        print(f"sobolev-lab: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

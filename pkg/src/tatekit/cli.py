"""Command-line experiment runner.

Every command writes one JSON report (to ``--out`` or stdout) and exits
with 0 when all its checks pass, 3 when a check fails and 2 on a bad
configuration.  Defaults come from the JSON file named by ``--config`` or
the ``TATEKIT_CONFIG`` environment variable; flags override the file.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path

from . import localize, products, series, sheafy_positive
from .errors import ConfigError, SpecBreak, TatekitError
from .report import Report, dumps
from .scalars import ValuedScalar, format_fraction
from .series import AlgebraDescriptor, TateElement, b_seq

CONFIG_ENV = "TATEKIT_CONFIG"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SPEC_BREAK = 3


@dataclass
class ExperimentConfig:
    r_log: Fraction = Fraction(1)
    trunc_x: int | None = None
    trunc_u: int | None = None
    trunc_t: int | None = None
    factors: int | None = None
    epsilon_scale: Fraction = Fraction(1, 3)
    depth: int | None = None
    seed: int = 0
    out: str | None = None

    def validate(self) -> None:
        if self.r_log <= 0:
            raise ConfigError("r_log must be positive")
        for name in ("trunc_x", "trunc_u", "trunc_t", "factors"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.depth is not None and self.depth < 0:
            raise ConfigError("depth must be >= 0")
        if self.epsilon_scale <= 0:
            raise ConfigError("epsilon_scale must be positive")

    def to_json(self) -> dict:
        out = {}
        for k, v in asdict(self).items():
            if k == "out":
                continue
            out[k] = format_fraction(v) if isinstance(v, Fraction) else v
        return out


_RATIONAL_KEYS = {"r_log", "epsilon_scale"}


def _coerce(key: str, value):
    try:
        if key in _RATIONAL_KEYS:
            return Fraction(str(value))
        if key == "out":
            return None if value is None else str(value)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, str)):
            raise ValueError(value)
        return int(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def load_config_file(path: str | os.PathLike) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a flat JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    return {k: _coerce(k, v) for k, v in data.items()}


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    path = args.config or os.environ.get(CONFIG_ENV)
    values = load_config_file(path) if path else {}
    for f in fields(ExperimentConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = _coerce(f.name, flag)
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


# -- commands ------------------------------------------------------------------


def cmd_norms(cfg: ExperimentConfig, args) -> Report:
    rep = Report("norms", cfg.to_json())
    r = cfg.r_log
    stair = AlgebraDescriptor.staircase(r)
    full = AlgebraDescriptor.bidisc(r)
    t = ValuedScalar.mono(1)
    caps = dict(trunc_u=cfg.trunc_u, trunc_x=cfg.trunc_x, trunc_t=cfg.trunc_t)
    samples = {
        "U^3X^2": TateElement.monomial(stair, 3, 2),
        "tX": TateElement.make(stair, {series.Monomial(0, 1, 0): t}),
        "X^2+tX^2": TateElement.make(full, {series.Monomial(0, 2, 0): ValuedScalar.const(1) + t}),
    }
    base = TateElement.make(stair, {series.Monomial(0, 1, 0): 1, series.Monomial(1, 1, 0): 1}, **caps)
    power = base
    for k in range(1, 5):
        samples[f"(X+UX)^{k}"] = power
        power = power * base
    rows = []
    for name, f in samples.items():
        g = series.gauss_norm(f)
        lat = series.lattice_norm(f, f.algebra)
        sq = f * f
        row = {
            "element": name,
            "gauss": g.to_json(),
            "lattice": lat.to_json(),
            "square": series.gauss_norm(sq).to_json(),
            "truncated": f.truncated or sq.truncated,
        }
        rows.append(row)
        rep.check(f"lattice_norm[{name}]", lat == g)
        if not row["truncated"]:
            rep.check(f"power_multiplicative[{name}]", series.gauss_norm(sq) == g.scale(2))
    gaps = series.staircase_discrepancies(16, 16)
    rep.check("staircase_generated_equals_support", not gaps, {"box": [16, 16], "discrepancies": gaps})
    rep.result = rows
    return rep


def cmd_localize_norm(cfg: ExperimentConfig, args) -> Report:
    rep = Report("localize-norm", cfg.to_json())
    i0, j0 = args.i, args.j
    depth = cfg.depth if cfg.depth is not None else i0 + 3
    pres = localize.LocalizationPresentation.at_x(cfg.r_log)
    f = TateElement.monomial(pres.base, i0, j0)
    bounds = localize.quotient_norm_bounds(f, pres, depth)
    exact = localize.monomial_quotient_norm_exact(i0, j0, cfg.r_log)
    rep.check("upper_equals_exact", bounds.upper == exact, exact.to_json())
    rep.check("lower_equals_exact", bounds.lower == exact, exact.to_json())
    rep.check("submetric", bounds.upper <= series.gauss_norm(f))
    violations = []
    for G, rem in localize.certificate_candidates(i0, j0, cfg.r_log, depth):
        v = localize.lower_bound_certificate(i0, j0, G, rem, cfg.r_log)
        violations.append(v.to_json())
        rep.check(f"candidate_refuted[{len(violations) - 1}]", v.refuted, v.kind)
    rep.result = {"i0": i0, "j0": j0, "depth": depth, "bounds": bounds, "certificates": violations}
    return rep


def cmd_spectral(cfg: ExperimentConfig, args) -> Report:
    rep = Report("spectral", cfg.to_json())
    seq = localize.spectral_radius_seq(args.n_max, cfg.r_log)
    rep.check("positive", all(v > 0 for v in seq))
    pows = [(1 << m, seq[(1 << m) - 1]) for m in range(args.n_max.bit_length()) if (1 << m) <= args.n_max]
    rep.check("non_increasing_on_powers_of_two", all(a[1] >= b[1] for a, b in zip(pows, pows[1:])))
    rep.check(
        "bounded_by_(m+2)/2^m",
        all(v <= Fraction(m + 2, 1 << m) * cfg.r_log for m, (_, v) in enumerate(pows)),
    )
    norms = [b_seq(n) * cfg.r_log for n, _ in pows]
    rep.check("norms_unbounded_on_powers_of_two", all(a < b for a, b in zip(norms, norms[1:])))
    rep.result = {
        "trace": [{"n": n + 1, "lognorm_per_n": v.to_json()} for n, v in enumerate(seq)],
        "last": seq[-1].to_json(),
        "power_norms": [{"n": n, "lognorm": format_fraction(x)} for (n, _), x in zip(pows, norms)],
    }
    return rep


def cmd_uniformity(cfg: ExperimentConfig, args) -> Report:
    rep = Report("uniformity-witness", cfg.to_json())
    c_log = Fraction(args.c_log)
    wr = localize.uniformity_witness(args.N, c_log, args.i_max, cfg.r_log)
    spectral = [t.spectral_lognorm for t in wr.terms]
    ban = [t.banach_lognorm for t in wr.terms]
    rep.check("spectral_non_increasing", all(a >= b for a, b in zip(spectral, spectral[1:])))
    rep.check(
        "spectral_bound",
        all(t.spectral_lognorm <= (b_seq(t.exponent) // args.N) * c_log for t in wr.terms),
    )
    rep.check("banach_above_floor", all(t.banach_lognorm >= t.banach_floor for t in wr.terms))
    rep.check("banach_grows", ban[-1] > ban[0] if ban else False)
    rep.result = wr
    return rep


def cmd_presentation_gap(cfg: ExperimentConfig, args) -> Report:
    rep = Report("presentation-gap", cfg.to_json())
    res = localize.presentation_nonuniqueness(cfg.r_log)
    rep.check("presentations_differ", res["presentations_differ"])
    rep.check("norm_in_A{X}_is_r", res["rows"][0]["lognorm"] == format_fraction(cfg.r_log))
    rep.result = res
    return rep


def cmd_product_isometry(cfg: ExperimentConfig, args) -> Report:
    rep = Report("product-isometry", cfg.to_json())
    rng = random.Random(cfg.seed)
    factors = cfg.factors or 4
    depth = cfg.depth if cfg.depth is not None else 6
    rows = []
    for k in range(args.count):
        f = products.random_product_element(rng, factors, cfg.r_log)
        try:
            res = products.product_localization_isometry_check(f, depth)
            ok = True
        except SpecBreak as exc:
            res, ok = {"error": str(exc), "factor": getattr(exc, "factor", None)}, False
        rep.check(f"isometry[{k}]", ok)
        rows.append(res)
    rep.result = rows
    return rep


def _pi(cfg: ExperimentConfig) -> products.PiSequence:
    return products.PiSequence(cfg.epsilon_scale)


def cmd_cech_witness(cfg: ExperimentConfig, args) -> Report:
    rep = Report("cech-witness", cfg.to_json())
    count = cfg.factors or 8
    pi = _pi(cfg)
    w = products.build_cech_witness(count, pi, cfg.r_log)
    rep.check("identity", w.identity_holds)
    rep.check("F_bounds", all(row["within"] for row in w.factor_bounds()))
    for p in w.params:
        wide = products.maximize_objective(p.epsilon, cfg.r_log, 2 * products.scan_bound(p.epsilon, cfg.r_log))
        rep.check(f"scan_stable[{p.n}]", wide == (p.R_log, p.i))
    growth = [p.growth for p in w.params]
    rep.check("growth_increasing", all(a < b for a, b in zip(growth, growth[1:])))
    rep.check("growth_exceeds_2", any(g > 2 for g in growth), [format_fraction(g) for g in growth])
    rep.result = w
    return rep


def cmd_cech_refute(cfg: ExperimentConfig, args) -> Report:
    rep = Report("cech-refute", cfg.to_json())
    count = cfg.factors or 8
    depth = cfg.depth if cfg.depth is not None else 4
    w = products.build_cech_witness(count, _pi(cfg), cfg.r_log)
    rows = []
    for name, f, H in products.refutation_candidates(w, depth):
        v = products.preimage_refutation(f, H, w)
        rep.check(f"refuted[{name}]", v.refuted, v.kind)
        rows.append({"candidate": name, "violation": v})
    rep.result = {"depth": depth, "candidates": rows}
    return rep


def cmd_admissibility(cfg: ExperimentConfig, args) -> Report:
    rep = Report("admissibility-gap", cfg.to_json())
    pi = _pi(cfg)
    rows = []
    for target in args.targets:
        g = products.admissibility_gap(Fraction(target), pi, cfg.r_log)
        rep.check(f"gap[{target}]", g.succeeded)
        rows.append(g)
    gaps = [g.input_lognorm for g in rows]
    order = sorted(range(len(rows)), key=lambda k: rows[k].target)
    rep.check("monotone", all(gaps[a] <= gaps[b] for a, b in zip(order, order[1:])))
    rep.result = rows
    return rep


def cmd_finite_sheaf(cfg: ExperimentConfig, args) -> Report:
    rep = Report("finite-sheaf", cfg.to_json())
    res = sheafy_positive.exhaustive_finite_check(args.max_points)
    for row in res["rows"]:
        rep.check(f"exact[{row['points']}]", row["covers"] == row["exact"])
        rep.check(f"presentation_independent[{row['points']}]", not row["presentation_mismatches"])
    rep.result = res
    return rep


def cmd_all(cfg: ExperimentConfig, args) -> Report:
    """Every command with its acceptance defaults."""
    rep = Report("all", cfg.to_json())
    plan = [
        (cmd_norms, {}),
        (cmd_localize_norm, {"i": 3, "j": 5}),
        (cmd_spectral, {"n_max": 4096}),
        (cmd_uniformity, {"N": 2, "c_log": "-1", "i_max": 64}),
        (cmd_presentation_gap, {}),
        (cmd_product_isometry, {"count": 100}),
        (cmd_cech_witness, {}),
        (cmd_cech_refute, {}),
        (cmd_admissibility, {"targets": ["2", "10", "50"]}),
        (cmd_finite_sheaf, {"max_points": 4}),
    ]
    sub = {}
    for fn, extra in plan:
        r = fn(cfg, argparse.Namespace(**extra))
        rep.check(r.command, r.passed, r.first_failure)
        sub[r.command] = {"passed": r.passed, "first_failure": r.first_failure, "checks": len(r.checks)}
    # acceptance claim checked literally; it needs b_2i >= 11, i.e. i >= 512
    wr = localize.uniformity_witness(2, -1, 64, cfg.r_log)
    at32 = next(t for t in wr.terms if t.i == 32)
    rep.check("banach_exceeds_5_by_i32", at32.banach_lognorm > 5, at32.banach_lognorm.to_json())
    rep.result = sub
    return rep


COMMANDS = {
    "norms": cmd_norms,
    "localize-norm": cmd_localize_norm,
    "spectral": cmd_spectral,
    "uniformity-witness": cmd_uniformity,
    "presentation-gap": cmd_presentation_gap,
    "product-isometry": cmd_product_isometry,
    "cech-witness": cmd_cech_witness,
    "cech-refute": cmd_cech_refute,
    "admissibility-gap": cmd_admissibility,
    "finite-sheaf": cmd_finite_sheaf,
    "all": cmd_all,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--r-log", dest="r_log", help="log2 r as p/q")
    common.add_argument("--trunc-x", dest="trunc_x", type=int)
    common.add_argument("--trunc-u", dest="trunc_u", type=int)
    common.add_argument("--trunc-t", dest="trunc_t", type=int)
    common.add_argument("--factors", type=int)
    common.add_argument("--epsilon-scale", dest="epsilon_scale", help="eps_n = scale/(n+1)")
    common.add_argument("--depth", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--config", help=f"JSON config (default: ${CONFIG_ENV})")

    parser = argparse.ArgumentParser(prog="tatekit", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = subs.add_parser(name, parents=[common])
        if name == "localize-norm":
            sp.add_argument("--i", type=int, default=3)
            sp.add_argument("--j", type=int, default=5)
        elif name == "spectral":
            sp.add_argument("--n-max", dest="n_max", type=int, default=1024)
        elif name == "uniformity-witness":
            sp.add_argument("--N", type=int, default=2)
            sp.add_argument("--c-log", dest="c_log", default="-1")
            sp.add_argument("--i-max", dest="i_max", type=int, default=64)
        elif name == "product-isometry":
            sp.add_argument("--count", type=int, default=100)
        elif name == "admissibility-gap":
            sp.add_argument("--targets", nargs="+", default=["2", "10", "50"])
        elif name == "finite-sheaf":
            sp.add_argument("--max-points", dest="max_points", type=int, default=4)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        report = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SpecBreak as exc:
        print(f"spec-break: {exc}", file=sys.stderr)
        return EXIT_SPEC_BREAK
    except (TatekitError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = dumps(report)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if not report.passed:
        print(f"failed: {report.first_failure}", file=sys.stderr)
        return EXIT_SPEC_BREAK
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

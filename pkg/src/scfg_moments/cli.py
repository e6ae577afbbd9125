"""Command-line front end.

Subcommands: ``validate`` (structure, spectral radius, consistency),
``moments`` (unconditional cross-moment table), ``conditional`` (moments of
one string's derivations), ``entropy`` (shorthand for first-order surprisal
moments), and ``oracle`` (brute-force sums with bounds).

Exit codes: 0 success, 1 grammar/data failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

from . import __version__
from .errors import ScfgError
from .grammar import (
    assign_features,
    check_consistency,
    expectation_matrix,
    parse_grammar,
    validate,
)
from .cross_moments import compute_moments
from .inside import conditional_moments, normalized_conditional_moments
from .multiindex import MultiIndex, enumerate_downset
from .oracle import enumerate_parses, moment_sums, oracle_moments

_FMT = "%.12g"


@dataclass
class RunConfig:
    command: str
    grammar_path: str
    nu: tuple | None = None
    features: tuple = ("file",)
    string: tuple | None = None
    normalize: bool = False
    bits: bool = False
    json_output: bool = False
    max_steps: int = 40


class UsageError(Exception):
    pass


def _parse_nu(text: str) -> MultiIndex:
    try:
        return MultiIndex(int(part) for part in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --nu value {text!r}: {exc}") from None


def _load(cfg: RunConfig):
    try:
        with open(cfg.grammar_path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise UsageError(f"cannot read grammar file: {exc}") from None
    return parse_grammar(text, normalize=cfg.normalize)


def _featured(g, cfg: RunConfig):
    try:
        return assign_features(g, cfg.features)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(payload: dict, lines, json_output: bool):
    if json_output:
        print(json.dumps(payload, indent=2))
    else:
        for line in lines:
            print(line)


def _alpha_key(a) -> str:
    return ",".join(map(str, a))


def _require_nu(cfg: RunConfig, g) -> MultiIndex:
    if cfg.nu is None:
        raise UsageError("--nu is required for this command")
    nu = MultiIndex(cfg.nu)
    if nu.dim != g.feature_dim:
        raise UsageError(
            f"--nu has {nu.dim} component(s) but the feature set has "
            f"dimension {g.feature_dim}"
        )
    return nu


def _cmd_validate(cfg: RunConfig) -> int:
    g = _load(cfg)
    report = validate(g)
    em = expectation_matrix(g)
    verdict = check_consistency(g, em)
    payload = {
        "proper": report.proper,
        "all_positive": report.all_positive,
        "productive": sorted(g.nonterminals[i] for i in report.productive),
        "accessible": sorted(g.nonterminals[i] for i in report.accessible),
        "useful": report.useful,
        "valid": report.ok,
        "rho": em.spectral_radius_estimate,
        "consistent": verdict.consistent,
        "messages": list(report.messages),
    }
    lines = [
        f"proper: {'yes' if report.proper else 'no'}",
        f"all probabilities positive: {'yes' if report.all_positive else 'no'}",
        "productive: " + " ".join(payload["productive"]),
        "accessible: " + " ".join(payload["accessible"]),
        f"useful: {'yes' if report.useful else 'no'}",
        f"rho(M) = {_FMT % em.spectral_radius_estimate}",
        verdict.message,
    ]
    lines.extend(payload["messages"])
    _emit(payload, lines, cfg.json_output)
    return 0 if (report.ok and verdict.consistent) else 1


def _cmd_moments(cfg: RunConfig) -> int:
    g = _featured(_load(cfg), cfg)
    nu = _require_nu(cfg, g)
    table = compute_moments(g, nu)
    payload = table.to_json_dict()
    lines = ["nonterminals: " + " ".join(table.nonterminals)]
    for a in enumerate_downset(nu):
        values = " ".join(_FMT % v for v in table[a])
        lines.append(f"m[{_alpha_key(a)}]: {values}")
    _emit(payload, lines, cfg.json_output)
    return 0


def _cmd_conditional(cfg: RunConfig) -> int:
    if cfg.string is None:
        raise UsageError("--string is required for this command")
    g = _featured(_load(cfg), cfg)
    nu = _require_nu(cfg, g)
    tup = conditional_moments(g, cfg.string, nu)
    z = tup.coeffs[0]
    payload = tup.to_json_dict()
    payload["inside_probability"] = z
    lines = [f"inside probability: {_FMT % z}"]
    for a, c in tup.components().items():
        lines.append(f"moment[{_alpha_key(a)}]: {_FMT % c}")
    if z > 0.0:
        norm = normalized_conditional_moments(g, cfg.string, nu)
        payload["normalized"] = norm.to_json_dict()
        for a, c in norm.components().items():
            lines.append(f"normalized[{_alpha_key(a)}]: {_FMT % c}")
    else:
        payload["normalized"] = None
        lines.append("string not derivable; normalized moments undefined")
    _emit(payload, lines, cfg.json_output)
    return 0


def _cmd_entropy(cfg: RunConfig) -> int:
    g = assign_features(_load(cfg), ["surprisal"])
    unit = "bits" if cfg.bits else "nats"
    scale = 1.0 / math.log(2.0) if cfg.bits else 1.0
    payload: dict = {"unit": unit}
    lines = []
    if cfg.string is None:
        table = compute_moments(g, (1,))
        value = float(table[(1,)][g.start]) * scale
        payload["entropy"] = value
        lines.append(f"derivational entropy: {_FMT % value} {unit}")
    else:
        tup = conditional_moments(g, cfg.string, (1,))
        z = tup.coeffs[0]
        value = tup.coeffs[1] * scale
        payload["inside_probability"] = z
        payload["conditional_entropy"] = value
        lines.append(f"inside probability: {_FMT % z}")
        lines.append(
            f"conditional entropy (unnormalized): {_FMT % value} {unit}"
        )
    _emit(payload, lines, cfg.json_output)
    return 0


def _cmd_oracle(cfg: RunConfig) -> int:
    g = _featured(_load(cfg), cfg)
    nu = _require_nu(cfg, g)
    if cfg.string is None:
        result = oracle_moments(g, g.start, nu, cfg.max_steps)
        payload = result.to_json_dict()
        lines = [
            f"derivations: {result.derivation_count}",
            f"tail_mass_bound: {_FMT % result.tail_mass_bound}",
        ]
        for a in enumerate_downset(nu):
            lines.append(
                f"m[{_alpha_key(a)}]: {_FMT % result.values[a]}"
                f" (error bound {_FMT % result.error_bounds[a]})"
            )
    else:
        parses = enumerate_parses(g, g.start, cfg.string)
        sums = moment_sums(parses, nu)
        payload = {
            "nu": list(nu),
            "parses": len(parses),
            "moments": {_alpha_key(a): sums[a] for a in enumerate_downset(nu)},
        }
        lines = [f"parses: {len(parses)}"]
        for a in enumerate_downset(nu):
            lines.append(f"m[{_alpha_key(a)}]: {_FMT % sums[a]}")
    _emit(payload, lines, cfg.json_output)
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "moments": _cmd_moments,
    "conditional": _cmd_conditional,
    "entropy": _cmd_entropy,
    "oracle": _cmd_oracle,
}


def run(cfg: RunConfig) -> int:
    """Execute one configured command; returns the process exit status."""
    try:
        return _COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScfgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scfg-moments",
        description="Cross-moments of additive features of SCFG derivations.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_nu=False, with_string=False, string_required=False, with_steps=False):
        p.add_argument("-g", "--grammar", required=True, help="grammar file")
        p.add_argument("--json", action="store_true", help="JSON output")
        p.add_argument(
            "--normalize",
            action="store_true",
            help="rescale rule probabilities to sum to 1 per premise",
        )
        if with_nu:
            p.add_argument(
                "--nu",
                required=True,
                help="moment order, comma-separated integers (e.g. 2 or 1,1)",
            )
            p.add_argument(
                "--features",
                default="file",
                help="comma-separated feature columns: derivation-length, "
                "string-length, surprisal, file (default: file)",
            )
        if with_string:
            p.add_argument(
                "-u",
                "--string",
                required=string_required,
                default=None,
                help="whitespace-separated terminal string",
            )
        if with_steps:
            p.add_argument(
                "--max-steps",
                type=int,
                default=40,
                help="rule-application budget for enumeration (default 40)",
            )

    common(sub.add_parser("validate", help="validate and test consistency"))
    common(sub.add_parser("moments", help="unconditional moment table"), with_nu=True)
    common(
        sub.add_parser("conditional", help="moments of one string's derivations"),
        with_nu=True,
        with_string=True,
        string_required=True,
    )
    entropy = sub.add_parser("entropy", help="derivational entropy via surprisal")
    common(entropy, with_string=True)
    entropy.add_argument(
        "--bits", action="store_true", help="report in bits instead of nats"
    )
    common(
        sub.add_parser("oracle", help="brute-force sums with bounds"),
        with_nu=True,
        with_string=True,
        with_steps=True,
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    string = None
    if getattr(args, "string", None) is not None:
        string = tuple(args.string.split())
    try:
        nu = tuple(_parse_nu(args.nu)) if getattr(args, "nu", None) else None
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    cfg = RunConfig(
        command=args.command,
        grammar_path=args.grammar,
        nu=nu,
        features=tuple(getattr(args, "features", "file").split(",")),
        string=string,
        normalize=args.normalize,
        bits=getattr(args, "bits", False),
        json_output=args.json,
        max_steps=getattr(args, "max_steps", 40),
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

    qansible audit
    qansible enumerate --n 4 --kx 2 --kz 2
    qansible simulate --n 4 --kx 2 --kz 2 --bob-bit 1 --trials 100000 --seed 7
    qansible compare --n 4 --kx 2 --kz 2 --format csv --out report.csv

Exit codes: 0 success, 2 usage error, 3 audit failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
import time
from dataclasses import dataclass
from typing import Optional, Sequence

from . import __version__
from .analysis import (
    ModelKind,
    enumerate_alice_distribution,
    monte_carlo_distribution,
    paper_gap_report,
)
from .protocol import DEFAULT_MAX_QUBITS, DecisionRule, ProtocolConfig, audit_equations

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_AUDIT_FAILED = 3

COMMANDS = ("audit", "enumerate", "simulate", "compare")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CliConfig:
    command: str
    n_total: int = 4
    k_x: int = 2
    k_z: int = 2
    bob_bit: int = 0
    trials: int = 10_000
    seed: int = 0
    threshold: float = 0.25
    output_format: str = "json"
    output_path: Optional[str] = None

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.output_format not in ("json", "csv"):
            raise UsageError(f"unknown format {self.output_format!r}")
        if not 0.0 < self.threshold < 0.5:
            raise UsageError("--threshold must lie strictly between 0 and 0.5")
        if self.command == "audit":
            return
        if self.n_total < 1:
            raise UsageError("--n must be at least 1")
        if self.k_x < 0 or self.k_z < 0:
            raise UsageError("--kx and --kz must be nonnegative")
        if self.k_x + self.k_z != self.n_total:
            raise UsageError(
                f"split mismatch: --kx {self.k_x} + --kz {self.k_z} != --n {self.n_total}"
            )
        if self.n_total > DEFAULT_MAX_QUBITS:
            raise UsageError(f"--n exceeds the qubit budget of {DEFAULT_MAX_QUBITS}")
        if self.bob_bit not in (0, 1):
            raise UsageError("--bob-bit must be 0 or 1")
        if self.command == "simulate" and self.trials < 1:
            raise UsageError("--trials must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError("--seed must be a 64-bit unsigned integer")

    def echo(self) -> dict:
        return dataclasses.asdict(self)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qansible", description="Audit the CNOT-cascade signaling protocol.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in (
        ("audit", "recompute every displayed identity of the protocol"),
        ("enumerate", "exact readout distributions for both bits and both models"),
        ("simulate", "seeded Monte Carlo trials checked against enumeration"),
        ("compare", "distinguishability report: true dynamics vs independent-mixture model"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--n", dest="n_total", type=int, default=4)
        p.add_argument("--kx", dest="k_x", type=int, default=2)
        p.add_argument("--kz", dest="k_z", type=int, default=2)
        p.add_argument("--bob-bit", dest="bob_bit", type=int, default=0)
        p.add_argument("--trials", type=int, default=10_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threshold", type=float, default=0.25)
        p.add_argument("--format", dest="output_format", choices=("json", "csv"), default="json")
        p.add_argument("--out", dest="output_path", default=None)
    return parser


def parse_config(argv: Optional[Sequence[str]] = None) -> CliConfig:
    ns = build_parser().parse_args(argv)
    config = CliConfig(**vars(ns))
    config.validate()
    return config


def _distribution_rows(dist) -> list[dict]:
    return [
        {"mean_sx": float(mx), "mean_sz": float(mz), "prob": p}
        for (mx, mz), p in dist.sorted_items()
    ]


def run_command(config: CliConfig) -> tuple[dict, int]:
    """Execute one command; returns the result payload and the exit code."""
    rule = DecisionRule(config.threshold)
    if config.command == "audit":
        report = audit_equations()
        result = {
            "equations": [
                {"id": e.id, "description": e.description, "deviation": e.deviation, "pass": e.passed}
                for e in report.entries
            ]
        }
        return result, EXIT_OK if report.passed else EXIT_AUDIT_FAILED

    if config.command == "enumerate":
        tables = []
        for model in ModelKind:
            for bit in (0, 1):
                dist = enumerate_alice_distribution(bit, config.n_total, config.k_x, config.k_z, model)
                tables.append({"bob_bit": bit, "model": model.value, "distribution": _distribution_rows(dist)})
        return {"distributions": tables}, EXIT_OK

    if config.command == "simulate":
        pc = ProtocolConfig(config.n_total, config.k_x, config.k_z, config.bob_bit, config.seed)
        mc = monte_carlo_distribution(pc, config.trials, rule)
        rows = []
        for key in sorted(set(mc.expected.support) | set(mc.counts)):
            rows.append({
                "mean_sx": float(key[0]),
                "mean_sz": float(key[1]),
                "prob": mc.empirical.get(key),
                "count": mc.counts.get(key, 0),
                "expected_prob": mc.expected.get(key),
            })
        chi = mc.chi_square
        return {
            "distribution": rows,
            "trials": mc.trials,
            "chi_square": {"statistic": chi.statistic, "dof": chi.dof, "p_value": chi.p_value, "bins": chi.bins},
        }, EXIT_OK

    report = paper_gap_report(config.n_total, config.k_x, config.k_z, rule)
    return {"channel": report.as_dict()}, EXIT_OK


def _csv_table(command: str, result: dict) -> tuple[list[str], list[dict]]:
    if command == "audit":
        return ["id", "deviation", "pass"], result["equations"]
    if command == "enumerate":
        rows = [
            {"bob_bit": t["bob_bit"], "model": t["model"], **row}
            for t in result["distributions"]
            for row in t["distribution"]
        ]
        return ["bob_bit", "model", "mean_sx", "mean_sz", "prob"], rows
    if command == "simulate":
        return ["mean_sx", "mean_sz", "prob", "count", "expected_prob"], result["distribution"]
    channel = result["channel"]
    return list(channel), [channel]


def render(config: CliConfig, result: dict, duration: float) -> str:
    if config.output_format == "json":
        envelope = {
            "version": __version__,
            "command": config.command,
            "config": config.echo(),
            "result": result,
            "duration_s": duration,
        }
        return json.dumps(envelope, indent=2) + "\n"
    header, rows = _csv_table(config.command, result)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=header, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = parse_config(argv)
    except UsageError as exc:
        build_parser().print_usage(sys.stderr)
        print(f"qansible: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    start = time.perf_counter()
    result, code = run_command(config)
    text = render(config, result, time.perf_counter() - start)
    if config.output_path:
        with open(config.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Scenario files and the batch command line.

A scenario is a line-based ``key = value`` document with ``#`` comments::

    name = qmm-sweep
    protocol = lm05
    attack = qmm
    rounds = 100000
    cm_probability = 0.5
    seed = 42
    sweep = f: 0.0, 0.25, 0.5, 0.75, 1.0

Running it yields one CSV row per sweep point.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from . import __version__
from .analysis import bb84_rate, binary_entropy, critical_disturbance, estimate_info
from .attacks import (
    ATTACK_CLASSES,
    AttackKind,
    AttackStrategy,
    identity_parameters,
    make_attack,
    rotation_parameters,
    signature_report,
    swap_parameters,
)
from .channel import ContractViolation, Protocol
from .protocols import ProtocolConfig, run_protocol

CSV_COLUMNS = (
    "scenario", "protocol", "attack", "f", "rounds", "seed",
    "qber_mm", "qber_cm", "f_est", "i_ab", "i_ae", "i_be", "r",
)
SIGNATURE_COLUMNS = (
    "scenario", "protocol", "attack", "f", "rounds", "seed",
    "mm_qber", "cm_error", "eve_mm_accuracy", "f_engaged",
    "exact_mm_qber", "exact_cm_error", "exact_eve_mm_accuracy", "note",
)

SEED_LIMIT = 2**64


class ScenarioError(ValueError):
    """Bad scenario document; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class ScenarioRuntimeError(RuntimeError):
    pass


_PROTOCOLS = {"lm05": Protocol.LM05, "pingpong": Protocol.PINGPONG, "ping-pong": Protocol.PINGPONG, "bb84": Protocol.BB84}
_ATTACKS = {
    "none": AttackKind.NONE,
    "qmm": AttackKind.QMM,
    "intercept_resend": AttackKind.INTERCEPT_RESEND,
    "intercept-resend": AttackKind.INTERCEPT_RESEND,
    "lucai": AttackKind.LUCAI,
    "lu-cai": AttackKind.LUCAI,
}
_LUCAI_PRESETS = ("swap", "identity", "rotation")


@dataclass(frozen=True)
class Scenario:
    name: str
    protocol: Protocol
    attack: AttackKind
    rounds: int
    seed: int
    f: float = 0.0
    cm_probability: float = 0.5
    sweep: Optional[tuple[str, tuple]] = None
    output: Optional[str] = None
    basis_policy: str = "random"
    lucai_preset: str = "swap"
    theta: float = 0.0
    lucai_backward: str = "passthrough"
    critical_d: bool = False
    tol: float = 1e-5
    report: str = "estimates"


def _float_in(lo: float, hi: float):
    def parse(key: str, text: str) -> float:
        try:
            v = float(text)
        except ValueError:
            raise ValueError(f"{key} must be a number, got {text!r}") from None
        if not lo <= v <= hi:
            raise ValueError(f"domain violation on {key}: {v} not in [{lo}, {hi}]")
        return v
    return parse


def _positive_float(key: str, text: str) -> float:
    v = _float_in(float("-inf"), float("inf"))(key, text)
    if v <= 0:
        raise ValueError(f"domain violation on {key}: must be positive")
    return v


def _int_in(lo: int, hi: int):
    def parse(key: str, text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise ValueError(f"{key} must be an integer, got {text!r}") from None
        if not lo <= v <= hi:
            raise ValueError(f"domain violation on {key}: {v} not in [{lo}, {hi}]")
        return v
    return parse


def _choice(table):
    def parse(key: str, text: str):
        try:
            return table[text.lower()]
        except KeyError:
            raise ValueError(f"{key} must be one of {', '.join(table)}, got {text!r}") from None
    return parse


def _bool(key: str, text: str) -> bool:
    t = text.lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"{key} must be true or false, got {text!r}")


def _str(key: str, text: str) -> str:
    if not text:
        raise ValueError(f"{key} must not be empty")
    return text


_FIELDS = {
    "name": _str,
    "protocol": _choice(_PROTOCOLS),
    "attack": _choice(_ATTACKS),
    "f": _float_in(0.0, 1.0),
    "rounds": _int_in(1, 10**9),
    "cm_probability": _float_in(0.0, 1.0),
    "seed": _int_in(0, SEED_LIMIT - 1),
    "output": _str,
    "basis_policy": _choice({"random": "random", "z": "Z", "x": "X"}),
    "lucai_preset": _choice({p: p for p in _LUCAI_PRESETS}),
    "theta": _float_in(-10.0, 10.0),
    "lucai_backward": _choice({"passthrough": "passthrough", "ancilla_measure": "ancilla_measure"}),
    "critical_d": _bool,
    "tol": _positive_float,
    "report": _choice({"estimates": "estimates", "signature": "signature"}),
}
SWEEPABLE = ("f", "cm_probability", "rounds", "seed", "theta")
REQUIRED = ("protocol", "attack", "rounds", "seed")
_ATTACK_KEYS = {
    "basis_policy": AttackKind.INTERCEPT_RESEND,
    "lucai_preset": AttackKind.LUCAI,
    "theta": AttackKind.LUCAI,
    "lucai_backward": AttackKind.LUCAI,
}


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate a scenario document."""
    values: dict = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"expected 'key = value', got {line!r}", lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        key = key.lower()
        if key in lines:
            raise ScenarioError(f"duplicate key {key!r} (first on line {lines[key]})", lineno)
        lines[key] = lineno
        try:
            if key == "sweep":
                values[key] = _parse_sweep(value)
            elif key in _FIELDS:
                values[key] = _FIELDS[key](key, value)
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ScenarioError(str(exc), lineno) from None

    for key in REQUIRED:
        if key not in values:
            if _sweeps(values, key):
                values[key] = values["sweep"][1][0]
                continue
            raise ScenarioError(f"missing required key {key!r}")
    protocol, attack = values["protocol"], values["attack"]
    if attack is not AttackKind.NONE and "f" not in values and not _sweeps(values, "f"):
        raise ScenarioError(f"missing required key 'f' for attack {attack.value.lower()}")
    if attack is AttackKind.NONE and "f" in values and values["f"] != 0.0:
        raise ScenarioError("domain violation on f: attack 'none' needs f = 0", lines["f"])
    if protocol not in ATTACK_CLASSES[attack].supported:
        raise ScenarioError(
            f"attack {attack.value.lower()} does not apply to protocol {protocol.value.lower()}",
            lines["attack"],
        )
    for key, kind in _ATTACK_KEYS.items():
        if key in values and attack is not kind:
            raise ScenarioError(f"{key} only applies to attack {kind.value.lower()}", lines[key])
    if values.get("lucai_preset", "swap") != "rotation" and ("theta" in values or _sweeps(values, "theta")):
        raise ScenarioError("theta only applies to lucai_preset = rotation", lines.get("theta") or lines["sweep"])
    if values.get("critical_d") and protocol is not Protocol.BB84:
        raise ScenarioError("critical_d only applies to protocol bb84", lines["critical_d"])
    if "tol" in values and not values.get("critical_d"):
        raise ScenarioError("tol only applies with critical_d = true", lines["tol"])
    if values.get("report") == "signature" and protocol is Protocol.BB84:
        raise ScenarioError("report = signature needs a two-way protocol", lines["report"])
    if "sweep" in values:
        field, points = values["sweep"]
        if field in lines:
            raise ScenarioError(f"{field} is both set and swept", lines["sweep"])
        if attack is AttackKind.NONE and field == "f":
            raise ScenarioError("cannot sweep f with attack 'none'", lines["sweep"])
    values.setdefault("name", "scenario")
    return Scenario(**values)


def _sweeps(values: dict, field: str) -> bool:
    return "sweep" in values and values["sweep"][0] == field


def _parse_sweep(text: str) -> tuple[str, tuple]:
    field, sep, rest = text.partition(":")
    field = field.strip().lower()
    if not sep:
        raise ValueError("sweep syntax is 'sweep = <field>: v1, v2, ...'")
    if field not in SWEEPABLE:
        raise ValueError(f"cannot sweep {field!r}; sweepable fields: {', '.join(SWEEPABLE)}")
    items = [v.strip() for v in rest.split(",")]
    if not items or any(not v for v in items):
        raise ValueError("sweep needs a comma-separated list of values")
    return field, tuple(_FIELDS[field](field, v) for v in items)


def _attack_for(s: Scenario) -> AttackStrategy:
    if s.attack is AttackKind.NONE:
        return make_attack(AttackKind.NONE)
    if s.attack is AttackKind.INTERCEPT_RESEND:
        return make_attack(s.attack, s.f, basis_policy=s.basis_policy)
    if s.attack is AttackKind.LUCAI:
        if s.lucai_preset == "swap":
            coeffs, ancillas = swap_parameters()
        elif s.lucai_preset == "identity":
            coeffs, ancillas = identity_parameters()
        else:
            coeffs, ancillas = rotation_parameters(s.theta)
        return make_attack(s.attack, s.f, coefficients=coeffs, ancillas=ancillas, backward=s.lucai_backward)
    return make_attack(s.attack, s.f)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        text = format(v, ".6g")
        return "0" if text == "-0" else text
    return str(v)


def sweep_points(s: Scenario) -> list[Scenario]:
    """The concrete scenarios behind each CSV row, seeds already split."""
    if s.sweep is None:
        return [s]
    field, values = s.sweep
    points = []
    for idx, value in enumerate(values):
        seed = value if field == "seed" else s.seed + idx
        if seed >= SEED_LIMIT:
            raise ScenarioError(f"seed {s.seed} + point {idx} overflows 64 bits")
        points.append(replace(s, sweep=None, seed=seed, **{field: value}))
    return points


def estimates_row(point: Scenario) -> list:
    attack = _attack_for(point)
    config = ProtocolConfig(point.protocol, point.rounds, point.cm_probability, point.seed)
    est = estimate_info(run_protocol(config, attack))
    sf = est.secret()
    return [
        point.name, point.protocol.value.lower(), point.attack.value.lower(), point.f,
        point.rounds, point.seed, est.qber_mm, est.qber_cm, est.f_est,
        est.i_ab, est.i_ae, est.i_be, sf.r,
    ]


def signature_row(point: Scenario) -> list:
    attack = _attack_for(point)
    rep = signature_report(attack, point.protocol, point.rounds, cm_probability=point.cm_probability, seed=point.seed)
    return [
        point.name, point.protocol.value.lower(), point.attack.value.lower(), point.f,
        point.rounds, point.seed, rep.mm_qber, rep.cm_error, rep.eve_mm_accuracy, rep.f_engaged,
        rep.exact.mm_qber, rep.exact.cm_error, rep.exact.eve_mm_accuracy, "; ".join(rep.notes),
    ]


def critical_row(s: Scenario) -> list:
    d = critical_disturbance(bb84_rate, 0.0, 0.25, s.tol)
    h = binary_entropy(d)
    return [f"{s.name}:critical_d", "bb84", "none", None, None, None, d, None, None, 1.0 - h, h, h, bb84_rate(d)]


def run_scenario(s: Scenario) -> str:
    """Simulate every sweep point and return the CSV document (header included)."""
    columns = SIGNATURE_COLUMNS if s.report == "signature" else CSV_COLUMNS
    make_row = signature_row if s.report == "signature" else estimates_row
    rows = []
    for idx, point in enumerate(sweep_points(s)):
        try:
            rows.append(make_row(point))
        except (ValueError, ContractViolation) as exc:
            raise ScenarioRuntimeError(f"scenario {s.name!r}, point {idx}: {exc}") from exc
    if s.critical_d:
        rows.append(critical_row(s))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _list_attacks() -> str:
    lines = []
    params = {
        AttackKind.NONE: "",
        AttackKind.QMM: "f",
        AttackKind.INTERCEPT_RESEND: "f, basis_policy (random|z|x)",
        AttackKind.LUCAI: "f, lucai_preset (swap|identity|rotation), theta, lucai_backward (passthrough|ancilla_measure)",
    }
    for kind, cls in ATTACK_CLASSES.items():
        protos = ",".join(p.value.lower() for p in Protocol if p in cls.supported)
        lines.append(f"{kind.value.lower():<17} protocols: {protos:<20} params: {params[kind] or '-'}")
    return "\n".join(lines) + "\n"


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="twoway-qkd", description="Two-way QKD attack simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a scenario file and emit CSV")
    run_p.add_argument("scenario", help="path to a key = value scenario file")
    run_p.add_argument("--out", help="write CSV here instead of the scenario's output/stdout")
    run_p.add_argument("--seed", type=int, help="override the scenario seed (u64)")
    sub.add_parser("list-attacks", help="list attack strategies")
    sub.add_parser("version", help="print the version")
    args = parser.parse_args(argv)

    if args.command == "version":
        print(__version__)
        return 0
    if args.command == "list-attacks":
        sys.stdout.write(_list_attacks())
        return 0

    try:
        with open(args.scenario, encoding="utf-8") as fh:
            scenario = parse_scenario(fh.read())
        if args.seed is not None:
            if not 0 <= args.seed < SEED_LIMIT:
                raise ScenarioError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
            scenario = replace(scenario, seed=args.seed)
    except (OSError, ScenarioError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        text = run_scenario(scenario)
    except ScenarioError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ScenarioRuntimeError, ContractViolation) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    out = args.out or scenario.output
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0

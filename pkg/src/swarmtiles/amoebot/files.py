"""Line-oriented system files and newline-delimited trace files.

System file grammar (.amb):

    # comment or blank lines anywhere
    STATES  <name> ...          (continuation lines allowed)
    FLAGS   <name> ...          (the empty flag "." is always included)
    PARTICLES
      <id> <q> <r> <orientation> <state> <t> <e> <f0> ... <f9>
    RULES
      <q> <f0..f9> <t> <e> -> <q'> <f'0..f'9> <t'> <e'> <move> [| <output>]*

"." spells the empty value everywhere (empty flag, contracted tail port,
no expansion direction).  Moves are idle, expand_i, contract_i, handover_i.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from ..geometry import EPS
from .engine import Trace
from .model import (
    AmoebotSystem,
    ParticleConfig,
    SystemConfig,
    TransitionTable,
    format_move,
    parse_move,
)

SECTIONS = ("STATES", "FLAGS", "PARTICLES", "RULES")


class SpecError(Exception):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
        self.message = message


def _int_or_eps(tok: str, line_no: int, what: str) -> int | str:
    if tok == EPS:
        return EPS
    try:
        return int(tok)
    except ValueError:
        raise SpecError(line_no, f"bad {what}: {tok!r}")


def parse_system(text: str, name: str = "amoebot-system") -> AmoebotSystem:
    states: list[str] = []
    flags: list[str] = [EPS]
    particles: dict[str, ParticleConfig] = {}
    table = TransitionTable()
    section = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if toks[0] in SECTIONS:
            section = toks[0]
            toks = toks[1:]
            if not toks:
                continue
        if section is None:
            raise SpecError(line_no, f"content before any section header: {raw!r}")
        if section == "STATES":
            states.extend(toks)
        elif section == "FLAGS":
            for f in toks:
                if f not in flags:
                    flags.append(f)
        elif section == "PARTICLES":
            if len(toks) != 17:
                raise SpecError(
                    line_no,
                    f"particle line needs 17 fields (id q r o state t e f0..f9), got {len(toks)}",
                )
            pid = toks[0]
            if pid in particles:
                raise SpecError(line_no, f"duplicate particle id {pid}")
            try:
                head = (int(toks[1]), int(toks[2]))
                o = int(toks[3])
            except ValueError:
                raise SpecError(line_no, "bad head coordinate or orientation")
            q = toks[4]
            t = _int_or_eps(toks[5], line_no, "tail port")
            e = _int_or_eps(toks[6], line_no, "expansion direction")
            particles[pid] = ParticleConfig(head, o, q, t, e, tuple(toks[7:17]))
        elif section == "RULES":
            if "->" not in toks:
                raise SpecError(line_no, "rule line missing '->'")
            arrow = toks.index("->")
            lhs, rhs = toks[:arrow], toks[arrow + 1 :]
            if len(lhs) != 13:
                raise SpecError(
                    line_no, f"rule input needs 13 fields (q f0..f9 t e), got {len(lhs)}"
                )
            key = (
                lhs[0],
                tuple(lhs[1:11]),
                _int_or_eps(lhs[11], line_no, "tail port"),
                _int_or_eps(lhs[12], line_no, "expansion direction"),
            )
            # outputs separated by "|"
            outs: list[list[str]] = [[]]
            for tok in rhs:
                if tok == "|":
                    outs.append([])
                else:
                    outs[-1].append(tok)
            for out in outs:
                if len(out) != 14:
                    raise SpecError(
                        line_no,
                        f"rule output needs 14 fields (q' f'0..f'9 t' e' move), got {len(out)}",
                    )
                try:
                    move = parse_move(out[13])
                except ValueError as exc:
                    raise SpecError(line_no, str(exc))
                table.add(
                    key,
                    (
                        out[0],
                        tuple(out[1:11]),
                        _int_or_eps(out[11], line_no, "tail port"),
                        _int_or_eps(out[12], line_no, "expansion direction"),
                        move,
                    ),
                )

    system = AmoebotSystem(
        states=tuple(states),
        flags=tuple(flags),
        delta=table,
        initial=SystemConfig(particles),
        name=name,
    )
    problems = system.check()
    if problems:
        raise SpecError(0, "system not well-formed: " + "; ".join(problems))
    return system


def load_system(path: str | Path) -> AmoebotSystem:
    p = Path(path)
    return parse_system(p.read_text(), name=p.stem)


def format_system(system: AmoebotSystem) -> str:
    lines = ["STATES " + " ".join(system.states)]
    declared = [f for f in system.flags if f != EPS]
    lines.append("FLAGS " + " ".join(declared) if declared else "FLAGS")
    lines.append("PARTICLES")
    for pid in system.particle_ids:
        pc = system.initial.particles[pid]
        lines.append(
            f"  {pid} {pc.head[0]} {pc.head[1]} {pc.o} {pc.q} {pc.t} {pc.e} "
            + " ".join(pc.flags)
        )
    lines.append("RULES")
    for key, outs in system.delta.rules.items():
        q, fl, t, e = key
        lhs = f"{q} " + " ".join(fl) + f" {t} {e}"
        rhs = " | ".join(
            f"{q2} " + " ".join(fl2) + f" {t2} {e2} {format_move(m)}"
            for q2, fl2, t2, e2, m in outs
        )
        lines.append(f"  {lhs} -> {rhs}")
    return "\n".join(lines) + "\n"


def write_trace(trace: Trace, path: str | Path):
    """One JSON record per line; first line is a header."""
    with open(path, "w") as fh:
        header = {
            "kind": "amoebot-trace",
            "system": trace.system,
            "seed": trace.seed,
            "activations": len(trace.records),
            "terminal": trace.terminal,
        }
        fh.write(json.dumps(header) + "\n")
        for rec in trace.records:
            fh.write(json.dumps(rec.to_json()) + "\n")


def read_trace_records(path: str | Path) -> tuple[dict, list[dict]]:
    lines = Path(path).read_text().splitlines()
    header = json.loads(lines[0])
    return header, [json.loads(l) for l in lines[1:]]

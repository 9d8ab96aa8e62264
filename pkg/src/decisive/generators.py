"""Two-counter programs and the machines built from them.

A program is a tuple of instructions ``0..n`` with ``Halt`` exactly at ``n``.
Counters are numbered 1 and 2.  The text form, one instruction per line::

    inc c1 goto 3
    test c2 then 0 else 4
    halt

Blank lines and ``#`` comments are ignored; an optional ``N:`` prefix must
match the line's position.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import DomainError, InputError, ParseError
from .model import (Configuration, CounterMachine, FiniteTarget, Transition, UpwardTarget,
                    ZeroTransition, fire, make_opaque, poly_weight)
from .numeric import Polynomial, format_polynomial

RESTART_WEIGHT = 4
NET_STATE = "net"


@dataclass(frozen=True)
class Inc:
    counter: int
    goto: int

    def __str__(self):
        return f"inc c{self.counter} goto {self.goto}"


@dataclass(frozen=True)
class Test:
    counter: int
    then: int
    orelse: int

    def __str__(self):
        return f"test c{self.counter} then {self.then} else {self.orelse}"


@dataclass(frozen=True)
class Halt:
    def __str__(self):
        return "halt"


Instruction = Union[Inc, Test, Halt]


@dataclass(frozen=True)
class CounterProgram:
    instructions: tuple[Instruction, ...]

    def __post_init__(self):
        ins = self.instructions
        if not ins or not isinstance(ins[-1], Halt):
            raise InputError("the last instruction must be halt")
        n = len(ins) - 1
        for i, x in enumerate(ins):
            if isinstance(x, Halt):
                if i != n:
                    raise InputError(f"halt at {i} is not the last instruction")
                continue
            if x.counter not in (1, 2):
                raise InputError(f"instruction {i}: counter must be c1 or c2")
            labels = (x.goto,) if isinstance(x, Inc) else (x.then, x.orelse)
            if any(not 0 <= lab <= n for lab in labels):
                raise InputError(f"instruction {i}: label out of range 0..{n}")

    @property
    def n(self) -> int:
        return len(self.instructions) - 1

    def __len__(self):
        return len(self.instructions)

    def __getitem__(self, i: int) -> Instruction:
        return self.instructions[i]

    def tests(self) -> list[int]:
        return [i for i, x in enumerate(self.instructions) if isinstance(x, Test)]

    def to_text(self) -> str:
        return "".join(f"{i}: {x}\n" for i, x in enumerate(self.instructions))


def program(*instructions: Instruction) -> CounterProgram:
    return CounterProgram(tuple(instructions))


_LINE = re.compile(
    r"^(?:(?P<label>\d+)\s*:\s*)?(?:"
    r"inc\s+c(?P<ic>\d+)\s+goto\s+(?P<ig>\d+)"
    r"|test\s+c(?P<tc>\d+)\s+then\s+(?P<tt>\d+)\s+else\s+(?P<te>\d+)"
    r"|(?P<halt>halt))\s*$")


def parse_program(text: str) -> CounterProgram:
    out: list[Instruction] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if m is None:
            raise ParseError("expected 'inc cJ goto I', 'test cJ then I else I' or 'halt'",
                             lineno, len(raw) - len(raw.lstrip()) + 1)
        if m["label"] is not None and int(m["label"]) != len(out):
            raise ParseError(f"label {m['label']} out of sequence (expected {len(out)})", lineno, 1)
        if m["halt"]:
            out.append(Halt())
        elif m["ic"] is not None:
            out.append(Inc(int(m["ic"]), int(m["ig"])))
        else:
            out.append(Test(int(m["tc"]), int(m["tt"]), int(m["te"])))
    return CounterProgram(tuple(out))


# interpretation -------------------------------------------------------------

@dataclass(frozen=True)
class Halted:
    steps: int
    counters: tuple[int, int]


@dataclass(frozen=True)
class Running:
    steps: int
    pc: int
    counters: tuple[int, int]


def run_trace(prog: CounterProgram, v1: int, v2: int, step_cap: int):
    """Yield ``(pc, counters)`` before every executed instruction, then the final state."""
    pc, c = 0, [v1, v2]
    for _ in range(step_cap):
        if pc == prog.n:
            break
        yield pc, (c[0], c[1])
        x = prog[pc]
        j = x.counter - 1
        if isinstance(x, Inc):
            c[j] += 1
            pc = x.goto
        elif c[j] > 0:
            c[j] -= 1
            pc = x.then
        else:
            pc = x.orelse
    yield pc, (c[0], c[1])


def interpret(prog: CounterProgram, v1: int = 0, v2: int = 0,
              step_cap: int = 10_000) -> Halted | Running:
    if step_cap < 0 or v1 < 0 or v2 < 0:
        raise InputError("counters and step cap must be non-negative")
    trace = list(run_trace(prog, v1, v2, step_cap))
    pc, counters = trace[-1]
    steps = len(trace) - 1
    return Halted(steps, counters) if pc == prog.n else Running(steps, pc, counters)


# normalization ----------------------------------------------------------------

def normalize(prog: CounterProgram, v1: int = 0, v2: int = 0) -> CounterProgram:
    """Reset loops, ``v1``/``v2`` increments, the body, then the exit reset block.

    The result halts from any initial counters iff ``prog`` halts from
    ``(v1, v2)``, and halts with both counters at zero.
    """
    if v1 < 0 or v2 < 0:
        raise InputError("initial values must be non-negative")
    offset = 2 + v1 + v2
    exit_at = offset + prog.n
    out: list[Instruction] = [Test(1, 0, 1), Test(2, 1, 2)]
    out += [Inc(1, 3 + k) for k in range(v1)]
    out += [Inc(2, 3 + v1 + k) for k in range(v2)]

    def move(label: int) -> int:
        return exit_at if label == prog.n else offset + label

    for x in prog.instructions[:-1]:
        if isinstance(x, Inc):
            out.append(Inc(x.counter, move(x.goto)))
        else:
            out.append(Test(x.counter, move(x.then), move(x.orelse)))
    out += [Test(1, exit_at, exit_at + 1), Test(2, exit_at + 1, exit_at + 2), Halt()]
    return CounterProgram(tuple(out))


def is_normalized(prog: CounterProgram) -> bool:
    n = prog.n
    if n < 4:
        return False
    ins = prog.instructions
    frame = (ins[0] == Test(1, 0, 1) and ins[1] == Test(2, 1, 2)
             and ins[n - 2] == Test(1, n - 2, n - 1) and ins[n - 1] == Test(2, n - 1, n))
    if not frame:
        return False
    for x in ins[2:n - 2]:
        labels = (x.goto,) if isinstance(x, Inc) else (x.then, x.orelse)
        if any(lab > n - 2 for lab in labels):
            return False
    return True


def _require_normalized(prog: CounterProgram) -> None:
    if not is_normalized(prog):
        raise DomainError("the construction needs a normalized program")


# static pCM ---------------------------------------------------------------------

def program_to_static_pcm(prog: CounterProgram) -> tuple[CounterMachine, Configuration, FiniteTarget]:
    """Constant-weight machine with restart moves ``i -> 0`` adding 1 to c1.

    Returns the machine, the initial configuration ``(0, (0, 0))`` and the
    target ``{(n, (0, 0))}``.
    """
    _require_normalized(prog)
    counters = ("c1", "c2")
    one = poly_weight("1", counters)
    restart = poly_weight(str(RESTART_WEIGHT), counters)
    ts = []
    for i, x in enumerate(prog.instructions[:-1]):
        unit = (1, 0) if x.counter == 1 else (0, 1)
        if isinstance(x, Inc):
            ts.append(Transition(f"inc_{i}", str(i), (0, 0), unit, str(x.goto), one))
        else:
            ts.append(Transition(f"dec_{i}", str(i), unit, (0, 0), str(x.then), one))
            ts.append(ZeroTransition(f"zero_{i}", str(i), counters[x.counter - 1], (0, 0),
                                     str(x.orelse), one))
        ts.append(Transition(f"restart_{i}", str(i), (0, 0), (1, 0), "0", restart))
    states = [str(i) for i in range(len(prog))]
    c = CounterMachine(states, counters, ts, name="static_pcm")
    return c, Configuration("0", (0, 0)), FiniteTarget([Configuration(str(prog.n), (0, 0))])


# polynomial pPN ----------------------------------------------------------------

def ppn_places(prog: CounterProgram) -> list[str]:
    return ([f"p{i}" for i in range(len(prog))] + [f"q{i}" for i in prog.tests()]
            + ["c1", "c2", "sim", "stop"])


def program_to_ppn(prog: CounterProgram) -> tuple[CounterMachine, Configuration, FiniteTarget,
                                                  UpwardTarget]:
    """Weak simulation net: one gadget per instruction plus the cleaning stage.

    Returns the net, the initial marking ``p0`` and the targets ``{stop}``
    and its upward closure.
    """
    _require_normalized(prog)
    places = ppn_places(prog)
    at = {p: k for k, p in enumerate(places)}

    def vec(*items: str | tuple[str, int]) -> tuple[int, ...]:
        v = [0] * len(places)
        for it in items:
            name, mult = (it, 1) if isinstance(it, str) else it
            v[at[name]] += mult
        return tuple(v)

    def w(text: str):
        return poly_weight(text, places)

    ts: list[Transition] = []

    def add(name, pre, post, weight="1"):
        ts.append(Transition(name, NET_STATE, pre, post, NET_STATE, w(weight)))

    for i, x in enumerate(prog.instructions[:-1]):
        p = f"p{i}"
        cj = f"c{x.counter}"
        if isinstance(x, Inc):
            add(f"inc_{i}", vec(p), vec(f"p{x.goto}", cj), "sim^2+1")
        else:
            q = f"q{i}"
            add(f"dec_{i}", vec(p, cj), vec(f"p{x.then}"), "2*sim^4+2")
            add(f"begZ_{i}", vec(p), vec(q), "sim^2+1")
            add(f"endZ_{i}", vec(q), vec(f"p{x.orelse}"))
            add(f"rm_{i}", vec(q, cj, ("sim", 2)), vec(q, cj), "2")
        add(f"exit_{i}", vec(p), vec("stop"))
    add("again", vec(f"p{prog.n}"), vec("p0", "sim"))
    for k, place in enumerate(("c1", "c2", "sim"), start=1):
        add(f"clean_{k}", vec("stop", place), vec("stop"))
    net = CounterMachine([NET_STATE], places, ts, name="ppn")
    stop = Configuration(NET_STATE, vec("stop"))
    return net, Configuration(NET_STATE, vec("p0")), FiniteTarget([stop]), UpwardTarget([stop])


def gadget_replay(prog: CounterProgram, step_cap: int = 10_000) -> list[str]:
    """Transition names simulating one halting run of ``prog`` from (0, 0), ending with ``again``."""
    _require_normalized(prog)
    names = []
    trace = list(run_trace(prog, 0, 0, step_cap))
    if trace[-1][0] != prog.n:
        raise DomainError("program does not halt within the step cap")
    for pc, counters in trace[:-1]:
        x = prog[pc]
        if isinstance(x, Inc):
            names.append(f"inc_{pc}")
        elif counters[x.counter - 1] > 0:
            names.append(f"dec_{pc}")
        else:
            names += [f"begZ_{pc}", f"endZ_{pc}"]
    names.append("again")
    return names


def replay(net: CounterMachine, m0: Configuration, names: list[str]) -> list[Configuration]:
    """Fire ``names`` in order from ``m0``; the list of visited markings."""
    out = [m0]
    for name in names:
        out.append(fire(net, out[-1], net.transition(name)))
    return out


# Hilbert weight walk ------------------------------------------------------------------

def hilbert_pcm(P: Polynomial | str) -> CounterMachine:
    """Single-state walk: ``dec`` weight 1, ``inc`` weight n -> min(P(x)^2+1 | sum x <= n)."""
    text = P if isinstance(P, str) else format_polynomial(P)
    weight = make_opaque("g", "hilbert", text)
    ts = [Transition("dec", "q", (1,), (0,), "q", poly_weight("1", ["c"])),
          Transition("inc", "q", (1,), (2,), "q", weight)]
    return CounterMachine(["q"], ["c"], ts, name="hilbert")

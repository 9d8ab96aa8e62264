"""Text format for counter machines.

Example::

    pcm walk {
      states q;
      counters c;
      opaque f = hilbert(x1^2 + 1);
      dec: q --[pre=(1), post=(0)]--> q weight c + 1;
      inc: q --[pre=(1), post=(2)]--> q weight @f;
      z:   q --[zero(c), post=(0)]--> q weight 1;
      init q(5);
      target zero;
    }

The header keyword (``pcm``, ``ppn`` or ``phm``) is a kind hint checked
against the classification; the model name is optional.  Targets are
``finite`` or ``upward`` followed by comma-separated configurations, or
``zero``.  ``//`` starts a line comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ModelError, ParseError
from .model import (Configuration, CounterMachine, FiniteTarget, OpaqueWeight, PolyWeight,
                    TargetSet, Transition, UpwardTarget, ZeroTarget, ZeroTransition, classify,
                    make_opaque)
from .numeric import format_polynomial, parse_polynomial

KINDS = ("pcm", "ppn", "phm")
_IDENT = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_']*")
_NAT = re.compile(r"\d+")


@dataclass
class ModelFile:
    kind: str
    machine: CounterMachine
    init: Configuration | None = None
    target: TargetSet | None = None
    opaque: dict[str, tuple[str, str]] = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, ModelFile):
            return NotImplemented
        return (self.kind, self.machine, self.init, self.target, self.opaque) == \
            (other.kind, other.machine, other.init, other.target, other.opaque)


class _Parser:
    def __init__(self, text: str):
        # comments are blanked out so positions stay exact
        self.text = re.sub(r"//[^\n]*", lambda m: " " * len(m.group()), text)
        self.pos = 0

    # positions and low-level scanning -----------------------------------------

    def where(self, pos: int | None = None) -> tuple[int, int]:
        pos = self.pos if pos is None else pos
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return line, col

    def fail(self, message: str, pos: int | None = None):
        raise ParseError(message, *self.where(pos))

    def skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self, literal: str) -> bool:
        self.skip()
        return self.text.startswith(literal, self.pos)

    def expect(self, literal: str) -> int:
        self.skip()
        if not self.text.startswith(literal, self.pos):
            found = self.text[self.pos:self.pos + 1] or "end of input"
            self.fail(f"expected {literal!r}, found {found!r}")
        start = self.pos
        self.pos += len(literal)
        return start

    def keyword(self, word: str) -> bool:
        self.skip()
        m = _IDENT.match(self.text, self.pos)
        if m and m.group() == word:
            self.pos = m.end()
            return True
        return False

    def ident(self, what: str = "name") -> tuple[str, int]:
        self.skip()
        m = _IDENT.match(self.text, self.pos)
        if not m:
            self.fail(f"expected {what}")
        self.pos = m.end()
        return m.group(), m.start()

    def nat(self) -> int:
        self.skip()
        m = _NAT.match(self.text, self.pos)
        if not m:
            self.fail("expected a natural number")
        self.pos = m.end()
        return int(m.group())

    def until(self, stop: str) -> tuple[str, int]:
        """Raw text up to (not including) ``stop``; the cursor lands on ``stop``."""
        self.skip()
        end = self.text.find(stop, self.pos)
        if end < 0:
            self.fail(f"missing {stop!r}")
        start, self.pos = self.pos, end
        return self.text[start:end], start

    # grammar -----------------------------------------------------------------

    def vec(self) -> tuple[int, ...]:
        self.expect("(")
        out = [self.nat()]
        while self.peek(","):
            self.expect(",")
            out.append(self.nat())
        self.expect(")")
        return tuple(out)

    def names(self) -> list[str]:
        out = [self.ident()[0]]
        while self.peek(","):
            self.expect(",")
            out.append(self.ident()[0])
        self.expect(";")
        return out

    def config(self, states, d) -> Configuration:
        name, at = self.ident("state")
        if name not in states:
            self.fail(f"unknown state {name!r}", at)
        at = self.pos
        m = self.vec()
        if len(m) != d:
            self.fail(f"configuration has {len(m)} counters, expected {d}", at)
        return Configuration(name, m)

    def parse(self) -> ModelFile:
        self.skip()
        kind, at = self.ident("model kind")
        if kind not in KINDS:
            self.fail(f"unknown model kind {kind!r} (expected pcm, ppn or phm)", at)
        name = kind
        if not self.peek("{"):
            name = self.ident("model name or '{'")[0]
        self.expect("{")
        states = counters = None
        opaque: dict[str, tuple[str, str]] = {}
        weights: dict[str, OpaqueWeight] = {}
        raw: list[tuple] = []
        init_at = target_at = None
        while not self.peek("}"):
            if self.pos >= len(self.text):
                self.fail("missing '}'")
            start = self.pos
            if self.keyword("states"):
                states = self.names()
            elif self.keyword("counters"):
                counters = self.names()
            elif self.keyword("opaque"):
                label, _ = self.ident("weight name")
                self.expect("=")
                factory, fat = self.ident("weight function")
                self.expect("(")
                args, _ = self.until(")")
                self.expect(")")
                self.expect(";")
                try:
                    weights[label] = make_opaque(label, factory, args.strip())
                except Exception as exc:  # noqa: BLE001 - factory errors become parse errors
                    self.fail(str(exc), fat)
                opaque[label] = (factory, args.strip())
            elif self.keyword("init"):
                init_at = self.pos
                self.until(";")
                self.expect(";")
            elif self.keyword("target"):
                target_at = self.pos
                self.until(";")
                self.expect(";")
            else:
                self.pos = start
                raw.append(self.transition())
        self.expect("}")
        self.skip()
        if self.pos != len(self.text):
            self.fail("unexpected text after the model")
        if states is None or counters is None:
            self.fail("a model needs 'states' and 'counters' declarations", 0)
        transitions = [self.resolve(t, states, counters, weights) for t in raw]
        try:
            machine = CounterMachine(states, counters, transitions, name=name)
        except ModelError as exc:
            self.fail(str(exc), 0)
        init = target = None
        if init_at is not None:
            self.pos = init_at
            init = self.config(states, len(counters))
            self.expect(";")
        if target_at is not None:
            self.pos = target_at
            target = self.target(states, len(counters))
        self.check_kind(kind, machine)
        return ModelFile(kind, machine, init, target, opaque)

    def transition(self):
        name, at = self.ident("transition name or declaration")
        self.expect(":")
        src, src_at = self.ident("state")
        self.expect("--[")
        if self.keyword("zero"):
            self.expect("(")
            ctr, ctr_at = self.ident("counter")
            self.expect(")")
            pre = ("zero", ctr, ctr_at)
        else:
            if not self.keyword("pre"):
                self.fail("expected 'pre=' or 'zero('")
            self.expect("=")
            pre_at = self.pos
            pre = ("pre", self.vec(), pre_at)
        self.expect(",")
        if not self.keyword("post"):
            self.fail("expected 'post='")
        self.expect("=")
        post_at = self.pos
        post = self.vec()
        self.expect("]-->")
        dst, dst_at = self.ident("state")
        if not self.keyword("weight"):
            self.fail("expected 'weight'")
        wtext, w_at = self.until(";")
        self.expect(";")
        return name, at, src, src_at, pre, post, post_at, dst, dst_at, wtext, w_at

    def resolve(self, raw, states, counters, weights):
        name, at, src, src_at, pre, post, post_at, dst, dst_at, wtext, w_at = raw
        for q, q_at in ((src, src_at), (dst, dst_at)):
            if q not in states:
                self.fail(f"unknown state {q!r}", q_at)
        d = len(counters)
        if len(post) != d:
            self.fail(f"post vector has {len(post)} entries, expected {d}", post_at)
        wtext = wtext.strip()
        if wtext.startswith("@"):
            label = wtext[1:].strip()
            if label not in weights:
                self.fail(f"unbound weight {wtext!r}", w_at)
            weight = weights[label]
        else:
            if not wtext:
                self.fail("missing weight expression", w_at)
            try:
                weight = PolyWeight(parse_polynomial(wtext, counters))
            except ParseError as exc:
                self.fail(exc.message, w_at + exc.column - 1)
        if pre[0] == "zero":
            if pre[1] not in counters:
                self.fail(f"unknown counter {pre[1]!r}", pre[2])
            return ZeroTransition(name, src, pre[1], post, dst, weight)
        if len(pre[1]) != d:
            self.fail(f"pre vector has {len(pre[1])} entries, expected {d}", pre[2])
        return Transition(name, src, pre[1], post, dst, weight)

    def target(self, states, d) -> TargetSet:
        if self.keyword("zero"):
            self.expect(";")
            return ZeroTarget()
        for kind, cls in (("finite", FiniteTarget), ("upward", UpwardTarget)):
            if self.keyword(kind):
                items = [self.config(states, d)]
                while self.peek(","):
                    self.expect(",")
                    items.append(self.config(states, d))
                self.expect(";")
                return cls(items)
        self.fail("expected 'finite', 'upward' or 'zero'")

    def check_kind(self, kind: str, machine: CounterMachine) -> None:
        cls = classify(machine)
        if kind == "ppn" and not cls.is_pPN:
            self.fail("declared ppn but the model has several states or zero tests", 0)
        if kind == "phm" and not cls.is_pHM:
            self.fail("declared phm but the model is not a homogeneous one-counter machine", 0)


def parse_model(text: str) -> ModelFile:
    """Parse and validate a model; every error is a :class:`ParseError` with a position."""
    return _Parser(text).parse()


# printing ---------------------------------------------------------------------

def _vec(v) -> str:
    return "(" + ", ".join(map(str, v)) + ")"


def _conf(s: Configuration) -> str:
    return f"{s.state}{_vec(s.marking)}"


def format_target(A: TargetSet) -> str:
    if isinstance(A, ZeroTarget):
        return "zero"
    if isinstance(A, FiniteTarget):
        return "finite " + ", ".join(_conf(s) for s in sorted(A.configs))
    if isinstance(A, UpwardTarget):
        return "upward " + ", ".join(_conf(s) for s in A.basis)
    raise ModelError(f"cannot print target {A!r}")


def format_model(mf: ModelFile) -> str:
    c = mf.machine
    name = "" if c.name == mf.kind else f" {c.name}"
    lines = [f"{mf.kind}{name} {{", f"  states {', '.join(c.states)};",
             f"  counters {', '.join(c.counters)};"]
    bindings = dict(mf.opaque)
    for t in c.transitions:
        if isinstance(t.weight, OpaqueWeight):
            bindings.setdefault(t.weight.label, (t.weight.factory, t.weight.args))
    for label, (factory, args) in bindings.items():
        lines.append(f"  opaque {label} = {factory}({args});")
    for t in c.transitions:
        if isinstance(t, ZeroTransition):
            guard = f"zero({t.counter}), post={_vec(t.post)}"
        else:
            guard = f"pre={_vec(t.pre)}, post={_vec(t.post)}"
        w = t.weight
        wtext = str(w) if isinstance(w, OpaqueWeight) else format_polynomial(w.poly)
        lines.append(f"  {t.name}: {t.source} --[{guard}]--> {t.target} weight {wtext};")
    if mf.init is not None:
        lines.append(f"  init {_conf(mf.init)};")
    if mf.target is not None:
        lines.append(f"  target {format_target(mf.target)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def model_file(machine: CounterMachine, init: Configuration | None = None,
               target: TargetSet | None = None, kind: str | None = None) -> ModelFile:
    """Wrap a machine for printing, choosing the most specific kind hint."""
    if kind is None:
        cls = classify(machine)
        kind = "ppn" if cls.is_pPN else "phm" if cls.is_pHM else "pcm"
    bindings = {t.weight.label: (t.weight.factory, t.weight.args) for t in machine.transitions
                if isinstance(t.weight, OpaqueWeight)}
    return ModelFile(kind, machine, init, target, bindings)

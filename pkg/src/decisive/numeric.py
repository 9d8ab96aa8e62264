"""Exact arithmetic: integer polynomials over named counters and rational linear algebra.

Rationals are :class:`fractions.Fraction` throughout; nothing in the package
rounds.  Polynomials keep dense exponent vectors aligned with an ordered tuple
of variable names, which is cheap because machines have one or two counters.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .errors import InputError, InvariantViolation, ParseError

Rational = Fraction
Valuation = Union[Mapping[str, int], Sequence[int]]


class Polynomial:
    """Multivariate polynomial with integer coefficients.

    Weights must have non-negative coefficients; that is checked by the model
    layer, not here, because reductions (e.g. the Hilbert weight) need signed
    polynomials as inputs.
    """

    __slots__ = ("variables", "terms")

    def __init__(self, variables: Iterable[str] = (), terms: Mapping[tuple, int] | None = None):
        self.variables: tuple[str, ...] = tuple(variables)
        if len(set(self.variables)) != len(self.variables):
            raise InputError(f"duplicate variable in {self.variables}")
        clean: dict[tuple[int, ...], int] = {}
        for exps, coef in (terms or {}).items():
            exps = tuple(exps)
            if len(exps) != len(self.variables):
                raise InputError("exponent vector does not match the variable list")
            if any(e < 0 for e in exps):
                raise InputError("negative exponent")
            if coef:
                clean[exps] = clean.get(exps, 0) + int(coef)
                if clean[exps] == 0:
                    del clean[exps]
        self.terms: dict[tuple[int, ...], int] = clean

    # construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, value: int, variables: Iterable[str] = ()) -> "Polynomial":
        variables = tuple(variables)
        return cls(variables, {(0,) * len(variables): value})

    @classmethod
    def variable(cls, name: str, variables: Iterable[str] | None = None) -> "Polynomial":
        variables = tuple(variables) if variables is not None else (name,)
        if name not in variables:
            raise InputError(f"{name!r} is not one of {variables}")
        exps = tuple(1 if v == name else 0 for v in variables)
        return cls(variables, {exps: 1})

    @classmethod
    def from_coefficients(cls, coefficients: Sequence[int], variable: str = "X") -> "Polynomial":
        """Univariate polynomial a_0 + a_1 X + ... from its coefficient list."""
        return cls((variable,), {(i,): a for i, a in enumerate(coefficients)})

    def with_variables(self, variables: Iterable[str]) -> "Polynomial":
        """Re-express over a (super)set of variables; dropped variables must be unused."""
        variables = tuple(variables)
        index = {v: i for i, v in enumerate(variables)}
        terms = {}
        for exps, coef in self.terms.items():
            new = [0] * len(variables)
            for v, e in zip(self.variables, exps):
                if e:
                    if v not in index:
                        raise InputError(f"variable {v!r} is used but not in {variables}")
                    new[index[v]] = e
            terms[tuple(new)] = coef
        return Polynomial(variables, terms)

    def _aligned(self, other: "Polynomial") -> tuple["Polynomial", "Polynomial"]:
        if self.variables == other.variables:
            return self, other
        merged = list(self.variables)
        merged += [v for v in other.variables if v not in self.variables]
        return self.with_variables(merged), other.with_variables(merged)

    @staticmethod
    def _coerce(value) -> "Polynomial":
        if isinstance(value, Polynomial):
            return value
        if isinstance(value, int):
            return Polynomial.constant(value)
        return NotImplemented

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self._aligned(other)
        terms = dict(a.terms)
        for exps, coef in b.terms.items():
            terms[exps] = terms.get(exps, 0) + coef
        return Polynomial(a.variables, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self._aligned(other)
        terms: dict[tuple[int, ...], int] = {}
        for e1, c1 in a.terms.items():
            for e2, c2 in b.terms.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                terms[e] = terms.get(e, 0) + c1 * c2
        return Polynomial(a.variables, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise InputError("negative power")
        result = Polynomial.constant(1, self.variables)
        for _ in range(k):
            result = result * self
        return result

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self._aligned(other)
        return a.terms == b.terms

    def __hash__(self):
        used = tuple(sorted(self.used_variables()))
        p = self.with_variables(used)
        return hash((used, frozenset(p.terms.items())))

    # inspection -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> int:
        return self.terms.get((0,) * len(self.variables), 0)

    def used_variables(self) -> set[str]:
        used = set()
        for exps in self.terms:
            used.update(v for v, e in zip(self.variables, exps) if e)
        return used

    def has_nonnegative_coefficients(self) -> bool:
        return all(c > 0 for c in self.terms.values())

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def univariate_variable(self) -> str | None:
        used = self.used_variables()
        if len(used) > 1:
            raise InputError(f"polynomial {self} is multivariate")
        return next(iter(used), None)

    def coefficients(self) -> list[int]:
        """[a_0, ..., a_d] of a univariate polynomial (empty for zero)."""
        var = self.univariate_variable()
        if var is None:
            c = self.constant_term()
            return [c] if c else []
        i = self.variables.index(var)
        coeffs = [0] * (self.degree() + 1)
        for exps, c in self.terms.items():
            coeffs[exps[i]] += c
        return coeffs

    def evaluate(self, values: Valuation) -> int:
        if isinstance(values, Mapping):
            used = self.used_variables()
            missing = [v for v in self.variables if v in used and v not in values]
            if missing:
                raise InputError(f"no value bound to variable {missing[0]!r}")
            full = [values[v] if v in used else 0 for v in self.variables]
        else:
            full = list(values)
            if len(full) != len(self.variables):
                raise InputError(
                    f"valuation has {len(full)} entries, polynomial has {len(self.variables)} variables")
        total = 0
        for exps, coef in self.terms.items():
            term = coef
            for x, e in zip(full, exps):
                if e:
                    term *= x ** e
            total += term
        return total

    __call__ = evaluate

    def __repr__(self):
        return f"Polynomial({str(self)!r}, variables={self.variables!r})"

    def __str__(self):
        return format_polynomial(self)


def format_polynomial(p: Polynomial) -> str:
    """Surface syntax: ``2*c1^2 + c1*c2 + 3``; terms by decreasing degree."""
    if p.is_zero():
        return "0"
    order = sorted(p.terms, key=lambda e: (-sum(e), tuple(-x for x in e)))
    pieces = []
    for exps in order:
        coef = p.terms[exps]
        factors = []
        for v, e in zip(p.variables, exps):
            if e == 1:
                factors.append(v)
            elif e > 1:
                factors.append(f"{v}^{e}")
        mag = abs(coef)
        if not factors:
            body = str(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = "*".join([str(mag)] + factors)
        if not pieces:
            pieces.append(body if coef > 0 else f"-{body}")
        else:
            pieces.append(f"+ {body}" if coef > 0 else f"- {body}")
    return " ".join(pieces)


_POLY_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*^]))")


def parse_polynomial(text: str, variables: Sequence[str] | None = None) -> Polynomial:
    """Parse the polynomial surface syntax.

    With ``variables`` given, unknown names are rejected and the result is
    expressed over exactly those variables; otherwise variables are collected
    in order of first appearance.  Errors are :class:`ParseError` with line 1
    and a 1-based column into ``text``.
    """
    tokens: list[tuple[str, str, int]] = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _POLY_TOKEN.match(text, pos)
        if not m:
            col = pos + len(text[pos:]) - len(text[pos:].lstrip()) + 1
            raise ParseError(f"unexpected character {text[col - 1]!r} in polynomial", 1, col)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    end_col = len(text.rstrip()) + 1

    if variables is not None:
        names = list(variables)
    else:
        names = []
        for kind, value, _ in tokens:
            if kind == "name" and value not in names:
                names.append(value)
    index = {v: i for i, v in enumerate(names)}
    i = 0

    def peek():
        return tokens[i] if i < len(tokens) else ("eof", "", end_col)

    def expect_int() -> int:
        nonlocal i
        kind, value, col = peek()
        if kind != "int":
            raise ParseError(f"expected an integer, found {value or 'end of input'!r}", 1, col)
        i += 1
        return int(value)

    def factor(exps: list[int]) -> int:
        nonlocal i
        kind, value, col = peek()
        if kind == "int":
            i += 1
            return int(value)
        if kind == "name":
            if value not in index:
                raise ParseError(f"unknown variable {value!r}", 1, col)
            i += 1
            power = 1
            if peek()[1] == "^":
                i += 1
                power = expect_int()
            exps[index[value]] += power
            return 1
        raise ParseError(f"expected a coefficient or variable, found {value or 'end of input'!r}", 1, col)

    terms: dict[tuple[int, ...], int] = {}
    sign = 1
    if peek()[1] in "+-" and peek()[0] == "op":
        sign = -1 if peek()[1] == "-" else 1
        i += 1
    while True:
        exps = [0] * len(names)
        coef = factor(exps)
        while peek()[1] == "*":
            i += 1
            coef *= factor(exps)
        key = tuple(exps)
        terms[key] = terms.get(key, 0) + sign * coef
        kind, value, col = peek()
        if kind == "eof":
            break
        if value in ("+", "-"):
            sign = 1 if value == "+" else -1
            i += 1
            continue
        raise ParseError(f"unexpected {value!r} in polynomial", 1, col)
    return Polynomial(names, terms)


def poly_eval(p: Polynomial, m: Valuation) -> int:
    """Exact value of ``p`` at the counter valuation ``m``."""
    return p.evaluate(m)


@dataclass(frozen=True)
class LeadingComparison:
    """How two univariate weights ``dec`` and ``inc`` differ at the top.

    ``i0`` is the largest index where the coefficients differ (``None`` when
    the polynomials are equal); ``larger`` names the side with the bigger
    coefficient there.  ``alpha`` is ``(a'_{d-1} - a_{d-1}) / a_d`` and is
    only set when the degrees agree and ``i0 == d - 1``.
    """

    d: int
    d_prime: int
    i0: int | None
    larger: str | None
    alpha: Fraction | None

    @property
    def equal(self) -> bool:
        return self.i0 is None


def poly_compare_leading(dec: Polynomial, inc: Polynomial) -> LeadingComparison:
    vd, vi = dec.univariate_variable(), inc.univariate_variable()
    if vd is not None and vi is not None and vd != vi:
        raise InputError(f"weights use different variables {vd!r} and {vi!r}")
    a, b = dec.coefficients(), inc.coefficients()
    d, d_prime = len(a) - 1, len(b) - 1
    width = max(len(a), len(b))
    a_full = a + [0] * (width - len(a))
    b_full = b + [0] * (width - len(b))
    i0 = next((i for i in reversed(range(width)) if a_full[i] != b_full[i]), None)
    larger = None
    alpha = None
    if i0 is not None:
        larger = "dec" if a_full[i0] > b_full[i0] else "inc"
        if d == d_prime and d >= 1 and i0 == d - 1:
            alpha = Fraction(b_full[d - 1] - a_full[d - 1], a_full[d])
    return LeadingComparison(d, d_prime, i0, larger, alpha)


def positivity_check(p: Polynomial, lower: Valuation) -> bool:
    """True iff ``p >= 1`` on every point dominating ``lower``.

    Sound only for non-negative coefficients, where ``p`` is monotone and the
    corner is the minimum; signed polynomials are rejected.
    """
    if not p.has_nonnegative_coefficients():
        return False
    return p.evaluate(lower) >= 1


def solve_linear(rows: list[dict[int, Fraction]], rhs: list[Fraction], n: int) -> list[Fraction]:
    """Solve a square sparse system exactly by Gauss-Jordan elimination.

    ``rows[i]`` maps column index to coefficient.  Pivots are chosen among the
    remaining rows with the sparsest support to limit fill-in.  A singular
    system is an internal error: callers only build nonsingular ones.
    """
    if len(rows) != n or len(rhs) != n:
        raise InputError("system is not square")
    work = [(dict(r), Fraction(b)) for r, b in zip(rows, rhs)]
    by_column: dict[int, set[int]] = {}
    for i, (r, _) in enumerate(work):
        for j in r:
            by_column.setdefault(j, set()).add(i)
    pivot_of: dict[int, int] = {}
    remaining = set(range(n))
    for col in range(n):
        candidates = [i for i in by_column.get(col, ()) if i in remaining and work[i][0].get(col)]
        if not candidates:
            raise InvariantViolation(f"singular system: no pivot for column {col}")
        piv = min(candidates, key=lambda i: (len(work[i][0]), i))
        remaining.discard(piv)
        prow, pb = work[piv]
        inv = 1 / prow[col]
        prow = {j: v * inv for j, v in prow.items()}
        pb *= inv
        work[piv] = (prow, pb)
        pivot_of[col] = piv
        for i in list(by_column.get(col, ())):
            if i == piv:
                continue
            r, b = work[i]
            f = r.get(col)
            if not f:
                continue
            for j, v in prow.items():
                nv = r.get(j, 0) - f * v
                if nv:
                    r[j] = nv
                    by_column.setdefault(j, set()).add(i)
                else:
                    r.pop(j, None)
            work[i] = (r, b - f * pb)
    return [work[pivot_of[c]][1] for c in range(n)]


def format_rational(x: Fraction, decimals: bool = True) -> str:
    """``num/den`` with an optional 6-place decimal courtesy in parentheses."""
    x = Fraction(x)
    text = f"{x.numerator}/{x.denominator}"
    if decimals:
        text += f" ({float(x):.6f})"
    return text


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise InputError(f"not a rational number: {text!r}") from None

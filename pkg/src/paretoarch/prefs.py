"""A small language for preference functions over (f1, f2, f3).

Grammar (whitespace-insensitive)::

    expr  := term (('+' | '-') term)*
    term  := number '*' atom | atom
    atom  := 'fhat' i | 'f' i
           | 'step(' 'f' i ',' number ',' number ')'
           | 'hinge(' 'f' i ',' number ')'
           | 'log2(' 'f' i ')'

``fhat i`` is the re-scaled metric, ``f i`` the raw one.  ``step`` adds the
penalty when the raw value is strictly above the threshold, ``hinge`` is
``max(0, f - threshold)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

N_METRICS = 3


class PreferenceError(ValueError):
    pass


class PreferenceSyntaxError(PreferenceError):
    def __init__(self, message: str, position: int, expected: str = ""):
        self.position = position
        self.expected = expected
        super().__init__(f"{message} at position {position}" + (f" (expected {expected})" if expected else ""))


class UnknownMetric(PreferenceSyntaxError):
    pass


class InvalidNumber(PreferenceSyntaxError):
    pass


class DomainError(PreferenceError, ArithmeticError):
    pass


class UnknownBuiltin(PreferenceError, KeyError):
    def __str__(self):
        return self.args[0]


@dataclass(frozen=True)
class Atom:
    kind: str  # 'fhat' | 'f' | 'step' | 'hinge' | 'log2'
    metric: int  # 1-based
    threshold: float | None = None
    penalty: float | None = None

    def value(self, raw: Sequence[float], rescaled: Sequence[float]) -> float:
        f = raw[self.metric - 1]
        if self.kind == "fhat":
            return rescaled[self.metric - 1]
        if self.kind == "f":
            return f
        if self.kind == "step":
            return self.penalty if f > self.threshold else 0.0
        if self.kind == "hinge":
            return max(0.0, f - self.threshold)
        if f <= 0:
            raise DomainError(f"log2 of non-positive f{self.metric} = {f}")
        return math.log2(f)

    def render(self) -> str:
        if self.kind in ("fhat", "f"):
            return f"{self.kind}{self.metric}"
        if self.kind == "step":
            return f"step(f{self.metric}, {self.threshold!r}, {self.penalty!r})"
        if self.kind == "hinge":
            return f"hinge(f{self.metric}, {self.threshold!r})"
        return f"log2(f{self.metric})"


@dataclass(frozen=True)
class Term:
    coef: float
    atom: Atom


@dataclass(frozen=True)
class PreferenceExpr:
    terms: tuple[Term, ...]
    name: str = ""

    def __post_init__(self):
        if not self.terms:
            raise PreferenceError("a preference needs at least one term")

    def __call__(self, raw: Sequence[float], rescaled: Sequence[float]) -> float:
        return evaluate(self, raw, rescaled)

    @property
    def uses_rescaled(self) -> bool:
        return any(t.atom.kind == "fhat" for t in self.terms)

    def render(self) -> str:
        return render(self)

    def structure(self) -> tuple:
        """Name-free structural identity used for round-trip comparisons."""
        return self.terms


@dataclass(frozen=True)
class MonotonicityReport:
    is_nondecreasing: bool
    offending_terms: tuple[int, ...]  # 1-based term indices


def evaluate(pref: PreferenceExpr, raw: Sequence[float], rescaled: Sequence[float]) -> float:
    return sum(t.coef * t.atom.value(raw, rescaled) for t in pref.terms)


def check_monotone(pref: PreferenceExpr) -> MonotonicityReport:
    bad = []
    for i, term in enumerate(pref.terms, start=1):
        if term.coef < 0 or (term.atom.kind == "step" and term.atom.penalty <= 0):
            bad.append(i)
    return MonotonicityReport(not bad, tuple(bad))


def render(pref: PreferenceExpr) -> str:
    out = []
    for i, term in enumerate(pref.terms):
        coef = term.coef
        if i == 0:
            out.append(f"{coef!r}*{term.atom.render()}")
        else:
            sign = "-" if math.copysign(1.0, coef) < 0 else "+"
            out.append(f" {sign} {abs(coef)!r}*{term.atom.render()}")
    return "".join(out)


# -- parser -------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<punct>[-+*(),])
    """,
    re.VERBOSE,
)
_BAD_EXPONENT = re.compile(r"(?:\d+\.?\d*|\.\d+)[eE](?:[+-](?!\d)|(?![+\-\d]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        bad = _BAD_EXPONENT.match(text, pos)
        if bad:
            raise InvalidNumber(f"malformed number {bad.group()!r}", pos, "digits after exponent")
        m = _TOKEN.match(text, pos)
        if m is None:
            raise PreferenceSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind: str, value: str | None = None, expected: str = ""):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            shown = tok[1] or "end of input"
            raise PreferenceSyntaxError(f"unexpected {shown!r}", tok[2], expected or value or kind)
        self.i += 1
        return tok

    def number(self) -> float:
        sign = 1.0
        if self.peek()[:2] in (("punct", "-"), ("punct", "+")):
            sign = -1.0 if self.take("punct")[1] == "-" else 1.0
        tok = self.take("number", expected="number")
        value = sign * float(tok[1])
        if not math.isfinite(value):
            raise InvalidNumber(f"number {tok[1]!r} is not finite", tok[2], "finite number")
        return value

    def metric(self, prefix: str) -> int:
        tok = self.take("ident", expected=f"{prefix}1, {prefix}2 or {prefix}3")
        m = re.fullmatch(rf"{prefix}(\d+)", tok[1])
        if m is None:
            raise PreferenceSyntaxError(f"unexpected {tok[1]!r}", tok[2], f"{prefix}<index>")
        index = int(m.group(1))
        if not 1 <= index <= N_METRICS:
            raise UnknownMetric(f"unknown metric {tok[1]!r}", tok[2], f"index 1..{N_METRICS}")
        return index

    def atom(self) -> Atom:
        tok = self.peek()
        if tok[0] != "ident":
            raise PreferenceSyntaxError(f"unexpected {tok[1] or 'end of input'!r}", tok[2], "metric or function")
        name = tok[1]
        if name in ("step", "hinge", "log2"):
            self.i += 1
            self.take("punct", "(")
            metric = self.metric("f")
            threshold = penalty = None
            if name in ("step", "hinge"):
                self.take("punct", ",")
                threshold = self.number()
            if name == "step":
                self.take("punct", ",")
                pos = self.peek()[2]
                penalty = self.number()
                if penalty <= 0:
                    raise InvalidNumber("step penalty must be positive", pos, "positive number")
            self.take("punct", ")")
            return Atom(name, metric, threshold, penalty)
        if name.startswith("fhat"):
            return Atom("fhat", self.metric("fhat"))
        if re.fullmatch(r"f\d+", name):
            return Atom("f", self.metric("f"))
        raise PreferenceSyntaxError(f"unknown name {name!r}", tok[2], "fhat<i>, f<i>, step, hinge or log2")

    def term(self, sign: float) -> Term:
        tok = self.peek()
        if tok[0] == "number":
            coef = self.number()
            self.take("punct", "*")
            return Term(sign * coef, self.atom())
        return Term(sign * 1.0, self.atom())

    def expr(self) -> PreferenceExpr:
        sign = 1.0
        if self.peek()[:2] == ("punct", "-"):
            self.i += 1
            sign = -1.0
        terms = [self.term(sign)]
        while self.peek()[0] != "end":
            op = self.take("punct", expected="'+' or '-'")
            if op[1] not in "+-":
                raise PreferenceSyntaxError(f"unexpected {op[1]!r}", op[2], "'+' or '-'")
            terms.append(self.term(-1.0 if op[1] == "-" else 1.0))
        return PreferenceExpr(tuple(terms))


def parse(text: str, name: str = "") -> PreferenceExpr:
    if not text or not text.strip():
        raise PreferenceSyntaxError("empty preference", 0, "expression")
    expr = _Parser(text).expr()
    return PreferenceExpr(expr.terms, name=name)


# -- built-in preference functions ----------------------------------------

BUILTIN_TEXT = {
    "p1": f"{1/3!r}*fhat1 + {1/3!r}*fhat2 + {1/3!r}*fhat3",
    "p2": "1.0*fhat1",
    "p3": "1.0*fhat2",
    "p4": "0.6*fhat1 + 0.2*fhat2 + 0.2*fhat3",
    "p5": "step(f1, 0.06, 1e3) + 0.5*fhat2 + 0.5*fhat3",
    "p6": "fhat1 + step(f2, 1000, 1e3) + step(f3, 35000, 1e3)",
    "p7": "0.7*fhat1 + 0.01*log2(f2) + 0.01*hinge(f3, 20000)",
    "p8": "step(f1, 0.04, 1e3) + 0.5*fhat2 + 0.5*fhat3",
    "p9": "fhat1 + step(f2, 500, 1e3) + step(f3, 35000, 1e3)",
    "p10": "0.7*fhat1 + 0.001*hinge(f2, 500) + 0.01*log2(f3)",
}
WEIGHTED_SUM_BUILTINS = ("p1", "p2", "p3", "p4")


def builtin(name: str) -> PreferenceExpr:
    try:
        text = BUILTIN_TEXT[name]
    except KeyError:
        raise UnknownBuiltin(f"unknown built-in preference {name!r} (choose p1..p10)") from None
    return parse(text, name=name)


def resolve(text_or_name: str) -> PreferenceExpr:
    """A built-in name (``p1``..``p10``) or an inline expression."""
    name = text_or_name.strip()
    if re.fullmatch(r"p\d+", name):
        return builtin(name)
    return parse(text_or_name, name=name)


def weighted_sum(weights: Sequence[float]) -> PreferenceExpr:
    return PreferenceExpr(tuple(Term(float(w), Atom("fhat", i)) for i, w in enumerate(weights, start=1)))

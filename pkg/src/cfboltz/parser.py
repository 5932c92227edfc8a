"""Text format for specifications.

    spec   := eq+
    eq     := SYMBOL "=" term ("+" term)* ";"
    term   := [coef "*"?] factor ("*"? factor)*
    factor := ("z" | SYMBOL) ["^" INT]
    coef   := INT | INT "/" INT | DECIMAL

Symbols start with an uppercase letter, ``z`` is the size marker and ``#``
starts a comment running to the end of the line.
"""
import re
from fractions import Fraction

from .errors import NonPositiveCoefficient, SpecSyntaxError, UnknownSymbol
from .spec import CombinatorialSpec, Monomial

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<dec>\d+\.\d*|\.\d+)
  | (?P<int>\d+)
  | (?P<sym>[A-Z][A-Za-z0-9_]*)
  | (?P<z>z(?![A-Za-z0-9_]))
  | (?P<op>[=+*^/;])
""", re.VERBOSE)


def _tokens(text):
    pos, line, col = 0, 1, 1
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            raise SpecSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = mt.lastgroup
        val = mt.group()
        if kind != "ws":
            yield kind, val, line, col
        nl = val.count("\n")
        if nl:
            line += nl
            col = len(val) - val.rfind("\n")
        else:
            col += len(val)
        pos = mt.end()
    yield "eof", "", line, col


class _Parser:
    def __init__(self, text):
        self.toks = list(_tokens(text))
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg, tok=None):
        kind, val, line, col = tok or self.peek()
        raise SpecSyntaxError(f"{msg}, found {val or 'end of input'!r}", line, col)

    def expect(self, kind, val=None):
        t = self.peek()
        if t[0] != kind or (val is not None and t[1] != val):
            self.fail(f"expected {val or kind}")
        return self.next()

    def is_op(self, val):
        t = self.peek()
        return t[0] == "op" and t[1] == val

    def coef(self):
        kind, val, line, col = self.next()
        if kind == "dec":
            return Fraction(val)
        num = int(val)
        if self.is_op("/"):
            self.next()
            den = int(self.expect("int")[1])
            if den == 0:
                raise SpecSyntaxError("zero denominator", line, col)
            return Fraction(num, den)
        return Fraction(num)

    def factor(self):
        kind, val, line, col = self.next()
        power = 1
        if self.is_op("^"):
            self.next()
            power = int(self.expect("int")[1])
        return val, power, line, col

    def term(self):
        tok = self.peek()
        coef = Fraction(1)
        if tok[0] in ("int", "dec"):
            coef = self.coef()
            if self.is_op("*"):
                self.next()
        if self.peek()[0] not in ("z", "sym"):
            self.fail("expected z or a symbol")
        factors = [self.factor()]
        while True:
            if self.is_op("*"):
                self.next()
                if self.peek()[0] not in ("z", "sym"):
                    self.fail("expected z or a symbol")
            elif self.peek()[0] not in ("z", "sym"):
                break
            factors.append(self.factor())
        return coef, factors, tok

    def equation(self):
        lhs = self.expect("sym")
        self.expect("op", "=")
        terms = [self.term()]
        while self.is_op("+"):
            self.next()
            terms.append(self.term())
        self.expect("op", ";")
        return lhs, terms

    def spec(self):
        eqs = [self.equation()]
        while self.peek()[0] != "eof":
            eqs.append(self.equation())
        return eqs


def parse_spec(text):
    eqs = _Parser(text).spec()
    names = []
    for (kind, name, line, col), _ in eqs:
        if name in names:
            raise SpecSyntaxError(f"symbol {name} defined twice", line, col)
        names.append(name)
    index = {s: i for i, s in enumerate(names)}
    prods = []
    for _, terms in eqs:
        monos = []
        for coef, factors, tok in terms:
            if coef <= 0:
                raise NonPositiveCoefficient(
                    f"coefficient {coef} at line {tok[2]}, column {tok[3]} is not positive")
            h, k = 0, [0] * len(names)
            for val, power, line, col in factors:
                if val == "z":
                    h += power
                elif val in index:
                    k[index[val]] += power
                else:
                    raise UnknownSymbol(f"symbol {val} at line {line}, column {col} has no equation")
            monos.append(Monomial(coef, h, tuple(k)))
        prods.append(monos)
    return CombinatorialSpec(names, prods)


def _render_coef(c):
    if c == 1:
        return ""
    if c.denominator == 1:
        return f"{c.numerator} "
    return f"{c.numerator}/{c.denominator} "


def render_spec(spec):
    lines = []
    for name, prods in zip(spec.symbols, spec.productions):
        terms = []
        for mo in prods:
            parts = []
            if mo.h:
                parts.append("z" if mo.h == 1 else f"z^{mo.h}")
            for b, kb in enumerate(mo.k):
                if kb:
                    parts.append(spec.symbols[b] if kb == 1 else f"{spec.symbols[b]}^{kb}")
            terms.append(_render_coef(mo.coef) + " ".join(parts))
        lines.append(f"{name} = " + " + ".join(terms) + ";")
    return "\n".join(lines)

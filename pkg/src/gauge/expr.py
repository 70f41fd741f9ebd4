"""
Closed-form scalar expressions over x, y, z and t.

Expression text is read by a small recursive-descent parser that builds sympy
trees directly, so derivatives are exact and constant folding is sympy's.
Trees print back in the same grammar (``^``, ``ln``, ``sqrt``), and evaluate
through cached ``lambdify`` kernels on numpy arrays.

Grammar::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := atom ('^' unary)?          integer exponents only
    atom    := number | variable | 'pi' | function '(' sum ')' | '(' sum ')'
"""

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Annotated, Any, Iterable, NamedTuple, Sequence, Union

import numpy as np
import sympy
from pydantic import BeforeValidator, PlainSerializer
from sympy.printing.str import StrPrinter

from .errors import (
    ArityError,
    ExpressionDomainError,
    ExpressionError,
    ExpressionSyntaxError,
    NonRealExpressionError,
    UnknownIdentifierError,
)

logger = logging.getLogger(__name__)

VARIABLES = ("x", "y", "z", "t")
SPATIAL = ("x", "y", "z")
SYMBOLS = {name: sympy.Symbol(name) for name in VARIABLES}
X, Y, Z, T = (SYMBOLS[name] for name in VARIABLES)

FUNCTIONS = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "exp": sympy.exp,
    "ln": sympy.log,
    "tanh": sympy.tanh,
    "sqrt": sympy.sqrt,
}
CONSTANTS = {"pi": sympy.pi}

_NON_REAL = (sympy.I, sympy.zoo, sympy.oo, -sympy.oo, sympy.nan)


# ============================================================================
# Tokenizer and parser
# ============================================================================

_TOKEN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


class Token(NamedTuple):
    kind: str
    text: str
    offset: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    position = 0
    while position < len(text):
        if text[position:].isspace():
            break
        match = _TOKEN.match(text, position)
        if match is None or match.lastgroup is None:
            offset = position + len(text[position:]) - len(text[position:].lstrip())
            raise ExpressionSyntaxError(f"unexpected character {text[offset]!r}", offset)
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), match.start(kind)))
        position = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def _at(self, op: str) -> bool:
        return self.current.kind == "op" and self.current.text == op

    def _advance(self) -> Token:
        token = self.current
        self.index += 1
        return token

    def _expect(self, op: str) -> None:
        if not self._at(op):
            found = self.current.text or "end of expression"
            raise ExpressionSyntaxError(f"expected '{op}', found {found!r}", self.current.offset)
        self._advance()

    def parse(self) -> sympy.Expr:
        if self.current.kind == "end":
            raise ExpressionSyntaxError("empty expression", 0)
        tree = self._sum()
        if self.current.kind != "end":
            raise ExpressionSyntaxError(f"unexpected {self.current.text!r}", self.current.offset)
        return tree

    def _sum(self) -> sympy.Expr:
        tree = self._product()
        while self._at("+") or self._at("-"):
            op = self._advance()
            rhs = self._product()
            tree = tree + rhs if op.text == "+" else tree - rhs
        return tree

    def _product(self) -> sympy.Expr:
        tree = self._unary()
        while self._at("*") or self._at("/"):
            op = self._advance()
            rhs = self._unary()
            if op.text == "*":
                tree = tree * rhs
            else:
                if rhs.is_zero:
                    raise ExpressionSyntaxError("division by zero", op.offset)
                tree = tree / rhs
        return tree

    def _unary(self) -> sympy.Expr:
        if self._at("-"):
            self._advance()
            return -self._unary()
        if self._at("+"):
            self._advance()
            return self._unary()
        return self._power()

    def _power(self) -> sympy.Expr:
        base = self._atom()
        if not self._at("^"):
            return base
        op = self._advance()
        exponent = self._unary()
        if not exponent.is_Integer:
            raise ExpressionSyntaxError("exponent must be an integer", op.offset)
        if base.is_zero and exponent < 0:
            raise ExpressionSyntaxError("division by zero", op.offset)
        return base**exponent

    def _atom(self) -> sympy.Expr:
        token = self.current
        if token.kind == "number":
            self._advance()
            value = Fraction(token.text)
            return sympy.Rational(value.numerator, value.denominator)
        if token.kind == "name":
            self._advance()
            return self._identifier(token)
        if self._at("("):
            self._advance()
            tree = self._sum()
            self._expect(")")
            return tree
        if token.kind == "end":
            raise ExpressionSyntaxError("unexpected end of expression", token.offset)
        raise ExpressionSyntaxError(f"unexpected {token.text!r}", token.offset)

    def _identifier(self, token: Token) -> sympy.Expr:
        name = token.text
        if name in FUNCTIONS:
            if not self._at("("):
                raise ArityError(f"function '{name}' takes 1 argument, got 0", token.offset)
            self._advance()
            if self._at(")"):
                raise ArityError(f"function '{name}' takes 1 argument, got 0", token.offset)
            args = [self._sum()]
            while self._at(","):
                self._advance()
                args.append(self._sum())
            self._expect(")")
            if len(args) != 1:
                raise ArityError(f"function '{name}' takes 1 argument, got {len(args)}", token.offset)
            return FUNCTIONS[name](args[0])
        if name in SYMBOLS or name in CONSTANTS:
            if self._at("("):
                raise ArityError(f"'{name}' is not a function", token.offset)
            return SYMBOLS.get(name, CONSTANTS.get(name))
        raise UnknownIdentifierError(f"unknown identifier '{name}'", token.offset)


def _check_real(tree: sympy.Expr, text: str) -> sympy.Expr:
    if tree.has(*_NON_REAL):
        raise NonRealExpressionError(f"'{text}' is not real-valued")
    return tree


def parse_tree(text: str) -> sympy.Expr:
    return _check_real(_Parser(text).parse(), text)


# ============================================================================
# Printer
# ============================================================================


class _GrammarPrinter(StrPrinter):
    """StrPrinter that writes ^, ln and sqrt so output re-parses."""

    def _atomic(self, base: sympy.Expr) -> str:
        text = self._print(base)
        if base.is_Symbol or base.is_Function or base is sympy.pi or (base.is_Integer and base > 0):
            return text
        return f"({text})"

    def _root(self, base: sympy.Expr, depth: int) -> str:
        text = self._print(base)
        for _ in range(depth):
            text = f"sqrt({text})"
        return text

    def _print_Pow(self, expr, rational=False):
        base, exponent = expr.as_base_exp()
        if exponent.is_Integer:
            if exponent == -1:
                return f"1/{self._atomic(base)}"
            if exponent < 0:
                return f"{self._atomic(base)}^({exponent})"
            return f"{self._atomic(base)}^{exponent}"
        if exponent.is_Rational:
            depth = exponent.q.bit_length() - 1
            if exponent.q == 1 << depth:
                root = self._root(base, depth)
                p = exponent.p
                if p == 1:
                    return root
                if p == -1:
                    return f"1/{root}"
                return f"{root}^({p})" if p < 0 else f"{root}^{p}"
        raise ExpressionError(f"power {exponent} has no form in the expression grammar")

    def _print_log(self, expr):
        return f"ln({self._print(expr.args[0])})"

    def _print_Exp1(self, expr):
        return "exp(1)"

    def _print_Pi(self, expr):
        return "pi"

    def _print_Float(self, expr):
        return repr(float(expr))


_PRINTER = _GrammarPrinter()


# ============================================================================
# Expressions
# ============================================================================

ExpressionLike = Union["Expression", str, int, float, sympy.Basic]


def to_tree(value: ExpressionLike) -> sympy.Expr:
    if isinstance(value, Expression):
        return value.tree
    if isinstance(value, str):
        return parse_tree(value)
    if isinstance(value, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(value, (int, np.integer)):
        return sympy.Integer(int(value))
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            raise NonRealExpressionError(f"non-finite literal {value!r}")
        # Decimal repr keeps 0.1 as 1/10 so coefficient algebra stays exact.
        exact = Fraction(repr(float(value)))
        return sympy.Rational(exact.numerator, exact.denominator)
    if isinstance(value, sympy.Basic):
        return value
    raise TypeError(f"cannot build an expression from {type(value).__name__}")


@dataclass(frozen=True, eq=False)
class Expression:
    """Immutable expression tree with exact derivatives and numpy evaluation."""

    tree: sympy.Expr

    @classmethod
    def of(cls, value: ExpressionLike) -> "Expression":
        if isinstance(value, cls):
            return value
        return cls(to_tree(value))

    @classmethod
    def coerce(cls, value: Any) -> "Expression":
        return cls.of(value)

    @cached_property
    def text(self) -> str:
        return _PRINTER.doprint(self.tree)

    def __str__(self) -> str:
        return self.text

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.text!r})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Expression):
            return NotImplemented
        return self.tree == other.tree

    def __hash__(self) -> int:
        return hash(self.tree)

    @cached_property
    def variables(self) -> frozenset[str]:
        return frozenset(str(symbol) for symbol in self.tree.free_symbols)

    @property
    def is_constant(self) -> bool:
        return not self.tree.free_symbols

    @property
    def is_zero(self) -> bool:
        return self.tree == 0

    @property
    def dimension(self) -> int:
        """Number of spatial axes the expression reaches (at least 1)."""
        used = [i + 1 for i, name in enumerate(SPATIAL) if name in self.variables]
        return max(used, default=1)

    # ------------------------------------------------------------------
    # Calculus
    # ------------------------------------------------------------------

    def diff(self, var: str, order: int = 1) -> "Expression":
        if var not in SYMBOLS:
            raise UnknownIdentifierError(f"cannot differentiate with respect to '{var}'")
        return Expression(sympy.diff(self.tree, SYMBOLS[var], order))

    def subs(self, **values: ExpressionLike) -> "Expression":
        mapping = {SYMBOLS[name]: to_tree(value) for name, value in values.items()}
        return Expression(self.tree.xreplace(mapping))

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    @cached_property
    def _kernel(self):
        logger.debug(f"Compiling numpy kernel for '{self.text}'")
        return sympy.lambdify((X, Y, Z, T), self.tree, modules="numpy")

    @cached_property
    def _constant(self) -> float:
        return float(self.tree)

    def evaluate(self, x=0.0, y=0.0, z=0.0, t=0.0):
        shape = np.broadcast_shapes(np.shape(x), np.shape(y), np.shape(z), np.shape(t))
        if self.is_constant:
            values = np.full(shape, self._constant)
        else:
            with np.errstate(all="ignore"):
                raw = self._kernel(*(np.asarray(v, dtype=float) for v in (x, y, z, t)))
            values = np.array(np.broadcast_to(np.asarray(raw, dtype=float), shape))
        if not np.all(np.isfinite(values)):
            bad = int(np.size(values) - np.count_nonzero(np.isfinite(values)))
            raise ExpressionDomainError(f"'{self.text}' is not finite at {bad} of {np.size(values)} points")
        if shape == ():
            return float(values)
        return values

    # ------------------------------------------------------------------
    # Arithmetic
    # ------------------------------------------------------------------

    def __add__(self, other: ExpressionLike) -> "Expression":
        return Expression(self.tree + to_tree(other))

    def __radd__(self, other: ExpressionLike) -> "Expression":
        return Expression(to_tree(other) + self.tree)

    def __sub__(self, other: ExpressionLike) -> "Expression":
        return Expression(self.tree - to_tree(other))

    def __rsub__(self, other: ExpressionLike) -> "Expression":
        return Expression(to_tree(other) - self.tree)

    def __mul__(self, other: ExpressionLike) -> "Expression":
        return Expression(self.tree * to_tree(other))

    def __rmul__(self, other: ExpressionLike) -> "Expression":
        return Expression(to_tree(other) * self.tree)

    def __truediv__(self, other: ExpressionLike) -> "Expression":
        return Expression(self.tree / to_tree(other))

    def __rtruediv__(self, other: ExpressionLike) -> "Expression":
        return Expression(to_tree(other) / self.tree)

    def __neg__(self) -> "Expression":
        return Expression(-self.tree)

    def __pow__(self, exponent: int) -> "Expression":
        if not isinstance(exponent, (int, np.integer)):
            raise ExpressionSyntaxError("exponent must be an integer")
        return Expression(self.tree ** int(exponent))


@dataclass(frozen=True, eq=False, repr=False)
class ScalarSignal(Expression):
    """A function of t alone, e.g. Λ(t) or ν₁(t)."""

    def __post_init__(self):
        spatial = sorted(self.variables - {"t"})
        if spatial:
            raise ExpressionError(f"'{self.text}' must be a function of t only, found {', '.join(spatial)}")

    def value(self, t):
        return self.evaluate(t=t)

    @cached_property
    def rate(self) -> "ScalarSignal":
        return ScalarSignal(sympy.diff(self.tree, T))

    def derivative(self, t):
        return self.rate.value(t)


class FieldHandle(Expression):
    """A space-time scalar field with analytic gradient, Laplacian and time derivative."""

    @cached_property
    def partials(self) -> dict[str, Expression]:
        return {name: self.diff(name) for name in VARIABLES}

    def laplacian_expression(self, dim: int = 3) -> Expression:
        cache = self.__dict__.setdefault("_laplacians", {})
        if dim not in cache:
            cache[dim] = Expression(sum((sympy.diff(self.tree, SYMBOLS[v], 2) for v in SPATIAL[:dim]), sympy.Integer(0)))
        return cache[dim]

    def value(self, x, t=0.0, y=0.0, z=0.0):
        return self.evaluate(x, y, z, t)

    def gradient(self, x, t=0.0, y=0.0, z=0.0, dim: int | None = None) -> tuple:
        dim = dim or self.dimension
        return tuple(self.partials[v].evaluate(x, y, z, t) for v in SPATIAL[:dim])

    def laplacian(self, x, t=0.0, y=0.0, z=0.0, dim: int | None = None):
        return self.laplacian_expression(dim or self.dimension).evaluate(x, y, z, t)

    def time_derivative(self, x, t=0.0, y=0.0, z=0.0):
        return self.partials["t"].evaluate(x, y, z, t)


# ============================================================================
# Operations
# ============================================================================


def parse(text: str) -> Expression:
    return Expression(parse_tree(text))


def differentiate(e: Expression, var: str) -> Expression:
    return e.diff(var)


def field_handle(e: ExpressionLike) -> FieldHandle:
    return FieldHandle.coerce(e)


def signal(e: ExpressionLike) -> ScalarSignal:
    return ScalarSignal.coerce(e)


# ============================================================================
# Vector fields (tuples of expressions, 1 to 3 components)
# ============================================================================

Vector = tuple[Expression, ...]


def pad(vector: Sequence[Expression], dim: int = 3) -> Vector:
    if len(vector) > dim:
        raise ExpressionError(f"vector has {len(vector)} components, expected at most {dim}")
    return tuple(vector) + tuple(Expression(sympy.Integer(0)) for _ in range(dim - len(vector)))


def gradient(e: ExpressionLike, dim: int) -> Vector:
    tree = to_tree(e)
    return tuple(Expression(sympy.diff(tree, SYMBOLS[v])) for v in SPATIAL[:dim])


def divergence(vector: Sequence[Expression]) -> Expression:
    terms = (sympy.diff(c.tree, SYMBOLS[v]) for c, v in zip(vector, SPATIAL))
    return Expression(sum(terms, sympy.Integer(0)))


def laplacian(e: ExpressionLike, dim: int) -> Expression:
    return divergence(gradient(e, dim))


def curl(vector: Sequence[Expression]) -> Vector:
    fx, fy, fz = (c.tree for c in pad(vector))
    return (
        Expression(sympy.diff(fz, Y) - sympy.diff(fy, Z)),
        Expression(sympy.diff(fx, Z) - sympy.diff(fz, X)),
        Expression(sympy.diff(fy, X) - sympy.diff(fx, Y)),
    )


def dot(a: Sequence[Expression], b: Sequence[Expression]) -> Expression:
    dim = max(len(a), len(b))
    return Expression(sum((p.tree * q.tree for p, q in zip(pad(a, dim), pad(b, dim))), sympy.Integer(0)))


def combine(*terms: tuple[ExpressionLike, Sequence[Expression]]) -> Vector:
    """Linear combination sum(c_i * v_i) of vectors with scalar expression weights."""
    dim = max(len(v) for _, v in terms)
    out = [sympy.Integer(0)] * dim
    for weight, vector in terms:
        w = to_tree(weight)
        for i, component in enumerate(pad(vector, dim)):
            out[i] = out[i] + w * component.tree
    return tuple(Expression(c) for c in out)


def evaluate_vector(vector: Sequence[Expression], x=0.0, y=0.0, z=0.0, t=0.0) -> np.ndarray:
    return np.stack([np.broadcast_to(c.evaluate(x, y, z, t), np.broadcast_shapes(np.shape(x), np.shape(y), np.shape(z), np.shape(t))) for c in vector])


# ============================================================================
# pydantic slot types
# ============================================================================


def _coerce_vector(value: Any) -> tuple[FieldHandle, ...]:
    if isinstance(value, (str, int, float, Expression, sympy.Basic)):
        value = (value,)
    components = tuple(FieldHandle.coerce(v) for v in value)
    if not 1 <= len(components) <= 3:
        raise ExpressionError(f"vector fields have 1 to 3 components, got {len(components)}")
    return components


def _dump_vector(value: Iterable[Expression]) -> list[str]:
    return [str(c) for c in value]


SignalSlot = Annotated[ScalarSignal, BeforeValidator(ScalarSignal.coerce), PlainSerializer(str, return_type=str)]
FieldSlot = Annotated[FieldHandle, BeforeValidator(FieldHandle.coerce), PlainSerializer(str, return_type=str)]
VectorSlot = Annotated[
    tuple[FieldHandle, ...],
    BeforeValidator(_coerce_vector),
    PlainSerializer(_dump_vector, return_type=list[str]),
]

"""
Parser and evaluator for right-hand side expressions.

Grammar (binding power, loosest first):
    + -        10, left-associative
    * /        20, left-associative
    unary -    25
    ^          30, left-associative, exponent an integer literal (optionally signed)
    atoms      numbers, t, y1..yd, sin(..), cos(..), exp(..), ( .. )
"""
import logging
import re
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from src.models.polynomial_field import Monomial, PolynomialField

logger = logging.getLogger(__name__)

FUNCTIONS = ("sin", "cos", "exp")
_NUMPY_FUNCTIONS: Dict[str, Callable] = {"sin": np.sin, "cos": np.cos, "exp": np.exp}

ADD_PREC = 10
MUL_PREC = 20
NEG_PREC = 25
POW_PREC = 30
ATOM_PREC = 100


class ExpressionError(Exception):
    """Base class for expression failures."""
    pass


class ExpressionSyntaxError(ExpressionError):
    """Malformed source; position is the 0-based character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifierError(ExpressionSyntaxError):
    """Identifier that is neither t, a valid y-index nor a known function."""
    pass


class ExpressionEvaluationError(ExpressionError):
    """Division by zero, overflow or another non-finite result."""
    pass


class NotPolynomialError(ExpressionError):
    """Expression cannot be written as a polynomial in t and y."""
    pass


# ---------------------------------------------------------------------------
# Syntax tree

@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class TimeVar:
    pass


@dataclass(frozen=True)
class StateVar:
    index: int  # 1-based


@dataclass(frozen=True)
class UnaryOp:
    op: str  # 'neg', 'sin', 'cos' or 'exp'
    operand: 'Expr'


@dataclass(frozen=True)
class BinaryOp:
    op: str  # '+', '-', '*', '/', '^'
    left: 'Expr'
    right: 'Expr'


Expr = Union[Number, TimeVar, StateVar, UnaryOp, BinaryOp]


# ---------------------------------------------------------------------------
# Tokens

@dataclass(frozen=True)
class Token:
    kind: str  # 'number', 'name', 'op', 'end'
    text: str
    position: int


_TOKEN_PATTERN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def tokenize(src: str) -> List[Token]:
    tokens = []
    position = 0
    while position < len(src):
        if src[position:].strip() == "":
            break
        match = _TOKEN_PATTERN.match(src, position)
        if match is None or match.end() == position:
            offset = position + (len(src[position:]) - len(src[position:].lstrip()))
            raise ExpressionSyntaxError(f"unexpected character {src[offset]!r}", offset)
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), match.start(kind)))
        position = match.end()
    tokens.append(Token('end', '', len(src)))
    return tokens


class _Parser:
    """Pratt parser over a token list."""

    def __init__(self, tokens: List[Token], dimension: int):
        self.tokens = tokens
        self.index = 0
        self.dimension = dimension

    @property
    def token(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, text: str):
        token = self.advance()
        if token.text != text:
            found = repr(token.text) if token.kind != 'end' else "end of input"
            raise ExpressionSyntaxError(f"expected {text!r}, found {found}", token.position)

    def left_binding_power(self, token: Token) -> int:
        if token.kind != 'op':
            return 0
        return {'+': ADD_PREC, '-': ADD_PREC, '*': MUL_PREC, '/': MUL_PREC, '^': POW_PREC}.get(token.text, 0)

    def expression(self, rbp: int = 0) -> Expr:
        token = self.advance()
        left = self.nud(token)
        while rbp < self.left_binding_power(self.token):
            token = self.advance()
            left = self.led(token, left)
        return left

    def nud(self, token: Token) -> Expr:
        if token.kind == 'number':
            return Number(float(token.text))
        if token.kind == 'name':
            return self.name(token)
        if token.text == '-':
            return UnaryOp('neg', self.expression(NEG_PREC))
        if token.text == '(':
            inner = self.expression()
            self.expect(')')
            return inner
        found = "end of input" if token.kind == 'end' else repr(token.text)
        raise ExpressionSyntaxError(f"unexpected {found}", token.position)

    def name(self, token: Token) -> Expr:
        text = token.text
        if text == 't':
            return TimeVar()
        if text in FUNCTIONS:
            self.expect('(')
            argument = self.expression()
            self.expect(')')
            return UnaryOp(text, argument)
        match = re.fullmatch(r"y(\d+)", text)
        if match:
            index = int(match.group(1))
            if not 1 <= index <= self.dimension:
                raise UnknownIdentifierError(
                    f"state index {text} out of range for dimension {self.dimension}", token.position)
            return StateVar(index)
        raise UnknownIdentifierError(f"unknown identifier {text!r}", token.position)

    def led(self, token: Token, left: Expr) -> Expr:
        if token.text == '^':
            return BinaryOp('^', left, self.exponent())
        right = self.expression(self.left_binding_power(token))
        return BinaryOp(token.text, left, right)

    def exponent(self) -> Number:
        sign = 1
        if self.token.text == '-':
            self.advance()
            sign = -1
        token = self.advance()
        if token.kind != 'number' or not float(token.text).is_integer():
            raise ExpressionSyntaxError("exponent must be an integer literal", token.position)
        return Number(float(sign * int(float(token.text))))


def parse_expression(src: str, dimension: int) -> Expr:
    """
    Parse one right-hand side component.

    Raises:
        ExpressionSyntaxError: malformed input (with position)
        UnknownIdentifierError: unknown name or y-index outside 1..dimension
    """
    if not src or not src.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    parser = _Parser(tokenize(src), dimension)
    tree = parser.expression()
    if parser.token.kind != 'end':
        raise ExpressionSyntaxError(f"unexpected {parser.token.text!r}", parser.token.position)
    return tree


# ---------------------------------------------------------------------------
# Printing

def _precedence(node: Expr) -> int:
    if isinstance(node, BinaryOp):
        return {'+': ADD_PREC, '-': ADD_PREC, '*': MUL_PREC, '/': MUL_PREC, '^': POW_PREC}[node.op]
    if isinstance(node, UnaryOp) and node.op == 'neg':
        return NEG_PREC
    return ATOM_PREC


def pretty_print(node: Expr) -> str:
    """Source text that parses back to the same tree."""
    if isinstance(node, Number):
        return repr(node.value)
    if isinstance(node, TimeVar):
        return 't'
    if isinstance(node, StateVar):
        return f'y{node.index}'
    if isinstance(node, UnaryOp):
        if node.op != 'neg':
            return f'{node.op}({pretty_print(node.operand)})'
        inner = pretty_print(node.operand)
        return f'-({inner})' if _precedence(node.operand) < NEG_PREC else f'-{inner}'

    prec = _precedence(node)
    left = pretty_print(node.left)
    if _precedence(node.left) < prec:
        left = f'({left})'
    if node.op == '^':
        return f'{left}^{int(node.right.value)}'
    right = pretty_print(node.right)
    if _precedence(node.right) <= prec:
        right = f'({right})'
    return f'{left} {node.op} {right}'


# ---------------------------------------------------------------------------
# Evaluation

def _checked(value: Any, what: str) -> Any:
    if not np.all(np.isfinite(value)):
        raise ExpressionEvaluationError(f"non-finite result in {what}")
    return value


def _evaluate(node: Expr, t: Any, y: np.ndarray) -> Any:
    if isinstance(node, Number):
        return node.value
    if isinstance(node, TimeVar):
        return t
    if isinstance(node, StateVar):
        if node.index > y.shape[-1]:
            raise ExpressionEvaluationError(f"y{node.index} not available in dimension {y.shape[-1]}")
        return y[..., node.index - 1]
    if isinstance(node, UnaryOp):
        operand = _evaluate(node.operand, t, y)
        if node.op == 'neg':
            return -operand
        return _checked(_NUMPY_FUNCTIONS[node.op](operand), f"{node.op}()")

    left = _evaluate(node.left, t, y)
    right = _evaluate(node.right, t, y)
    if node.op == '+':
        return _checked(left + right, "addition")
    if node.op == '-':
        return _checked(left - right, "subtraction")
    if node.op == '*':
        return _checked(left * right, "multiplication")
    if node.op == '/':
        if np.any(np.asarray(right) == 0):
            raise ExpressionEvaluationError("division by zero")
        return _checked(left / right, "division")
    power = int(node.right.value)
    base = np.asarray(left, dtype=float)
    if power < 0 and np.any(base == 0):
        raise ExpressionEvaluationError("division by zero in negative power")
    return _checked(base ** float(power), "power")


def eval_expression(node: Expr, t: Any, y: Any) -> Any:
    """
    Evaluate at time t and state y.

    Scalars give a float; t of shape (n,) with y of shape (n, d) give an
    array of shape (n,).

    Raises:
        ExpressionEvaluationError: division by zero or a non-finite result
    """
    y = np.asarray(y, dtype=float)
    with np.errstate(all='ignore'):
        value = _evaluate(node, np.asarray(t, dtype=float), np.atleast_1d(y))
    value = _checked(np.asarray(value, dtype=float), "expression")
    return float(value) if value.ndim == 0 else value


class CompiledRhs:
    """Vectorised rhs(t, y) assembled from one expression per component."""

    def __init__(self, sources: List[str], dimension: int):
        if len(sources) != dimension:
            raise ExpressionSyntaxError(
                f"{len(sources)} rhs components given for dimension {dimension}", 0)
        self.sources = list(sources)
        self.dimension = dimension
        self.trees = [parse_expression(src, dimension) for src in sources]

    def __call__(self, t: Any, y: Any) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast_shapes(t.shape, y.shape[:-1])
        columns = [np.broadcast_to(eval_expression(tree, t, y), shape) for tree in self.trees]
        return np.stack(columns, axis=-1)

    def polynomial_field(self) -> Optional[PolynomialField]:
        """The field as polynomials, or None when some component is not polynomial."""
        try:
            return to_polynomial_field(self.trees, self.dimension)
        except NotPolynomialError as e:
            logger.debug("rhs is not polynomial: %s", e)
            return None


def compile_rhs(sources: Iterable[str], dimension: int) -> CompiledRhs:
    return CompiledRhs(list(sources), dimension)


# ---------------------------------------------------------------------------
# Polynomial conversion

Poly = Dict[Tuple[int, Tuple[int, ...]], float]


def _poly_add(p: Poly, q: Poly, sign: float = 1.0) -> Poly:
    out = dict(p)
    for key, value in q.items():
        out[key] = out.get(key, 0.0) + sign * value
    return {key: value for key, value in out.items() if value != 0.0}


def _poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for (tp, yp), a in p.items():
        for (tq, yq), b in q.items():
            key = (tp + tq, tuple(i + k for i, k in zip(yp, yq)))
            out[key] = out.get(key, 0.0) + a * b
    return {key: value for key, value in out.items() if value != 0.0}


def _to_poly(node: Expr, dimension: int) -> Poly:
    zero = (0,) * dimension
    if isinstance(node, Number):
        return {(0, zero): node.value} if node.value != 0.0 else {}
    if isinstance(node, TimeVar):
        return {(1, zero): 1.0}
    if isinstance(node, StateVar):
        powers = tuple(1 if k == node.index - 1 else 0 for k in range(dimension))
        return {(0, powers): 1.0}
    if isinstance(node, UnaryOp):
        if node.op != 'neg':
            raise NotPolynomialError(f"{node.op}() is not polynomial")
        return {key: -value for key, value in _to_poly(node.operand, dimension).items()}

    left = _to_poly(node.left, dimension)
    if node.op == '^':
        power = int(node.right.value)
        if power < 0:
            raise NotPolynomialError("negative powers are not polynomial")
        out: Poly = {(0, zero): 1.0}
        for _ in range(power):
            out = _poly_mul(out, left)
        return out
    right = _to_poly(node.right, dimension)
    if node.op == '+':
        return _poly_add(left, right)
    if node.op == '-':
        return _poly_add(left, right, -1.0)
    if node.op == '*':
        return _poly_mul(left, right)
    if set(right) - {(0, zero)} or not right:
        raise NotPolynomialError("division by a non-constant expression")
    return {key: value / right[(0, zero)] for key, value in left.items()}


def to_polynomial_field(trees: List[Expr], dimension: int) -> PolynomialField:
    """
    Expand each component into monomials.

    Raises:
        NotPolynomialError: for sin, cos, exp, negative powers or non-constant denominators
    """
    components = []
    for tree in trees:
        poly = _to_poly(tree, dimension)
        components.append([Monomial(complex(value), t_power, powers)
                           for (t_power, powers), value in sorted(poly.items())])
    return PolynomialField(dimension, components)

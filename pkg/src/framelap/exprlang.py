"""Closed-form scalar expressions: tokenizer, recursive-descent parser, printer and jet evaluator.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ('-')? atom ('^' factor)?
    atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
"""

import logging
import math
import re
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import jet
from .jet import Jet3, JetDomainError, JetLike

logger = logging.getLogger(__name__)

FUNCTIONS = {
    "sin": (1, jet.sin),
    "cos": (1, jet.cos),
    "tan": (1, jet.tan),
    "exp": (1, jet.exp),
    "log": (1, jet.log),
    "sqrt": (1, jet.sqrt),
    "atan2": (2, jet.atan2),
}


class ParseError(ValueError):
    def __init__(self, position: Optional[int], message: str, expected: Sequence[str] = ()):
        where = "end of input" if position is None else f"position {position}"
        text = f"syntax error at {where}: {message}"
        if expected:
            text += f"; expected one of {', '.join(expected)}"
        super().__init__(text)
        self.position = position
        self.expected = tuple(expected)


class UnknownIdentifierError(ParseError):
    def __init__(self, name: str, position: int):
        super().__init__(position, f"unknown identifier '{name}'")
        self.name = name


class ArityError(ParseError):
    def __init__(self, name: str, expected: int, got: int, position: int):
        super().__init__(position, f"function '{name}' takes {expected} argument(s), got {got}")
        self.name = name


class EvaluationError(ValueError):
    def __init__(self, subtree: str, message: str):
        super().__init__(f"{message} in '{subtree}'")
        self.subtree = subtree


# tree


@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Parameter:
    name: str


@dataclass(frozen=True)
class Negate:
    operand: "Node"


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    function: str
    args: Tuple["Node", ...]


Node = Union[Number, Variable, Parameter, Negate, BinaryOp, Call]


class NodeVisitor:
    """Dispatches on the node class, in the manner of ``ast.NodeVisitor``."""

    def visit(self, node: Node):
        method = getattr(self, "visit_" + type(node).__name__, self.generic_visit)
        return method(node)

    def generic_visit(self, node: Node):
        raise TypeError(f"no visitor for {type(node).__name__}")


class Printer(NodeVisitor):
    def visit_Number(self, node: Number) -> str:
        if math.copysign(1.0, node.value) < 0:
            return f"(-{abs(node.value)!r})"
        return repr(node.value)

    def visit_Variable(self, node: Variable) -> str:
        return node.name

    def visit_Parameter(self, node: Parameter) -> str:
        return node.name

    def visit_Negate(self, node: Negate) -> str:
        return f"(-{self.visit(node.operand)})"

    def visit_BinaryOp(self, node: BinaryOp) -> str:
        return f"({self.visit(node.left)} {node.op} {self.visit(node.right)})"

    def visit_Call(self, node: Call) -> str:
        return f"{node.function}({', '.join(self.visit(a) for a in node.args)})"


def to_text(node: Node) -> str:
    return Printer().visit(node)


class NameCollector(NodeVisitor):
    def __init__(self):
        self.variables: set = set()
        self.parameters: set = set()

    def visit_Number(self, node: Number) -> None:
        pass

    def visit_Variable(self, node: Variable) -> None:
        self.variables.add(node.name)

    def visit_Parameter(self, node: Parameter) -> None:
        self.parameters.add(node.name)

    def visit_Negate(self, node: Negate) -> None:
        self.visit(node.operand)

    def visit_BinaryOp(self, node: BinaryOp) -> None:
        self.visit(node.left)
        self.visit(node.right)

    def visit_Call(self, node: Call) -> None:
        for arg in node.args:
            self.visit(arg)


ZERO = Number(0.0)
ONE = Number(1.0)


def _is_number(node: Node, value: float) -> bool:
    return isinstance(node, Number) and node.value == value


def _combine(op: str, left: Node, right: Node) -> Node:
    if _is_number(right, 0.0):
        return left
    if _is_number(left, 0.0):
        return right if op == "+" else Negate(right)
    return BinaryOp(op, left, right)


def _product(left: Node, right: Node) -> Node:
    if _is_number(left, 0.0) or _is_number(right, 0.0):
        return ZERO
    if _is_number(left, 1.0):
        return right
    if _is_number(right, 1.0):
        return left
    return BinaryOp("*", left, right)


def _quotient(left: Node, right: Node) -> Node:
    return ZERO if _is_number(left, 0.0) else BinaryOp("/", left, right)


def _square(node: Node) -> Node:
    return BinaryOp("^", node, Number(2.0))


def _power(base: Node, exponent: Node) -> Node:
    if _is_number(exponent, 0.0):
        return ONE
    if _is_number(exponent, 1.0):
        return base
    return BinaryOp("^", base, exponent)


class Differentiator(NodeVisitor):
    """Symbolic partial derivative with respect to one variable; zero subtrees are folded away."""

    def __init__(self, variable: str):
        self.variable = variable

    def visit_Number(self, node: Number) -> Node:
        return ZERO

    def visit_Variable(self, node: Variable) -> Node:
        return ONE if node.name == self.variable else ZERO

    def visit_Parameter(self, node: Parameter) -> Node:
        return ZERO

    def visit_Negate(self, node: Negate) -> Node:
        d = self.visit(node.operand)
        return ZERO if _is_number(d, 0.0) else Negate(d)

    def visit_BinaryOp(self, node: BinaryOp) -> Node:
        left, right = node.left, node.right
        dl, dr = self.visit(left), self.visit(right)
        if node.op in "+-":
            return _combine(node.op, dl, dr)
        if node.op == "*":
            return _combine("+", _product(dl, right), _product(left, dr))
        if node.op == "/":
            return _quotient(_combine("-", _product(dl, right), _product(left, dr)), _square(right))
        if _is_number(dr, 0.0):
            lowered = Number(right.value - 1.0) if isinstance(right, Number) else BinaryOp("-", right, ONE)
            return _product(_product(right, _power(left, lowered)), dl)
        # d(l^r) = l^r (r' log l + r l' / l)
        inner = _combine("+", _product(dr, Call("log", (left,))), _quotient(_product(right, dl), left))
        return _product(node, inner)

    def visit_Call(self, node: Call) -> Node:
        args = node.args
        da = [self.visit(a) for a in args]
        name = node.function
        if name == "atan2":
            y, x = args
            numerator = _combine("-", _product(x, da[0]), _product(y, da[1]))
            return _quotient(numerator, BinaryOp("+", _square(x), _square(y)))
        a, d = args[0], da[0]
        if name == "sin":
            return _product(Call("cos", (a,)), d)
        if name == "cos":
            return _product(Negate(Call("sin", (a,))), d)
        if name == "tan":
            return _product(BinaryOp("+", ONE, _square(node)), d)
        if name == "exp":
            return _product(node, d)
        if name == "log":
            return _quotient(d, a)
        if name == "sqrt":
            return _quotient(d, BinaryOp("*", Number(2.0), node))
        raise ValueError(f"no derivative rule for {name}")


class Evaluator(NodeVisitor):
    """Evaluates a tree over floats and jets. Constant subtrees stay plain floats."""

    def __init__(self, inputs: Mapping[str, JetLike], bindings: Mapping[str, float]):
        self.inputs = inputs
        self.bindings = bindings

    def visit_Number(self, node: Number) -> JetLike:
        return node.value

    def visit_Variable(self, node: Variable) -> JetLike:
        return self.inputs[node.name]

    def visit_Parameter(self, node: Parameter) -> JetLike:
        if node.name not in self.bindings:
            raise EvaluationError(node.name, "unbound parameter")
        return float(self.bindings[node.name])

    def visit_Negate(self, node: Negate) -> JetLike:
        return -self.visit(node.operand)

    def visit_BinaryOp(self, node: BinaryOp) -> JetLike:
        left = self.visit(node.left)
        right = self.visit(node.right)
        try:
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            if node.op == "*":
                return left * right
            if node.op == "/":
                if not isinstance(right, Jet3) and right == 0.0:
                    raise ZeroDivisionError("division by zero")
                return left / right
            return self._power(left, right)
        except (JetDomainError, ZeroDivisionError, OverflowError) as exc:
            raise EvaluationError(to_text(node), f"domain error ({exc})") from exc

    @staticmethod
    def _power(base: JetLike, exponent: JetLike) -> JetLike:
        if isinstance(base, Jet3) or isinstance(exponent, Jet3):
            return base**exponent
        if base < 0.0 and not float(exponent).is_integer():
            raise JetDomainError("power", base)
        if base == 0.0 and exponent < 0.0:
            raise ZeroDivisionError("zero to a negative power")
        return float(base) ** float(exponent)

    def visit_Call(self, node: Call) -> JetLike:
        args = [self.visit(a) for a in node.args]
        _, function = FUNCTIONS[node.function]
        try:
            return function(*args)
        except (JetDomainError, ZeroDivisionError, OverflowError, ValueError) as exc:
            raise EvaluationError(to_text(node), f"domain error ({exc})") from exc


# tokenizer and parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int


def tokenize(source: str) -> List[Token]:
    tokens = []
    position = 0
    while position < len(source):
        if source[position:].strip() == "":
            break
        match = _TOKEN_RE.match(source, position)
        if match is None:
            start = position + (len(source[position:]) - len(source[position:].lstrip()))
            raise ParseError(start, f"unexpected character {source[start]!r}", ("number", "identifier", "operator"))
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), match.start(kind)))
        position = match.end()
    return tokens


class Parser:
    def __init__(self, source: str, variables: Sequence[str], parameters: Sequence[str]):
        self.source = source
        self.tokens = tokenize(source)
        self.current = 0
        self.variables = tuple(variables)
        self.parameters = frozenset(parameters)

    def peek(self) -> Optional[Token]:
        return self.tokens[self.current] if self.current < len(self.tokens) else None

    def advance(self) -> Token:
        token = self.tokens[self.current]
        self.current += 1
        return token

    def check(self, text: str) -> bool:
        token = self.peek()
        return token is not None and token.kind == "op" and token.text == text

    def match(self, *texts: str) -> Optional[Token]:
        for text in texts:
            if self.check(text):
                return self.advance()
        return None

    def expect(self, text: str) -> Token:
        if not self.check(text):
            self._fail("unexpected token", (repr(text),))
        return self.advance()

    def _fail(self, message: str, expected: Sequence[str]):
        token = self.peek()
        if token is None:
            raise ParseError(None, "unexpected end of input", expected)
        raise ParseError(token.position, f"{message} {token.text!r}", expected)

    def parse(self) -> Node:
        node = self.expr()
        if self.peek() is not None:
            self._fail("unexpected token", ("'+'", "'-'", "'*'", "'/'", "'^'", "end of input"))
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            token = self.match("+", "-")
            if token is None:
                return node
            node = BinaryOp(token.text, node, self.term())

    def term(self) -> Node:
        node = self.factor()
        while True:
            token = self.match("*", "/")
            if token is None:
                return node
            node = BinaryOp(token.text, node, self.factor())

    def factor(self) -> Node:
        negate = self.match("-") is not None
        node = self.atom()
        if self.match("^") is not None:
            node = BinaryOp("^", node, self.factor())
        return Negate(node) if negate else node

    def atom(self) -> Node:
        token = self.peek()
        expected = ("number", "identifier", "'('")
        if token is None:
            raise ParseError(None, "unexpected end of input", expected)
        if token.kind == "number":
            self.advance()
            value = float(token.text)
            if not math.isfinite(value):
                raise ParseError(token.position, f"number {token.text!r} is out of range")
            return Number(value)
        if token.kind == "ident":
            self.advance()
            if token.text in FUNCTIONS:
                return self._call(token)
            if self.check("("):
                raise UnknownIdentifierError(token.text, token.position)
            if token.text in self.variables:
                return Variable(token.text)
            if token.text in self.parameters:
                return Parameter(token.text)
            raise UnknownIdentifierError(token.text, token.position)
        if self.match("(") is not None:
            node = self.expr()
            self.expect(")")
            return node
        self._fail("unexpected token", expected)
        raise AssertionError("unreachable")

    def _call(self, name: Token) -> Call:
        self.expect("(")
        args = [self.expr()]
        while self.match(",") is not None:
            args.append(self.expr())
        self.expect(")")
        arity, _ = FUNCTIONS[name.text]
        if len(args) != arity:
            raise ArityError(name.text, arity, len(args), name.position)
        return Call(name.text, tuple(args))


@dataclass(frozen=True)
class Expr:
    root: Node
    variables: Tuple[str, ...]
    parameters: FrozenSet[str]

    def __str__(self) -> str:
        return to_text(self.root)

    def free_names(self) -> Tuple[FrozenSet[str], FrozenSet[str]]:
        collector = NameCollector()
        collector.visit(self.root)
        return frozenset(collector.variables), frozenset(collector.parameters)


def parse(source: str, variables: Sequence[str], parameters: Sequence[str] = ()) -> Expr:
    """Parse ``source`` into an expression over ``variables`` with named ``parameters``.

    Raises:
        ParseError: On malformed input, with the position and the expected tokens.
        UnknownIdentifierError: On a name that is neither a variable, a parameter nor a function.
        ArityError: On a function called with the wrong number of arguments.
    """
    overlap = set(variables) & set(parameters)
    if overlap:
        raise ValueError(f"names used both as variable and parameter: {sorted(overlap)}")
    root = Parser(source, variables, parameters).parse()
    logger.debug("parsed %r as %s", source, to_text(root))
    return Expr(root, tuple(variables), frozenset(parameters))


def differentiate(e: Expr, variable: str) -> Expr:
    """Symbolic partial derivative of ``e`` with respect to ``variable``."""
    if variable not in e.variables:
        raise ValueError(f"'{variable}' is not a variable of the expression")
    return Expr(Differentiator(variable).visit(e.root), e.variables, e.parameters)


def evaluate_with(e: Expr, inputs: Sequence[JetLike], bindings: Mapping[str, float]) -> JetLike:
    """Evaluate with arbitrary (float or jet) values substituted for the variables."""
    if len(inputs) != len(e.variables):
        raise ValueError(f"expression takes {len(e.variables)} inputs, got {len(inputs)}")
    return Evaluator(dict(zip(e.variables, inputs)), bindings).visit(e.root)


def eval_jet(e: Expr, point: Sequence[float], order: int, bindings: Optional[Mapping[str, float]] = None) -> Jet3:
    """Jet of ``e`` at ``point``: coefficients are partial derivatives divided by multi-index factorials."""
    if len(point) != len(e.variables):
        raise ValueError(f"point has {len(point)} coordinates, expression has {len(e.variables)} variables")
    result = evaluate_with(e, Jet3.variables([float(x) for x in point], order), bindings or {})
    if isinstance(result, Jet3):
        return result
    return Jet3.constant(float(result), len(e.variables), order)


def evaluate(e: Expr, point: Sequence[float], bindings: Optional[Mapping[str, float]] = None) -> float:
    result = evaluate_with(e, [float(x) for x in point], bindings or {})
    return float(result)


@dataclass(frozen=True)
class SmoothMap:
    """A map between coordinate domains given by one expression per output component."""

    components: Tuple[Expr, ...]
    variables: Tuple[str, ...]
    bindings: Tuple[Tuple[str, float], ...] = ()

    @classmethod
    def from_sources(
        cls, sources: Sequence[str], variables: Sequence[str], bindings: Optional[Mapping[str, float]] = None
    ) -> "SmoothMap":
        bindings = dict(bindings or {})
        components = tuple(parse(s, variables, tuple(bindings)) for s in sources)
        return cls(components, tuple(variables), tuple(sorted(bindings.items())))

    @property
    def domain_dim(self) -> int:
        return len(self.variables)

    @property
    def codomain_dim(self) -> int:
        return len(self.components)

    @property
    def parameter_values(self) -> Dict[str, float]:
        return dict(self.bindings)

    def jets(self, point: Sequence[float], order: int) -> List[Jet3]:
        return eval_map_jet(self, point, order)

    def jacobian(self) -> "SmoothMap":
        """Row-major map of the partial derivatives ``d component_a / d variable_i``."""
        components = tuple(differentiate(c, v) for c in self.components for v in self.variables)
        return SmoothMap(components, self.variables, self.bindings)

    def apply(self, inputs: Sequence[JetLike]) -> List[JetLike]:
        values = self.parameter_values
        return [evaluate_with(c, inputs, values) for c in self.components]

    def __call__(self, point: Sequence[float]) -> np.ndarray:
        values = self.parameter_values
        return np.array([evaluate(c, point, values) for c in self.components])


def eval_map_jet(m: SmoothMap, point: Sequence[float], order: int) -> List[Jet3]:
    values = m.parameter_values
    return [eval_jet(c, point, order, values) for c in m.components]

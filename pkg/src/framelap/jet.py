"""Truncated multivariate Taylor arithmetic (jets) up to order 3 in at most 3 variables.

Coefficients are stored densely, ordered by total degree and, inside one degree, by
descending lexicographic multi-index. The coefficient of a multi-index ``m`` is the
partial derivative of order ``m`` divided by ``m!``.
"""

import logging
import math
from functools import lru_cache
from typing import List, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

MAX_ORDER = 3
MAX_VARS = 3

MultiIndex = Tuple[int, ...]


class JetOrderError(ValueError):
    def __init__(self, operation: str, message: str):
        super().__init__(f"{message} in '{operation}'")


class JetDomainError(ValueError):
    def __init__(self, operation: str, value: float):
        super().__init__(f"argument {value!r} outside the domain of '{operation}'")
        self.operation = operation
        self.value = value


def _monomials_of_degree(nvars: int, degree: int) -> List[MultiIndex]:
    if nvars == 1:
        return [(degree,)]
    monomials = []
    for first in range(degree, -1, -1):
        for rest in _monomials_of_degree(nvars - 1, degree - first):
            monomials.append((first,) + rest)
    return monomials


class _Basis:
    """Index tables for one (nvars, order) pair."""

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        monomials: List[MultiIndex] = []
        for degree in range(order + 1):
            monomials.extend(_monomials_of_degree(nvars, degree))
        self.monomials = tuple(monomials)
        self.index = {m: i for i, m in enumerate(monomials)}
        self.size = len(monomials)
        self.factorials = np.array([math.prod(math.factorial(k) for k in m) for m in monomials], dtype=float)

        left, right, target = [], [], []
        for i, mi in enumerate(monomials):
            for j, mj in enumerate(monomials):
                if sum(mi) + sum(mj) <= order:
                    left.append(i)
                    right.append(j)
                    target.append(self.index[tuple(a + b for a, b in zip(mi, mj))])
        self.mul_left = np.array(left, dtype=int)
        self.mul_right = np.array(right, dtype=int)
        self.mul_target = np.array(target, dtype=int)

        # derivative: lower basis index k <- this basis index of m_k + e_var, times (m_k[var] + 1)
        self.derivative_source: List[np.ndarray] = []
        self.derivative_factor: List[np.ndarray] = []
        if order > 0:
            for var in range(nvars):
                source, factor = [], []
                for m in monomials:
                    if sum(m) > order - 1:
                        break
                    raised = list(m)
                    raised[var] += 1
                    source.append(self.index[tuple(raised)])
                    factor.append(m[var] + 1)
                self.derivative_source.append(np.array(source, dtype=int))
                self.derivative_factor.append(np.array(factor, dtype=float))

        # antiderivative: this basis index of m (m[var] >= 1) <- lower basis index of m - e_var, divided by m[var]
        self.integral_target: List[np.ndarray] = []
        self.integral_source: List[np.ndarray] = []
        self.integral_divisor: List[np.ndarray] = []
        if order > 0:
            lower = _basis(nvars, order - 1)
            for var in range(nvars):
                target_idx, source_idx, divisor = [], [], []
                for k, m in enumerate(monomials):
                    if m[var] == 0:
                        continue
                    reduced = list(m)
                    reduced[var] -= 1
                    target_idx.append(k)
                    source_idx.append(lower.index[tuple(reduced)])
                    divisor.append(m[var])
                self.integral_target.append(np.array(target_idx, dtype=int))
                self.integral_source.append(np.array(source_idx, dtype=int))
                self.integral_divisor.append(np.array(divisor, dtype=float))


@lru_cache(maxsize=None)
def _basis(nvars: int, order: int) -> _Basis:
    return _Basis(nvars, order)


def basis_size(nvars: int, order: int) -> int:
    return _basis(nvars, order).size


class Jet3:
    """Truncated Taylor polynomial of a scalar function of ``nvars`` variables."""

    __slots__ = ("nvars", "order", "coeffs")
    __array_ufunc__ = None

    def __init__(self, coeffs: Union[Sequence[float], np.ndarray], nvars: int, order: int):
        if not 1 <= nvars <= MAX_VARS:
            raise JetOrderError("Jet3", f"{nvars} variables requested, at most {MAX_VARS} supported")
        if not 0 <= order <= MAX_ORDER:
            raise JetOrderError("Jet3", f"order {order} requested, at most {MAX_ORDER} supported")
        coeffs = np.asarray(coeffs, dtype=float)
        size = _basis(nvars, order).size
        if coeffs.shape != (size,):
            raise ValueError(f"expected {size} coefficients for nvars={nvars}, order={order}, got {coeffs.shape}")
        self.nvars = nvars
        self.order = order
        self.coeffs = coeffs

    # construction

    @classmethod
    def constant(cls, value: float, nvars: int, order: int) -> "Jet3":
        coeffs = np.zeros(_basis(nvars, order).size)
        coeffs[0] = value
        return cls(coeffs, nvars, order)

    @classmethod
    def variable(cls, index: int, value: float, nvars: int, order: int) -> "Jet3":
        coeffs = np.zeros(_basis(nvars, order).size)
        coeffs[0] = value
        if order > 0:
            coeffs[1 + index] = 1.0
        return cls(coeffs, nvars, order)

    @classmethod
    def variables(cls, point: Sequence[float], order: int) -> List["Jet3"]:
        return [cls.variable(i, float(x), len(point), order) for i, x in enumerate(point)]

    # inspection

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def coefficient(self, multi_index: MultiIndex) -> float:
        basis = _basis(self.nvars, self.order)
        if sum(multi_index) > self.order:
            raise JetOrderError("coefficient", f"multi-index {multi_index} exceeds order {self.order}")
        return float(self.coeffs[basis.index[tuple(multi_index)]])

    def partial(self, multi_index: MultiIndex) -> float:
        """Analytic partial derivative of order ``multi_index`` at the expansion point."""
        return self.coefficient(multi_index) * math.prod(math.factorial(k) for k in multi_index)

    def gradient(self) -> np.ndarray:
        self._require(1, "gradient")
        return self.coeffs[1 : 1 + self.nvars].copy()

    def hessian(self) -> np.ndarray:
        self._require(2, "hessian")
        out = np.empty((self.nvars, self.nvars))
        for i in range(self.nvars):
            for j in range(self.nvars):
                index = [0] * self.nvars
                index[i] += 1
                index[j] += 1
                out[i, j] = self.partial(tuple(index))
        return out

    def third(self) -> np.ndarray:
        self._require(3, "third")
        n = self.nvars
        out = np.empty((n, n, n))
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    index = [0] * n
                    index[i] += 1
                    index[j] += 1
                    index[k] += 1
                    out[i, j, k] = self.partial(tuple(index))
        return out

    def _require(self, order: int, operation: str) -> None:
        if self.order < order:
            raise JetOrderError(operation, f"jet of order {self.order} has no order-{order} data")

    def __repr__(self) -> str:
        return f"Jet3(value={self.value!r}, nvars={self.nvars}, order={self.order})"

    # structural operations

    def truncate(self, order: int) -> "Jet3":
        if order > self.order:
            raise JetOrderError("truncate", f"cannot raise order {self.order} to {order}")
        if order == self.order:
            return self
        size = _basis(self.nvars, order).size
        return Jet3(self.coeffs[:size].copy(), self.nvars, order)

    def deriv(self, var: int) -> "Jet3":
        """Partial derivative with respect to variable ``var``; the order drops by one."""
        if self.order == 0:
            raise JetOrderError("deriv", "derivative order exhausted")
        basis = _basis(self.nvars, self.order)
        coeffs = self.coeffs[basis.derivative_source[var]] * basis.derivative_factor[var]
        return Jet3(coeffs, self.nvars, self.order - 1)

    def integrate(self, var: int) -> "Jet3":
        """Antiderivative in ``var`` vanishing on ``var = expansion value``; the order rises by one (capped)."""
        order = min(self.order + 1, MAX_ORDER)
        basis = _basis(self.nvars, order)
        source = self.truncate(order - 1).coeffs
        coeffs = np.zeros(basis.size)
        coeffs[basis.integral_target[var]] = source[basis.integral_source[var]] / basis.integral_divisor[var]
        return Jet3(coeffs, self.nvars, order)

    def embed(self, nvars: int, positions: Sequence[int]) -> "Jet3":
        """Re-express in ``nvars`` variables, variable ``i`` becoming variable ``positions[i]``."""
        source = _basis(self.nvars, self.order)
        target = _basis(nvars, self.order)
        coeffs = np.zeros(target.size)
        for k, m in enumerate(source.monomials):
            index = [0] * nvars
            for i, power in enumerate(m):
                index[positions[i]] += power
            coeffs[target.index[tuple(index)]] = self.coeffs[k]
        return Jet3(coeffs, nvars, self.order)

    def compose(self, inner: Sequence["Jet3"]) -> "Jet3":
        """Substitute ``inner`` (jets whose values sit at this jet's expansion point) for the variables."""
        if len(inner) != self.nvars:
            raise ValueError(f"composition needs {self.nvars} inner jets, got {len(inner)}")
        nvars = inner[0].nvars
        order = min([self.order] + [j.order for j in inner])
        increments = [j.truncate(order) - j.value for j in inner]
        powers: List[List[Jet3]] = []
        for h in increments:
            row = [Jet3.constant(1.0, nvars, order)]
            for _ in range(order):
                row.append(row[-1] * h)
            powers.append(row)
        coeffs = np.zeros(_basis(nvars, order).size)
        coeffs[0] = self.coeffs[0]
        basis = _basis(self.nvars, order)
        for k, m in enumerate(basis.monomials[1:], start=1):
            c = self.coeffs[k]
            if c == 0.0:
                continue
            term = None
            for i, power in enumerate(m):
                if power:
                    term = powers[i][power] if term is None else term * powers[i][power]
            coeffs = coeffs + c * term.coeffs
        return Jet3(coeffs, nvars, order)

    # arithmetic

    def _coerce(self, other: "JetLike") -> Tuple["Jet3", "Jet3"]:
        if isinstance(other, Jet3):
            if other.nvars != self.nvars:
                raise ValueError(f"jets over {self.nvars} and {other.nvars} variables cannot be combined")
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        return self, Jet3.constant(float(other), self.nvars, self.order)

    def __add__(self, other: "JetLike") -> "Jet3":
        a, b = self._coerce(other)
        return Jet3(a.coeffs + b.coeffs, a.nvars, a.order)

    __radd__ = __add__

    def __sub__(self, other: "JetLike") -> "Jet3":
        a, b = self._coerce(other)
        return Jet3(a.coeffs - b.coeffs, a.nvars, a.order)

    def __rsub__(self, other: "JetLike") -> "Jet3":
        a, b = self._coerce(other)
        return Jet3(b.coeffs - a.coeffs, a.nvars, a.order)

    def __neg__(self) -> "Jet3":
        return Jet3(-self.coeffs, self.nvars, self.order)

    def __pos__(self) -> "Jet3":
        return self

    def __mul__(self, other: "JetLike") -> "Jet3":
        if not isinstance(other, Jet3):
            return Jet3(self.coeffs * float(other), self.nvars, self.order)
        a, b = self._coerce(other)
        basis = _basis(a.nvars, a.order)
        products = a.coeffs[basis.mul_left] * b.coeffs[basis.mul_right]
        coeffs = np.bincount(basis.mul_target, weights=products, minlength=basis.size)
        return Jet3(coeffs, a.nvars, a.order)

    __rmul__ = __mul__

    def __truediv__(self, other: "JetLike") -> "Jet3":
        if not isinstance(other, Jet3):
            if float(other) == 0.0:
                raise JetDomainError("division", 0.0)
            return Jet3(self.coeffs / float(other), self.nvars, self.order)
        return self * other.reciprocal()

    def __rtruediv__(self, other: "JetLike") -> "Jet3":
        return self.reciprocal() * other

    def __pow__(self, exponent: "JetLike") -> "Jet3":
        if isinstance(exponent, Jet3):
            return exp(exponent * log(self))
        exponent = float(exponent)
        if exponent.is_integer():
            return self._integer_power(int(exponent))
        x = self.value
        if x <= 0.0:
            raise JetDomainError("power", x)
        p = exponent
        derivatives = [x**p, p * x ** (p - 1), p * (p - 1) * x ** (p - 2), p * (p - 1) * (p - 2) * x ** (p - 3)]
        return self._apply(derivatives)

    def __rpow__(self, base: float) -> "Jet3":
        base = float(base)
        if base <= 0.0:
            raise JetDomainError("power", base)
        return exp(self * math.log(base))

    def _integer_power(self, n: int) -> "Jet3":
        if n < 0:
            return self.reciprocal()._integer_power(-n)
        result = Jet3.constant(1.0, self.nvars, self.order)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def reciprocal(self) -> "Jet3":
        x = self.value
        if x == 0.0:
            raise JetDomainError("division", x)
        return self._apply([1.0 / x, -1.0 / x**2, 2.0 / x**3, -6.0 / x**4])

    def _apply(self, derivatives: Sequence[float]) -> "Jet3":
        """Compose a univariate function, given its derivatives at the value, with this jet."""
        increment = self - self.value
        result = Jet3.constant(derivatives[0], self.nvars, self.order)
        power = Jet3.constant(1.0, self.nvars, self.order)
        for n in range(1, self.order + 1):
            power = power * increment
            result = result + power * (derivatives[n] / math.factorial(n))
        return result


JetLike = Union[Jet3, float]


# primitives


def sin(x: JetLike) -> JetLike:
    if not isinstance(x, Jet3):
        return math.sin(x)
    s, c = math.sin(x.value), math.cos(x.value)
    return x._apply([s, c, -s, -c])


def cos(x: JetLike) -> JetLike:
    if not isinstance(x, Jet3):
        return math.cos(x)
    s, c = math.sin(x.value), math.cos(x.value)
    return x._apply([c, -s, -c, s])


def tan(x: JetLike) -> JetLike:
    if not isinstance(x, Jet3):
        return math.tan(x)
    if math.cos(x.value) == 0.0:
        raise JetDomainError("tan", x.value)
    t = math.tan(x.value)
    sec2 = 1.0 + t * t
    return x._apply([t, sec2, 2.0 * t * sec2, (2.0 + 6.0 * t * t) * sec2])


def exp(x: JetLike) -> JetLike:
    if not isinstance(x, Jet3):
        return math.exp(x)
    e = math.exp(x.value)
    return x._apply([e, e, e, e])


def log(x: JetLike) -> JetLike:
    value = x.value if isinstance(x, Jet3) else float(x)
    if value <= 0.0:
        raise JetDomainError("log", value)
    if not isinstance(x, Jet3):
        return math.log(value)
    return x._apply([math.log(value), 1.0 / value, -1.0 / value**2, 2.0 / value**3])


def sqrt(x: JetLike) -> JetLike:
    value = x.value if isinstance(x, Jet3) else float(x)
    if value < 0.0 or (value == 0.0 and isinstance(x, Jet3) and x.order > 0):
        raise JetDomainError("sqrt", value)
    if not isinstance(x, Jet3):
        return math.sqrt(value)
    s = math.sqrt(value)
    return x._apply([s, 0.5 / s, -0.25 / s**3, 0.375 / s**5])


def atan(x: JetLike) -> JetLike:
    if not isinstance(x, Jet3):
        return math.atan(x)
    u = x.value
    d = 1.0 + u * u
    return x._apply([math.atan(u), 1.0 / d, -2.0 * u / d**2, (6.0 * u * u - 2.0) / d**3])


def atan2(y: JetLike, x: JetLike) -> JetLike:
    if not isinstance(y, Jet3) and not isinstance(x, Jet3):
        if x == 0.0 and y == 0.0:
            raise JetDomainError("atan2", 0.0)
        return math.atan2(y, x)
    y0 = y.value if isinstance(y, Jet3) else float(y)
    x0 = x.value if isinstance(x, Jet3) else float(x)
    if x0 == 0.0 and y0 == 0.0:
        raise JetDomainError("atan2", 0.0)
    angle = math.atan2(y0, x0)
    if abs(x0) >= abs(y0):
        ratio = y / x
        return atan(ratio) - math.atan(y0 / x0) + angle
    ratio = x / y
    return -(atan(ratio) - math.atan(x0 / y0)) + angle


# jet linear algebra

JetMatrix = List[List[JetLike]]


def dot(a: Sequence[JetLike], b: Sequence[JetLike]) -> JetLike:
    total: JetLike = 0.0
    for x, y in zip(a, b):
        total = total + x * y
    return total


def value_of(x: JetLike) -> float:
    return x.value if isinstance(x, Jet3) else float(x)


def solve(matrix: JetMatrix, rhs: Sequence[JetLike]) -> List[JetLike]:
    """Gaussian elimination with partial pivoting on the values."""
    n = len(rhs)
    a = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(value_of(a[r][col])))
        if value_of(a[pivot][col]) == 0.0:
            raise JetDomainError("solve", 0.0)
        a[col], a[pivot] = a[pivot], a[col]
        for r in range(col + 1, n):
            factor = a[r][col] / a[col][col]
            for c in range(col, n + 1):
                a[r][c] = a[r][c] - factor * a[col][c]
    x: List[JetLike] = [0.0] * n
    for r in range(n - 1, -1, -1):
        acc = a[r][n]
        for c in range(r + 1, n):
            acc = acc - a[r][c] * x[c]
        x[r] = acc / a[r][r]
    return x


def inverse(matrix: JetMatrix) -> JetMatrix:
    n = len(matrix)
    columns = [solve(matrix, [1.0 if i == j else 0.0 for i in range(n)]) for j in range(n)]
    return [[columns[j][i] for j in range(n)] for i in range(n)]


def determinant(matrix: JetMatrix) -> JetLike:
    n = len(matrix)
    if n == 1:
        return matrix[0][0]
    if n == 2:
        return matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]
    total: JetLike = 0.0
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in matrix[1:]]
        sign = 1.0 if j % 2 == 0 else -1.0
        total = total + sign * matrix[0][j] * determinant(minor)
    return total


def invert_map(components: Sequence[Jet3], point: Sequence[float]) -> List[Jet3]:
    """Jets of the inverse of a map given by ``components`` expanded at ``point``.

    The returned jets are expanded at the image of ``point`` and take the value ``point`` there.
    """
    n = len(components)
    order = min(c.order for c in components)
    if order == 0:
        raise JetOrderError("invert_map", "map jets carry no derivative")
    image = [c.value for c in components]
    jacobian = np.array([c.gradient() for c in components])
    if abs(np.linalg.det(jacobian)) < 1e-14 * max(1.0, np.abs(jacobian).max() ** n):
        raise JetDomainError("invert_map", float(np.linalg.det(jacobian)))
    left = np.linalg.inv(jacobian)
    x = Jet3.variables(image, order)
    steps = [xi - yi for xi, yi in zip(x, image)]
    inverse_jets = [float(point[i]) + sum((left[i, j] * steps[j] for j in range(n)), Jet3.constant(0.0, n, order))
                    for i in range(n)]
    for iteration in range(order):
        residual = [components[i].truncate(order).compose(inverse_jets) - x[i] for i in range(n)]
        inverse_jets = [
            inverse_jets[i] - sum((left[i, j] * residual[j] for j in range(n)), Jet3.constant(0.0, n, order))
            for i in range(n)
        ]
        logger.debug("invert_map iteration %d residual %.3e", iteration, max(abs(r.coeffs).max() for r in residual))
    return inverse_jets

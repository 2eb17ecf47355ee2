"""Small dense complex linear algebra with a global tolerance.

Matrices are plain numpy arrays.  Floating matrices use ``complex128``;
exact matrices are ``object`` arrays of :class:`QComplex` (complex numbers
with rational real and imaginary parts).  Every predicate in this module
dispatches on the dtype, so the same code path serves both modes.
"""

from __future__ import annotations

import contextlib
import numbers
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    DimensionError,
    InexactValueError,
    NotProjectorError,
    NotUnitaryError,
    NotUnitVectorError,
)

DEFAULT_EPSILON = 1e-9
DEFAULT_MAX_DIM = 16

_settings = {"epsilon": DEFAULT_EPSILON, "max_dim": DEFAULT_MAX_DIM}


def epsilon() -> float:
    return _settings["epsilon"]


def max_dim() -> int:
    return _settings["max_dim"]


@contextlib.contextmanager
def precision(epsilon: float | None = None, max_dim: int | None = None):
    """Temporarily override the zero-test tolerance and/or dimension bound."""
    saved = dict(_settings)
    if epsilon is not None:
        _settings["epsilon"] = float(epsilon)
    if max_dim is not None:
        _settings["max_dim"] = int(max_dim)
    try:
        yield
    finally:
        _settings.update(saved)


def set_precision(epsilon: float | None = None, max_dim: int | None = None) -> None:
    if epsilon is not None:
        _settings["epsilon"] = float(epsilon)
    if max_dim is not None:
        _settings["max_dim"] = int(max_dim)


# --------------------------------------------------------------------------
# exact scalars


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("booleans are not scalars")
    if isinstance(x, numbers.Integral):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot use {type(x).__name__} in exact arithmetic")


@dataclass(frozen=True, slots=True)
class QComplex:
    """Complex number with rational parts; closed under + - * /."""

    re: Fraction
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", _frac(self.re))
        object.__setattr__(self, "im", _frac(self.im))

    @classmethod
    def coerce(cls, x) -> "QComplex":
        if isinstance(x, QComplex):
            return x
        return cls(_frac(x), Fraction(0))

    def __add__(self, other):
        try:
            o = QComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return QComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        try:
            o = QComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return QComplex(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        try:
            o = QComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        try:
            o = QComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return QComplex(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        try:
            o = QComplex.coerce(other)
        except TypeError:
            return NotImplemented
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("QComplex division by zero")
        num = self * o.conjugate()
        return QComplex(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        try:
            o = QComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return o / self

    def __neg__(self):
        return QComplex(-self.re, -self.im)

    def __pos__(self):
        return self

    def conjugate(self):
        return QComplex(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __abs__(self) -> float:
        return float(self.abs2()) ** 0.5

    def __eq__(self, other):
        try:
            o = QComplex.coerce(other)
        except TypeError:
            if isinstance(other, (float, complex)):
                return complex(self) == other
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if self.im == 0:
            return f"{self.re}"
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


_ZERO = QComplex(0)
_ONE = QComplex(1)


def rationalize(x: float, max_denominator: int = 1 << 20) -> Fraction:
    """Exact rational for ``x`` or :class:`InexactValueError`."""
    if isinstance(x, (numbers.Integral, Fraction)):
        return Fraction(x)
    f = Fraction(float(x)).limit_denominator(max_denominator)
    if abs(float(f) - float(x)) > 1e-15 * max(1.0, abs(float(x))):
        raise InexactValueError(f"{float(x)!r} has no small exact rational form")
    return f


def to_exact(m) -> np.ndarray:
    """Convert a numeric array to an exact ``object`` array."""
    a = np.asarray(m)
    if a.dtype == object:
        return np.vectorize(QComplex.coerce, otypes=[object])(a)
    a = a.astype(complex)
    out = np.empty(a.shape, dtype=object)
    for idx, z in np.ndenumerate(a):
        out[idx] = QComplex(rationalize(z.real), rationalize(z.imag))
    return out


def to_float(m) -> np.ndarray:
    a = np.asarray(m)
    if a.dtype == object:
        return np.vectorize(complex, otypes=[complex])(a)
    return a.astype(complex)


def is_exact(m) -> bool:
    return np.asarray(m).dtype == object


def like(m, value) -> object:
    """Wrap a Python scalar in the arithmetic used by ``m``."""
    return QComplex.coerce(value) if is_exact(m) else value


# --------------------------------------------------------------------------
# construction and basic operations


def _check_dim(n: int) -> None:
    if n > max_dim():
        raise DimensionError(f"dimension {n} exceeds the configured bound {max_dim()}")


def identity(n: int, exact: bool = False) -> np.ndarray:
    _check_dim(n)
    if exact:
        out = np.full((n, n), _ZERO, dtype=object)
        for i in range(n):
            out[i, i] = _ONE
        return out
    return np.eye(n, dtype=complex)


def zeros(n: int, exact: bool = False) -> np.ndarray:
    if exact:
        return np.full((n, n), _ZERO, dtype=object)
    return np.zeros((n, n), dtype=complex)


def diag(*entries, exact: bool = False) -> np.ndarray:
    n = len(entries)
    out = zeros(n, exact)
    for i, e in enumerate(entries):
        out[i, i] = QComplex.coerce(e) if exact else e
    return out


def square(m) -> np.ndarray:
    """Validate and return ``m`` as a square complex or exact matrix."""
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
    _check_dim(a.shape[0])
    if a.dtype != object:
        a = a.astype(complex)
    return a


def _coerce_pair(a, b):
    # a float partner forces a float result
    if is_exact(a) != is_exact(b):
        return to_float(a), to_float(b)
    return a, b


def dagger(m) -> np.ndarray:
    a = np.asarray(m)
    if a.dtype == object:
        return np.vectorize(lambda z: z.conjugate(), otypes=[object])(a).T
    return a.conj().T


def matmul(a, b) -> np.ndarray:
    a, b = _coerce_pair(np.asarray(a), np.asarray(b))
    if a.shape[-1] != b.shape[0]:
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def kron(a, b) -> np.ndarray:
    a, b = _coerce_pair(np.asarray(a), np.asarray(b))
    n = a.shape[0] * b.shape[0]
    if n > max_dim():
        raise DimensionError(
            f"Kronecker product dimension {n} exceeds the configured bound {max_dim()}"
        )
    return np.kron(a, b)


def kron_all(factors) -> np.ndarray:
    factors = list(factors)
    if not factors:
        raise DimensionError("kron of an empty list")
    out = np.asarray(factors[0])
    for f in factors[1:]:
        out = kron(out, f)
    return out


def trace(m):
    a = np.asarray(m)
    if a.dtype == object:
        return sum((a[i, i] for i in range(a.shape[0])), _ZERO)
    return complex(np.trace(a))


def max_abs(m) -> float:
    a = np.asarray(m)
    if a.size == 0:
        return 0.0
    if a.dtype == object:
        return max(abs(z) for z in a.flat)
    return float(np.max(np.abs(a)))


def is_zero(m) -> bool:
    """``m == 0`` exactly in exact mode, within epsilon otherwise."""
    a = np.asarray(m)
    if a.dtype == object:
        return all(not z for z in a.flat)
    return max_abs(a) <= epsilon()


def is_close(a, b) -> bool:
    a, b = _coerce_pair(np.asarray(a), np.asarray(b))
    if a.shape != b.shape:
        return False
    return is_zero(a - b)


def is_scalar_one(z) -> bool:
    if isinstance(z, QComplex):
        return z == 1
    return abs(complex(z) - 1.0) <= epsilon()


def is_hermitian(m) -> bool:
    return is_close(m, dagger(m))


def is_projector(m) -> bool:
    try:
        a = square(m)
    except DimensionError:
        return False
    return is_hermitian(a) and is_close(a @ a, a)


def is_unitary(m) -> bool:
    try:
        a = square(m)
    except DimensionError:
        return False
    return is_close(dagger(a) @ a, identity(a.shape[0], is_exact(a)))


def require_projector(m, what: str = "matrix") -> np.ndarray:
    a = square(m)
    if not is_projector(a):
        raise NotProjectorError(f"{what} is not a projector (P^2 = P = P^dagger fails)")
    return a


def require_unitary(m, what: str = "matrix") -> np.ndarray:
    a = square(m)
    if not is_unitary(a):
        raise NotUnitaryError(f"{what} is not unitary")
    return a


def norm2(v):
    v = np.asarray(v)
    if v.dtype == object:
        return sum((z.abs2() for z in v.flat), Fraction(0))
    return float(np.vdot(v, v).real)


def ket(entries, exact: bool = False) -> np.ndarray:
    v = np.asarray(entries)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"a ket must be a non-empty vector, got shape {v.shape}")
    _check_dim(v.size)
    if exact or v.dtype == object:
        return to_exact(v)
    return v.astype(complex)


def require_unit(v, what: str = "ket") -> np.ndarray:
    v = ket(v)
    n2 = norm2(v)
    if is_exact(v):
        ok = n2 == 1
    else:
        ok = abs(n2 - 1.0) <= epsilon()
    if not ok:
        raise NotUnitVectorError(f"{what} has squared norm {n2}, expected 1")
    return v


def normalize(v) -> np.ndarray:
    v = ket(v)
    if is_exact(v):
        raise InexactValueError("normalization needs square roots; not available exactly")
    n = np.sqrt(norm2(v))
    if n <= epsilon():
        raise NotUnitVectorError("cannot normalize the zero vector")
    return v / n


def projector_from_ket(psi) -> np.ndarray:
    """Rank-one projector ``|psi><psi|`` for a unit vector."""
    v = require_unit(psi)
    if is_exact(v):
        conj = np.array([z.conjugate() for z in v], dtype=object)
        return np.outer(v, conj)
    return np.outer(v, v.conj())


def evolve(psi, u) -> np.ndarray:
    """Apply a unitary to a unit ket; float results are renormalized."""
    v = require_unit(psi)
    u = require_unitary(u, "evolution operator")
    if u.shape[0] != v.size:
        raise DimensionError(f"unitary of dim {u.shape[0]} applied to ket of dim {v.size}")
    out = matmul(u, v)
    if is_exact(out):
        return out
    return out / np.sqrt(norm2(out))


def expectation(psi, m):
    v = np.asarray(psi)
    a = np.asarray(m)
    if is_exact(v) and is_exact(a):
        conj = np.array([z.conjugate() for z in v], dtype=object)
        return conj @ (a @ v)
    v, a = to_float(v), to_float(a)
    return complex(np.vdot(v, a @ v))


def rank(p) -> int:
    """Rank of a projector (its trace)."""
    t = trace(p)
    if isinstance(t, QComplex):
        return int(t.re)
    return int(round(t.real))


# --------------------------------------------------------------------------
# projector lattice


def _range_basis(m) -> np.ndarray:
    a = to_float(m)
    u, s, _ = np.linalg.svd(a)
    k = int(np.sum(s > 1e-7))
    return u[:, :k]


def _restore(result, *inputs):
    if any(is_exact(x) for x in inputs):
        return to_exact(result)
    return result


def span_projector(m) -> np.ndarray:
    """Orthogonal projector onto the column space of ``m``."""
    b = _range_basis(m)
    out = b @ b.conj().T
    return _restore(out, m)


def join(p, q) -> np.ndarray:
    """Projector onto the closed span of the ranges of ``p`` and ``q``."""
    p, q = square(p), square(q)
    if p.shape != q.shape:
        raise DimensionError("join of projectors of different dimension")
    out = span_projector(np.hstack([to_float(p), to_float(q)]))
    return _restore(to_float(out), p, q)


def meet(p, q) -> np.ndarray:
    """Projector onto the intersection of the ranges of ``p`` and ``q``."""
    p, q = square(p), square(q)
    n = p.shape[0]
    one = np.eye(n, dtype=complex)
    out = one - to_float(join(one - to_float(p), one - to_float(q)))
    return _restore(out, p, q)


def leq_projector(p, q) -> bool:
    """``p <= q`` in the projector order, i.e. ``q p = p``."""
    return is_close(matmul(q, p), p)


def commute(a, b) -> bool:
    return is_close(matmul(a, b), matmul(b, a))


def canonical_key(m) -> tuple:
    """Entry sequence rounded to 12 places; used for ordering and dedup."""
    a = to_float(m)
    # + 0.0 folds -0.0 into 0.0
    re = (np.round(a.real, 12) + 0.0).ravel().tolist()
    im = (np.round(a.imag, 12) + 0.0).ravel().tolist()
    return tuple(zip(re, im))

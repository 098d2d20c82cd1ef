"""Forward-mode automatic differentiation.

Two dual-number types are provided:

* ``Dual2`` carries a value together with the gradient and Hessian with
  respect to a fixed set of q seed variables.  It is the workhorse of the
  per-unit Laplace step: one evaluation of the objective on lifted inputs
  yields the exact gradient and Hessian to machine precision.  Values may
  be scalars or numpy arrays (one entry per observed transition), so a
  whole unit's likelihood propagates in a handful of vectorized ops.

* ``Dual1`` carries a value and first partials only, with entries of any
  scalar-like type.  Nesting ``Dual1`` inside ``Dual1`` gives second
  derivatives and is what the generic expansion engine uses for the
  y-derivatives of its quadrature integrands.

The Hessian of ``Dual2`` is stored as the packed upper triangle, so
symmetry holds by construction rather than by numerical accident.

Elementary functions must be applied through the module-level wrappers
(``exp``, ``log``, ``sqrt``, ...), which dispatch between numpy and dual
arguments.  ``log`` and ``sqrt`` raise :class:`DomainError` on
non-positive arguments for plain and dual inputs alike.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

__all__ = [
    "Dual1",
    "Dual2",
    "lift",
    "lift1",
    "hessian_of",
    "gradient_of",
    "exp",
    "log",
    "sqrt",
    "sin",
    "cos",
    "value_of",
]

# Packed upper-triangle index pairs, cached per dimension q:
# entry m of the packed Hessian is H[I[m], J[m]] with I[m] <= J[m].
_PACK_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _pack_ix(q: int) -> tuple[np.ndarray, np.ndarray]:
    got = _PACK_CACHE.get(q)
    if got is None:
        pairs = [(i, j) for i in range(q) for j in range(i, q)]
        ii = np.array([p[0] for p in pairs])
        jj = np.array([p[1] for p in pairs])
        got = _PACK_CACHE[q] = (ii, jj)
    return got


def _col(x):
    """Append a broadcast axis to array-valued factors so they scale the
    trailing gradient/Hessian axis elementwise."""
    return x[..., None] if isinstance(x, np.ndarray) else x


def _all_positive(v) -> bool:
    if isinstance(v, np.ndarray):
        return bool(np.all(v > 0.0))
    return v > 0.0


def _check_nonzero(v) -> None:
    if isinstance(v, np.ndarray):
        if np.any(v == 0.0):
            raise DomainError("division by zero in dual arithmetic")
    elif v == 0.0:
        raise DomainError("division by zero in dual arithmetic")


class Dual2:
    """Second-order forward dual: value, gradient and packed Hessian
    w.r.t. q seed variables.  Immutable by convention."""

    __slots__ = ("val", "grad", "hess")
    __array_ufunc__ = None  # keep numpy from elementwise-broadcasting over us

    def __init__(self, val, grad, hess):
        self.val = val
        self.grad = grad
        self.hess = hess

    @property
    def nvars(self) -> int:
        return self.grad.shape[-1]

    def hess_matrix(self) -> np.ndarray:
        """Unpack the Hessian into a full symmetric q x q matrix (scalar
        values only)."""
        q = self.nvars
        ii, jj = _pack_ix(q)
        h = np.empty(self.hess.shape[:-1] + (q, q))
        h[..., ii, jj] = self.hess
        h[..., jj, ii] = self.hess
        return h

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Dual2):
            return Dual2(self.val + other.val, self.grad + other.grad,
                         self.hess + other.hess)
        return Dual2(self.val + other, _bcast(self.grad, other),
                     _bcast(self.hess, other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual2):
            return Dual2(self.val - other.val, self.grad - other.grad,
                         self.hess - other.hess)
        return Dual2(self.val - other, _bcast(self.grad, other),
                     _bcast(self.hess, other))

    def __rsub__(self, other):
        return Dual2(other - self.val, _bcast(-self.grad, other),
                     _bcast(-self.hess, other))

    def __neg__(self):
        return Dual2(-self.val, -self.grad, -self.hess)

    def __mul__(self, other):
        if isinstance(other, Dual2):
            va, vb = self.val, other.val
            ga, gb = self.grad, other.grad
            ii, jj = _pack_ix(ga.shape[-1])
            hess = (self.hess * _col(vb) + other.hess * _col(va)
                    + ga[..., ii] * gb[..., jj] + ga[..., jj] * gb[..., ii])
            return Dual2(va * vb, ga * _col(vb) + gb * _col(va), hess)
        c = _col(other)
        return Dual2(self.val * other, self.grad * c, self.hess * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        # values go through true division so dual evaluation reproduces
        # the plain float path bit for bit
        if isinstance(other, Dual2):
            _check_nonzero(other.val)
            val = self.val / other.val
            inv = _col(1.0 / other.val)
            grad = (self.grad - _col(val) * other.grad) * inv
            ii, jj = _pack_ix(self.grad.shape[-1])
            hess = (self.hess - _col(val) * other.hess
                    - (grad[..., ii] * other.grad[..., jj]
                       + grad[..., jj] * other.grad[..., ii])) * inv
            return Dual2(val, grad, hess)
        _check_nonzero(other)
        inv = _col(1.0 / other)
        return Dual2(self.val / other, self.grad * inv, self.hess * inv)

    def __rtruediv__(self, other):
        _check_nonzero(self.val)
        val = other / self.val
        inv = _col(1.0 / self.val)
        grad = -_col(val) * self.grad * inv
        ii, jj = _pack_ix(self.grad.shape[-1])
        hess = (-_col(val) * self.hess
                - (grad[..., ii] * self.grad[..., jj]
                   + grad[..., jj] * self.grad[..., ii])) * inv
        return Dual2(val, grad, hess)

    def __pow__(self, n):
        if isinstance(n, Dual2):
            return exp(log(self) * n)
        v = self.val
        u = v ** n
        if n == 2:
            ii, jj = _pack_ix(self.grad.shape[-1])
            hess = (self.hess * _col(2.0 * v)
                    + 2.0 * self.grad[..., ii] * self.grad[..., jj])
            return Dual2(u, self.grad * _col(2.0 * v), hess)
        return self._chain(u, n * v ** (n - 1), n * (n - 1) * v ** (n - 2))

    def _chain(self, u, du, d2u):
        """Compose with an outer elementary function given u = f(val),
        du = f'(val), d2u = f''(val)."""
        cdu = _col(du)
        ii, jj = _pack_ix(self.grad.shape[-1])
        hess = (self.hess * cdu
                + _col(d2u) * (self.grad[..., ii] * self.grad[..., jj]))
        return Dual2(u, self.grad * cdu, hess)

    def exp(self):
        u = np.exp(self.val)
        return self._chain(u, u, u)

    def log(self):
        if not _all_positive(self.val):
            raise DomainError("log of non-positive value")
        inv = 1.0 / self.val
        return self._chain(np.log(self.val), inv, -inv * inv)

    def sqrt(self):
        if not _all_positive(self.val):
            raise DomainError("sqrt of non-positive value")
        s = np.sqrt(self.val)
        inv = 0.5 / s
        return self._chain(s, inv, -0.5 * inv / self.val)

    def sin(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._chain(c, -s, -c)

    def sum(self):
        """Reduce an array-valued dual to a scalar one."""
        if not isinstance(self.val, np.ndarray):
            return self
        axes = tuple(range(self.grad.ndim - 1))
        return Dual2(float(self.val.sum()), self.grad.sum(axis=axes),
                     self.hess.sum(axis=axes))

    def __repr__(self):
        return f"Dual2(val={self.val!r})"


def _bcast(tail, other):
    """Broadcast grad/hess of a dual against an array constant added to
    its value, so shapes stay consistent (value shape + trailing axis)."""
    if isinstance(other, np.ndarray) and other.ndim > 0:
        target = np.broadcast_shapes(tail.shape[:-1], other.shape)
        if target != tail.shape[:-1]:
            return np.broadcast_to(tail, target + tail.shape[-1:])
    return tail


def lift(b) -> list[Dual2]:
    """Seed a q-vector: entry i becomes value b[i], gradient e_i, zero
    Hessian."""
    b = np.asarray(b, dtype=float)
    q = b.shape[0]
    m = q * (q + 1) // 2
    out = []
    for i in range(q):
        g = np.zeros(q)
        g[i] = 1.0
        out.append(Dual2(float(b[i]), g, np.zeros(m)))
    return out


def hessian_of(objective, b):
    """Evaluate ``objective`` on lifted inputs; return (value, gradient,
    full symmetric Hessian)."""
    res = objective(lift(b))
    if isinstance(res, Dual2):
        res = res.sum()
        return res.val, res.grad.copy(), res.hess_matrix()
    # objective happened to be constant in b
    q = len(np.asarray(b))
    return float(res), np.zeros(q), np.zeros((q, q))


_LEVEL_COUNTER = 0


def new_level() -> int:
    """Fresh differentiation level for Dual1 seeds.  Nested derivative
    passes must use distinct levels, otherwise the perturbations of the
    inner and outer passes would be confused."""
    global _LEVEL_COUNTER
    _LEVEL_COUNTER += 1
    return _LEVEL_COUNTER


class Dual1:
    """First-order forward dual with generic entries and a level tag.

    ``val`` and the entries of ``grad`` may be floats, arrays or
    themselves ``Dual1`` instances; nesting yields higher derivatives.
    Arithmetic pairs gradients only between duals of the same level;
    a dual of a different level is treated as a constant of this level
    and combined recursively through its own arithmetic.
    """

    __slots__ = ("val", "grad", "level")
    __array_ufunc__ = None

    def __init__(self, val, grad, level: int = 0):
        self.val = val
        self.grad = tuple(grad)
        self.level = level

    def __add__(self, other):
        if isinstance(other, Dual1):
            if other.level == self.level:
                return Dual1(self.val + other.val,
                             tuple(a + b for a, b in zip(self.grad, other.grad)),
                             self.level)
            if other.level > self.level:
                return Dual1(self + other.val, other.grad, other.level)
        return Dual1(self.val + other, self.grad, self.level)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual1):
            if other.level == self.level:
                return Dual1(self.val - other.val,
                             tuple(a - b for a, b in zip(self.grad, other.grad)),
                             self.level)
            if other.level > self.level:
                return Dual1(self - other.val,
                             tuple(-g for g in other.grad), other.level)
        return Dual1(self.val - other, self.grad, self.level)

    def __rsub__(self, other):
        return Dual1(other - self.val, tuple(-g for g in self.grad), self.level)

    def __neg__(self):
        return Dual1(-self.val, tuple(-g for g in self.grad), self.level)

    def __mul__(self, other):
        if isinstance(other, Dual1):
            if other.level == self.level:
                return Dual1(self.val * other.val,
                             tuple(a * other.val + self.val * b
                                   for a, b in zip(self.grad, other.grad)),
                             self.level)
            if other.level > self.level:
                return Dual1(self * other.val,
                             tuple(self * g for g in other.grad), other.level)
        return Dual1(self.val * other, tuple(g * other for g in self.grad),
                     self.level)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual1):
            if other.level == self.level:
                inv = 1.0 / other.val
                return Dual1(self.val * inv,
                             tuple((a - self.val * inv * b) * inv
                                   for a, b in zip(self.grad, other.grad)),
                             self.level)
            if other.level > self.level:
                return (1.0 / other) * self
            return Dual1(self.val / other, tuple(g / other for g in self.grad),
                         self.level)
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        w = other / self.val
        return Dual1(w, tuple(-(w / self.val) * g for g in self.grad),
                     self.level)

    def __pow__(self, n):
        if n == 2:
            return self * self
        u = self.val ** n
        du = n * self.val ** (n - 1)
        return Dual1(u, tuple(du * g for g in self.grad), self.level)

    def exp(self):
        u = exp(self.val)
        return Dual1(u, tuple(u * g for g in self.grad), self.level)

    def log(self):
        u = log(self.val)
        return Dual1(u, tuple(g / self.val for g in self.grad), self.level)

    def sqrt(self):
        u = sqrt(self.val)
        return Dual1(u, tuple((0.5 / u) * g for g in self.grad), self.level)

    def sin(self):
        return Dual1(sin(self.val), tuple(cos(self.val) * g for g in self.grad),
                     self.level)

    def cos(self):
        return Dual1(cos(self.val), tuple(-sin(self.val) * g for g in self.grad),
                     self.level)

    def __repr__(self):
        return f"Dual1(val={self.val!r}, level={self.level})"


def lift1(y, level: int | None = None) -> list[Dual1]:
    """Seed a k-vector of ``Dual1`` with unit directions on one fresh
    level."""
    if level is None:
        level = new_level()
    k = len(y)
    return [Dual1(y[i], tuple(1.0 if j == i else 0.0 for j in range(k)), level)
            for i in range(k)]


def gradient_of(f, y):
    """First partials of a scalar function of a sequence of scalars."""
    level = new_level()
    res = f(lift1(list(y), level))
    if isinstance(res, Dual1) and res.level == level:
        return res.val, list(res.grad)
    return res, [0.0] * len(y)


# -- generic elementary functions ------------------------------------


def exp(x):
    if isinstance(x, (Dual1, Dual2)):
        return x.exp()
    return np.exp(x)


def log(x):
    if isinstance(x, (Dual1, Dual2)):
        return x.log()
    if not _all_positive(x):
        raise DomainError("log of non-positive value")
    return np.log(x)


def sqrt(x):
    if isinstance(x, (Dual1, Dual2)):
        return x.sqrt()
    if not _all_positive(x):
        raise DomainError("sqrt of non-positive value")
    return np.sqrt(x)


def sin(x):
    if isinstance(x, (Dual1, Dual2)):
        return x.sin()
    return np.sin(x)


def cos(x):
    if isinstance(x, (Dual1, Dual2)):
        return x.cos()
    return np.cos(x)


def value_of(x):
    """Strip any dual layers down to the underlying plain value."""
    while isinstance(x, (Dual1, Dual2)):
        x = x.val
    return x

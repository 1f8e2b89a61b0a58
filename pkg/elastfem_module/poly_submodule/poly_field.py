"""
Polynomial fields stored as coefficients over reference-variable monomials.

A PolyField is geometry free: its terms are monomials in the reference
variables of a cell (barycentric coordinates, optionally followed by the axial
coordinate xi, or plain Cartesian coordinates). Physical derivatives take the
cell and use the constant gradients of those variables.

Symmetric matrix values are stored by their independent components:
sym2 -> (xx, yy, xy), sym3 -> (xx, yy, zz, xy, xz, yz).
"""
import numpy as np

VALUE_KINDS = {"scalar": 1, "vec2": 2, "vec3": 3, "sym2": 3, "sym3": 6}

SYM_PAIRS = {
    "sym2": [(0, 0), (1, 1), (0, 1)],
    "sym3": [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)],
}

VALUE_DIM = {"vec2": 2, "vec3": 3, "sym2": 2, "sym3": 3}

# component weights turning a component dot product into the Frobenius product
FROBENIUS_WEIGHTS = {
    "scalar": np.array([1.0]),
    "vec2": np.ones(2),
    "vec3": np.ones(3),
    "sym2": np.array([1.0, 1.0, 2.0]),
    "sym3": np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0]),
}


def sym_kind(dim):
    return "sym2" if dim == 2 else "sym3"


def vec_kind(dim):
    return "vec2" if dim == 2 else "vec3"


class PolyField:
    """
    Parameters
    ----------
        exponents : int array (T, nvar)
            monomial exponents, one row per term
        coefficients : float array (T, ncomp)
            value components of each term
        kind : str
            one of VALUE_KINDS
    """

    __slots__ = ("exponents", "coefficients", "kind")

    def __init__(self, exponents, coefficients, kind="scalar"):
        if kind not in VALUE_KINDS:
            raise ValueError(f"unknown value kind {kind!r}")
        exponents = np.asarray(exponents, dtype=np.int64)
        coefficients = np.asarray(coefficients, dtype=float)
        if exponents.ndim != 2:
            raise ValueError(f"exponents must be a 2D array, got shape {exponents.shape}")
        if coefficients.ndim == 1 and VALUE_KINDS[kind] == 1:
            coefficients = coefficients.reshape(-1, 1)
        if coefficients.shape != (exponents.shape[0], VALUE_KINDS[kind]):
            raise ValueError(
                f"coefficients of a {kind} field must have shape ({exponents.shape[0]}, {VALUE_KINDS[kind]}), "
                f"got {coefficients.shape}"
            )
        if np.any(exponents < 0):
            raise ValueError("monomial exponents must be non-negative")
        self.exponents = exponents
        self.coefficients = coefficients
        self.kind = kind

    @property
    def nvar(self):
        return self.exponents.shape[1]

    @property
    def n_terms(self):
        return self.exponents.shape[0]

    @property
    def ncomp(self):
        return VALUE_KINDS[self.kind]

    def __repr__(self):
        return f"PolyField(kind={self.kind}, nvar={self.nvar}, terms={self.n_terms})"

    ## structure

    def compact(self):
        """Merge duplicate monomials and drop exactly vanishing terms."""
        if self.n_terms == 0:
            return self
        unique, inverse = np.unique(self.exponents, axis=0, return_inverse=True)
        summed = np.zeros((unique.shape[0], self.ncomp))
        np.add.at(summed, inverse.ravel(), self.coefficients)
        keep = np.any(summed != 0.0, axis=1)
        return PolyField(unique[keep], summed[keep], self.kind)

    def partial_degree(self, variables):
        """Largest total degree in the given variables over the nonzero terms (-1 for the zero field)."""
        nonzero = np.any(np.abs(self.coefficients) > 0.0, axis=1)
        if not np.any(nonzero):
            return -1
        return int(self.exponents[nonzero][:, list(variables)].sum(axis=1).max())

    @property
    def degree(self):
        return self.partial_degree(range(self.nvar))

    def _check_compatible(self, other):
        if not isinstance(other, PolyField):
            raise TypeError(f"expected a PolyField, got {type(other).__name__}")
        if other.nvar != self.nvar:
            raise ValueError(f"variable count mismatch: {self.nvar} vs {other.nvar}")

    ## arithmetic

    def __add__(self, other):
        self._check_compatible(other)
        if other.kind != self.kind:
            raise ValueError(f"cannot add {self.kind} and {other.kind} fields")
        return PolyField(
            np.vstack([self.exponents, other.exponents]),
            np.vstack([self.coefficients, other.coefficients]),
            self.kind,
        ).compact()

    def __neg__(self):
        return PolyField(self.exponents, -self.coefficients, self.kind)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return PolyField(self.exponents, self.coefficients * float(other), self.kind)
        self._check_compatible(other)
        if self.kind != "scalar" and other.kind != "scalar":
            raise ValueError(f"product needs a scalar factor, got {self.kind} * {other.kind}")
        kind = other.kind if self.kind == "scalar" else self.kind
        exponents = (self.exponents[:, None, :] + other.exponents[None, :, :]).reshape(-1, self.nvar)
        coefficients = (self.coefficients[:, None, :] * other.coefficients[None, :, :]).reshape(-1, VALUE_KINDS[kind])
        return PolyField(exponents, coefficients, kind).compact()

    __rmul__ = __mul__

    def __truediv__(self, number):
        return self * (1.0 / float(number))

    def times(self, value, kind=None):
        """Scalar field times a constant vector or symmetric matrix."""
        if self.kind != "scalar":
            raise ValueError(f"times() needs a scalar field, got {self.kind}")
        value = np.asarray(value, dtype=float)
        if value.ndim == 1:
            kind = kind or vec_kind(value.shape[0])
            components = value
        elif value.ndim == 2:
            kind = kind or sym_kind(value.shape[0])
            components = sym_components(value, kind)
        else:
            raise ValueError(f"expected a vector or matrix value, got shape {value.shape}")
        if components.shape != (VALUE_KINDS[kind],):
            raise ValueError(f"value of shape {value.shape} does not match kind {kind}")
        return PolyField(self.exponents, self.coefficients * components[None, :], kind).compact()

    def derivative(self, variable):
        """Partial derivative with respect to one reference variable."""
        mask = self.exponents[:, variable] > 0
        exponents = self.exponents[mask].copy()
        factors = exponents[:, variable].astype(float)
        exponents[:, variable] -= 1
        return PolyField(exponents, self.coefficients[mask] * factors[:, None], self.kind).compact()

    def component(self, index):
        return PolyField(self.exponents, self.coefficients[:, [index]], "scalar").compact()

    ## evaluation

    def evaluate(self, ref_points):
        """Values at reference points, shape (P, ncomp)."""
        ref_points = np.atleast_2d(np.asarray(ref_points, dtype=float))
        if ref_points.shape[1] != self.nvar:
            raise ValueError(f"points have {ref_points.shape[1]} coordinates, field has {self.nvar} variables")
        return monomial_matrix(ref_points, self.exponents) @ self.coefficients


## constructors

def zero(nvar, kind="scalar"):
    return PolyField(np.zeros((0, nvar), dtype=np.int64), np.zeros((0, VALUE_KINDS[kind])), kind)


def constant(nvar, value=1.0, kind=None):
    value = np.asarray(value, dtype=float)
    if value.ndim == 0:
        return PolyField(np.zeros((1, nvar), dtype=np.int64), value.reshape(1, 1), "scalar")
    return constant(nvar, 1.0).times(value, kind)


def variable(nvar, index):
    exponents = np.zeros((1, nvar), dtype=np.int64)
    exponents[0, index] = 1
    return PolyField(exponents, np.ones((1, 1)), "scalar")


def monomial(exponents, coefficient=1.0):
    exponents = np.asarray(exponents, dtype=np.int64).reshape(1, -1)
    return PolyField(exponents, np.full((1, 1), float(coefficient)), "scalar")


def product(*factors):
    result = factors[0]
    for factor in factors[1:]:
        result = result * factor
    return result


## component helpers

def sym_components(matrix, kind):
    matrix = np.asarray(matrix, dtype=float)
    if not np.allclose(matrix, matrix.T, atol=1e-14 * max(1.0, np.abs(matrix).max())):
        raise ValueError("matrix value must be symmetric")
    return np.array([matrix[i, j] for i, j in SYM_PAIRS[kind]])


def to_full(values, kind):
    """Expand stored components (..., ncomp) to full values (..., d, d) for sym kinds."""
    values = np.asarray(values, dtype=float)
    if kind not in SYM_PAIRS:
        return values
    dim = VALUE_DIM[kind]
    full = np.zeros(values.shape[:-1] + (dim, dim))
    for c, (i, j) in enumerate(SYM_PAIRS[kind]):
        full[..., i, j] = values[..., c]
        full[..., j, i] = values[..., c]
    return full


def from_full(full, kind):
    full = np.asarray(full, dtype=float)
    return np.stack([0.5 * (full[..., i, j] + full[..., j, i]) for i, j in SYM_PAIRS[kind]], axis=-1)


def monomial_matrix(points, exponents):
    """Matrix of monomial values, shape (P, T)."""
    if exponents.shape[0] == 0:
        return np.zeros((points.shape[0], 0))
    return np.prod(points[:, None, :] ** exponents[None, :, :], axis=2)


## variable embeddings

def extend_variables(field, nvar_new, positions):
    """Re-express a field in a larger variable set; `positions[k]` is the new index of old variable k."""
    exponents = np.zeros((field.n_terms, nvar_new), dtype=np.int64)
    exponents[:, list(positions)] = field.exponents
    return PolyField(exponents, field.coefficients, field.kind)


_EMBED_INTO_SYM3 = {
    "sym2": [0, 1, 3],
    "vec2": [4, 5],
    "scalar": [2],
}


def embed_block(field):
    """
    Place a planar block into a 3x3 symmetric field.

    sym2 -> upper-left block, vec2 -> the (1:2, 3) column/row, scalar -> entry (3, 3).
    """
    if field.kind not in _EMBED_INTO_SYM3:
        raise ValueError(f"cannot embed a {field.kind} block into sym3")
    coefficients = np.zeros((field.n_terms, 6))
    coefficients[:, _EMBED_INTO_SYM3[field.kind]] = field.coefficients
    return PolyField(field.exponents, coefficients, "sym3")


## calculus in physical coordinates

def _chain_rule_terms(field, cell):
    gradients = np.asarray(cell.gradients)
    if gradients.shape[0] != field.nvar:
        raise ValueError(f"cell has {gradients.shape[0]} reference variables, field has {field.nvar}")
    for k in range(field.nvar):
        if not np.any(gradients[k]):
            continue
        d_field = field.derivative(k)
        if d_field.n_terms:
            yield d_field, gradients[k]


def _collect(nvar, kind, pieces):
    exponents = [e for e, _ in pieces]
    coefficients = [c for _, c in pieces]
    if not exponents:
        return zero(nvar, kind)
    return PolyField(np.vstack(exponents), np.vstack(coefficients), kind).compact()


def gradient(field, cell):
    """Physical gradient of a scalar field."""
    if field.kind != "scalar":
        raise ValueError(f"gradient expects a scalar field, got {field.kind}")
    pieces = [(d.exponents, d.coefficients * g[None, :]) for d, g in _chain_rule_terms(field, cell)]
    return _collect(field.nvar, vec_kind(cell.dim), pieces)


def divergence(field, cell):
    """
    Physical divergence: row-wise for symmetric matrix fields, scalar for vector fields.
    """
    if field.kind in SYM_PAIRS:
        if VALUE_DIM[field.kind] != cell.dim:
            raise ValueError(f"{field.kind} field on a {cell.dim}D cell")
        pieces = [
            (d.exponents, to_full(d.coefficients, field.kind) @ g)
            for d, g in _chain_rule_terms(field, cell)
        ]
        return _collect(field.nvar, vec_kind(cell.dim), pieces)
    if field.kind in ("vec2", "vec3"):
        if VALUE_DIM[field.kind] != cell.dim:
            raise ValueError(f"{field.kind} field on a {cell.dim}D cell")
        pieces = [(d.exponents, (d.coefficients @ g).reshape(-1, 1)) for d, g in _chain_rule_terms(field, cell)]
        return _collect(field.nvar, "scalar", pieces)
    raise ValueError(f"divergence expects a vector or symmetric matrix field, got {field.kind}")


def symmetric_gradient(field, cell):
    """eps(v) = (grad v + grad v^T) / 2 of a vector field."""
    if field.kind not in ("vec2", "vec3") or VALUE_DIM[field.kind] != cell.dim:
        raise ValueError(f"symmetric_gradient expects a {cell.dim}-vector field, got {field.kind}")
    kind = sym_kind(cell.dim)
    pieces = []
    for d, g in _chain_rule_terms(field, cell):
        outer = d.coefficients[:, :, None] * g[None, None, :]
        pieces.append((d.exponents, from_full(outer, kind)))
    return _collect(field.nvar, kind, pieces)


def curl2d(field, cell):
    """curl of a scalar in 2D: (d/dy, -d/dx)."""
    grad = gradient(field, cell)
    if grad.kind != "vec2":
        raise ValueError("curl2d needs a planar cell")
    return PolyField(grad.exponents, np.column_stack([grad.coefficients[:, 1], -grad.coefficients[:, 0]]), "vec2")


def planar_curl(field, cell):
    """curl_xy of a scalar field on a prism (x, y derivatives only)."""
    grad = gradient(field, cell)
    return PolyField(grad.exponents, np.column_stack([grad.coefficients[:, 1], -grad.coefficients[:, 0]]), "vec2")


## evaluation in physical coordinates

def eval_field(field, cell, point):
    """
    Evaluate a field at a physical point of a cell.

    Returns a float for scalar fields, a vector for vector fields and the full
    symmetric matrix for matrix fields.
    """
    ref = cell.to_reference(np.asarray(point, dtype=float).reshape(1, -1))
    if ref.shape[1] != field.nvar:
        raise ValueError(f"cell has {ref.shape[1]} reference variables, field has {field.nvar}")
    if not cell.contains_reference(ref):
        raise ValueError(f"point {np.asarray(point).tolist()} lies outside the cell")
    values = field.evaluate(ref)[0]
    if field.kind == "scalar":
        return float(values[0])
    return to_full(values, field.kind)


def evaluate_fields(fields, ref_points):
    """Stacked values of several fields of one kind, shape (F, P, ncomp)."""
    ref_points = np.atleast_2d(np.asarray(ref_points, dtype=float))
    if not fields:
        return np.zeros((0, ref_points.shape[0], 1))
    kind = fields[0].kind
    exponents = np.vstack([f.exponents for f in fields])
    table = monomial_matrix(ref_points, exponents)
    out = np.empty((len(fields), ref_points.shape[0], VALUE_KINDS[kind]))
    start = 0
    for i, f in enumerate(fields):
        if f.kind != kind:
            raise ValueError(f"mixed value kinds {kind} and {f.kind} in one stack")
        stop = start + f.n_terms
        out[i] = table[:, start:stop] @ f.coefficients
        start = stop
    return out


def integrate(field, cell, degree=None):
    """Integral of a field over a cell by quadrature exact for its degree."""
    degree = max(field.degree, 0) if degree is None else degree
    points, weights = cell.quadrature(degree)
    return weights @ field.evaluate(points)


## canonical coefficient vectors (rank oracles)

def homogenize(field, n_bary, bary_degree):
    """
    Rewrite the barycentric part of every term to total degree `bary_degree`
    by multiplying with powers of (lambda_1 + ... + lambda_n) = 1.
    """
    field = field.compact()
    if field.n_terms == 0:
        return field
    one_sum = zero(field.nvar, "scalar")
    for k in range(n_bary):
        one_sum = one_sum + variable(field.nvar, k)
    degrees = field.exponents[:, :n_bary].sum(axis=1)
    if np.any(degrees > bary_degree):
        raise ValueError(f"field has barycentric degree above {bary_degree}")
    result = zero(field.nvar, field.kind)
    for m in np.unique(degrees):
        part = PolyField(field.exponents[degrees == m], field.coefficients[degrees == m], field.kind)
        lift = constant(field.nvar, 1.0)
        for _ in range(int(bary_degree - m)):
            lift = lift * one_sum
        result = result + lift * part
    return result


def coefficient_matrix(fields, n_bary):
    """
    Canonical coefficient matrix (one row per field) for rank computations.

    Barycentric parts are homogenized to a common degree, which makes the
    monomial representation unique.
    """
    if not fields:
        return np.zeros((0, 0))
    bary_degree = max(max(f.partial_degree(range(n_bary)), 0) for f in fields) if n_bary else 0
    canonical = [homogenize(f, n_bary, bary_degree) if n_bary else f.compact() for f in fields]
    keys = sorted({tuple(row) for f in canonical for row in f.exponents.tolist()})
    index = {key: i for i, key in enumerate(keys)}
    ncomp = fields[0].ncomp
    matrix = np.zeros((len(fields), len(keys) * ncomp))
    for r, f in enumerate(canonical):
        for row, coeff in zip(f.exponents.tolist(), f.coefficients):
            start = index[tuple(row)] * ncomp
            matrix[r, start:start + ncomp] += coeff
    return matrix

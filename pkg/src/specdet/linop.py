"""Symmetric linear operators with dense or sparse backing.

Everything downstream only needs matrix-vector products, the dimension,
and a cheap upper bound on the largest eigenvalue, so operators expose
exactly that. Sparse symmetric matrices keep one triangle in memory and
expand it logically inside matvec.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class MatrixMarketError(ValueError):
    """Raised for files that violate the coordinate symmetric contract."""


class LinearOperator:
    """Base class: square operator of dimension n supporting matvec."""

    n: int
    symmetric: bool

    def matvec(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def matmat(self, X: np.ndarray) -> np.ndarray:
        """Apply to each column of X. Subclasses override with a fused path."""
        return np.column_stack([self.matvec(X[:, j]) for j in range(X.shape[1])])

    def to_dense(self) -> np.ndarray:
        raise NotImplementedError

    def diagonal(self) -> np.ndarray:
        raise NotImplementedError

    def abs_row_sums(self) -> np.ndarray:
        raise NotImplementedError

    def _check_dim(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected vector of length {self.n}, got shape {x.shape}")
        return x


class DenseOperator(LinearOperator):
    """Operator backed by a dense symmetric ndarray."""

    def __init__(self, matrix: np.ndarray, symmetric: bool | None = None):
        A = np.asarray(matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"matrix must be square, got shape {A.shape}")
        if not np.isfinite(A).all():
            raise ValueError("matrix contains non-finite entries")
        self.A = A
        self.n = A.shape[0]
        if symmetric is None:
            symmetric = bool(np.array_equal(A, A.T))
        self.symmetric = symmetric

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.A @ self._check_dim(x)

    def matmat(self, X: np.ndarray) -> np.ndarray:
        return self.A @ X

    def to_dense(self) -> np.ndarray:
        return self.A.copy()

    def diagonal(self) -> np.ndarray:
        return np.diag(self.A).copy()

    def abs_row_sums(self) -> np.ndarray:
        return np.abs(self.A).sum(axis=1)


class SparseOperator(LinearOperator):
    """Symmetric sparse operator storing the lower triangle only.

    matvec computes L x + L^T x - diag(L) * x so probes see the full
    matrix without ever materializing the upper triangle.
    """

    def __init__(self, lower: sp.csr_matrix, n: int):
        lower = sp.csr_matrix(lower)
        if lower.shape != (n, n):
            raise ValueError("lower-triangle storage must be n-by-n")
        self.lower = lower
        self._lower_T = sp.csr_matrix(lower.T)
        self._diag = lower.diagonal()
        self.n = n
        self.symmetric = True

    @classmethod
    def from_coo(cls, rows, cols, vals, n: int) -> "SparseOperator":
        """Build from triplets of one triangle (row >= col after swap)."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        swap = cols > rows
        r = np.where(swap, cols, rows)
        c = np.where(swap, rows, cols)
        lower = sp.coo_matrix((vals, (r, c)), shape=(n, n)).tocsr()
        return cls(lower, n)

    @property
    def nnz(self) -> int:
        return self.lower.nnz

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = self._check_dim(x)
        return self.lower @ x + self._lower_T @ x - self._diag * x

    def matmat(self, X: np.ndarray) -> np.ndarray:
        return self.lower @ X + self._lower_T @ X - self._diag[:, None] * X

    def to_dense(self) -> np.ndarray:
        full = self.lower.toarray()
        return full + full.T - np.diag(self._diag)

    def diagonal(self) -> np.ndarray:
        return self._diag.copy()

    def abs_row_sums(self) -> np.ndarray:
        a = np.abs(self.lower)
        return np.asarray(a.sum(axis=1)).ravel() \
            + np.asarray(a.sum(axis=0)).ravel() - np.abs(self._diag)


class NormalizedOperator:
    """B = K / lambda_u with all eigenvalues in (0, 1] for PD K."""

    def __init__(self, inner: LinearOperator, lambda_u: float):
        if not (lambda_u > 0 and np.isfinite(lambda_u)):
            raise ValueError("lambda_u must be positive and finite")
        self.inner = inner
        self.lambda_u = float(lambda_u)
        self.n = inner.n

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.inner.matvec(x) / self.lambda_u

    def matmat(self, X: np.ndarray) -> np.ndarray:
        return self.inner.matmat(X) / self.lambda_u


def identity(n: int) -> DenseOperator:
    return DenseOperator(np.eye(n))


def gershgorin_upper_bound(op: LinearOperator) -> float:
    """Largest absolute row sum; upper-bounds lambda_max for symmetric op."""
    if not op.symmetric:
        raise ValueError("Gershgorin bound requires a symmetric operator")
    sums = op.abs_row_sums()
    if not np.isfinite(sums).all():
        raise ValueError("operator has non-finite entries")
    return float(sums.max())


def normalize(op: LinearOperator) -> NormalizedOperator:
    return NormalizedOperator(op, gershgorin_upper_bound(op))


def read_matrix_market(path) -> SparseOperator:
    """Read a coordinate real symmetric Matrix Market file.

    Only the declared triangle is stored; matvec expands it. Raises
    MatrixMarketError for malformed headers, non-symmetric declarations,
    non-square sizes, and out-of-range indices.
    """
    with open(path, "r") as fh:
        header = fh.readline()
        fields = header.strip().split()
        if len(fields) != 5 or fields[0] != "%%MatrixMarket" or fields[1].lower() != "matrix":
            raise MatrixMarketError(f"malformed Matrix Market header: {header.strip()!r}")
        fmt, dtype, symm = (f.lower() for f in fields[2:5])
        if fmt != "coordinate":
            raise MatrixMarketError(f"unsupported format {fmt!r}; only coordinate is accepted")
        if dtype != "real":
            raise MatrixMarketError(f"unsupported field type {dtype!r}; only real is accepted")
        if symm != "symmetric":
            raise MatrixMarketError(f"non-symmetric declaration {symm!r}; only symmetric is accepted")

        line = fh.readline()
        while line and line.lstrip().startswith("%"):
            line = fh.readline()
        parts = line.split()
        if len(parts) != 3:
            raise MatrixMarketError(f"malformed size line: {line.strip()!r}")
        try:
            nrows, ncols, nnz = (int(p) for p in parts)
        except ValueError as exc:
            raise MatrixMarketError(f"malformed size line: {line.strip()!r}") from exc
        if nrows != ncols:
            raise MatrixMarketError(f"matrix is not square: {nrows}x{ncols}")

        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=float)
        k = 0
        for line in fh:
            if not line.strip() or line.lstrip().startswith("%"):
                continue
            parts = line.split()
            if len(parts) != 3 or k >= nnz:
                raise MatrixMarketError(f"malformed entry line: {line.strip()!r}")
            try:
                i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as exc:
                raise MatrixMarketError(f"malformed entry line: {line.strip()!r}") from exc
            if not (1 <= i <= nrows and 1 <= j <= ncols):
                raise MatrixMarketError(f"index out of range: ({i}, {j}) for n={nrows}")
            rows[k], cols[k], vals[k] = i - 1, j - 1, v
            k += 1
        if k != nnz:
            raise MatrixMarketError(f"expected {nnz} entries, found {k}")

    return SparseOperator.from_coo(rows, cols, vals, nrows)


def write_matrix_market(op: LinearOperator, path) -> None:
    """Write the lower triangle as coordinate real symmetric, full precision."""
    if not op.symmetric:
        raise ValueError("only symmetric operators can be written as symmetric files")
    if isinstance(op, SparseOperator):
        lower = op.lower.tocoo()
        rows, cols, vals = lower.row, lower.col, lower.data
    else:
        A = op.to_dense()
        rows, cols = np.tril_indices(op.n)
        vals = A[rows, cols]
        keep = vals != 0.0
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    order = np.lexsort((rows, cols))
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        fh.write(f"{op.n} {op.n} {len(vals)}\n")
        for k in order:
            fh.write(f"{rows[k] + 1} {cols[k] + 1} {vals[k]:.17g}\n")

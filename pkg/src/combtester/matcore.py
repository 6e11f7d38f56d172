"""Dense complex linear algebra on labeled multipartite operators.

Everything in this package runs through the helpers here.  Two global
conventions are fixed once and for all:

* Vectorization is row-major: ``double_ket(M)`` is the vector with entry
  ``M[m, n]`` at position ``m * cols + n``, i.e. |M>> = sum_mn M_mn |m>|n>.
  The workhorse identity is ``(A kron B) |M>> = |A M B^T>>``.
* A `LabeledOperator` stores its tensor factors in the order of its
  ``labels`` tuple.  All reshuffling goes through :meth:`LabeledOperator.permuted`
  rather than raw reshapes, because transpose-convention bugs are the
  dominant failure mode in Choi calculus.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

HERMITICITY_RTOL = 1e-10
PSD_CLIP = -1e-10
PSD_FAIL = -1e-8
SUPPORT_CUTOFF = 1e-12


def _as_complex_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    if not (np.all(np.isfinite(a.real)) and np.all(np.isfinite(a.imag))):
        raise ValueError("matrix contains NaN or Inf entries")
    return a


@dataclass(frozen=True)
class LabeledOperator:
    """A square operator on a tensor product of labeled subsystems.

    ``labels[k]`` names the k-th tensor factor and ``dims[k]`` is its
    dimension; ``prod(dims)`` must equal the matrix side.  Instances are
    immutable (the stored array is marked read-only) and safe to share.
    """

    matrix: np.ndarray
    labels: tuple[int, ...]
    dims: tuple[int, ...]

    def __post_init__(self):
        m = _as_complex_matrix(self.matrix)
        labels = tuple(int(l) for l in self.labels)
        dims = tuple(int(d) for d in self.dims)
        if len(labels) != len(dims):
            raise ValueError("labels and dims must have equal length")
        if len(set(labels)) != len(labels):
            raise ValueError(f"labels must be distinct, got {labels}")
        if any(d < 1 for d in dims):
            raise ValueError(f"dimensions must be positive, got {dims}")
        side = int(np.prod(dims)) if dims else 1
        if m.shape != (side, side):
            raise ValueError(
                f"matrix side {m.shape} inconsistent with dims {dims} (product {side})"
            )
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dims", dims)

    # -- basic queries ----------------------------------------------------

    @property
    def side(self) -> int:
        return self.matrix.shape[0]

    def dim_of(self, label: int) -> int:
        return self.dims[self.labels.index(label)]

    def label_dims(self) -> dict[int, int]:
        return dict(zip(self.labels, self.dims))

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    # -- structural operations --------------------------------------------

    def _tensor_view(self) -> np.ndarray:
        k = len(self.dims)
        return self.matrix.reshape(self.dims + self.dims) if k else self.matrix

    def permuted(self, new_labels: Sequence[int]) -> "LabeledOperator":
        """Reorder tensor factors into the order given by ``new_labels``."""
        new_labels = tuple(int(l) for l in new_labels)
        if sorted(new_labels) != sorted(self.labels):
            raise ValueError(f"{new_labels} is not a permutation of {self.labels}")
        if new_labels == self.labels:
            return self
        k = len(self.labels)
        perm = [self.labels.index(l) for l in new_labels]
        t = self._tensor_view().transpose(perm + [p + k for p in perm])
        new_dims = tuple(self.dims[p] for p in perm)
        side = self.side
        return LabeledOperator(t.reshape(side, side), new_labels, new_dims)

    def sorted(self) -> "LabeledOperator":
        return self.permuted(tuple(np.sort(self.labels)))

    def partial_transpose(self, on: Iterable[int]) -> "LabeledOperator":
        on = set(int(l) for l in on)
        unknown = on - set(self.labels)
        if unknown:
            raise ValueError(f"unknown labels {sorted(unknown)} in {self.labels}")
        k = len(self.labels)
        axes = list(range(2 * k))
        for i, l in enumerate(self.labels):
            if l in on:
                axes[i], axes[i + k] = axes[i + k], axes[i]
        t = self._tensor_view().transpose(axes)
        return LabeledOperator(t.reshape(self.side, self.side), self.labels, self.dims)

    def conj(self) -> "LabeledOperator":
        return LabeledOperator(self.matrix.conj(), self.labels, self.dims)

    def transpose(self) -> "LabeledOperator":
        return LabeledOperator(self.matrix.T, self.labels, self.dims)

    def dagger(self) -> "LabeledOperator":
        return LabeledOperator(self.matrix.conj().T, self.labels, self.dims)

    def __mul__(self, scalar) -> "LabeledOperator":
        return LabeledOperator(self.matrix * scalar, self.labels, self.dims)

    __rmul__ = __mul__

    def __add__(self, other: "LabeledOperator") -> "LabeledOperator":
        other = other.permuted(self.labels)
        return LabeledOperator(self.matrix + other.matrix, self.labels, self.dims)

    def __sub__(self, other: "LabeledOperator") -> "LabeledOperator":
        other = other.permuted(self.labels)
        return LabeledOperator(self.matrix - other.matrix, self.labels, self.dims)

    def __matmul__(self, other: "LabeledOperator") -> "LabeledOperator":
        other = other.permuted(self.labels)
        if other.dims != self.dims:
            raise ValueError("operator product needs matching subsystem dimensions")
        return LabeledOperator(self.matrix @ other.matrix, self.labels, self.dims)


def identity(labels: Sequence[int], dims: Sequence[int]) -> LabeledOperator:
    side = int(np.prod(dims)) if len(dims) else 1
    return LabeledOperator(np.eye(side, dtype=complex), tuple(labels), tuple(dims))


def tensor(a: LabeledOperator, b: LabeledOperator) -> LabeledOperator:
    """Kronecker product with concatenated labels.  Label sets must be disjoint."""
    overlap = set(a.labels) & set(b.labels)
    if overlap:
        raise ValueError(f"overlapping labels {sorted(overlap)} in tensor product")
    return LabeledOperator(
        np.kron(a.matrix, b.matrix), a.labels + b.labels, a.dims + b.dims
    )


def tensor_many(ops: Sequence[LabeledOperator]) -> LabeledOperator:
    out = ops[0]
    for op in ops[1:]:
        out = tensor(out, op)
    return out


def partial_trace(a: LabeledOperator, over: Iterable[int]) -> LabeledOperator:
    """Trace out the named subsystems, preserving the order of the rest."""
    over = [int(l) for l in over]
    unknown = set(over) - set(a.labels)
    if unknown:
        raise ValueError(f"cannot trace over unknown labels {sorted(unknown)}")
    t = a._tensor_view()
    k = len(a.labels)
    labels = list(a.labels)
    dims = list(a.dims)
    for l in sorted(over, key=labels.index, reverse=True):
        i = labels.index(l)
        t = np.trace(t, axis1=i, axis2=i + len(labels))
        labels.pop(i)
        dims.pop(i)
    side = int(np.prod(dims)) if dims else 1
    return LabeledOperator(t.reshape(side, side), tuple(labels), tuple(dims))


def link(a: LabeledOperator, b: LabeledOperator) -> LabeledOperator:
    """Link product: contract ``a`` and ``b`` over their shared labels.

    Computes ``Tr_S[(a ⊗ I)(b^{T_S} ⊗ I)]`` where ``S`` is the set of shared
    labels and the partial transpose acts on ``S``, without materializing the
    identity paddings.  With no shared labels this is the plain tensor
    product.  This is the standard composition rule for Choi operators of
    networks joined along the shared wires.
    """
    shared = [l for l in a.labels if l in b.labels]
    if not shared:
        return tensor(a, b)
    for l in shared:
        if a.dim_of(l) != b.dim_of(l):
            raise ValueError(f"shared label {l} has mismatched dimensions")
    rest_a = [l for l in a.labels if l not in shared]
    rest_b = [l for l in b.labels if l not in shared]
    ar = a.permuted(tuple(rest_a + shared))
    br = b.permuted(tuple(shared + rest_b))
    da = int(np.prod([ar.dim_of(l) for l in rest_a])) if rest_a else 1
    db = int(np.prod([br.dim_of(l) for l in rest_b])) if rest_b else 1
    ds = int(np.prod([a.dim_of(l) for l in shared]))
    at = ar.matrix.reshape(da, ds, da, ds)
    bt = br.matrix.reshape(ds, db, ds, db)
    # out[(x,u),(y,v)] = sum_{s,t} a[(x,s),(y,t)] b[(s,u),(t,v)]
    out = np.einsum("xsyt,sutv->xuyv", at, bt, optimize=True)
    labels = tuple(rest_a + rest_b)
    dims = tuple([ar.dim_of(l) for l in rest_a] + [br.dim_of(l) for l in rest_b])
    return LabeledOperator(out.reshape(da * db, da * db), labels, dims)


# -- vectorization ---------------------------------------------------------


def double_ket(m) -> np.ndarray:
    """Row-major vectorization |M>> = sum_mn M_mn |m>|n| as a 1-d array."""
    return _as_complex_matrix(m).reshape(-1)


def undouble_ket(v, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.size != rows * cols:
        raise ValueError(f"vector of length {v.size} is not {rows}x{cols}")
    return v.reshape(rows, cols)


# -- spectral helpers -------------------------------------------------------


def hermitian_part(m) -> np.ndarray:
    m = _as_complex_matrix(m)
    return (m + m.conj().T) / 2


def eigh(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ascending eigenvalues and the unitary of eigenvectors (columns).
    Raises if the input fails the Hermiticity tolerance relative to its
    Frobenius norm.
    """
    h = _as_complex_matrix(h)
    if h.shape[0] != h.shape[1]:
        raise ValueError("eigh needs a square matrix")
    scale = np.linalg.norm(h)
    if np.linalg.norm(h - h.conj().T) > HERMITICITY_RTOL * max(scale, 1.0):
        raise ValueError("matrix is not Hermitian to tolerance")
    w, v = np.linalg.eigh(hermitian_part(h))
    return w, v


def trace_norm(x) -> float:
    """Sum of singular values."""
    x = _as_complex_matrix(x)
    if x.shape[0] != x.shape[1]:
        raise ValueError("trace_norm expects a square matrix")
    return float(np.linalg.svd(x, compute_uv=False).sum())


def _psd_eigensystem(h: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    w, v = eigh(h)
    scale = max(1.0, float(np.abs(w).max()) if w.size else 1.0)
    if w.min(initial=0.0) < PSD_FAIL * scale:
        raise ValueError(
            f"{what}: eigenvalue {w.min():.3e} is significantly negative; "
            "not a valid positive operator"
        )
    return np.clip(w, 0.0, None), v


def psd_sqrt_matrix(h) -> np.ndarray:
    w, v = _psd_eigensystem(_as_complex_matrix(h), "psd_sqrt")
    return (v * np.sqrt(w)) @ v.conj().T


def psd_inv_sqrt_matrix(h) -> np.ndarray:
    """Inverse square root on the support; zero on the kernel."""
    w, v = _psd_eigensystem(_as_complex_matrix(h), "psd_inv_sqrt")
    inv = np.where(w > SUPPORT_CUTOFF, 1.0 / np.sqrt(np.where(w > 0, w, 1.0)), 0.0)
    return (v * inv) @ v.conj().T


def psd_sqrt(h: LabeledOperator) -> LabeledOperator:
    return LabeledOperator(psd_sqrt_matrix(h.matrix), h.labels, h.dims)


def psd_inv_sqrt(h: LabeledOperator) -> LabeledOperator:
    return LabeledOperator(psd_inv_sqrt_matrix(h.matrix), h.labels, h.dims)


def allclose(a: LabeledOperator, b: LabeledOperator, atol: float = 1e-10) -> bool:
    """Compare two labeled operators after aligning factor order."""
    if set(a.labels) != set(b.labels):
        return False
    return np.allclose(a.matrix, b.permuted(a.labels).matrix, atol=atol, rtol=0.0)

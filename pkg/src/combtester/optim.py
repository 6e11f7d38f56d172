"""Convex-set projections and solver loops shared by the decision modules.

The feasible set for a top-level tester normalization on spaces ``0..2N-2``
is the intersection of the positive-semidefinite cone with an affine
subspace (the recursive partial-trace chain plus a trace pin).  Projection
onto the intersection uses Dykstra's alternating scheme; the affine part is
projected in closed form through a precomputed Gram factorization of the
constraint map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matcore
from .matcore import LabeledOperator, identity, partial_trace, tensor


# -- Hermitian real vectorization -------------------------------------------


def herm_to_vec(h: np.ndarray) -> np.ndarray:
    """Isometric real coordinates of a Hermitian matrix."""
    n = h.shape[0]
    iu = np.triu_indices(n, k=1)
    return np.concatenate(
        [np.diag(h).real, np.sqrt(2.0) * h[iu].real, np.sqrt(2.0) * h[iu].imag]
    )


def vec_to_herm(v: np.ndarray, n: int) -> np.ndarray:
    iu = np.triu_indices(n, k=1)
    m = len(iu[0])
    h = np.zeros((n, n), dtype=complex)
    h[np.diag_indices(n)] = v[:n]
    upper = (v[n:n + m] + 1j * v[n + m:n + 2 * m]) / np.sqrt(2.0)
    h[iu] = upper
    h[(iu[1], iu[0])] = upper.conj()
    return h


# -- simple projections ------------------------------------------------------


def project_simplex(w: np.ndarray, total: float = 1.0) -> np.ndarray:
    """Euclidean projection of a real vector onto {w >= 0, sum w = total}."""
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - total
    ks = np.arange(1, len(w) + 1)
    cond = u - css / ks > 0
    k = ks[cond][-1]
    tau = css[cond][-1] / k
    return np.maximum(w - tau, 0.0)


def project_to_density(h: np.ndarray, total: float = 1.0) -> np.ndarray:
    """Nearest (Frobenius) positive operator with fixed trace."""
    w, v = np.linalg.eigh(matcore.hermitian_part(h))
    w = project_simplex(w, total)
    return (v * w) @ v.conj().T


def project_psd(h: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(matcore.hermitian_part(h))
    return (v * np.clip(w, 0.0, None)) @ v.conj().T


# -- tester-normalization feasible set ---------------------------------------


class XiChainSet:
    """Feasible top-level normalizations on spaces ``0..2N-2``.

    ``dims[k]`` is the dimension of space ``k``.  Membership means: positive
    semidefinite, and tracing the top (even) space of each derived level
    leaves identity on the next odd space tensored with the level below,
    terminating in unit trace.
    """

    def __init__(self, dims):
        self.dims = tuple(int(d) for d in dims)
        if len(self.dims) % 2 == 0:
            raise ValueError("a normalization chain lives on an odd number of spaces")
        self.uses = (len(self.dims) + 1) // 2
        self.side = int(np.prod(self.dims))
        self.labels = tuple(range(len(self.dims)))
        self.trace_target = float(np.prod(self.dims[1::2])) if self.uses > 1 else 1.0
        self._gram_solve = None

    # residual blocks, as labeled operators ---------------------------------

    def _as_labeled(self, x: np.ndarray) -> LabeledOperator:
        return LabeledOperator(x, self.labels, self.dims)

    def chain_residuals(self, x: np.ndarray) -> list[np.ndarray]:
        """Hermitian residual of each chain level (levels N..2)."""
        out = []
        xi = self._as_labeled(x)
        for n in range(self.uses, 1, -1):
            even, odd = 2 * n - 2, 2 * n - 3
            traced = partial_trace(xi, [even]).sorted()
            lower = partial_trace(traced, [odd]) * (1.0 / xi.dim_of(odd))
            cand = tensor(lower, identity([odd], [xi.dim_of(odd)])).sorted()
            out.append(traced.matrix - cand.matrix)
            xi = lower
        return out

    def _residual_adjoint(self, blocks: list[np.ndarray]) -> np.ndarray:
        """Adjoint of the chain-residual map, level by level."""
        acc = np.zeros((self.side, self.side), dtype=complex)
        for k, n in enumerate(range(self.uses, 1, -1)):
            even, odd = 2 * n - 2, 2 * n - 3
            sub_labels = tuple(range(even))
            sub_dims = self.dims[:even]
            y = LabeledOperator(blocks[k], sub_labels, sub_dims)
            d_odd = self.dims[odd]
            # adjoint of X -> Tr_even[X]: tensor with identity on `even`
            term = tensor(y, identity([even], [self.dims[even]])).sorted()
            # adjoint of X -> I_odd ⊗ Tr_{odd,even}[X]/d_odd
            z = partial_trace(y, [odd]) * (1.0 / d_odd)
            term2 = tensor(
                tensor(z, identity([odd], [d_odd])),
                identity([even], [self.dims[even]]),
            ).sorted()
            contrib = term - term2
            # levels below N act on nested traces of X; push back up
            for m in range(n, self.uses):
                hi_even, hi_odd = 2 * m, 2 * m - 1
                contrib = tensor(
                    contrib * (1.0 / self.dims[hi_odd]),
                    identity([hi_odd, hi_even], [self.dims[hi_odd], self.dims[hi_even]]),
                ).sorted()
            acc += contrib.matrix
        return acc

    def constraint_values(self, x: np.ndarray) -> np.ndarray:
        vec = [herm_to_vec(r) for r in self.chain_residuals(x)]
        vec.append(np.array([np.trace(x).real - self.trace_target]))
        return np.concatenate(vec)

    def _constraint_adjoint(self, v: np.ndarray) -> np.ndarray:
        blocks = []
        pos = 0
        for n in range(self.uses, 1, -1):
            side = int(np.prod(self.dims[: 2 * n - 2]))
            take = side * side
            blocks.append(vec_to_herm(v[pos:pos + take], side))
            pos += take
        out = self._residual_adjoint(blocks) if blocks else np.zeros(
            (self.side, self.side), dtype=complex
        )
        out += v[pos] * np.eye(self.side)
        return out

    _DENSE_SIDE_LIMIT = 48

    def _ensure_gram(self):
        if self._gram_solve is not None:
            return
        zero = np.zeros((self.side, self.side), dtype=complex)
        offset = self.constraint_values(zero)
        m = len(offset)
        g = np.zeros((m, m))
        basis = np.eye(m)
        for k in range(m):
            g[:, k] = self.constraint_values(self._constraint_adjoint(basis[k])) - offset
        pinv = np.linalg.pinv(g, rcond=1e-10)
        self._gram_solve = lambda r: pinv @ r
        self._dense_affine = None
        if self.side <= self._DENSE_SIDE_LIMIT:
            # precompute the whole affine projection as one matrix on the
            # real coordinates of Hermitian operators
            n = self.side * self.side
            lmat = np.zeros((m, n))
            for k in range(n):
                e = np.zeros(n)
                e[k] = 1.0
                lmat[:, k] = self.constraint_values(vec_to_herm(e, self.side)) - offset
            correction = lmat.T @ pinv
            self._dense_affine = (np.eye(n) - correction @ lmat, -correction @ offset)

    def project_affine(self, x: np.ndarray) -> np.ndarray:
        """Closed-form projection onto the affine chain constraints."""
        self._ensure_gram()
        x = matcore.hermitian_part(x)
        if self._dense_affine is not None:
            a, c = self._dense_affine
            return vec_to_herm(a @ herm_to_vec(x) + c, self.side)
        r = self.constraint_values(x)
        return x - self._constraint_adjoint(self._gram_solve(r))

    def project(self, x: np.ndarray, max_iter: int = 5000, tol: float = 1e-12) -> np.ndarray:
        """Dykstra projection onto PSD ∩ affine chain."""
        if self.uses == 1:
            return project_to_density(x, self.trace_target)
        x = matcore.hermitian_part(x)
        p = np.zeros_like(x)
        q = np.zeros_like(x)
        b = x
        for _ in range(max_iter):
            a = project_psd(b + p)
            p = b + p - a
            b = self.project_affine(a + q)
            q = a + q - b
            if np.linalg.norm(a - b) <= tol:
                break
        return project_psd(b)

    def membership_residual(self, x: np.ndarray) -> float:
        res = [np.linalg.norm(r) for r in self.chain_residuals(x)]
        res.append(abs(np.trace(x).real - self.trace_target))
        w = np.linalg.eigvalsh(matcore.hermitian_part(x))
        res.append(max(0.0, -float(w[0])))
        return float(max(res))

    def uniform(self) -> np.ndarray:
        return np.eye(self.side) * (self.trace_target / self.side)

    def random_feasible(self, rng) -> np.ndarray:
        g = rng.normal(size=(self.side, self.side)) + 1j * rng.normal(size=(self.side, self.side))
        x = g @ g.conj().T
        x *= self.trace_target / np.trace(x).real
        return self.project(x)

    def embed_state(self, rho: LabeledOperator) -> np.ndarray:
        """Lift a joint input state (on the even spaces) to a chain element.

        The parallel strategy that feeds ``rho`` into all inputs corresponds
        to ``rho`` on the even spaces tensored with identity on the
        intermediate odd spaces.
        """
        evens = tuple(range(0, len(self.dims), 2))
        odds = tuple(range(1, len(self.dims) - 1, 2))
        if tuple(rho.labels) != evens:
            rho = rho.permuted(evens)
        out = rho
        if odds:
            out = tensor(rho, identity(odds, tuple(self.dims[o] for o in odds)))
        return out.sorted().matrix


# -- projected gradient minimization -----------------------------------------


@dataclass
class SolveResult:
    x: np.ndarray
    value: float
    iterations: int
    history: list


def projected_gradient_min(value_and_grad, project, x0: np.ndarray,
                           max_iter: int = 400, step0: float = 1.0,
                           ftol: float = 1e-14, stop_below: float = 0.0) -> SolveResult:
    """Monotone projected gradient descent with backtracking line search."""
    x = project(x0)
    f, g = value_and_grad(x)
    history = [f]
    step = step0
    it = 0
    for it in range(1, max_iter + 1):
        improved = False
        for _ in range(40):
            cand = project(x - step * g)
            fc, gc = value_and_grad(cand)
            if fc < f - 1e-18:
                x, f, g = cand, fc, gc
                step *= 1.3
                improved = True
                break
            step *= 0.5
            if step < 1e-16:
                break
        history.append(f)
        if not improved:
            break
        if f <= stop_below:
            break
        if len(history) > 2 and abs(history[-2] - f) <= ftol * max(1.0, f):
            break
    return SolveResult(x=x, value=f, iterations=it, history=history)

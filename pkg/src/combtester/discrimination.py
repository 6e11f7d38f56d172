"""Perfect-discrimination decisions for channels and memory channels.

Two channels with Choi operators ``C0, C1`` are perfectly discriminable by a
parallel scheme iff some input state ``rho`` satisfies
``C0 (I ⊗ rho) C1 = 0`` (identity on all output spaces); a causal scheme only
needs a valid tester normalization ``Xi`` with ``C0 (I ⊗ Xi) C1 = 0``
(identity on the last output space alone).  Both conditions are decided by
minimizing the squared Frobenius norm of the product over the respective
convex set with projected gradient descent; the objective is a convex
quadratic, so the minimum found is global and a small value is a
constructive feasibility certificate.  Infeasibility is only certified
empirically, by the converged minimum staying large across restarts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .channels import Channel, MemoryChannel
from .matcore import LabeledOperator, identity, psd_sqrt, tensor
from .optim import XiChainSet, project_to_density, projected_gradient_min
from .sampling import random_density, rng_from
from .testers import Tester, born_probabilities, tester_from_elements

FEASIBLE_TOL = 1e-8
INFEASIBLE_TOL = 1e-4


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    status: str
    residual: float
    witness: LabeledOperator | None
    iterations: int
    restarts: int
    objective_history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "status": self.status,
            "residual": self.residual,
            "iterations": self.iterations,
            "restarts": self.restarts,
        }


class _ProductObjective:
    """f(x) = ||C0 (I_fixed ⊗ x) C1||_F^2 with einsum contractions.

    ``fixed`` are the labels carrying the identity; ``free`` the labels of
    the optimization variable.  Precomputes ``Q = C0^2`` and ``R = C1^2``
    (both Choi operators are Hermitian) so each evaluation costs a pair of
    moderate tensor contractions instead of full-space matrix products.
    """

    def __init__(self, c0: LabeledOperator, c1: LabeledOperator, fixed_labels):
        fixed = [l for l in c0.labels if l in set(fixed_labels)]
        free = [l for l in c0.labels if l not in set(fixed_labels)]
        order = tuple(fixed + free)
        if set(c0.labels) != set(c1.labels):
            raise ValueError("Choi operators act on different spaces")
        a = c0.permuted(order)
        b = c1.permuted(order)
        if a.dims != b.dims:
            raise ValueError("Choi operators act on different spaces")
        self.free_labels = tuple(free)
        self.free_dims = tuple(a.dim_of(l) for l in free)
        self.df = int(np.prod([a.dim_of(l) for l in fixed])) if fixed else 1
        self.de = int(np.prod(self.free_dims)) if free else 1
        q = a.matrix @ a.matrix
        r = b.matrix @ b.matrix
        self.qt = q.reshape(self.df, self.de, self.df, self.de)
        self.rt = r.reshape(self.df, self.de, self.df, self.de)

    def _half(self, x: np.ndarray) -> np.ndarray:
        # Tr_fixed[Q (I ⊗ x) R] as a (de, de) matrix
        a = np.einsum("oebf,fg->oebg", self.qt, x, optimize=True)
        return np.einsum("oebg,bgoh->eh", a, self.rt, optimize=True)

    def value_and_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        half = self._half(x)
        f = float(np.trace(x @ half).real)
        grad = half + half.conj().T
        return f, grad

    def value(self, x: np.ndarray) -> float:
        return self.value_and_grad(x)[0]


def product_residual(c0: LabeledOperator, c1: LabeledOperator,
                     fixed_labels, x: LabeledOperator) -> float:
    """Direct ||C0 (I ⊗ x) C1||_F^2, used to cross-check the fast objective."""
    full_labels = c0.labels
    fixed = [l for l in full_labels if l in set(fixed_labels)]
    lift = x
    if fixed:
        lift = tensor(x, identity(fixed, tuple(c0.dim_of(l) for l in fixed)))
    lift = lift.permuted(full_labels)
    m = c0.matrix @ lift.matrix @ c1.permuted(full_labels).matrix
    return float(np.linalg.norm(m) ** 2)


def _classify(best: float) -> str:
    if best < FEASIBLE_TOL:
        return "feasible"
    if best > INFEASIBLE_TOL:
        return "infeasible"
    return "undetermined"


def parallel_discriminable(c0: LabeledOperator, c1: LabeledOperator, *,
                           restarts: int = 20, seed: int = 0,
                           max_iter: int = 400) -> FeasibilityReport:
    """Decide the parallel criterion by minimizing over joint input states."""
    c0 = c0.sorted()
    c1 = c1.sorted()
    if c0.labels != c1.labels or c0.dims != c1.permuted(c0.labels).dims:
        raise ValueError("Choi operators act on different spaces")
    odd = [l for l in c0.labels if l % 2 == 1]
    obj = _ProductObjective(c0, c1, odd)
    rng = rng_from(seed)
    d = obj.de

    best = None
    total_iter = 0
    starts = [np.eye(d, dtype=complex) / d]
    starts += [random_density(d, rng) for _ in range(max(0, restarts - 1))]
    for x0 in starts:
        res = projected_gradient_min(
            obj.value_and_grad, project_to_density, x0,
            max_iter=max_iter, stop_below=FEASIBLE_TOL * 1e-4,
        )
        total_iter += res.iterations
        if best is None or res.value < best.value:
            best = res
        if best.value <= FEASIBLE_TOL * 1e-4:
            break
    witness = LabeledOperator(best.x, obj.free_labels, obj.free_dims)
    status = _classify(best.value)
    return FeasibilityReport(
        feasible=status == "feasible", status=status, residual=best.value,
        witness=witness, iterations=total_iter, restarts=len(starts),
        objective_history=best.history,
    )


def causal_discriminable(c0: MemoryChannel, c1: MemoryChannel, *,
                         restarts: int = 20, seed: int = 0,
                         max_iter: int = 600) -> FeasibilityReport:
    """Decide the causal criterion by minimizing over tester normalizations."""
    a, b = c0.choi, c1.choi
    if a.dims != b.dims:
        raise ValueError("memory channels act on different spaces")
    top = 2 * c0.uses - 1
    obj = _ProductObjective(a, b, [top])
    xi_set = XiChainSet(a.dims[:-1])
    rng = rng_from(seed)

    best = None
    total_iter = 0
    starts = [xi_set.uniform()]
    starts += [xi_set.random_feasible(rng) for _ in range(max(0, restarts - 1))]
    for x0 in starts:
        res = projected_gradient_min(
            obj.value_and_grad, xi_set.project, x0,
            max_iter=max_iter, stop_below=FEASIBLE_TOL * 1e-4,
        )
        total_iter += res.iterations
        if best is None or res.value < best.value:
            best = res
        if best.value <= FEASIBLE_TOL * 1e-4:
            break
    witness = LabeledOperator(best.x, xi_set.labels, xi_set.dims)
    status = _classify(best.value)
    return FeasibilityReport(
        feasible=status == "feasible", status=status, residual=best.value,
        witness=witness, iterations=total_iter, restarts=len(starts),
        objective_history=best.history,
    )


def kraus_orthogonality(ch0: Channel, ch1: Channel, rho: np.ndarray,
                        tol: float = 1e-9) -> tuple[bool, float]:
    """Check the cross-Gram orthogonality of two Kraus families against rho.

    True iff ``Tr[rho K0j† K1k] = 0`` for all j, k up to ``tol`` in modulus,
    which characterizes the states witnessing perfect parallel
    discriminability of the two channels.
    """
    if ch0.in_dim != ch1.in_dim or ch0.out_dim != ch1.out_dim:
        raise ValueError("channels must share input and output dimensions")
    rho = np.asarray(rho, dtype=complex)
    worst = 0.0
    for k0 in ch0.kraus:
        for k1 in ch1.kraus:
            worst = max(worst, abs(np.trace(rho @ k0.conj().T @ k1)))
    return worst <= tol, float(worst)


def _cross_gram(ch0: Channel, ch1: Channel) -> list[np.ndarray]:
    return [k0.conj().T @ k1 for k0 in ch0.kraus for k1 in ch1.kraus]


def _rank_constrained_search(grams, d: int, r: int, rng, restarts: int,
                             iters: int = 300) -> tuple[float, np.ndarray]:
    """Minimize max_l |Tr[rho G_l]| over rank-r states rho = AA†/Tr[AA†]."""
    best_val, best_rho = np.inf, None
    for _ in range(restarts):
        a = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
        a /= np.linalg.norm(a)
        step = 0.1
        rho = a @ a.conj().T
        val = sum(abs(np.trace(rho @ g)) ** 2 for g in grams)
        for _ in range(iters):
            rho = a @ a.conj().T
            grad = np.zeros_like(a)
            for g in grams:
                c = np.trace(rho @ g)
                grad += np.conj(c) * (g @ a) + c * (g.conj().T @ a)
            grad -= np.real(np.vdot(a, grad)) * a  # keep unit Frobenius norm
            cand = a - step * grad
            cand /= np.linalg.norm(cand)
            crho = cand @ cand.conj().T
            cval = sum(abs(np.trace(crho @ g)) ** 2 for g in grams)
            if cval < val:
                a, val = cand, cval
                step *= 1.2
            else:
                step *= 0.5
                if step < 1e-12:
                    break
        rho = a @ a.conj().T
        worst = max(abs(np.trace(rho @ g)) for g in grams)
        if worst < best_val:
            best_val, best_rho = worst, rho
    return float(best_val), best_rho


def min_entanglement_rank(ch0: Channel, ch1: Channel, *, seed: int = 0,
                          restarts: int = 30, tol: float = 1e-9) -> int | None:
    """Smallest rank of a state satisfying the cross-Gram orthogonality.

    The rank of the witness state sets the amount of entanglement the
    discriminating input needs (rank 1: no entanglement).  Returns None when
    no state of any rank works.
    """
    if ch0.in_dim != ch1.in_dim or ch0.out_dim != ch1.out_dim:
        raise ValueError("channels must share input and output dimensions")
    grams = _cross_gram(ch0, ch1)
    d = ch0.in_dim
    rng = rng_from(seed)
    for r in range(1, d + 1):
        val, _ = _rank_constrained_search(grams, d, r, rng, restarts)
        if val <= tol:
            return r
    return None


def synthesize_tester(c0: MemoryChannel, c1: MemoryChannel,
                      witness: LabeledOperator,
                      max_witness_residual: float = 1e-6) -> Tester:
    """Two-outcome tester discriminating the combs, built from a witness.

    Sandwiches both Choi operators with the square root of the witness
    normalization, splits the reduced-state difference into its positive
    part (outcome 0) and the rest including the kernel (outcome 1), and
    lifts the two projectors back.  Refuses to certify when the witness
    residual is too large for the construction to be meaningful.
    """
    n = c0.uses
    top = 2 * n - 1
    xi = witness.sorted()
    res = product_residual(c0.choi, c1.choi, [top], xi)
    if res > max_witness_residual:
        raise ValueError(
            f"witness residual {res:.3e} exceeds {max_witness_residual:.1e}; "
            "cannot certify perfect discrimination"
        )
    lift = tensor(psd_sqrt(xi), identity([top], [c0.choi.dim_of(top)])).sorted()
    t0 = lift @ c0.choi @ lift
    t1 = lift @ c1.choi @ lift
    w, v = matcore.eigh(t0.matrix - t1.matrix)
    scale = max(1.0, float(np.abs(w).max()))
    pos = (v * (w > 1e-12 * scale)) @ v.conj().T
    p0_tilde = LabeledOperator(pos, t0.labels, t0.dims)
    eye = identity(t0.labels, t0.dims)
    p1_tilde = eye - p0_tilde
    p0 = lift @ p0_tilde @ lift
    p1 = lift @ p1_tilde @ lift
    return tester_from_elements([p0, p1], n)


def delta_matrix(t: Tester, combs) -> np.ndarray:
    """Outcome-by-channel probability table Tr[P_i C_j]."""
    return np.column_stack([born_probabilities(t, mc) for mc in combs])

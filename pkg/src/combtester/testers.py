"""Testers: generalized measurements on memory channels.

A tester for an N-use comb is a list of positive operators ``P_i`` on spaces
``0..2N-1`` whose sum factorizes as (normalization chain element on spaces
``0..2N-2``) ⊗ (identity on the last output space), with the chain itself
satisfying a recursive partial-trace normalization ending in a unit trace.
Outcome probabilities follow the generalized Born rule ``p(i) = Tr[P_i C]``.

Every tester is realizable as a concrete circuit: prepare a joint state of
the first input and an ancilla, interleave processing isometries with the
comb's uses, and measure a POVM at the end.  ``tester_from_circuit`` builds
the tester elements of such a scheme by link-product contraction, and
``simulate_tester_circuit`` evolves states through the same scheme
explicitly; the two must agree, which pins down every transpose convention.
The key fact, fixed by the row-major vectorization: a circuit that prepares
``sigma`` and measures ``M_i`` directly on a single channel use has tester
elements ``sigma^T``-weighted, i.e. the chain element is the transpose of
the prepared reduced input state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .channels import IsometricComb, MemoryChannel
from .matcore import (
    LabeledOperator,
    identity,
    link,
    partial_trace,
    psd_inv_sqrt,
    psd_sqrt,
    tensor,
)

_TESTER_ANCILLA = 20_000


@dataclass(frozen=True)
class Tester:
    """Tester elements plus their normalization chain.

    ``chain[n-1]`` is the level-n normalization operator, living on spaces
    ``0..2n-2``; ``chain[-1]`` normalizes the element sum.
    """

    elements: tuple[LabeledOperator, ...]
    chain: tuple[LabeledOperator, ...]
    uses: int

    def __post_init__(self):
        n = self.uses
        expected = tuple(range(2 * n))
        elements = tuple(e.sorted() for e in self.elements)
        for e in elements:
            if e.labels != expected:
                raise ValueError(
                    f"tester elements must carry labels {expected}, got {e.labels}"
                )
        if len(self.chain) != n:
            raise ValueError(f"need {n} chain operators, got {len(self.chain)}")
        chain = tuple(x.sorted() for x in self.chain)
        for level, x in enumerate(chain, start=1):
            if x.labels != tuple(range(2 * level - 1)):
                raise ValueError(
                    f"chain level {level} must live on spaces 0..{2 * level - 2}"
                )
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "chain", chain)

    @property
    def n_outcomes(self) -> int:
        return len(self.elements)


def derive_chain(total: LabeledOperator, uses: int) -> tuple[LabeledOperator, ...]:
    """Normalization chain implied by the element sum, by nested partial traces."""
    top_label = 2 * uses - 1
    xi = partial_trace(total, [top_label]) * (1.0 / total.dim_of(top_label))
    chain = [xi]
    for n in range(uses, 1, -1):
        d_odd = xi.dim_of(2 * n - 3)
        xi = partial_trace(xi, [2 * n - 3, 2 * n - 2]) * (1.0 / d_odd)
        chain.append(xi)
    return tuple(reversed(chain))


def tester_from_elements(elements, uses: int) -> Tester:
    elements = tuple(e.sorted() for e in elements)
    total = elements[0]
    for e in elements[1:]:
        total = total + e
    return Tester(elements, derive_chain(total, uses), uses)


@dataclass(frozen=True)
class TesterValidation:
    valid: bool
    max_residual: float
    normalization_residual: float
    chain_residuals: dict = field(default_factory=dict)
    min_element_eigenvalue: float = 0.0


def validate_tester(t: Tester, tol: float = 1e-9) -> TesterValidation:
    """Check element positivity and the recursive chain normalization."""
    total = t.elements[0]
    for e in t.elements[1:]:
        total = total + e
    top_label = 2 * t.uses - 1
    lifted = tensor(t.chain[-1], identity([top_label], [total.dim_of(top_label)])).sorted()
    norm_res = float(np.linalg.norm(total.matrix - lifted.matrix))

    chain_res: dict[int, float] = {}
    for n in range(t.uses, 1, -1):
        xi_n = t.chain[n - 1]
        xi_prev = t.chain[n - 2]
        traced = partial_trace(xi_n, [2 * n - 2]).sorted()
        cand = tensor(xi_prev, identity([2 * n - 3], [xi_n.dim_of(2 * n - 3)])).sorted()
        chain_res[n] = float(np.linalg.norm(traced.matrix - cand.matrix))
    chain_res[1] = float(abs(t.chain[0].trace() - 1.0))

    min_eig = 0.0
    for e in t.elements:
        w, _ = matcore.eigh(e.matrix)
        min_eig = min(min_eig, float(w[0]))
    scale = max(1.0, float(np.linalg.norm(total.matrix)))
    residuals = [norm_res, max(0.0, -min_eig)] + list(chain_res.values())
    max_res = max(residuals)
    return TesterValidation(
        valid=bool(norm_res <= tol and max(chain_res.values()) <= tol
                   and min_eig >= -tol * scale),
        max_residual=max_res,
        normalization_residual=norm_res,
        chain_residuals=chain_res,
        min_element_eigenvalue=min_eig,
    )


def born_probabilities(t: Tester, mc: MemoryChannel) -> np.ndarray:
    """Generalized Born rule ``p(i) = Tr[P_i C]``."""
    c = mc.choi
    if t.elements[0].labels != c.labels or t.elements[0].dims != c.dims:
        raise ValueError("tester and comb act on different spaces")
    return np.array([float(np.trace(e.matrix @ c.matrix).real) for e in t.elements])


def povm_from_tester(t: Tester) -> list[LabeledOperator]:
    """POVM on the reduced output state, inverting the chain sandwiching.

    The inverse square root is taken on the support of the top chain element;
    the completion defect (its kernel, lifted) is assigned to the last
    outcome so the operators sum to the identity exactly.
    """
    xi = t.chain[-1]
    top_label = 2 * t.uses - 1
    d_top = t.elements[0].dim_of(top_label)
    lift = tensor(psd_inv_sqrt(xi), identity([top_label], [d_top])).sorted()
    povm = [lift @ e @ lift for e in t.elements]
    total = povm[0]
    for p in povm[1:]:
        total = total + p
    eye = identity(total.labels, total.dims)
    defect = eye - total
    povm[-1] = povm[-1] + defect
    return povm


def reduced_state(mc: MemoryChannel, t: Tester) -> LabeledOperator:
    """Output state after the tester's processing: chain-sandwiched Choi."""
    xi = t.chain[-1]
    top_label = 2 * t.uses - 1
    lift = tensor(psd_sqrt(xi), identity([top_label], [mc.choi.dim_of(top_label)])).sorted()
    return lift @ mc.choi @ lift


@dataclass(frozen=True)
class TesterCircuit:
    """Concrete measurement scheme realizing a tester.

    ``input_state`` is a density matrix on (space 0 ⊗ ancilla b_1), system
    factor first.  ``blocks[n-1]`` is an isometry from (space 2n-1 ⊗ ancilla
    b_n) to (space 2n ⊗ ancilla b_{n+1}).  ``povm`` lives on
    (space 2N-1 ⊗ ancilla b_N).
    """

    input_state: np.ndarray
    blocks: tuple[np.ndarray, ...]
    povm: tuple[np.ndarray, ...]
    system_dims: tuple[int, ...]
    ancilla_dims: tuple[int, ...]

    def __post_init__(self):
        sd, ad = self.system_dims, self.ancilla_dims
        n = len(ad)
        if len(sd) != 2 * n:
            raise ValueError("need dims for spaces 0..2N-1 and ancillas b_1..b_N")
        if len(self.blocks) != n - 1:
            raise ValueError(f"need {n - 1} processing blocks, got {len(self.blocks)}")
        state = np.asarray(self.input_state, dtype=complex)
        d0 = sd[0] * ad[0]
        if state.shape != (d0, d0):
            raise ValueError(f"input state has shape {state.shape}, expected {(d0, d0)}")
        if abs(np.trace(state).real - 1.0) > 1e-9:
            raise ValueError("input state must have unit trace")
        blocks = tuple(np.asarray(b, dtype=complex) for b in self.blocks)
        for j, b in enumerate(blocks, start=1):
            din = sd[2 * j - 1] * ad[j - 1]
            dout = sd[2 * j] * ad[j]
            if b.shape != (dout, din):
                raise ValueError(f"block {j} has shape {b.shape}, expected ({dout}, {din})")
            if np.linalg.norm(b.conj().T @ b - np.eye(din)) > 1e-9 * max(1.0, din):
                raise ValueError(f"block {j} is not an isometry")
        povm = tuple(np.asarray(m, dtype=complex) for m in self.povm)
        dm = sd[-1] * ad[-1]
        acc = np.zeros((dm, dm), dtype=complex)
        for m in povm:
            if m.shape != (dm, dm):
                raise ValueError(f"POVM element shape {m.shape}, expected ({dm}, {dm})")
            acc += m
        if np.linalg.norm(acc - np.eye(dm)) > 1e-9 * max(1.0, dm):
            raise ValueError("POVM does not sum to the identity")
        object.__setattr__(self, "input_state", state)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "povm", povm)

    @property
    def uses(self) -> int:
        return len(self.ancilla_dims)


def _split_labels(label_sys: int, d_sys: int, label_anc: int, d_anc: int):
    labels, dims = [label_sys], [d_sys]
    if d_anc > 1:
        labels.append(label_anc)
        dims.append(d_anc)
    return tuple(labels), tuple(dims)


def tester_from_circuit(tc: TesterCircuit) -> Tester:
    """Tester elements of a circuit scheme, by link-product contraction.

    Each circuit component contributes its Choi operator (the measurement
    contributes the transpose of its POVM element); contracting over the
    ancilla wires and transposing the result on the open comb wires yields
    the elements.
    """
    n = tc.uses
    sd, ad = tc.system_dims, tc.ancilla_dims
    prep_labels, prep_dims = _split_labels(0, sd[0], _TESTER_ANCILLA + 1, ad[0])
    network = LabeledOperator(tc.input_state, prep_labels, prep_dims)
    for j, block in enumerate(tc.blocks, start=1):
        in_labels, in_dims = _split_labels(2 * j - 1, sd[2 * j - 1],
                                           _TESTER_ANCILLA + j, ad[j - 1])
        out_labels, out_dims = _split_labels(2 * j, sd[2 * j],
                                             _TESTER_ANCILLA + j + 1, ad[j])
        v = matcore.double_ket(block)
        choi = LabeledOperator(np.outer(v, v.conj()),
                               out_labels + in_labels, out_dims + in_dims)
        network = link(network, choi)
    m_labels, m_dims = _split_labels(2 * n - 1, sd[2 * n - 1], _TESTER_ANCILLA + n, ad[-1])
    elements = []
    for m in tc.povm:
        piece = LabeledOperator(m.T, m_labels, m_dims)
        elements.append(link(network, piece).transpose().sorted())
    return tester_from_elements(elements, n)


def _apply_block(state: LabeledOperator, block: np.ndarray,
                 in_labels, out_labels, out_dims) -> LabeledOperator:
    """Conjugate a labeled density operator by (block ⊗ identity on the rest)."""
    in_labels = list(in_labels)
    rest = [l for l in state.labels if l not in in_labels]
    s = state.permuted(tuple(in_labels + rest))
    d_rest = int(np.prod([s.dim_of(l) for l in rest])) if rest else 1
    full = np.kron(block, np.eye(d_rest))
    out = full @ s.matrix @ full.conj().T
    labels = tuple(list(out_labels) + rest)
    dims = tuple(list(out_dims) + [s.dim_of(l) for l in rest])
    return LabeledOperator(out, labels, dims)


_COMB_ANCILLA = 30_000


def simulate_tester_circuit(tc: TesterCircuit, comb: IsometricComb) -> np.ndarray:
    """Outcome distribution by explicit state evolution through the scheme.

    Alternates the comb's isometric blocks with the tester's processing
    blocks, traces the comb's final memory, and applies the POVM.  Serves as
    the independent oracle for the generalized Born rule.
    """
    n = tc.uses
    if comb.uses != n:
        raise ValueError("tester circuit and comb have different numbers of uses")
    if comb.system_dims != tc.system_dims:
        raise ValueError("tester circuit and comb disagree on system dimensions")
    sd, ad = tc.system_dims, tc.ancilla_dims
    prep_labels, prep_dims = _split_labels(0, sd[0], _TESTER_ANCILLA, ad[0])
    state = LabeledOperator(tc.input_state, prep_labels, prep_dims)
    anc_in = 1
    for j in range(n):
        out_labels, out_dims = _split_labels(2 * j + 1, sd[2 * j + 1],
                                             _COMB_ANCILLA, comb.ancilla_dims[j])
        in_labels = [2 * j] + ([_COMB_ANCILLA] if anc_in > 1 else [])
        state = _apply_block(state, comb.blocks[j], in_labels, out_labels, out_dims)
        anc_in = comb.ancilla_dims[j]
        if j < n - 1:
            t_out_labels, t_out_dims = _split_labels(2 * j + 2, sd[2 * j + 2],
                                                     _TESTER_ANCILLA, ad[j + 1])
            t_in_labels = [2 * j + 1] + ([_TESTER_ANCILLA] if ad[j] > 1 else [])
            state = _apply_block(state, tc.blocks[j], t_in_labels, t_out_labels, t_out_dims)
    if anc_in > 1:
        state = partial_trace(state, [_COMB_ANCILLA])
    m_labels = [2 * n - 1] + ([_TESTER_ANCILLA] if ad[-1] > 1 else [])
    state = state.permuted(tuple(m_labels))
    return np.array([float(np.trace(m @ state.matrix).real) for m in tc.povm])

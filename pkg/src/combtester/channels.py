"""Channels and memory channels (combs) in the Choi representation.

Space labeling follows the time-ordered wire numbering used throughout:
an N-use memory channel acts on spaces ``0 .. 2N-1`` with even labels the
inputs and odd labels the outputs.  Comb Choi operators are stored with
tensor factors in ascending label order.

With the row-major vectorization of :mod:`combtester.matcore`, the Choi
operator of a channel with Kraus operators ``K_j`` is ``sum_j |K_j>><<K_j|``
on (output, input); trace preservation reads ``Tr_out C = I_in``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .matcore import (
    LabeledOperator,
    double_ket,
    identity,
    link,
    partial_trace,
    tensor,
    tensor_many,
)

TP_TOL = 1e-9


@dataclass(frozen=True)
class Channel:
    """Completely positive trace-preserving map in Kraus form."""

    kraus: tuple[np.ndarray, ...]
    in_dim: int
    out_dim: int

    def __post_init__(self):
        ks = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise ValueError("a channel needs at least one Kraus operator")
        for j, k in enumerate(ks):
            if k.shape != (self.out_dim, self.in_dim):
                raise ValueError(
                    f"Kraus operator {j} has shape {k.shape}, "
                    f"expected ({self.out_dim}, {self.in_dim})"
                )
        acc = sum(k.conj().T @ k for k in ks)
        if np.linalg.norm(acc - np.eye(self.in_dim)) > TP_TOL * max(1.0, self.in_dim):
            raise ValueError("Kraus operators do not satisfy trace preservation")
        frozen = []
        for k in ks:
            k = k.copy()
            k.flags.writeable = False
            frozen.append(k)
        object.__setattr__(self, "kraus", tuple(frozen))


@dataclass(frozen=True)
class MemoryChannel:
    """An N-use comb: Choi operator on spaces 0..2N-1, ascending factor order."""

    choi: LabeledOperator
    uses: int

    def __post_init__(self):
        n = self.uses
        expected = tuple(range(2 * n))
        c = self.choi.sorted()
        if c.labels != expected:
            raise ValueError(
                f"a {n}-use comb must carry labels {expected}, got {self.choi.labels}"
            )
        object.__setattr__(self, "choi", c)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.choi.dims

    @property
    def input_dims(self) -> tuple[int, ...]:
        return self.choi.dims[0::2]

    @property
    def output_dims(self) -> tuple[int, ...]:
        return self.choi.dims[1::2]


def identity_channel(d: int) -> Channel:
    return Channel((np.eye(d, dtype=complex),), d, d)


def unitary_channel(u: np.ndarray) -> Channel:
    u = np.asarray(u, dtype=complex)
    return Channel((u,), u.shape[1], u.shape[0])


def choi_from_kraus(ch: Channel, out_label: int = 1, in_label: int = 0) -> LabeledOperator:
    """Choi operator sum_j |K_j>><<K_j| with factor order (output, input)."""
    d = ch.out_dim * ch.in_dim
    c = np.zeros((d, d), dtype=complex)
    for k in ch.kraus:
        v = double_ket(k)
        c += np.outer(v, v.conj())
    return LabeledOperator(c, (out_label, in_label), (ch.out_dim, ch.in_dim))


def kraus_from_choi(c: LabeledOperator, in_dim: int, out_dim: int) -> Channel:
    """Extract a Kraus form from a valid Choi operator.

    The two-label operator is read with the higher label as the output
    space.  Eigenvectors with eigenvalue above the support cutoff become
    Kraus operators; the round trip through ``choi_from_kraus`` reproduces
    the input.
    """
    if len(c.labels) != 2:
        raise ValueError("kraus_from_choi expects a two-label Choi operator")
    out_label, in_label = max(c.labels), min(c.labels)
    c = c.permuted((out_label, in_label))
    if c.dims != (out_dim, in_dim):
        raise ValueError(f"Choi dims {c.dims} do not match ({out_dim}, {in_dim})")
    red = partial_trace(c, [out_label])
    if np.linalg.norm(red.matrix - np.eye(in_dim)) > 1e-8 * max(1.0, in_dim):
        raise ValueError("Choi operator is not trace preserving to tolerance")
    w, v = matcore.eigh(c.matrix)
    if w[0] < matcore.PSD_FAIL * max(1.0, abs(w[-1])):
        raise ValueError("Choi operator is not positive semidefinite")
    kraus = [
        np.sqrt(w[j]) * matcore.undouble_ket(v[:, j], out_dim, in_dim)
        for j in range(len(w))
        if w[j] > 1e-12
    ]
    return Channel(tuple(kraus), in_dim, out_dim)


def apply_channel(ch: Channel, state: np.ndarray) -> np.ndarray:
    """sum_j K_j rho K_j† for a density matrix rho."""
    rho = np.asarray(state, dtype=complex)
    if rho.shape != (ch.in_dim, ch.in_dim):
        raise ValueError(f"state has shape {rho.shape}, channel input is {ch.in_dim}")
    out = np.zeros((ch.out_dim, ch.out_dim), dtype=complex)
    for k in ch.kraus:
        out += k @ rho @ k.conj().T
    return out


def compose_channels(second: Channel, first: Channel) -> Channel:
    """Kraus form of ``second ∘ first`` (first applied first)."""
    if first.out_dim != second.in_dim:
        raise ValueError("channel composition dimension mismatch")
    kraus = tuple(k2 @ k1 for k1 in first.kraus for k2 in second.kraus)
    return Channel(kraus, first.in_dim, second.out_dim)


def comb_from_sequence(channels: list[Channel]) -> MemoryChannel:
    """Memoryless N-use comb: tensor product of per-use Choi operators."""
    if not channels:
        raise ValueError("need at least one channel")
    parts = [
        choi_from_kraus(ch, out_label=2 * j + 1, in_label=2 * j)
        for j, ch in enumerate(channels)
    ]
    return MemoryChannel(tensor_many(parts).sorted(), len(channels))


@dataclass(frozen=True)
class IsometricComb:
    """Isometric realization of an N-use comb.

    Block ``n`` (0-based) is an isometry from (input space 2n ⊗ ancilla
    ``a_n``) to (output space 2n+1 ⊗ ancilla ``a_{n+1}``), with system factor
    first and ``a_0 = 1``.  The final ancilla is traced out.
    """

    blocks: tuple[np.ndarray, ...]
    system_dims: tuple[int, ...]
    ancilla_dims: tuple[int, ...]

    def __post_init__(self):
        blocks = tuple(np.asarray(b, dtype=complex) for b in self.blocks)
        n = len(blocks)
        if len(self.system_dims) != 2 * n:
            raise ValueError("need one (input, output) dim pair per block")
        if len(self.ancilla_dims) != n:
            raise ValueError("need one output-ancilla dim per block")
        anc_in = 1
        for j, b in enumerate(blocks):
            din = self.system_dims[2 * j] * anc_in
            dout = self.system_dims[2 * j + 1] * self.ancilla_dims[j]
            if b.shape != (dout, din):
                raise ValueError(
                    f"block {j} has shape {b.shape}, expected ({dout}, {din})"
                )
            if np.linalg.norm(b.conj().T @ b - np.eye(din)) > 1e-9 * max(1.0, din):
                raise ValueError(f"block {j} is not an isometry to tolerance")
            anc_in = self.ancilla_dims[j]
        object.__setattr__(self, "blocks", blocks)

    @property
    def uses(self) -> int:
        return len(self.blocks)


def _isometry_choi(block: np.ndarray, out_labels, out_dims, in_labels, in_dims) -> LabeledOperator:
    v = double_ket(block)
    c = np.outer(v, v.conj())
    return LabeledOperator(c, tuple(out_labels) + tuple(in_labels), tuple(out_dims) + tuple(in_dims))


def _traced_final_choi(block: np.ndarray, sys_out: int, anc_out: int,
                       out_label: int, in_labels, in_dims) -> LabeledOperator:
    """Choi of (trace over final ancilla) ∘ block, never materializing the
    rank-one Choi on the full ancilla space."""
    din = int(np.prod(in_dims))
    t = block.reshape(sys_out, anc_out, din)
    c = np.einsum("cax,day->cxdy", t, t.conj(), optimize=True)
    side = sys_out * din
    return LabeledOperator(
        c.reshape(side, side), (out_label,) + tuple(in_labels), (sys_out,) + tuple(in_dims)
    )


_ANCILLA_BASE = 10_000


def comb_from_isometries(comb: IsometricComb) -> MemoryChannel:
    """Choi operator of the comb induced by an isometric block chain."""
    n = comb.uses
    chois = []
    anc_in = 1
    for j, block in enumerate(comb.blocks):
        sys_in, sys_out = comb.system_dims[2 * j], comb.system_dims[2 * j + 1]
        anc_out = comb.ancilla_dims[j]
        in_labels, in_dims = [2 * j], [sys_in]
        if anc_in > 1:
            in_labels.append(_ANCILLA_BASE + j)
            in_dims.append(anc_in)
        if j == n - 1:
            chois.append(
                _traced_final_choi(block, sys_out, anc_out, 2 * j + 1, in_labels, in_dims)
            )
        else:
            out_labels, out_dims = [2 * j + 1], [sys_out]
            if anc_out > 1:
                out_labels.append(_ANCILLA_BASE + j + 1)
                out_dims.append(anc_out)
            chois.append(
                _isometry_choi(block, out_labels, out_dims, in_labels, in_dims)
            )
        anc_in = anc_out
    out = chois[0]
    for c in chois[1:]:
        out = link(out, c)
    return MemoryChannel(out.sorted(), n)


@dataclass(frozen=True)
class CombValidation:
    valid: bool
    max_residual: float
    level_residuals: dict = field(default_factory=dict)
    min_eigenvalue: float = 0.0


def validate_comb(mc: MemoryChannel, tol: float = 1e-9) -> CombValidation:
    """Check the recursive causal-structure constraints of a comb.

    Peels uses from the last to the first: tracing the top output space of
    the n-use reduction must leave (identity on the top input space) ⊗ (the
    (n-1)-use reduction), down to a scalar 1 at level zero.  The candidate
    lower reduction is obtained by a normalized partial trace, so the test is
    exact whenever the constraints hold.
    """
    c = mc.choi
    levels: dict[int, float] = {}
    w, _ = matcore.eigh(c.matrix)
    scale = max(1.0, float(abs(w[-1])) if len(w) else 1.0)
    min_eig = float(w[0])
    current = c
    for n in range(mc.uses, 0, -1):
        out_label, in_label = 2 * n - 1, 2 * n - 2
        d_in = current.dim_of(in_label)
        traced = partial_trace(current, [out_label]).sorted()
        lower = partial_trace(traced, [in_label]) * (1.0 / d_in)
        candidate = tensor(lower, identity([in_label], [d_in])).sorted()
        fact_res = float(np.linalg.norm(traced.matrix - candidate.matrix))
        # the n-use reduction of a valid comb has trace = product of its
        # input dimensions, so a normalization deficit is charged to the
        # level where it first appears instead of trickling to the bottom
        expected_trace = float(np.prod(current.dims[0::2]))
        trace_res = float(abs(current.trace() - expected_trace))
        levels[n] = max(fact_res, trace_res)
        current = lower
    levels[0] = float(abs(current.matrix[0, 0] - 1.0))
    max_res = max(max(levels.values()), max(0.0, -min_eig / scale))
    return CombValidation(
        valid=bool(max_res <= tol and min_eig >= -tol * scale),
        max_residual=max_res,
        level_residuals=levels,
        min_eigenvalue=min_eig,
    )

"""Stability verdict and explicit steady-state construction.

The verdict is a trichotomy. All blocks sub-critical: asymptotically stable,
only the zero fixed point. Any super-critical block, or any directed path
between two critical blocks: unstable. Otherwise marginally stable, and the
non-negative steady states form a family with one free parameter per final
critical block (a critical block with no critical block downstream).

A basis vector for free block k is zero outside the cone downstream of k,
carries the block's positive eigenvector on k itself, and is propagated
through downstream sub-critical blocks by one linear solve each, in
topological order. The alternating path-sum form of the same propagation is
kept as a cross-validation oracle only; enumerating block paths is
exponential in the condensation size.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .condensation import Condensation, extract_coupling, upstream_reachability
from .errors import (
    BadBlockOrder,
    NegativeSteadyStateEntry,
    NotMarginallyStable,
    SingularSubCriticalSolve,
    SuperCriticalPresent,
    TooManyBlocks,
)
from .spectral import BlockClass, BlockSpectrum, SpectralOptions, analyze_all_blocks
from .system import CooperativeSystem

TINY_PIVOT_REL = 1e-13


class Verdict(enum.Enum):
    ASYMPTOTICALLY_STABLE = "asymptotically-stable"
    MARGINALLY_STABLE = "marginally-stable"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class SuperCriticalBlock:
    block_index: int


@dataclass(frozen=True)
class CriticalPath:
    upstream_block: int
    downstream_block: int
    path: tuple[int, ...]


@dataclass(frozen=True)
class BlockRole:
    block_index: int
    is_trivial: bool
    is_final_critical: bool

    @property
    def is_free(self) -> bool:
        return self.is_final_critical


@dataclass(frozen=True)
class StabilityReport:
    verdict: Verdict
    unstable_reason: SuperCriticalBlock | CriticalPath | None
    algebraic_multiplicity_zero: int
    geometric_multiplicity_zero: int
    roles: tuple[BlockRole, ...]


@dataclass(frozen=True, eq=False)
class SteadyStateBasis:
    """Non-negative nullspace basis, one full-length vector per free block.

    The general steady state is sum over k of alpha_k * vectors[k] with free
    parameters named in free_parameters.
    """

    vectors: tuple[np.ndarray, ...]
    free_blocks: tuple[int, ...]
    free_parameters: tuple[str, ...]


def _classes(spectra: Sequence[BlockSpectrum]) -> list[BlockClass]:
    return [s.classification for s in spectra]


def _final_criticals(critical: list[int], reach: np.ndarray) -> list[int]:
    crit_set = set(critical)
    return [
        k for k in critical
        if not any(reach[k, c] for c in crit_set if c != k)
    ]


def _trivial_set(classes: list[BlockClass], reach: np.ndarray) -> set[int]:
    """Topological characterization: a block is trivial iff it is upstream of a
    critical block, or it is sub-critical and not downstream of any critical
    block. Only meaningful when no super-critical block exists."""
    h = len(classes)
    critical = [k for k in range(h) if classes[k] is BlockClass.CRITICAL]
    out: set[int] = set()
    for k in range(h):
        upstream_of_crit = any(reach[k, c] for c in critical if c != k)
        downstream_of_crit = any(reach[c, k] for c in critical if c != k)
        if upstream_of_crit:
            out.add(k)
        elif classes[k] is BlockClass.SUB_CRITICAL and not downstream_of_crit:
            out.add(k)
    return out


def trivial_blocks(cond: Condensation, spectra: Sequence[BlockSpectrum]) -> set[int]:
    """Blocks whose sub-vector is zero in every non-negative stable fixed point."""
    classes = _classes(spectra)
    if any(c is BlockClass.SUPER_CRITICAL for c in classes):
        bad = next(k for k, c in enumerate(classes) if c is BlockClass.SUPER_CRITICAL)
        raise SuperCriticalPresent(f"block {bad} is super-critical")
    return _trivial_set(classes, upstream_reachability(cond))


def _shortest_critical_path(cond: Condensation, critical: list[int]) -> CriticalPath | None:
    """Shortest directed block path connecting two critical blocks (BFS),
    ties broken towards smaller block indices for deterministic reports."""
    succ: list[list[int]] = [[] for _ in range(cond.h)]
    for l, k in sorted(cond.dag_edges):
        succ[l].append(k)
    crit_set = set(critical)
    best: tuple[int, int, int, tuple[int, ...]] | None = None
    for src in sorted(critical):
        parent = {src: -1}
        queue = deque([src])
        while queue:
            v = queue.popleft()
            for w in succ[v]:
                if w in parent:
                    continue
                parent[w] = v
                if w in crit_set:
                    path = [w]
                    while path[-1] != src:
                        path.append(parent[path[-1]])
                    path.reverse()
                    cand = (len(path), src, w, tuple(path))
                    if best is None or cand < best:
                        best = cand
                    queue.clear()
                    break
                queue.append(w)
    if best is None:
        return None
    _, src, dst, path = best
    return CriticalPath(upstream_block=src, downstream_block=dst, path=path)


def verdict(cond: Condensation, spectra: Sequence[BlockSpectrum]) -> StabilityReport:
    """Apply the graph-theoretic criterion and report the evidence.

    Algebraic multiplicity of eigenvalue zero is the number of critical
    blocks; geometric multiplicity is the number of final critical blocks.
    Trivial flags are computed only in the no-super-critical regime where the
    characterization holds; with a super-critical block present they are all
    False.
    """
    classes = _classes(spectra)
    reach = upstream_reachability(cond)
    critical = [k for k, c in enumerate(classes) if c is BlockClass.CRITICAL]
    supers = [k for k, c in enumerate(classes) if c is BlockClass.SUPER_CRITICAL]
    final = _final_criticals(critical, reach)
    final_set = set(final)

    if supers:
        roles = tuple(
            BlockRole(k, False, k in final_set) for k in range(cond.h)
        )
        return StabilityReport(
            verdict=Verdict.UNSTABLE,
            unstable_reason=SuperCriticalBlock(min(supers)),
            algebraic_multiplicity_zero=len(critical),
            geometric_multiplicity_zero=len(final),
            roles=roles,
        )

    trivial = _trivial_set(classes, reach)
    roles = tuple(
        BlockRole(k, k in trivial, k in final_set) for k in range(cond.h)
    )

    if not critical:
        return StabilityReport(
            verdict=Verdict.ASYMPTOTICALLY_STABLE,
            unstable_reason=None,
            algebraic_multiplicity_zero=0,
            geometric_multiplicity_zero=0,
            roles=roles,
        )

    witness = _shortest_critical_path(cond, critical)
    if witness is not None:
        return StabilityReport(
            verdict=Verdict.UNSTABLE,
            unstable_reason=witness,
            algebraic_multiplicity_zero=len(critical),
            geometric_multiplicity_zero=len(final),
            roles=roles,
        )

    return StabilityReport(
        verdict=Verdict.MARGINALLY_STABLE,
        unstable_reason=None,
        algebraic_multiplicity_zero=len(critical),
        geometric_multiplicity_zero=len(final),
        roles=roles,
    )


def full_analysis(
    system: CooperativeSystem, opts: SpectralOptions | None = None
) -> tuple[Condensation, list[BlockSpectrum], StabilityReport]:
    """Condense, analyze every block, and render the verdict in one call."""
    from .condensation import condense

    cond = condense(system)
    spectra = analyze_all_blocks(cond, opts)
    return cond, spectra, verdict(cond, spectra)


def _solve_block(
    lu_cache: dict, cond: Condensation, l: int, rhs: np.ndarray
) -> np.ndarray:
    if l not in lu_cache:
        b = cond.blocks[l].matrix
        lu, piv = lu_factor(b)
        if np.min(np.abs(np.diag(lu))) <= TINY_PIVOT_REL * max(
            1e-300, float(np.max(np.sum(np.abs(b), axis=1)))
        ):
            raise SingularSubCriticalSolve(l)
        lu_cache[l] = (lu, piv)
    return lu_solve(lu_cache[l], rhs)


def steady_state_basis(
    cond: Condensation,
    spectra: Sequence[BlockSpectrum],
    roles: Sequence[BlockRole] | None = None,
    *,
    force: bool = False,
    residual_tol: float = 1e-10,
) -> SteadyStateBasis:
    """Construct one non-negative nullspace basis vector per free block.

    Refuses to run unless the system is marginally stable; `force` computes
    the (still well-defined) zero-eigenvectors for a system that is unstable
    only through a critical-critical path. Super-critical blocks always
    refuse: the construction is not defined for them.
    """
    classes = _classes(spectra)
    if any(c is BlockClass.SUPER_CRITICAL for c in classes):
        bad = next(k for k, c in enumerate(classes) if c is BlockClass.SUPER_CRITICAL)
        raise SuperCriticalPresent(f"block {bad} is super-critical")
    critical = [k for k, c in enumerate(classes) if c is BlockClass.CRITICAL]
    if not critical:
        raise NotMarginallyStable(
            "all blocks are sub-critical; the only fixed point is zero"
        )
    reach = upstream_reachability(cond)
    witness = _shortest_critical_path(cond, critical)
    if witness is not None and not force:
        raise NotMarginallyStable(
            f"critical blocks {witness.upstream_block} and {witness.downstream_block} "
            f"are connected by a path"
        )

    if roles is None:
        final = _final_criticals(critical, reach)
    else:
        final = [r.block_index for r in roles if r.is_final_critical]

    sources_of: dict[int, list[int]] = {}
    for (k, l) in cond.cross_entries:
        sources_of.setdefault(k, []).append(l)

    n = len(cond.node_to_block)
    lu_cache: dict = {}
    vectors: list[np.ndarray] = []
    for k in final:
        x = np.zeros(n)
        x[list(cond.blocks[k].nodes)] = spectra[k].phi
        for l in range(k + 1, cond.h):
            if classes[l] is not BlockClass.SUB_CRITICAL:
                continue
            rhs = np.zeros(cond.blocks[l].size)
            for src in sources_of.get(l, ()):
                src_nodes = cond.blocks[src].nodes
                for li, lj, v in cond.cross_entries[(l, src)]:
                    rhs[li] += v * x[src_nodes[lj]]
            if not rhs.any():
                continue
            sol = _solve_block(lu_cache, cond, l, -rhs)
            clamp = 10.0 * residual_tol * max(1.0, float(np.max(np.abs(sol))))
            neg = sol < 0
            if np.any(sol < -clamp):
                worst = int(np.argmin(sol))
                raise NegativeSteadyStateEntry(
                    l, cond.blocks[l].nodes[worst], float(sol[worst])
                )
            sol[neg] = 0.0
            x[list(cond.blocks[l].nodes)] = sol
        x.setflags(write=False)
        vectors.append(x)

    return SteadyStateBasis(
        vectors=tuple(vectors),
        free_blocks=tuple(final),
        free_parameters=tuple(f"alpha_{k}" for k in final),
    )


def nullspace_residual(system: CooperativeSystem, vector: np.ndarray) -> float:
    """Infinity norm of A v, the defect of v as a fixed point."""
    out = np.zeros(system.n)
    for (i, j), v in system.entries.items():
        out[i] += v * vector[j]
    return float(np.max(np.abs(out))) if system.n else 0.0


def path_sum_matrix(
    cond: Condensation,
    spectra: Sequence[BlockSpectrum],
    k: int,
    l: int,
    *,
    max_blocks: int = 12,
) -> np.ndarray:
    """Alternating sum over all directed block paths from l to k.

    Each path l -> b_1 -> ... -> b_{n-1} -> k of n edges contributes
    (-1)^(n-1) C[k, b_{n-1}] B_{b_{n-1}}^{-1} ... B_{b_1}^{-1} C[b_1, l].
    Test oracle only; path enumeration is exponential in the block count.
    """
    if cond.h > max_blocks:
        raise TooManyBlocks(cond.h, max_blocks)
    if not (0 <= l < k < cond.h):
        raise BadBlockOrder(f"need 0 <= l < k < h, got l={l}, k={k}, h={cond.h}")

    succ: list[list[int]] = [[] for _ in range(cond.h)]
    for a, b in sorted(cond.dag_edges):
        succ[a].append(b)

    inv_cache: dict[int, np.ndarray] = {}

    def inv_block(b: int) -> np.ndarray:
        if b not in inv_cache:
            inv_cache[b] = np.linalg.inv(cond.blocks[b].matrix)
        return inv_cache[b]

    def coupling(t: int, s: int) -> np.ndarray:
        return extract_coupling(cond, t, s).matrix

    total = np.zeros((cond.blocks[k].size, cond.blocks[l].size))
    stack: list[list[int]] = [[l]]
    while stack:
        path = stack.pop()
        for nxt in succ[path[-1]]:
            if nxt == k:
                full = path + [k]
                n_edges = len(full) - 1
                term = coupling(full[1], full[0])
                for step in range(1, n_edges):
                    term = coupling(full[step + 1], full[step]) @ inv_block(full[step]) @ term
                total += (-1.0) ** (n_edges - 1) * term
            elif nxt < k:
                stack.append(path + [nxt])
    return total


def steady_state_by_path_sum(
    cond: Condensation,
    spectra: Sequence[BlockSpectrum],
    free_block: int,
    *,
    max_blocks: int = 12,
) -> np.ndarray:
    """Basis vector for one free block evaluated through the path-sum form;
    cross-validates the recursive propagation."""
    classes = _classes(spectra)
    n = len(cond.node_to_block)
    x = np.zeros(n)
    phi = spectra[free_block].phi
    x[list(cond.blocks[free_block].nodes)] = phi
    for k in range(free_block + 1, cond.h):
        if classes[k] is not BlockClass.SUB_CRITICAL:
            continue
        p = path_sum_matrix(cond, spectra, k, free_block, max_blocks=max_blocks)
        if not p.any():
            continue
        sol = -np.linalg.inv(cond.blocks[k].matrix) @ (p @ phi)
        x[list(cond.blocks[k].nodes)] = sol
    x.setflags(write=False)
    return x


def find_traps(cond: Condensation, spectra: Sequence[BlockSpectrum]) -> tuple[int, ...]:
    """Critical blocks with no outgoing edges; in a compartmental system these
    are exactly the blocks that can hold mass forever."""
    has_out = {l for (l, _) in cond.dag_edges}
    return tuple(
        k for k, s in enumerate(spectra)
        if s.classification is BlockClass.CRITICAL and k not in has_out
    )

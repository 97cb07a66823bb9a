"""Mixing-matrix algebra, weight optimization, and the FMMD design family."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netmodel import CategoryTable
from .routing import tau_bar

__all__ = [
    "MixingMatrix",
    "complete_edges",
    "incidence_matrix",
    "swap_atom",
    "mixing_from_weights",
    "rho",
    "decompose_to_atoms",
    "metropolis_weights",
    "optimize_weights",
    "fmmd",
    "benchmark_topology",
]

SUPPORT_TOL = 1e-9


def complete_edges(m: int) -> list[tuple[int, int]]:
    """Complete overlay edge set in lexicographic order."""
    return [(i, j) for i in range(m) for j in range(i + 1, m)]


def incidence_matrix(m: int) -> np.ndarray:
    """Node-edge incidence matrix under the lexicographic edge orientation."""
    edges = complete_edges(m)
    b = np.zeros((m, len(edges)))
    for idx, (i, j) in enumerate(edges):
        b[i, idx] = 1.0
        b[j, idx] = -1.0
    return b


@dataclass(frozen=True)
class MixingMatrix:
    """Symmetric mixing matrix carried as overlay link weights.

    `alpha` is indexed over complete_edges(m); the dense matrix is
    I - B diag(alpha) B^T, so off-diagonal (i, j) equals alpha_ij and every
    row sums to one by construction.
    """

    m: int
    alpha: np.ndarray

    def __post_init__(self):
        expected = self.m * (self.m - 1) // 2
        if self.alpha.shape != (expected,):
            raise ValueError(
                f"alpha must have length {expected}, got {self.alpha.shape}"
            )

    def dense(self) -> np.ndarray:
        b = incidence_matrix(self.m)
        return np.eye(self.m) - b @ np.diag(self.alpha) @ b.T

    def support(self, tol: float = SUPPORT_TOL) -> list[tuple[int, int]]:
        """Activated overlay links: weights nonzero beyond tolerance."""
        edges = complete_edges(self.m)
        return [e for e, a in zip(edges, self.alpha) if abs(a) > tol]

    def weight(self, i: int, j: int) -> float:
        edges = complete_edges(self.m)
        return float(self.alpha[edges.index((min(i, j), max(i, j)))])


def mixing_from_weights(alpha, m: int) -> MixingMatrix:
    alpha = np.asarray(alpha, dtype=float)
    return MixingMatrix(m=m, alpha=alpha)


def _averaging_matrix(m: int) -> np.ndarray:
    return np.full((m, m), 1.0 / m)


def rho(w) -> float:
    """Spectral norm of W - J (largest |eigenvalue| of the symmetric gap)."""
    dense = w.dense() if isinstance(w, MixingMatrix) else np.asarray(w, dtype=float)
    m = dense.shape[0]
    gap = dense - _averaging_matrix(m)
    return float(np.max(np.abs(np.linalg.eigvalsh(gap))))


def swap_atom(m: int, i: int, j: int) -> np.ndarray:
    """Identity with rows/columns i and j swapped."""
    s = np.eye(m)
    s[i, i] = s[j, j] = 0.0
    s[i, j] = s[j, i] = 1.0
    return s


def decompose_to_atoms(w: MixingMatrix) -> dict:
    """Write W as a combination of the identity and swap atoms.

    Returns a map with key "identity" and one key per overlay link; the
    reconstruction sum(coeff * atom) equals W exactly.
    """
    coeffs: dict = {"identity": float(1.0 - np.sum(w.alpha))}
    for edge, a in zip(complete_edges(w.m), w.alpha):
        coeffs[edge] = float(a)
    return coeffs


def metropolis_weights(e_a, m: int) -> np.ndarray:
    """Metropolis-style initial weights 1 / (1 + max degree) on the support."""
    edges = complete_edges(m)
    active = {tuple(sorted(e)) for e in e_a}
    deg = [0] * m
    for i, j in active:
        deg[i] += 1
        deg[j] += 1
    alpha = np.zeros(len(edges))
    for idx, (i, j) in enumerate(edges):
        if (i, j) in active:
            alpha[idx] = 1.0 / (1.0 + max(deg[i], deg[j]))
    return alpha


def _top_eigenpair(gap: np.ndarray):
    """Dominant eigenpair of a symmetric matrix, ties by smallest index.

    Eigenpairs are ordered by (-|eigenvalue|, position in the ascending
    eigh output); returns (eigenvalue, eigenvector).
    """
    vals, vecs = np.linalg.eigh(gap)
    order = sorted(range(len(vals)), key=lambda k: (-abs(vals[k]), k))
    top = order[0]
    return float(vals[top]), vecs[:, top]


def optimize_weights(
    e_a,
    m: int,
    step_scale: float = 0.5,
    max_iter: int = 5000,
    patience: int = 200,
    patience_tol: float = 1e-7,
) -> tuple[np.ndarray, float]:
    """Minimize the consensus gap norm over the weights of the given links.

    Projected subgradient descent on ||I - B diag(alpha) B^T - J|| with the
    non-activated coordinates pinned at zero; starts from the Metropolis
    weights and keeps the best iterate seen. A disconnected support cannot
    go below 1 and is simply reported as such.
    """
    edges = complete_edges(m)
    active = {tuple(sorted(e)) for e in e_a}
    active_idx = np.array(
        [k for k, e in enumerate(edges) if e in active], dtype=int
    )
    b = incidence_matrix(m)
    j_mat = _averaging_matrix(m)

    alpha = metropolis_weights(active, m)

    def objective(a):
        gap = np.eye(m) - b @ np.diag(a) @ b.T - j_mat
        return _top_eigenpair(gap)

    lam, vec = objective(alpha)
    best_alpha, best_val = alpha.copy(), abs(lam)
    last_improve = 0
    if active_idx.size:
        for t in range(1, max_iter + 1):
            # d|lambda|/d alpha_e = -sign(lambda) (v_i - v_j)^2
            diffs = vec[[edges[k][0] for k in active_idx]] - vec[
                [edges[k][1] for k in active_idx]
            ]
            grad = -np.sign(lam) * diffs**2
            alpha = alpha.copy()
            alpha[active_idx] -= (step_scale / np.sqrt(t)) * grad
            lam, vec = objective(alpha)
            val = abs(lam)
            if val < best_val - patience_tol:
                best_alpha, best_val = alpha.copy(), val
                last_improve = t
            elif val < best_val:
                best_alpha, best_val = alpha.copy(), val
            if t - last_improve >= patience:
                break
    return best_alpha, best_val


@dataclass(frozen=True)
class FmmdResult:
    matrix: MixingMatrix
    rho: float
    selected: tuple  # atoms in selection order: "identity" or (i, j)
    exhausted: bool  # priority variant ran out of unselected atoms


def fmmd(
    cats: CategoryTable,
    kappa: float,
    iterations: int,
    weight_opt: bool = False,
    priority: bool = False,
) -> FmmdResult:
    """Frank-Wolfe mixing-matrix design over the swap-atom hull.

    Starts from the identity and, for `iterations` rounds, adds the atom
    minimizing the inner product with the current (sub)gradient of the
    consensus gap norm, with convex steps k/(k+2) and 2/(k+2). With
    `priority`, candidates are restricted to the unselected atoms whose
    selection yields the smallest default-routing completion time. With
    `weight_opt`, the weights on the resulting support are re-optimized.
    """
    if iterations < 1:
        raise ValueError("iteration count must be >= 1")
    m = cats.m
    edges = complete_edges(m)
    j_mat = _averaging_matrix(m)
    b = incidence_matrix(m)

    alpha = np.zeros(len(edges))  # W = I
    selected: list = ["identity"]
    order: list = ["identity"] + edges  # lexicographic atom order, identity first
    exhausted = False

    for k in range(iterations):
        w = np.eye(m) - b @ np.diag(alpha) @ b.T
        lam, vec = _top_eigenpair(w - j_mat)
        if abs(lam) == 0.0:
            break  # already at the unconstrained optimum J
        sign = np.sign(lam)

        def inner(atom) -> float:
            # <S, sign * v v^T> for unit v
            if atom == "identity":
                return float(sign)
            i, j = atom
            return float(sign * (1.0 - (vec[i] - vec[j]) ** 2))

        shrink = k / (k + 2.0)
        gain = 2.0 / (k + 2.0)
        if priority:
            unselected = [a for a in order if a not in selected]
            if not unselected:
                exhausted = True
                break
            taus = {}
            for atom in unselected:
                cand = alpha * shrink
                if atom != "identity":
                    cand[edges.index(atom)] += gain
                support = [
                    e for e, a in zip(edges, cand) if abs(a) > SUPPORT_TOL
                ]
                taus[atom] = tau_bar(support, cats, kappa)
            best_tau = min(taus.values())
            candidates = [a for a in unselected if taus[a] <= best_tau + 1e-12]
        else:
            candidates = order
        chosen = min(
            candidates, key=lambda a: (inner(a), order.index(a))
        )

        alpha = alpha * shrink
        if chosen != "identity":
            alpha[edges.index(chosen)] += gain
        if chosen not in selected:
            selected.append(chosen)

    if weight_opt:
        support = [e for e, a in zip(edges, alpha) if abs(a) > SUPPORT_TOL]
        alpha, _ = optimize_weights(support, m)
    matrix = MixingMatrix(m=m, alpha=alpha)
    return FmmdResult(
        matrix=matrix,
        rho=rho(matrix),
        selected=tuple(selected),
        exhausted=exhausted,
    )


def benchmark_topology(kind: str, cats: CategoryTable, kappa: float, m: int):
    """Activation sets for the Ring / Prim / Clique baselines."""
    kind = kind.lower()
    if m < 2:
        raise ValueError("need at least 2 agents")
    if kind == "clique":
        return complete_edges(m)
    if kind == "ring":
        if m == 2:
            return [(0, 1)]
        return [(i, i + 1) for i in range(m - 1)] + [(0, m - 1)]
    if kind == "prim":
        # MST over the complete overlay; the cost of an edge is the time to
        # push kappa units through its underlay path bottleneck.
        def weight(i, j):
            return kappa / cats.path_bottleneck(i, j)

        in_tree = {0}
        tree = []
        while len(in_tree) < m:
            best = None
            for i in sorted(in_tree):
                for j in range(m):
                    if j in in_tree:
                        continue
                    e = (min(i, j), max(i, j))
                    key = (weight(*e),) + e
                    if best is None or key < best[0]:
                        best = (key, e, j)
            _, edge, j = best
            tree.append(edge)
            in_tree.add(j)
        return sorted(tree)
    raise ValueError(f"unknown benchmark topology {kind!r}")

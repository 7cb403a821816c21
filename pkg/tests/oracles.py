"""Independent reference computations used to check the library.

None of these use a matrix inverse: effects come from explicit walk
enumeration, covariances from truncated power series, and solver
determinedness from exact rational null spaces.
"""

import itertools

import numpy as np
import sympy


def walk_effect(B, source, target, J, max_len=60):
    """Sum-product over directed walks ``source -> ... -> target`` whose
    intermediate nodes avoid ``J``; edges into ``J`` are cut.

    Converges for models whose manipulated spectral radius is below 1.
    """
    n = B.shape[0]
    Bt = np.array(B, dtype=float)
    Bt[sorted(J), :] = 0.0
    # vector of walk weights ending at each node, with intermediate nodes outside J
    vec = np.zeros(n)
    vec[source] = 1.0
    total = 0.0
    for _ in range(max_len):
        nxt = np.zeros(n)
        for a in range(n):
            if vec[a] == 0.0:
                continue
            for b in range(n):
                if Bt[b, a] != 0.0:
                    nxt[b] += Bt[b, a] * vec[a]
        total += nxt[target]
        # walks may only continue through non-intervened nodes other than the target
        for v in range(n):
            if v in J or v == target:
                nxt[v] = 0.0
        vec = nxt
    return total


def simple_path_effect(B, source, target, J):
    """Sum-product over simple directed paths avoiding ``J`` (exact for acyclic ``B``)."""
    n = B.shape[0]
    Bt = np.array(B, dtype=float)
    Bt[sorted(J), :] = 0.0
    free = [v for v in range(n) if v not in J and v not in (source, target)]
    total = 0.0
    for k in range(len(free) + 1):
        for mids in itertools.permutations(free, k):
            path = (source, *mids, target)
            w = 1.0
            for a, b in zip(path, path[1:]):
                w *= Bt[b, a]
                if w == 0.0:
                    break
            total += w
    return total


def series_covariance(B_tilde, S, terms=200):
    """``sum_k sum_m B^k S (B^T)^m`` truncated; equals the equilibrium covariance."""
    n = B_tilde.shape[0]
    P = np.eye(n)
    T = np.zeros((n, n))
    for _ in range(terms):
        T += P
        P = P @ B_tilde
    return T @ S @ T.T


def is_nilpotent_support(B):
    A = (np.abs(B) > 0).astype(int)
    P = np.eye(len(B), dtype=int)
    for _ in range(len(B)):
        P = (P @ A > 0).astype(int)
    return not P.any()


def determined_by_sampling(A, b, rng, tol=1e-7):
    """Brute force: two random solutions = particular + random null combos.

    Uses an exact rational null space (sympy) of an integer matrix.
    """
    M = sympy.Matrix(A.astype(int).tolist())
    null = M.nullspace()
    k = A.shape[1]
    x0 = np.linalg.lstsq(A, b, rcond=None)[0]
    if not null:
        return np.ones(k, dtype=bool)
    N = np.array([[float(v) for v in vec] for vec in null]).T
    s1 = x0 + N @ rng.normal(size=N.shape[1])
    s2 = x0 + N @ rng.normal(size=N.shape[1])
    return np.abs(s1 - s2) < tol


def spectral_radius(M):
    return float(np.max(np.abs(np.linalg.eigvals(M)))) if len(M) else 0.0

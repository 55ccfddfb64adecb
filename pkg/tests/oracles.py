"""Independent reference implementations written with plain Python loops.

Nothing here imports the package's numerical code, so the tests compare two
separate derivations of the same quantity.
"""
import itertools
import math


def matmul(A, B):
    n, m, q = len(A), len(B), len(B[0])
    return [[sum(A[i][k] * B[k][j] for k in range(m)) for j in range(q)] for i in range(n)]


def transpose(A):
    return [list(r) for r in zip(*A)]


def tolist(A):
    return [[float(v) for v in row] for row in A]


def sq_frob(A):
    return sum(v * v for row in A for v in row)


def l21(A):
    return sum(math.sqrt(sum(v * v for v in row)) for row in A)


def objective(X, W, G, alpha, beta):
    X, W, G = tolist(X), tolist(W), tolist(G)
    n, p = len(X), len(X[0])
    c = len(G[0])
    recon = 0.0
    for i in range(n):
        for j in range(p):
            s = 0.0
            for k in range(n):
                sim = sum(G[i][t] * G[k][t] for t in range(c))
                s += sim * X[k][j]
            recon += (X[i][j] - s) ** 2
    fit = 0.0
    for i in range(n):
        for t in range(c):
            xw = sum(X[i][j] * W[j][t] for j in range(p))
            fit += (xw - G[i][t]) ** 2
    return recon + alpha * fit + beta * l21(W)


def penalty(G, gamma):
    """gamma * ||G G^T 1 - 1||_F^2 with the all-ones n x n matrix built explicitly."""
    G = tolist(G)
    n, c = len(G), len(G[0])
    S = [[sum(G[i][t] * G[k][t] for t in range(c)) for k in range(n)] for i in range(n)]
    ones = [[1.0] * n for _ in range(n)]
    S1 = matmul(S, ones)
    return gamma * sum((S1[i][j] - 1.0) ** 2 for i in range(n) for j in range(n))


def residual(G):
    G = tolist(G)
    n, c = len(G), len(G[0])
    return max(abs(sum(sum(G[i][t] * G[k][t] for t in range(c)) for k in range(n)) - 1.0) for i in range(n))


def m_matrix(X, G, gamma):
    """(X X^T + n gamma 1) G with X X^T and the ones matrix formed explicitly."""
    X, G = tolist(X), tolist(G)
    n = len(X)
    XXt = matmul(X, transpose(X))
    A = [[XXt[i][k] + n * gamma for k in range(n)] for i in range(n)]
    return matmul(A, G)


def g_update(X, G, W, alpha, gamma, guard=1e-12):
    """Elementwise multiplicative rule with the numerator clamped at zero."""
    M = m_matrix(X, G, gamma)
    Xl, Gl, Wl = tolist(X), tolist(G), tolist(W)
    XW = matmul(Xl, Wl)
    MGtG = matmul(matmul(M, transpose(Gl)), Gl)
    GGtM = matmul(matmul(Gl, transpose(Gl)), M)
    out = []
    for i in range(len(Gl)):
        row = []
        for j in range(len(Gl[0])):
            num = max(2 * M[i][j] + alpha * XW[i][j], 0.0)
            den = MGtG[i][j] + GGtM[i][j] + alpha * Gl[i][j] + guard
            row.append(Gl[i][j] * num / den)
        out.append(row)
    return out


def best_agreement(y, z):
    """Maximum agreement over every injective relabeling of z's clusters."""
    ys = sorted(set(y))
    zs = sorted(set(z))
    targets = ys + [None] * max(0, len(zs) - len(ys))
    best = 0
    for perm in itertools.permutations(targets, len(zs)):
        mapping = dict(zip(zs, perm))
        best = max(best, sum(1 for a, b in zip(y, z) if mapping[b] == a))
    return best


def nmi(y, z):
    n = len(y)
    py, pz, pyz = {}, {}, {}
    for a, b in zip(y, z):
        py[a] = py.get(a, 0) + 1 / n
        pz[b] = pz.get(b, 0) + 1 / n
        pyz[(a, b)] = pyz.get((a, b), 0) + 1 / n
    hy = -sum(p * math.log(p) for p in py.values())
    hz = -sum(p * math.log(p) for p in pz.values())
    mi = sum(p * math.log(p / (py[a] * pz[b])) for (a, b), p in pyz.items())
    return mi / max(hy, hz)


def central_gradient(f, W, h=1e-6):
    """Central finite differences of scalar ``f`` over every entry of array ``W``."""
    import numpy as np

    W = np.array(W, dtype=float)
    grad = np.zeros_like(W)
    for idx in np.ndindex(W.shape):
        step = h * max(1.0, abs(W[idx]))
        Wp, Wm = W.copy(), W.copy()
        Wp[idx] += step
        Wm[idx] -= step
        grad[idx] = (f(Wp) - f(Wm)) / (2 * step)
    return grad

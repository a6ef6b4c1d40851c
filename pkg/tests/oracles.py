"""Brute-force reference computations that share no code with the jet engine.

Everything here works from point evaluations of the metric (or of a
closed-form formula) and central finite differences.
"""
import numpy as np

from kahlercert.exact_diff import evaluate


def metric_at(spec, x):
    d = spec.dim
    return np.array([[evaluate(spec.metric[i][j], x) for j in range(d)] for i in range(d)])


def structure_at(spec, x):
    d = spec.dim
    return np.array([[evaluate(spec.complex_structure[i][j], x) for j in range(d)] for i in range(d)])


def fd_first(f, x, h=1e-5):
    """Central differences, gradient axis first."""
    x = np.asarray(x, float)
    out = []
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        out.append((f(x + e) - f(x - e)) / (2 * h))
    return np.array(out)


def fd_second(f, x, i, j, h=1e-5):
    x = np.asarray(x, float)
    ei = np.zeros_like(x)
    ej = np.zeros_like(x)
    ei[i] += h
    ej[j] += h
    if i == j:
        return (f(x + ei) - 2 * f(x) + f(x - ei)) / h ** 2
    return (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h * h)


def christoffel_fd(spec, x, h=1e-5):
    """Gamma[k, i, j] from finite differences of the metric."""
    g = metric_at(spec, x)
    dg = fd_first(lambda y: metric_at(spec, y), x, h)  # dg[c, a, b] = d_c g_ab
    lower = 0.5 * (np.einsum("jki->kij", dg) + np.einsum("ikj->kij", dg) - np.einsum("kij->kij", dg))
    return np.linalg.solve(g, lower.reshape(len(x), -1)).reshape(lower.shape)


def riemann_fd(spec, x, h=1e-4):
    """R[l, k, i, j] = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik."""
    G = christoffel_fd(spec, x)
    dG = fd_first(lambda y: christoffel_fd(spec, y), x, h)  # dG[i, l, j, k]
    lin = np.einsum("iljk->lkij", dG) - np.einsum("jlik->lkij", dG)
    quad = np.einsum("lim,mjk->lkij", G, G) - np.einsum("ljm,mik->lkij", G, G)
    return lin + quad


def space_form_potential_metric(c, n, x):
    """Metric of the potential F = (4/c) ln(1 + c|z|^2/4) via finite differences of F.

    g_{a b} is read off the complex Hessian: g(d_xa, d_xb) = 2 d^2F/dz_a dzbar_b
    real part, assembled from real second derivatives of F.
    """
    def F(y):
        return 4.0 / c * np.log(1 + c / 4 * np.sum(y ** 2))

    d = 2 * n
    H = np.array([[fd_second(F, x, i, j, 1e-4) for j in range(d)] for i in range(d)])
    # Kähler metric in real coordinates: g = (H + J^T H J) / 2 with the standard J
    J = np.zeros((d, d))
    for a in range(n):
        J[2 * a + 1, 2 * a] = 1.0
        J[2 * a, 2 * a + 1] = -1.0
    return 0.5 * (H + J.T @ H @ J) / 2

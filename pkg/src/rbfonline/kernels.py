"""Hot numeric kernels, in two interchangeable flavours.

Every kernel exists as a loop-based ``*_nb`` function compiled with numba and
as a vectorised ``*_np`` function that needs numpy only. The public names at
the bottom of the module bind to one flavour according to
``RBFONLINE_BACKEND`` (see :mod:`rbfonline._backend`).

All kernels mutate their array arguments in place where documented; callers
own the arrays and pass contiguous float64 buffers.

Quadratic forms ``(x - mu)^T Sigma^{-1} (x - mu)`` are evaluated from the lower
Cholesky factor ``L`` of ``Sigma`` by forward substitution ``L z = x - mu``
followed by ``sum(z_i^2)`` accumulated in increasing index order.
"""
import numpy as np

from ._backend import BACKEND, njit

RECONDITION_EPS = 1e-8


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------


@njit
def _dot_nb(a, b):
    s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * b[i]
    return s


@njit
def _chol_quad_into(L, diff, z):
    q = 0.0
    for i in range(diff.shape[0]):
        s = diff[i]
        for m in range(i):
            s -= L[i, m] * z[m]
        z[i] = s / L[i, i]
        q += z[i] * z[i]
    return q


@njit
def _chol_quad_nb(L, diff):
    return _chol_quad_into(L, diff, np.empty(diff.shape[0]))


@njit
def _rbf_row_into(x, means, chols, out, diff, z):
    k, d = means.shape
    out[0] = 1.0
    for j in range(k):
        for i in range(d):
            diff[i] = x[i] - means[j, i]
        out[j + 1] = np.exp(-0.5 * _chol_quad_into(chols[j], diff, z))


@njit
def _rbf_row_nb(x, means, chols, out):
    d = means.shape[1]
    _rbf_row_into(x, means, chols, out, np.empty(d), np.empty(d))


@njit
def _rbf_matrix_nb(X, means, chols):
    n = X.shape[0]
    d = means.shape[1]
    out = np.empty((n, means.shape[0] + 1))
    diff = np.empty(d)
    z = np.empty(d)
    for r in range(n):
        _rbf_row_into(X[r], means, chols, out[r], diff, z)
    return out


@njit
def _ewrls_step_nb(theta, P, phi, y, tau):
    n = theta.shape[0]
    prior = _dot_nb(theta, phi)
    u = np.empty(n)
    v = np.empty(n)
    for i in range(n):
        su = 0.0
        sv = 0.0
        for m in range(n):
            su += P[i, m] * phi[m]
            sv += phi[m] * P[m, i]
        u[i] = su
        v[i] = sv
    den = tau + _dot_nb(phi, u)
    err = y - prior
    for i in range(n):
        g = u[i] / den
        theta[i] += g * err
        for m in range(n):
            P[i, m] = (P[i, m] - g * v[m]) / tau
    for i in range(n):
        for m in range(i + 1, n):
            a = 0.5 * (P[i, m] + P[m, i])
            P[i, m] = a
            P[m, i] = a
    lo = P[0, 0]
    for i in range(1, n):
        if P[i, i] < lo:
            lo = P[i, i]
    if lo > 0.0:
        return prior, 0
    shift = RECONDITION_EPS - lo
    for i in range(n):
        P[i, i] += shift
    return prior, 1


@njit
def _ewrls_run_nb(theta, P, Phi, Y, tau, priors):
    n_recond = 0
    for r in range(Phi.shape[0]):
        ok = np.isfinite(Y[r])
        for i in range(Phi.shape[1]):
            if not np.isfinite(Phi[r, i]):
                ok = False
        if not ok:
            priors[r] = np.nan
            continue
        prior, flag = _ewrls_step_nb(theta, P, Phi[r], Y[r], tau)
        priors[r] = prior
        n_recond += flag
    return n_recond


@njit
def _assign_nb(X, C):
    n, d = X.shape
    k = C.shape[0]
    labels = np.empty(n, dtype=np.int64)
    d2 = np.empty(n)
    for r in range(n):
        best = np.inf
        arg = 0
        for j in range(k):
            s = 0.0
            for i in range(d):
                t = X[r, i] - C[j, i]
                s += t * t
            if s < best:
                best = s
                arg = j
        labels[r] = arg
        d2[r] = best
    return labels, d2


@njit
def _nearest_mahalanobis_nb(x, means, chols):
    k, d = means.shape
    diff = np.empty(d)
    best = np.inf
    arg = 0
    for j in range(k):
        for i in range(d):
            diff[i] = x[i] - means[j, i]
        q = _chol_quad_nb(chols[j], diff)
        if q < best:
            best = q
            arg = j
    return arg


@njit
def _shrunk_cov_nb(S, shrink, eps):
    d = S.shape[0]
    out = np.empty((d, d))
    for i in range(d):
        for m in range(d):
            if i == m:
                out[i, m] = S[i, i] + eps
            else:
                out[i, m] = (1.0 - shrink) * S[i, m]
    return out


@njit
def _prototype_update_nb(means, scatters, chols, weights, x, j, decay, shrink, eps):
    d = x.shape[0]
    w = decay * weights[j] + 1.0
    weights[j] = w
    diff = np.empty(d)
    for i in range(d):
        means[j, i] += (x[i] - means[j, i]) / w
        diff[i] = x[i] - means[j, i]
    for i in range(d):
        for m in range(d):
            scatters[j, i, m] += (diff[i] * diff[m] - scatters[j, i, m]) / w
    chols[j] = np.linalg.cholesky(_shrunk_cov_nb(scatters[j], shrink, eps))


@njit
def _row_finite_nb(x):
    for i in range(x.shape[0]):
        if not np.isfinite(x[i]):
            return False
    return True


@njit
def _prequential_rbf_nb(X, labels, h, theta, P, tau, means, scatters, chols, weights,
                        decay, shrink, eps, update_protos, update_head, preds):
    m = X.shape[0]
    k = means.shape[0]
    Phi = np.empty((m, k + 1))
    n_recond = 0
    for s in range(m):
        i = s - h
        if i >= 0 and np.isfinite(labels[i]) and np.isfinite(Phi[i, 0]):
            if update_protos:
                j = _nearest_mahalanobis_nb(X[i], means, chols)
                _prototype_update_nb(means, scatters, chols, weights, X[i], j,
                                     decay, shrink, eps)
            if update_head:
                _, flag = _ewrls_step_nb(theta, P, Phi[i], labels[i], tau)
                n_recond += flag
        if _row_finite_nb(X[s]):
            _rbf_row_nb(X[s], means, chols, Phi[s])
            preds[s] = _dot_nb(theta, Phi[s])
        else:
            Phi[s, :] = np.nan
            preds[s] = np.nan
    return n_recond


@njit
def _prequential_linear_nb(Phi, labels, h, theta, P, tau, update_head, preds):
    m = Phi.shape[0]
    n_recond = 0
    for s in range(m):
        i = s - h
        if update_head and i >= 0 and np.isfinite(labels[i]) and _row_finite_nb(Phi[i]):
            _, flag = _ewrls_step_nb(theta, P, Phi[i], labels[i], tau)
            n_recond += flag
        if _row_finite_nb(Phi[s]):
            preds[s] = _dot_nb(theta, Phi[s])
        else:
            preds[s] = np.nan
    return n_recond


# ---------------------------------------------------------------------------
# numpy fallbacks
# ---------------------------------------------------------------------------


def _dot_np(a, b):
    return float(np.dot(a, b))


def _chol_quad_rows(L, D):
    """Quadratic forms of the rows of ``D`` by forward substitution.

    Loops over the dimension and vectorises over rows, so a row gets the same
    bits whether it is evaluated alone or inside a batch.
    """
    n, d = D.shape
    z = np.empty((n, d))
    q = np.zeros(n)
    for i in range(d):
        acc = D[:, i].copy()
        for m in range(i):
            acc -= L[i, m] * z[:, m]
        z[:, i] = acc / L[i, i]
        q += z[:, i] * z[:, i]
    return q


def _chol_quad_stack(chols, D):
    """Quadratic form of ``D[j]`` under ``chols[j]`` for every j, same operation order."""
    k, d = D.shape
    z = np.empty((k, d))
    q = np.zeros(k)
    for i in range(d):
        acc = D[:, i].copy()
        for m in range(i):
            acc -= chols[:, i, m] * z[:, m]
        z[:, i] = acc / chols[:, i, i]
        q += z[:, i] * z[:, i]
    return q


def _chol_quad_np(L, diff):
    return float(_chol_quad_rows(L, diff[None, :])[0])


def _rbf_row_np(x, means, chols, out):
    out[0] = 1.0
    out[1:] = np.exp(-0.5 * _chol_quad_stack(chols, x[None, :] - means))


def _rbf_matrix_np(X, means, chols):
    n = X.shape[0]
    out = np.empty((n, means.shape[0] + 1))
    out[:, 0] = 1.0
    for j in range(means.shape[0]):
        out[:, j + 1] = np.exp(-0.5 * _chol_quad_rows(chols[j], X - means[j]))
    return out


def _ewrls_step_np(theta, P, phi, y, tau):
    prior = float(np.dot(theta, phi))
    u = P @ phi
    v = phi @ P
    g = u / (tau + float(np.dot(phi, u)))
    theta += g * (y - prior)
    P -= np.outer(g, v)
    P /= tau
    P[...] = 0.5 * (P + P.T)
    lo = P.diagonal().min()
    if lo > 0.0:
        return prior, 0
    P[np.diag_indices_from(P)] += RECONDITION_EPS - lo
    return prior, 1


def _ewrls_run_np(theta, P, Phi, Y, tau, priors):
    n_recond = 0
    ok = np.isfinite(Y) & np.isfinite(Phi).all(axis=1)
    for r in range(Phi.shape[0]):
        if not ok[r]:
            priors[r] = np.nan
            continue
        priors[r], flag = _ewrls_step_np(theta, P, Phi[r], Y[r], tau)
        n_recond += flag
    return n_recond


def _assign_np(X, C):
    d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    return labels.astype(np.int64), d2[np.arange(X.shape[0]), labels]


def _nearest_mahalanobis_np(x, means, chols):
    return int(np.argmin(_chol_quad_stack(chols, x[None, :] - means)))


def _shrunk_cov_np(S, shrink, eps):
    out = (1.0 - shrink) * S
    out[np.diag_indices_from(out)] = S.diagonal() + eps
    return out


def _prototype_update_np(means, scatters, chols, weights, x, j, decay, shrink, eps):
    w = decay * weights[j] + 1.0
    weights[j] = w
    means[j] += (x - means[j]) / w
    diff = x - means[j]
    scatters[j] += (np.outer(diff, diff) - scatters[j]) / w
    chols[j] = np.linalg.cholesky(_shrunk_cov_np(scatters[j], shrink, eps))


def _prequential_rbf_np(X, labels, h, theta, P, tau, means, scatters, chols, weights,
                        decay, shrink, eps, update_protos, update_head, preds):
    m = X.shape[0]
    Phi = np.full((m, means.shape[0] + 1), np.nan)
    finite = np.isfinite(X).all(axis=1)
    n_recond = 0
    for s in range(m):
        i = s - h
        if i >= 0 and np.isfinite(labels[i]) and finite[i]:
            if update_protos:
                j = _nearest_mahalanobis_np(X[i], means, chols)
                _prototype_update_np(means, scatters, chols, weights, X[i], j,
                                     decay, shrink, eps)
            if update_head:
                n_recond += _ewrls_step_np(theta, P, Phi[i], labels[i], tau)[1]
        if finite[s]:
            _rbf_row_np(X[s], means, chols, Phi[s])
            preds[s] = float(np.dot(theta, Phi[s]))
        else:
            preds[s] = np.nan
    return n_recond


def _prequential_linear_np(Phi, labels, h, theta, P, tau, update_head, preds):
    finite = np.isfinite(Phi).all(axis=1)
    n_recond = 0
    for s in range(Phi.shape[0]):
        i = s - h
        if update_head and i >= 0 and np.isfinite(labels[i]) and finite[i]:
            n_recond += _ewrls_step_np(theta, P, Phi[i], labels[i], tau)[1]
        preds[s] = float(np.dot(theta, Phi[s])) if finite[s] else np.nan
    return n_recond


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

_NAMES = (
    "dot", "chol_quad", "rbf_row", "rbf_matrix", "ewrls_step", "ewrls_run",
    "assign", "nearest_mahalanobis", "shrunk_cov", "prototype_update",
    "prequential_rbf", "prequential_linear",
)

IMPLEMENTATIONS = {
    "numba": {name: globals()[f"_{name}_nb"] for name in _NAMES},
    "numpy": {name: globals()[f"_{name}_np"] for name in _NAMES},
}

_active = IMPLEMENTATIONS[BACKEND]
dot = _active["dot"]
chol_quad = _active["chol_quad"]
rbf_row = _active["rbf_row"]
rbf_matrix = _active["rbf_matrix"]
ewrls_step = _active["ewrls_step"]
ewrls_run = _active["ewrls_run"]
assign = _active["assign"]
nearest_mahalanobis = _active["nearest_mahalanobis"]
shrunk_cov = _active["shrunk_cov"]
prototype_update = _active["prototype_update"]
prequential_rbf = _active["prequential_rbf"]
prequential_linear = _active["prequential_linear"]

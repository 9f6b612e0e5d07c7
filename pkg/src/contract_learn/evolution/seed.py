"""Source text of the trivial seed solver, shipped as prompt data.

This is the runnable starting point every generated solver is asked to
improve on. It mirrors the library's own inference pipeline: recover one
outcome distribution per accepted log with a mini LP, cluster the recovered
vectors into candidate actions, then set costs from the participation and
rejection constraints. The text doubles as the reference solver executed in
the sandbox during conformance tests.
"""

SEED_SOLVER_SOURCE = '''\
import numpy as np
from scipy.optimize import linprog
from sklearn.cluster import KMeans


def agent_solver_v1(v: np.ndarray, content: list[dict]) -> np.ndarray:
    n_candidates = 7
    m_outcomes = v.shape[0]

    def mini_lp_p(w, u):
        """Outcome distribution p matching utility u under wage vector w."""
        res = linprog(
            w,
            A_eq=np.vstack([np.ones(m_outcomes), v - w]),
            b_eq=np.array([1.0, u]),
            bounds=[(0.0, 1.0)] * m_outcomes,
            method="highs",
        )
        return res.x if res.success else None

    # Recover a candidate distribution from every accepted log.
    candidate_ps = []
    for log in content:
        if log["Agent Action"] == 1:
            p_i = mini_lp_p(
                np.asarray(log["Contract"], dtype=float),
                float(log["Principal Utility"]),
            )
            if p_i is not None:
                candidate_ps.append(p_i)
    if not candidate_ps:
        raise ValueError("no accepted logs to infer agent strategies from")

    # Cluster the recovered vectors into candidate actions, low value first.
    all_p = np.array(candidate_ps)
    k = min(n_candidates, len(candidate_ps))
    kmeans = KMeans(n_clusters=k, random_state=0, n_init=10).fit(all_p)
    p0 = np.clip(kmeans.cluster_centers_, 0.0, None)
    p0 = p0 / p0.sum(axis=1, keepdims=True)
    p0 = p0[np.argsort(p0 @ v)]

    # Participation-consistent cost: cheapest expected wage among the logs
    # each action would have been picked for.
    c_init = np.zeros(k)
    seen = np.zeros(k, dtype=bool)
    for log in content:
        if log["Agent Action"] == 1:
            w = np.asarray(log["Contract"], dtype=float)
            a = int(np.argmax(p0 @ w))
            pay = float(p0[a] @ w)
            c_init[a] = pay if not seen[a] else min(c_init[a], pay)
            seen[a] = True

    # Rejection consistency: push costs above every rejected expected wage.
    for log in content:
        if log["Agent Action"] == -1:
            w = np.asarray(log["Contract"], dtype=float)
            c_init = np.maximum(c_init, p0 @ w + 1e-8)

    return np.hstack([p0, c_init[:, np.newaxis]])
'''

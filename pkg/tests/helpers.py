import numpy as np

from radialrestore.graphcore import is_connected, loop_lines


def dispatch_violations(case, sol, tol):
    """Conservation, load-fraction and thermal checks on an optimal solution."""
    out = []
    T = sol.P.shape[0]
    bidx = case.bus_index
    p_dem = np.array([[case.buses[bidx[b]].p_at(t) for b in sol.load_buses] for t in range(T)])
    q_dem = np.array([[case.buses[bidx[b]].q_at(t) for b in sol.load_buses] for t in range(T)])
    for t in range(T):
        dp = abs(sol.p_gen[t].sum() - (sol.gamma[t] * p_dem[t]).sum())
        dq = abs(sol.q_gen[t].sum() - (sol.gamma[t] * q_dem[t]).sum())
        if dp > 10 * tol:
            out.append(f"period {t}: active imbalance {dp:.3g}")
        if dq > 10 * tol:
            out.append(f"period {t}: reactive imbalance {dq:.3g}")
    if sol.gamma.size and (sol.gamma.min() < -tol or sol.gamma.max() > 1 + tol):
        out.append(f"gamma outside [0,1]: {sol.gamma.min():.3g}..{sol.gamma.max():.3g}")
    pmax = np.array([ln.p_max for ln in case.lines])
    over = np.abs(sol.P) - pmax
    if over.max(initial=-1.0) > tol:
        out.append(f"thermal limit exceeded by {over.max():.3g}")
    open_cols = [k for k, lid in enumerate(sol.line_ids) if lid not in set(sol.closed)]
    if open_cols and np.abs(sol.P[:, open_cols]).max() > 0:
        out.append("flow on an open line")
    return out


def random_spanning_subgraph(rng, topo, max_removed=None):
    """Drop a random number of loop lines while keeping the graph connected."""
    cur = topo
    k = 0
    while max_removed is None or k < max_removed:
        loops = sorted(loop_lines(cur))
        if not loops or rng.random() < 0.3:
            break
        cur = cur.without(int(rng.choice(loops)))
        assert is_connected(cur)
        k += 1
    return cur

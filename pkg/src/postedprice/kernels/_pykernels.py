"""Pure-Python DP kernels.

Generic over the number type: called with floats as the fallback for the
compiled kernels, and with exact rationals by the exact solvers.  Iteration
order matches the compiled versions so ties resolve identically.
"""


def vg_dp(caps, options, zero=0.0, max_states=None):
    """Max-profit packing of per-object options into capacitated bins.

    ``caps[b]`` is bin ``b``'s capacity in grid units.  ``options[i]`` lists
    ``(delta, gain)`` pairs for object ``i``; ``delta[b]`` is the capacity
    the option consumes in bin ``b``.  Returns ``(best, picks)`` with
    ``picks[i]`` the chosen option index per object (``-1`` if the problem
    is infeasible, which cannot happen when every object has an all-zero
    option).
    """
    nb = len(caps)
    if max_states is not None:
        size = 1
        for c in caps:
            size *= c + 1
        if size > max_states:
            raise MemoryError("state budget exceeded")
    start = (0,) * nb
    layer = {start: zero}
    back = []
    for opts in options:
        new = {}
        arg = {}
        for state in sorted(layer):
            val = layer[state]
            for oi, (delta, gain) in enumerate(opts):
                ns = tuple(s + d for s, d in zip(state, delta))
                ok = True
                for x, c in zip(ns, caps):
                    if x > c:
                        ok = False
                        break
                if not ok:
                    continue
                nv = val + gain
                cur = new.get(ns)
                if cur is None or nv > cur:
                    new[ns] = nv
                    arg[ns] = (state, oi)
        back.append(arg)
        layer = new
    if not layer:
        return None, [-1] * len(options)
    best_state, best = None, None
    for state in sorted(layer):
        if best is None or layer[state] > best:
            best_state, best = state, layer[state]
    picks = [0] * len(options)
    state = best_state
    for i in range(len(options) - 1, -1, -1):
        state, picks[i] = back[i][state]
    return best, picks


def subset_dp(menus, copies, zero=0.0, one=1.0):
    """Optimal adaptive revenue for every (remaining buyers, copies) state.

    ``menus[i]`` lists ``(price, tail)`` pairs for buyer ``i``.  Returns
    tables ``(value, buyer, option)`` indexed ``[mask][k]``: the optimum with
    buyers in ``mask`` and ``k`` copies left, and the offer achieving it
    (``-1`` where no offer is made).  Buyers are tried in index order and
    each menu from the highest price down; the first strict maximum wins.
    """
    n = len(menus)
    size = 1 << n
    value = [[zero] * (copies + 1) for _ in range(size)]
    pbuyer = [[-1] * (copies + 1) for _ in range(size)]
    popt = [[-1] * (copies + 1) for _ in range(size)]
    rev = [list(reversed(list(enumerate(m)))) for m in menus]
    for mask in range(1, size):
        vrow = value[mask]
        brow = pbuyer[mask]
        orow = popt[mask]
        members = [i for i in range(n) if mask >> i & 1]
        for k in range(1, copies + 1):
            best, bi, bo = None, -1, -1
            for i in members:
                rest = value[mask ^ (1 << i)]
                a = rest[k - 1]
                b = rest[k]
                for oi, (v, t) in rev[i]:
                    val = b + t * (v + a - b)
                    if best is None or val > best:
                        best, bi, bo = val, i, oi
            vrow[k] = best
            brow[k] = bi
            orow[k] = bo
    return value, pbuyer, popt

"""Pure-Python twins of the routines in ``_kernels.pyx``.

Same signatures and return conventions; used when the extension is not
built or when ``FSM_JACOBI_PURE=1`` is set.
"""


def thomas(sub, diag, sup, rhs, out, pivot_tol):
    n = len(diag)
    if n == 0:
        return -1
    sub = sub.tolist()
    diag = diag.tolist()
    sup = sup.tolist()
    rhs = rhs.tolist()
    cp = [0j] * n
    x = [0j] * n
    denom = diag[0]
    if abs(denom) <= pivot_tol:
        return 0
    cp[0] = sup[0] / denom if n > 1 else 0j
    x[0] = rhs[0] / denom
    for i in range(1, n):
        denom = diag[i] - sub[i] * cp[i - 1]
        if abs(denom) <= pivot_tol:
            return i
        if i < n - 1:
            cp[i] = sup[i] / denom
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        x[i] = x[i] - cp[i] * x[i + 1]
    out[:] = x
    return -1


def upper3(d0, d1, d2, rhs, out):
    n = len(d0)
    d0 = d0.tolist()
    d1 = d1.tolist()
    d2 = d2.tolist()
    rhs = rhs.tolist()
    x = [0j] * n
    for i in range(n - 1, -1, -1):
        acc = rhs[i]
        if i + 1 < n:
            acc -= d1[i] * x[i + 1]
        if i + 2 < n:
            acc -= d2[i] * x[i + 2]
        if d0[i] == 0:
            return i
        x[i] = acc / d0[i]
    out[:] = x
    return -1


def lower3(dm2, dm1, d0, rhs, out):
    n = len(d0)
    dm2 = dm2.tolist()
    dm1 = dm1.tolist()
    d0 = d0.tolist()
    rhs = rhs.tolist()
    x = [0j] * n
    for i in range(n):
        acc = rhs[i]
        if i >= 1:
            acc -= dm1[i] * x[i - 1]
        if i >= 2:
            acc -= dm2[i] * x[i - 2]
        if d0[i] == 0:
            return i
        x[i] = acc / d0[i]
    out[:] = x
    return -1


def scan_right(dist, thresh, need, start):
    n = len(dist)
    run = 0
    for p in range(max(start - need + 1, 0), n):
        run = run + 1 if dist[p] < thresh else 0
        if p >= start and run >= need:
            return p
    return -1


def scan_left(dist, thresh, need, start):
    n = len(dist)
    run = 0
    for p in range(min(start + need - 1, n - 1), -1, -1):
        run = run + 1 if dist[p] < thresh else 0
        if p <= start and run >= need:
            return p
    return -1

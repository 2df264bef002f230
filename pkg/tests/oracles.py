"""Independent reference implementations used by the tests.

Nothing here calls the package's arithmetic: determinants and series go
through sympy, linear solves through a plain Fraction Gauss-Jordan, and the
Petri oracle pushes tokens through places instead of reading the compiled
counter equations.
"""

from __future__ import annotations

import random
from fractions import Fraction

import sympy as sp

F = Fraction
beta = sp.Symbol("beta")
alpha = sp.Symbol("alpha")


# -- linear algebra -----------------------------------------------------------


def frac_solve(A, b):
    """Solve A x = b over Q by Gauss-Jordan; None if singular."""
    n = len(A)
    M = [[F(x) for x in row] + [F(y)] for row, y in zip(A, b)]
    for c in range(n):
        p = next((r for r in range(c, n) if M[r][c] != 0), None)
        if p is None:
            return None
        M[c], M[p] = M[p], M[c]
        piv = M[c][c]
        M[c] = [x / piv for x in M[c]]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return [M[r][n] for r in range(n)]


def frac_inverse(A):
    n = len(A)
    cols = [frac_solve(A, [F(int(i == j)) for i in range(n)]) for j in range(n)]
    if any(c is None for c in cols):
        return None
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def frac_matmul(A, B):
    return [[sum((A[i][k] * B[k][j] for k in range(len(B))), F(0)) for j in range(len(B[0]))] for i in range(len(A))]


def policy_matrices(sys, sigma):
    """(r, {delay: matrix}) read directly off the actions."""
    n = sys.n
    r = [sys.actions[i][sigma[i]].offset for i in range(n)]
    mats = {}
    for i in range(n):
        for d, row in sys.actions[i][sigma[i]].coeffs:
            m = mats.setdefault(d, [[F(0)] * n for _ in range(n)])
            m[i] = [m[i][j] + row[j] for j in range(n)]
    return r, mats


def P_at(mats, n, a):
    """P(alpha) for rational alpha and integer delays."""
    out = [[F(0)] * n for _ in range(n)]
    for d, m in mats.items():
        assert d.denominator == 1
        w = F(a) ** int(d)
        for i in range(n):
            for j in range(n):
                out[i][j] += m[i][j] * w
    return out


def direct_value(sys, sigma, a):
    """(I - P(alpha))^{-1} r by a direct solve."""
    r, mats = policy_matrices(sys, sigma)
    n = sys.n
    P = P_at(mats, n, a)
    A = [[F(int(i == j)) - P[i][j] for j in range(n)] for i in range(n)]
    return frac_solve(A, r)


# -- sympy determinants and series --------------------------------------------


def sympy_det_I_minus_P(mats, n, coords=None, L=1):
    """det(I - P) as an expanded sympy polynomial in beta = alpha^(1/L)."""
    coords = list(range(n)) if coords is None else list(coords)
    M = sp.eye(len(coords))
    for d, m in mats.items():
        e = d * L
        assert e.denominator == 1
        for a, i in enumerate(coords):
            for b, j in enumerate(coords):
                if m[i][j]:
                    M[a, b] -= sp.Rational(m[i][j].numerator, m[i][j].denominator) * beta ** int(e)
    return sp.expand(M.det(method="berkowitz"))


def sympy_laurent(expr_alpha, depth=2):
    """Coefficients of 1/h, 1, h, ... of expr in h = 1 - alpha (sympy series)."""
    h = sp.Symbol("h")
    ser = sp.series(expr_alpha.subs(alpha, 1 - h), h, 0, depth).removeO()
    ser = sp.expand(ser)
    return [ser.coeff(h, k) for k in range(-1, depth)]


def to_poly_coeffs(expr):
    """Exact coefficient list (lowest first) of a sympy polynomial in beta."""
    p = sp.Poly(expr, beta)
    coeffs = p.all_coeffs()[::-1]
    return [F(int(sp.fraction(c)[0]), int(sp.fraction(c)[1])) for c in coeffs]


# -- PFAU closed forms ---------------------------------------------------------


def pfau_rho(N_A, N_P, lam=1, t1=1, t2=1, t3=1, pi_U=F(2, 5), pi_VU=F(3, 10), literal=False):
    """Closed-form throughput (rho_1, rho_3, rho_3') and the branch taken.

    ``literal`` uses pi_U in the middle branch as printed; otherwise pi_VU,
    the value that makes the branches meet continuously.
    """
    N_A, N_P, lam = F(N_A), F(N_P), F(lam)
    t1, t2, t3 = F(t1), F(t2), F(t3)
    rho1 = min(lam, N_A / (t1 + pi_VU * t2), N_P / (pi_VU * (t2 + t3)))
    r = (pi_VU * t2 + (pi_U + pi_VU) * t3) / (t1 + pi_VU * t2)
    rp = pi_VU * (t2 + t3) / (t1 + pi_VU * t2)
    m = min(N_A, lam * (t1 + pi_VU * t2))
    if N_P >= r * m:
        rho3, branch = pi_U * rho1, "free"
    elif N_P >= rp * m:
        mid = pi_U if literal else pi_VU
        rho3, branch = (N_P - mid * rho1 * (t2 + t3)) / t2, "middle"
    else:
        rho3, branch = F(0), "saturated"
    boundary = N_P in (r * m, rp * m)
    return (rho1, rho3, pi_VU * rho1), branch, boundary


# -- Petri token-flow oracle ---------------------------------------------------


def token_flow(net, horizon, step):
    """Counters of every transition on the grid, by pushing mature tokens.

    Each grid step visits transitions in a linear extension of the priority
    orders (and of the feeds through zero-holding places); a transition fires as much as the mature stock of each upstream
    place allows.  The stock left for a lower-priority transition is what
    the higher ones have already taken at this step, the stock left for a
    higher one is what the lower ones took up to the previous step, so the
    lookback of the lower ones is one grid step (the nets used here set
    epsilon to the grid step).
    """
    step = F(step)
    places = {p.id: p for p in net.places}
    ups = {q: [] for q in net.transitions}  # places feeding q
    feeds = {p: [] for p in places}  # transitions feeding p
    downs = {p: [] for p in places}
    for a, b in net.arcs:
        if a in places:
            ups[b].append(a)
            downs[a].append(b)
        else:
            feeds[b].append(a)
    presel = {p: dict(probs) for p, probs in net.preselection}
    prio = {p: list(order) for p, order in net.priority}
    rates = dict(net.inputs)

    # linear extension of the priority orders, ties by declaration
    before = {q: set() for q in net.transitions}
    for order in prio.values():
        for k, q in enumerate(order):
            before[q].update(order[:k])
    for q in net.transitions:
        for p in ups[q]:
            if places[p].holding == 0:
                before[q].update(feeds[p])
    seq, done = [], set()
    while len(seq) < len(net.transitions):
        q = next(q for q in net.transitions if q not in done and before[q] <= done)
        seq.append(q)
        done.add(q)

    tau_bar = max([p.holding for p in places.values()] + [step])
    k0 = int(tau_bar / step)
    total = int(F(horizon) / step)
    z = {q: [] for q in net.transitions}
    for k in range(-k0, 1):
        for q in net.transitions:
            z[q].append(rates.get(q, F(0)) * k * step)

    def val(q, k):
        return z[q][k + k0]

    for k in range(1, total + 1):
        t = k * step
        fresh = set()
        for q in seq:
            if q in rates:
                z[q].append(rates[q] * t)
                fresh.add(q)
                continue
            last = val(q, k - 1)
            best = None
            for p in ups[q]:
                pl = places[p]
                lag = int(pl.holding / step)
                inflow = pl.marking + sum((val(q2, k - lag) for q2 in feeds[p]), F(0))
                if p in presel:
                    stock = presel[p][q] * inflow - last
                else:
                    taken = sum(
                        (z[q2][-1] if q2 in fresh else val(q2, k - 1)) for q2 in downs[p] if q2 != q
                    )
                    stock = inflow - taken - last
                best = stock if best is None else min(best, stock)
            z[q].append(last + best)
            fresh.add(q)
    return {q: z[q] for q in net.transitions}, k0


def random_net(rng: random.Random, max_places: int = 6):
    """A random valid net with integer holding times and epsilon = 1/2."""
    from priorinet.petri import PetriNet, Place, validate_net

    while True:
        k = rng.randint(2, 5)
        ts = [f"t{i}" for i in range(k)]
        inputs = {ts[0]: rng.choice([F(1, 2), F(1), F(2)])} if rng.random() < 0.5 else {}
        internal = [q for q in ts if q not in inputs]
        rank = list(ts)
        rng.shuffle(rank)
        places, arcs, presel, prio = [], [], [], []
        covered, exclusive = set(), set()

        def new_place(downstream, kind):
            pid = f"p{len(places)}"
            places.append(Place(pid, rng.choice([F(0), F(1), F(2), F(5, 2)]), F(rng.randint(1, 3))))
            for q in rng.sample(ts, rng.randint(1, min(2, len(ts)))):
                arcs.append((q, pid))
            for q in downstream:
                arcs.append((pid, q))
                covered.add(q)
            if kind == "presel":
                w = [F(rng.randint(1, 3)) for _ in downstream]
                presel.append((pid, tuple((q, x / sum(w)) for q, x in zip(downstream, w))))
                exclusive.update(downstream)
            elif kind == "prio":
                prio.append((pid, tuple(sorted(downstream, key=rank.index))))

        for _ in range(rng.randint(1, 3)):
            free = [q for q in internal if q not in exclusive]
            fresh = [q for q in free if q not in covered]
            kind = rng.choice(["plain", "presel", "prio"])
            if kind == "presel" and len(fresh) >= 2:
                new_place(rng.sample(fresh, 2), "presel")
            elif kind == "prio" and len(free) >= 2:
                new_place(rng.sample(free, rng.randint(2, min(3, len(free)))), "prio")
            elif free:
                new_place([rng.choice(free)], "plain")
        for q in internal:
            if q not in covered:
                new_place([q], "plain")
        if len(places) > max_places:
            continue
        net = PetriNet(tuple(places), tuple(ts), tuple(arcs), tuple(presel), tuple(prio), tuple(inputs.items()), F(1, 2))
        if not validate_net(net):
            return net


def random_rational(rng, lo=-2, hi=2, dens=(1, 2, 4)):
    d = rng.choice(dens)
    return F(rng.randint(lo * d, hi * d), d)

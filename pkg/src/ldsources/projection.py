"""I-projections and L-projections onto linear and polyhedral sets of pmfs.

Linear families are solved in their dual parametrizations: an exponential
family member for the I-projection, a Lambda-family member
``q = p / (1 - theta.(u - a))`` for the L-projection.  Polyhedral sets go
through a log-barrier Newton method on the simplex.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from .core import (
    LinearEq,
    LinearFamily,
    NType,
    Pmf,
    SourceSetSpec,
    as_exact,
    as_weights,
    evaluate_set,
    flatten,
    is_polyhedral,
)
from .divergence import i_divergence, l_divergence

RESIDUAL_TOL = 1e-12
MAX_ITER = 200
DENOM_FLOOR = 1e-12


class ProjectionError(RuntimeError):
    """Solver failure; ``diagnostics`` carries iteration data."""

    def __init__(self, msg, **diagnostics):
        super().__init__(msg)
        self.diagnostics = diagnostics


class InfeasibleError(ProjectionError):
    pass


class SupportConditionError(ProjectionError):
    pass


@dataclass(frozen=True)
class ExpFamilyMember:
    """``p(x) = rho(x) exp(theta.u(x)) / z``."""

    rho: np.ndarray
    theta: np.ndarray
    u: np.ndarray
    a: np.ndarray
    z: float

    def weights(self) -> np.ndarray:
        s = self.rho > 0
        out = np.zeros_like(self.rho)
        out[s] = self.rho[s] * np.exp(self.theta @ self.u[:, s]) / self.z
        return out


@dataclass(frozen=True)
class LambdaFamilyMember:
    """``q(x) = rho(x) / (1 - theta.(u(x) - a))``."""

    rho: np.ndarray
    theta: np.ndarray
    u: np.ndarray
    a: np.ndarray

    def denominators(self) -> np.ndarray:
        return 1.0 - self.theta @ (self.u - self.a[:, None])

    def weights(self) -> np.ndarray:
        s = self.rho > 0
        out = np.zeros_like(self.rho)
        out[s] = self.rho[s] / self.denominators()[s]
        return out


@dataclass(frozen=True)
class ProjectionResult:
    pmf: Pmf
    family_member: ExpFamilyMember | LambdaFamilyMember | None
    objective: float
    kind: str
    iterations: int = 0
    residual: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def weights(self) -> np.ndarray:
        return self.pmf.weights

    @property
    def theta(self):
        return None if self.family_member is None else self.family_member.theta


# ---------------------------------------------------------------------------
# polyhedral geometry helpers
# ---------------------------------------------------------------------------


def _polyhedron(spec: SourceSetSpec, m: int):
    """Equality rows (with the sum row first) and ``G q >= h`` rows of a polyhedral spec."""
    if not is_polyhedral(spec):
        raise ValueError("only intersections of linear equalities/inequalities are supported")
    A = [np.ones(m)]
    b = [1.0]
    G, h = [], []
    for atom in flatten(spec):
        if atom.dim() != m:
            raise ValueError(f"constraint over {atom.dim()} letters, expected {m}")
        if isinstance(atom, LinearEq):
            A.append([float(x) for x in atom.u])
            b.append(float(atom.a))
        else:
            u, a = atom.as_ge()
            G.append([float(x) for x in u])
            h.append(float(a))
    G = np.array(G, dtype=float).reshape(-1, m)
    return np.array(A, dtype=float), np.array(b), G, np.array(h)


def _lp_max(c, A, b, G, h, m, fixed_zero=()):
    bounds = [(0, 0) if i in fixed_zero else (0, None) for i in range(m)]
    res = linprog(
        -np.asarray(c, dtype=float),
        A_ub=-G if G.size else None,
        b_ub=-h if G.size else None,
        A_eq=A,
        b_eq=b,
        bounds=bounds,
        method="highs",
    )
    return res


@dataclass
class _Face:
    """Affine description of the relative interior of a polyhedron."""

    free: np.ndarray  # coordinates allowed to be positive
    A: np.ndarray
    b: np.ndarray
    G: np.ndarray
    h: np.ndarray
    x0: np.ndarray  # strictly interior point on the free coordinates


def _relative_interior(A, b, G, h, m, tol=1e-10) -> _Face:
    """Drop coordinates forced to zero, promote implicit equalities, find an interior point."""
    res = _lp_max(np.zeros(m), A, b, G, h, m)
    if res.status == 2:
        raise InfeasibleError("constraint set has no pmf in it")
    if res.status != 0:
        raise ProjectionError(f"feasibility LP failed: {res.message}")
    zero = set()
    for i in range(m):
        r = _lp_max(np.eye(m)[i], A, b, G, h, m)
        if r.status == 0 and -r.fun <= tol:
            zero.add(i)
    eq_rows, eq_rhs, ge_rows, ge_rhs = list(A), list(b), [], []
    for j in range(G.shape[0]):
        r = _lp_max(G[j], A, b, G, h, m, zero)
        if r.status == 0 and -r.fun - h[j] <= tol:
            eq_rows.append(G[j])
            eq_rhs.append(h[j])
        else:
            ge_rows.append(G[j])
            ge_rhs.append(h[j])
    free = np.array([i for i in range(m) if i not in zero], dtype=int)
    A2 = np.array(eq_rows)[:, free]
    b2 = np.array(eq_rhs)
    G2 = np.array(ge_rows).reshape(-1, m)[:, free]
    h2 = np.array(ge_rhs)
    k = free.size
    # maximize the smallest slack t
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A_ub = [np.concatenate([-np.eye(k), np.ones((k, 1))], axis=1)]
    b_ub = [np.zeros(k)]
    if G2.size:
        A_ub.append(np.concatenate([-G2, np.ones((G2.shape[0], 1))], axis=1))
        b_ub.append(-h2)
    r = linprog(
        c,
        A_ub=np.vstack(A_ub),
        b_ub=np.concatenate(b_ub),
        A_eq=np.concatenate([A2, np.zeros((A2.shape[0], 1))], axis=1),
        b_eq=b2,
        bounds=[(None, None)] * k + [(None, 1.0)],
        method="highs",
    )
    if r.status != 0 or r.x[-1] <= 0:
        raise ProjectionError("could not find a relative interior point", lp_status=r.status)
    x0 = _project_affine(r.x[:k], A2, b2)
    return _Face(free, A2, b2, G2, h2, x0)


def _project_affine(x, A, b):
    corr, *_ = np.linalg.lstsq(A, A @ x - b, rcond=None)
    return x - corr


def _barrier_maximize(grad_hess, value, face: _Face, mu0=1e-2, mu_final=1e-14):
    """Maximize a separable concave function on the relative interior of ``face``."""
    A, b, G, h = face.A, face.b, face.G, face.h
    Z = null_space(A)
    x = face.x0.copy()
    n_ineq = G.shape[0]
    iters = 0
    mu = mu0

    def phi(y, mu):
        s = G @ y - h if n_ineq else np.zeros(0)
        if np.any(y <= 0) or np.any(s <= 0):
            return -math.inf
        return value(y) + mu * (np.log(y).sum() + np.log(s).sum())

    if Z.shape[1] == 0:
        return x, 0, 0.0, np.zeros(0)
    while True:
        prev_dec = math.inf
        for _ in range(MAX_ITER):
            iters += 1
            gf, hf = grad_hess(x)
            s = G @ x - h if n_ineq else np.zeros(0)
            g = gf + mu / x
            H = np.diag(hf - mu / x**2)
            if n_ineq:
                g = g + mu * G.T @ (1.0 / s)
                H = H - mu * G.T @ np.diag(1.0 / s**2) @ G
            gz = Z.T @ g
            Hz = Z.T @ H @ Z
            dz = np.linalg.solve(Hz, -gz)
            dec = float(gz @ dz)
            if dec / 2 <= 1e-28:
                break
            dx = Z @ dz
            t = 1.0
            f0 = phi(x, mu)
            if dec < 1e-10 and phi(x + dx, mu) > -math.inf:
                # quadratic-convergence region: take the full step, f is flat to rounding here
                xp = _project_affine(x + dx, A, b)
                x = xp if np.all(xp > 0) else x + dx
                if dec < 1e-24 or dec > prev_dec / 4:
                    break
                prev_dec = dec
                continue
            while t > 1e-16:
                xn = x + t * dx
                fn = phi(xn, mu)
                if fn >= f0 + 0.25 * t * float(gz @ dz):
                    break
                t *= 0.5
            if t <= 1e-16:
                break
            xp = _project_affine(xn, A, b)
            x = xp if np.all(xp > 0) else xn
        if mu <= mu_final:
            break
        mu = max(mu / 10.0, mu_final)
    gf, _ = grad_hess(x)
    s = G @ x - h if n_ineq else np.zeros(0)
    # multipliers of near-active inequalities are fitted, not read off mu / s
    active = s <= 1e-7
    z = np.where(active, 0.0, mu / np.where(active, 1.0, s)) if n_ineq else np.zeros(0)
    base = gf + mu / x + (G[~active].T @ z[~active] if n_ineq else 0.0)
    M = np.hstack([A.T, G[active].T]) if n_ineq else A.T
    sol, *_ = np.linalg.lstsq(M, -base, rcond=None)
    nu = sol[: A.shape[0]]
    if n_ineq:
        z[active] = sol[A.shape[0]:]
    stationarity = float(np.abs(base + M @ sol).max())
    dual_infeas = float(max(0.0, -z.min())) if n_ineq else 0.0
    compl = float(np.abs(z * s).max()) if n_ineq else 0.0
    kkt = max(stationarity, float(np.abs(A @ x - b).max()), dual_infeas, compl, mu * x.size)
    return x, iters, kkt, nu


def _embed(face: _Face, x, m) -> np.ndarray:
    out = np.zeros(m)
    out[face.free] = np.clip(x, 0.0, None)
    return out


def _clean_pmf(w) -> Pmf:
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    return Pmf(w, tolerance=1e-9)


def _constraint_arrays(fam: LinearFamily):
    return fam.u_array(), fam.a_array()


def _family_support(fam: LinearFamily, m: int) -> frozenset:
    A = np.vstack([np.ones(m), fam.u_array()])
    b = np.concatenate([[1.0], fam.a_array()])
    face = _relative_interior(A, b, np.zeros((0, m)), np.zeros(0), m)
    return frozenset(int(i) for i in face.free)


def _pinned_point(fam: LinearFamily, free, m):
    """Unique feasible point when the constraints determine it, else None."""
    A = np.vstack([np.ones(m), fam.u_array()])[:, free]
    b = np.concatenate([[1.0], fam.a_array()])
    if np.linalg.matrix_rank(A) < len(free):
        return None
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    out = np.zeros(m)
    out[free] = x
    return out


def _check_dims(p, fam: LinearFamily) -> np.ndarray:
    w = as_weights(p)
    if w.size != fam.m:
        raise ValueError(f"pmf over {w.size} letters, family over {fam.m}")
    return w


# ---------------------------------------------------------------------------
# linear families
# ---------------------------------------------------------------------------


def i_projection_linear(r, fam: LinearFamily) -> ProjectionResult:
    """Minimizer of ``I(p||r)`` over the linear family, as an exponential-family member."""
    rw = _check_dims(r, fam)
    m = rw.size
    U, a = _constraint_arrays(fam)
    S = frozenset(int(i) for i in np.flatnonzero(rw > 0))
    SL = _family_support(fam, m)
    if S != SL:
        raise SupportConditionError(
            f"support of r {sorted(S)} differs from support of the family {sorted(SL)}"
        )
    s = np.array(sorted(S))
    pinned = _pinned_point(fam, s, m)
    if pinned is not None:
        x = pinned[s]
        # log(p/r) = theta.u - log z
        M = np.hstack([U[:, s].T, -np.ones((s.size, 1))])
        sol, *_ = np.linalg.lstsq(M, np.log(x) - np.log(rw[s]), rcond=None)
        theta, logz = sol[:-1], sol[-1]
        member = ExpFamilyMember(rw.copy(), theta, U, a, float(math.exp(logz)))
        pmf = _clean_pmf(pinned)
        return ProjectionResult(
            pmf, member, i_divergence(pmf, rw), "i-linear", 0,
            float(np.abs(U @ pinned - a).max()), {"pinned": True},
        )
    G = U[:, s] - a[:, None]
    lr = np.log(rw[s])
    theta = np.zeros(fam.k)

    def psi(th):
        e = lr + th @ G
        mx = e.max()
        return mx + math.log(np.exp(e - mx).sum())

    it = 0
    res_norm = math.inf
    for it in range(1, MAX_ITER + 1):
        e = lr + theta @ G
        w = np.exp(e - e.max())
        w /= w.sum()
        grad = G @ w
        res_norm = float(np.abs(grad).max())
        if res_norm <= RESIDUAL_TOL:
            break
        H = (G * w) @ G.T - np.outer(grad, grad)
        step = np.linalg.lstsq(H, -grad, rcond=None)[0]
        t, f0 = 1.0, psi(theta)
        while t > 1e-16 and psi(theta + t * step) > f0 + 1e-4 * t * float(grad @ step):
            t *= 0.5
        if t <= 1e-16:
            break
        theta = theta + t * step
    if res_norm > 1e-10:
        raise ProjectionError("I-projection did not converge", iterations=it, residual=res_norm)
    z = float(np.sum(rw[s] * np.exp(theta @ U[:, s])))
    member = ExpFamilyMember(rw.copy(), theta, U, a, z)
    pmf = _clean_pmf(member.weights())
    resid = float(np.abs(U @ pmf.weights - a).max())
    return ProjectionResult(pmf, member, i_divergence(pmf, rw), "i-linear", it, resid)


def _lambda_solve(pw, G, k):
    """Minimize ``-sum p log(1 - theta.g)`` over the positive-denominator domain."""
    theta = np.zeros(k)

    def F(th):
        d = 1.0 - th @ G
        if np.any(d < DENOM_FLOOR):
            return math.inf
        return -float(pw @ np.log(d))

    it = 0
    res_norm = math.inf
    for it in range(1, MAX_ITER + 1):
        d = 1.0 - theta @ G
        q = pw / d
        grad = G @ q
        res_norm = float(np.abs(grad).max())
        if res_norm <= RESIDUAL_TOL:
            break
        H = (G * (pw / d**2)) @ G.T
        step = np.linalg.lstsq(H, -grad, rcond=None)[0]
        t, f0 = 1.0, F(theta)
        while t > 1e-16 and F(theta + t * step) > f0 + 1e-4 * t * float(grad @ step):
            t *= 0.5
        if t <= 1e-16:
            break
        theta = theta + t * step
    return theta, it, res_norm


def _lambda_bisect(pw, g):
    """One constraint: the residual ``sum p g / (1 - theta g)`` is increasing in theta."""
    hi = 1.0 / g.max() if g.max() > 0 else math.inf
    lo = 1.0 / g.min() if g.min() < 0 else -math.inf

    def resid(th):
        return float(np.sum(pw * g / (1.0 - th * g)))

    a, b = (lo if math.isfinite(lo) else -1.0), (hi if math.isfinite(hi) else 1.0)
    while not math.isfinite(lo) and resid(a) > 0:
        a *= 2
    while not math.isfinite(hi) and resid(b) < 0:
        b *= 2
    it = 0
    for it in range(1, 400):
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        if resid(mid) > 0:
            b = mid
        else:
            a = mid
    return np.array([0.5 * (a + b)]), it


def l_projection_linear(p, fam: LinearFamily) -> ProjectionResult:
    """Maximizer of ``L(q||p)`` over the linear family, as a Lambda-family member."""
    pw = _check_dims(p, fam)
    m = pw.size
    U, a = _constraint_arrays(fam)
    S = frozenset(int(i) for i in np.flatnonzero(pw > 0))
    SL = _family_support(fam, m)
    if S != SL:
        raise SupportConditionError(
            f"support of p {sorted(S)} differs from support of the family {sorted(SL)}"
        )
    s = np.array(sorted(S))
    G = U[:, s] - a[:, None]
    pinned = _pinned_point(fam, s, m)
    diagnostics = {}
    if pinned is not None:
        # 1 - theta.g_i = p_i / q_i
        theta, *_ = np.linalg.lstsq(G.T, 1.0 - pw[s] / pinned[s], rcond=None)
        it, diagnostics = 0, {"pinned": True}
    else:
        theta, it, res = _lambda_solve(pw[s], G, fam.k)
        if res > RESIDUAL_TOL and fam.k == 1:
            theta, it2 = _lambda_bisect(pw[s], G[0])
            it += it2
            diagnostics["bisection"] = True
    member = LambdaFamilyMember(pw.copy(), np.asarray(theta, dtype=float), U, a)
    den = member.denominators()[s]
    if np.any(den <= 0):
        raise ProjectionError("no positive-denominator Lambda-family solution", theta=theta)
    w = member.weights() if pinned is None else pinned
    resid = float(max(np.abs(U @ w - a).max(), abs(w.sum() - 1.0)))
    if resid > 1e-10:
        raise ProjectionError(
            "L-projection did not converge", iterations=it, residual=resid, theta=theta
        )
    pmf = _clean_pmf(w)
    return ProjectionResult(pmf, member, l_divergence(pmf, pw), "l-linear", it, resid, diagnostics)


# ---------------------------------------------------------------------------
# polyhedral sets
# ---------------------------------------------------------------------------


def _spec_m(spec, w):
    d = spec.dim()
    if d is not None and d != w.size:
        raise ValueError(f"set over {d} letters, pmf over {w.size}")
    return w.size


def l_projection_convex(p, spec: SourceSetSpec) -> ProjectionResult:
    """Maximizer of ``L(q||p)`` over an intersection of linear (in)equalities."""
    pw = as_weights(p)
    m = _spec_m(spec, pw)
    A, b, G, h = _polyhedron(spec, m)
    face = _relative_interior(A, b, G, h, m)
    if np.any(pw[np.setdiff1d(np.arange(m), face.free)] > 0):
        raise ProjectionError("every feasible source puts zero mass where p is positive")
    pf = pw[face.free]

    def grad_hess(x):
        return pf / x, -pf / x**2

    def value(x):
        s = pf > 0
        return float(pf[s] @ np.log(x[s]))

    x, iters, kkt, _ = _barrier_maximize(grad_hess, value, face)
    q = _embed(face, x, m)
    pmf = _clean_pmf(q)
    return ProjectionResult(
        pmf, None, l_divergence(pmf, pw), "l-convex", iters, kkt, {"kkt_residual": kkt}
    )


def i_projection_convex(r, spec: SourceSetSpec) -> ProjectionResult:
    """Minimizer of ``I(p||r)`` over an intersection of linear (in)equalities."""
    rw = as_weights(r)
    m = _spec_m(spec, rw)
    if evaluate_set(spec, rw):
        return ProjectionResult(_clean_pmf(rw), None, 0.0, "i-convex", 0, 0.0)
    A, b, G, h = _polyhedron(spec, m)
    zero_r = [i for i in range(m) if rw[i] <= 0]
    if zero_r:
        rows = np.eye(m)[zero_r]
        A = np.vstack([A, rows])
        b = np.concatenate([b, np.zeros(len(zero_r))])
    face = _relative_interior(A, b, G, h, m)
    rf = rw[face.free]
    lr = np.log(rf)

    def grad_hess(x):
        return -(np.log(x) - lr + 1.0), -1.0 / x

    def value(x):
        return -float(x @ (np.log(x) - lr))

    x, iters, kkt, _ = _barrier_maximize(grad_hess, value, face)
    pmf = _clean_pmf(_embed(face, x, m))
    return ProjectionResult(
        pmf, None, i_divergence(pmf, rw), "i-convex", iters, kkt, {"kkt_residual": kkt}
    )


def _linear_family_of(spec: SourceSetSpec) -> LinearFamily | None:
    atoms = flatten(spec)
    if atoms and all(isinstance(x, LinearEq) for x in atoms):
        return LinearFamily(tuple(x.u for x in atoms), tuple(x.a for x in atoms))
    return None


def l_projection(p, spec: SourceSetSpec) -> ProjectionResult:
    """L-projection onto a polyhedral set, using the Lambda-family solve when it applies."""
    pw = as_weights(p)
    if not flatten(spec):
        pmf = _clean_pmf(pw)
        return ProjectionResult(pmf, None, l_divergence(pmf, pw), "l-simplex")
    fam = _linear_family_of(spec)
    if fam is not None:
        try:
            return l_projection_linear(pw, fam)
        except SupportConditionError:
            pass
    return l_projection_convex(pw, spec)


def i_projection(r, spec: SourceSetSpec) -> ProjectionResult:
    """I-projection onto a polyhedral set, using the exponential-family solve when it applies."""
    rw = as_weights(r)
    if not flatten(spec):
        return ProjectionResult(_clean_pmf(rw), None, 0.0, "i-simplex")
    fam = _linear_family_of(spec)
    if fam is not None:
        try:
            return i_projection_linear(rw, fam)
        except SupportConditionError:
            pass
    return i_projection_convex(rw, spec)


# ---------------------------------------------------------------------------
# certificates and feasible probes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimalityReport:
    values: np.ndarray
    tol: float

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    @property
    def passed(self) -> bool:
        return self.max_abs <= self.tol


def check_l_optimality(candidate, p, fam: LinearFamily, probes, tol: float = 1e-8) -> OptimalityReport:
    """Evaluate ``sum_{S(p)} p (1 - q'/q)`` for every feasible probe ``q'``.

    All values vanish exactly at the L-projection of ``p`` on the family.
    """
    qw = as_weights(candidate)
    pw = _check_dims(p, fam)
    s = pw > 0
    if np.any(qw[s] <= 0):
        raise ValueError("candidate has zero mass where p is positive")
    vals = np.array([float(np.sum(pw[s] * (1.0 - as_weights(pr)[s] / qw[s]))) for pr in probes])
    return OptimalityReport(vals, tol)


def random_feasible_points(fam: LinearFamily, base, count: int, rng=None) -> list:
    """Random pmfs in the family along random directions through the feasible ``base``."""
    rng = np.random.default_rng(rng)
    bw = as_weights(base)
    m = bw.size
    A = np.vstack([np.ones(m), fam.u_array()])
    Z = null_space(A)
    out = []
    if Z.shape[1] == 0:
        return [Pmf(bw, 1e-9) for _ in range(count)]
    while len(out) < count:
        d = Z @ rng.standard_normal(Z.shape[1])
        with np.errstate(divide="ignore"):
            up = np.where(d < 0, -bw / d, np.inf).min()
            down = np.where(d > 0, bw / d, np.inf).min()
        t = rng.uniform(-down, up) * 0.999
        q = np.clip(bw + t * d, 0.0, None)
        out.append(Pmf(q, 1e-9))
    return out


def exact_feasible(spec: SourceSetSpec, q) -> bool:
    """Exact membership of a rational pmf."""
    coords = as_exact(q)
    den = 1
    for c in coords:
        den = math.lcm(den, c.denominator)
    if any(c < 0 for c in coords) or sum(coords) != 1:
        return False
    counts = tuple(int(c * den) for c in coords)
    return evaluate_set(spec, NType(counts))

"""Minimise the collage form over a compact feasible region.

The region is a box, the collage feasibility half-space g.x <= h and,
optionally, a weighted l1 ball sum_k sqrt(c_k)|alpha_k| <= C_max that keeps
the fitted operator contractive.

:func:`solve` alternates a projected-gradient (Cauchy) step, which can
change many active bounds at once, with an exact minimisation over the
face it lands on. Face problems are solved with an eigen-pseudoinverse,
which picks the minimal-norm minimiser when the Hessian is singular
(a common situation: overlapping wavelet indicators are linearly
dependent). :func:`solve_separable` handles the block-diagonal form of
nonoverlapping maps by a dual search over the shared multipliers.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .collage import CollageQp, evaluate_form

DEFAULT_BOUND = 5.0


class InfeasibleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FeasibleRegion:
    """Box [lo, hi], half-space g.x <= h, optional ball sum w_i|x_i| <= l1_cap."""

    g: np.ndarray
    h: float
    lo: np.ndarray
    hi: np.ndarray
    l1_weights: np.ndarray | None = None
    l1_cap: float | None = None

    def __post_init__(self):
        for name in ("g", "lo", "hi"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.any(self.lo > self.hi):
            raise InfeasibleError("box has lo > hi")
        if self.l1_weights is not None:
            w = np.asarray(self.l1_weights, dtype=float)
            if self.l1_cap is None or self.l1_cap < 0 or np.any(w < 0):
                raise ValueError("l1 constraint needs nonnegative weights and cap")
            if np.any((w > 0) & ((self.lo > 0) | (self.hi < 0))):
                raise ValueError("weighted coordinates must have 0 inside their box")
            object.__setattr__(self, "l1_weights", w)

    @classmethod
    def for_qp(
        cls, qp: CollageQp, bound: float = DEFAULT_BOUND, max_contractivity: float | None = None
    ) -> "FeasibleRegion":
        """Default region: symmetric box on every parameter plus the collage half-space.

        ``max_contractivity`` adds sum_k sqrt(c_k)|alpha_k| <= max_contractivity.
        """
        N = qp.n_maps
        lo = np.full(2 * N, -float(bound))
        hi = np.full(2 * N, float(bound))
        if max_contractivity is None:
            return cls(qp.g, qp.h, lo, hi)
        w = np.concatenate([np.sqrt(qp.factors), np.zeros(N)])
        return cls(qp.g, qp.h, lo, hi, w, float(max_contractivity))

    @property
    def has_ball(self) -> bool:
        return self.l1_weights is not None

    def l1(self, x: np.ndarray) -> float:
        return float(self.l1_weights @ np.abs(x)) if self.has_ball else 0.0

    def contains(self, x: np.ndarray, tol: float = 1e-8) -> bool:
        ok = np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol)
        ok = ok and self.g @ x <= self.h + tol
        if self.has_ball:
            ok = ok and self.l1(x) <= self.l1_cap + tol
        return bool(ok)

    # projection -----------------------------------------------------------

    def _prox(self, z: np.ndarray, nu: float) -> np.ndarray:
        if nu > 0:
            z = np.sign(z) * np.maximum(np.abs(z) - nu * self.l1_weights, 0.0)
        return np.clip(z, self.lo, self.hi)

    def _ball_project(self, z: np.ndarray) -> np.ndarray:
        x = np.clip(z, self.lo, self.hi)
        if not self.has_ball or self.l1(x) <= self.l1_cap:
            return x
        w = self.l1_weights
        pos = w > 0
        lo_nu, hi_nu = 0.0, float(np.max(np.abs(z[pos]) / w[pos]))
        for _ in range(200):
            mid = 0.5 * (lo_nu + hi_nu)
            if mid <= lo_nu or mid >= hi_nu:
                break
            if self.l1(self._prox(z, mid)) > self.l1_cap:
                lo_nu = mid
            else:
                hi_nu = mid
        return self._prox(z, hi_nu)

    def project(self, y: np.ndarray) -> np.ndarray:
        """Euclidean projection onto the region (nested multiplier bisection)."""
        y = np.asarray(y, dtype=float)
        x = self._ball_project(y)
        if self.g @ x <= self.h:
            return x
        mu_hi = 1.0
        for _ in range(400):
            x = self._ball_project(y - mu_hi * self.g)
            if self.g @ x <= self.h:
                break
            mu_hi *= 2.0
        else:
            raise InfeasibleError("half-space does not meet the box")
        mu_lo = 0.0
        for _ in range(200):
            mid = 0.5 * (mu_lo + mu_hi)
            if mid <= mu_lo or mid >= mu_hi:
                break
            xm = self._ball_project(y - mid * self.g)
            if self.g @ xm > self.h:
                mu_lo = mid
            else:
                mu_hi, x = mid, xm
        return x

    # ray intersection -------------------------------------------------------

    def max_step(self, x: np.ndarray, d: np.ndarray) -> tuple[float, int]:
        """Largest tau with x + tau*d feasible, and the blocking coordinate (-1 if none)."""
        tau, block = np.inf, -1
        with np.errstate(divide="ignore", invalid="ignore"):
            t_up = np.where(d > 0, (self.hi - x) / d, np.inf)
            t_dn = np.where(d < 0, (self.lo - x) / d, np.inf)
        t_box = np.minimum(t_up, t_dn)
        if t_box.size:
            k = int(np.argmin(t_box))
            if t_box[k] < tau:
                tau, block = max(float(t_box[k]), 0.0), k
        gd = float(self.g @ d)
        if gd > 0:
            t = max((self.h - self.g @ x) / gd, 0.0)
            if t < tau:
                tau, block = t, -1
        if self.has_ball:
            t, k = self._ball_step(x, d)
            if t < tau:
                tau, block = t, k
        return tau, block

    def _ball_step(self, x: np.ndarray, d: np.ndarray) -> tuple[float, int]:
        """Largest tau with sum w|x + tau d| <= cap; phi(tau) is convex piecewise linear."""
        w = self.l1_weights
        act = (w > 0) & (d != 0)
        if not act.any():
            return np.inf, -1
        xa, da, wa = x[act], d[act], w[act]
        idx = np.flatnonzero(act)
        room = max(self.l1_cap - float(w @ np.abs(x)), 0.0)
        tight = room <= 1e-12 * (1.0 + self.l1_cap)
        # on a face where the ball is tight, small slopes are rounding noise
        flat = (1e-9 if tight else 1e-13) * float(wa @ np.abs(da))
        with np.errstate(divide="ignore"):
            bp = np.where(xa * da < 0, -xa / da, np.inf)
        order = np.argsort(bp)
        t0 = 0.0
        sgn = np.where(xa != 0, np.sign(xa), np.sign(da))
        for k in [*order, None]:
            t1 = np.inf if k is None else bp[k]
            slope = float(wa @ (sgn * da))
            if slope > flat:
                t_hit = t0 + room / slope
                if t_hit < t1:
                    return t_hit, -2
            if not np.isfinite(t1):
                return np.inf, -1
            if abs(slope) > flat:
                room -= slope * (t1 - t0)
            sgn[k] = np.sign(da[k])
            if (tight or room <= 0.0) and float(wa @ (sgn * da)) > flat:
                # the ball is tight and crossing zero would leave it: stop at zero
                return t1, int(idx[k])
            t0 = t1
        return np.inf, -1


@dataclass
class SolveReport:
    """Result of a collage QP solve.

    ``active_constraints`` lists coordinates at a box bound; index 2N stands
    for the half-space and 2N+1 for the contractivity ball.
    """

    x_star: np.ndarray
    delta2: float
    contractivity: float
    iterations: int
    converged: bool
    active_constraints: tuple
    kkt_residual: float
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("history")
        d["x_star"] = [float(v) for v in self.x_star]
        d["active_constraints"] = [int(i) for i in self.active_constraints]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SolveReport":
        d = dict(d)
        d["x_star"] = np.asarray(d["x_star"], dtype=float)
        d["active_constraints"] = tuple(d["active_constraints"])
        return cls(**d)


def _report(qp, region, x, iterations, converged, kkt, history) -> SolveReport:
    N = qp.n_maps
    act = [int(i) for i in np.flatnonzero((x <= region.lo) | (x >= region.hi))]
    tol = 1e-10 * (1.0 + abs(region.h))
    if region.h - region.g @ x <= tol:
        act.append(2 * N)
    if region.has_ball and region.l1_cap - region.l1(x) <= 1e-10 * (1.0 + region.l1_cap):
        act.append(2 * N + 1)
    delta2 = max(evaluate_form(qp, x), 0.0)
    C = float(np.sqrt(qp.factors) @ np.abs(x[:N]))
    return SolveReport(x, delta2, C, iterations, converged, tuple(act), kkt, history)


def kkt_residual(qp: CollageQp, region: FeasibleRegion, x: np.ndarray) -> float:
    """Sup-norm of the projected gradient step x - P(x - grad f(x))."""
    grad = 2.0 * qp.A @ x + qp.b
    return float(np.max(np.abs(x - region.project(x - grad)), initial=0.0))


class _Face:
    """Exact minimisation over the face of the region containing x."""

    def __init__(self, H, q, region: FeasibleRegion, rcond: float):
        self.H, self.q, self.region, self.rcond = H, q, region, rcond

    def step(self, x: np.ndarray) -> np.ndarray:
        r = self.region
        fixed = (x <= r.lo) | (x >= r.hi)
        rows = []
        if r.h - r.g @ x <= 1e-13 * (1.0 + abs(r.h)):
            rows.append(r.g)
        if r.has_ball and r.l1_cap - r.l1(x) <= 1e-13 * (1.0 + r.l1_cap):
            fixed |= (r.l1_weights > 0) & (x == 0)
            rows.append(r.l1_weights * np.sign(x))
        F = np.flatnonzero(~fixed)
        if F.size == 0:
            return x
        H, xF = self.H[np.ix_(F, F)], x[F]
        grad = (self.H @ x + self.q)[F]
        # work with y = x_F + p, E p = 0; min-norm in y
        E = np.array([row[F] for row in rows]).reshape(len(rows), F.size)
        if len(rows):
            Q, R = np.linalg.qr(E.T)
            keep = np.abs(np.diag(R)) > 1e-12 * max(1.0, np.abs(R).max())
            Q = Q[:, keep]
            y0 = Q @ (Q.T @ xF)
            P = np.eye(F.size) - Q @ Q.T
        else:
            y0 = np.zeros(F.size)
            P = None
        g0 = grad + H @ (y0 - xF)
        if P is not None:
            Hr = P @ H @ P
            g0 = P @ g0
        else:
            Hr = H
        vals, vecs = np.linalg.eigh(0.5 * (Hr + Hr.T))
        top = max(float(vals[-1]), 0.0)
        pos = vals > self.rcond * max(top, 1e-300)
        coef = vecs.T @ g0
        null_part = vecs[:, ~pos] @ coef[~pos]
        scale = max(1.0, float(np.abs(g0).max()))
        d = np.zeros_like(x)
        if np.abs(null_part).max(initial=0.0) > 1e-11 * scale:
            # zero-curvature descent: ride it to the boundary
            d[F] = -null_part
            tau, blk = r.max_step(x, d)
            if not np.isfinite(tau):
                raise RuntimeError("objective unbounded on a bounded region")
            return self._move(x, d, tau, blk)
        y = y0 - vecs[:, pos] @ (coef[pos] / vals[pos])
        d[F] = y - xF
        tau, blk = r.max_step(x, d)
        if tau >= 1.0:
            out = x.copy()
            out[F] = y
            return np.clip(out, r.lo, r.hi)
        return self._move(x, d, tau, blk)

    def _move(self, x, d, tau, blk):
        r = self.region
        out = np.clip(x + tau * d, r.lo, r.hi)
        if blk >= 0:
            if d[blk] > 0 and x[blk] + tau * d[blk] >= r.hi[blk] - 1e-12 * (1 + abs(r.hi[blk])):
                out[blk] = r.hi[blk]
            elif d[blk] < 0 and x[blk] + tau * d[blk] <= r.lo[blk] + 1e-12 * (1 + abs(r.lo[blk])):
                out[blk] = r.lo[blk]
            else:
                out[blk] = 0.0
        return out


class _EpigraphQp:
    """The region with |alpha_k| <= t_k and w.t <= cap, written as G z <= r with z = (x, t).

    Only the structured products a primal-dual method needs are provided;
    G itself is never formed.
    """

    def __init__(self, H, q, region: FeasibleRegion):
        self.H, self.q, self.r = H, q, region
        self.n = q.size
        self.wk = np.flatnonzero(region.l1_weights > 0)
        self.nt = self.wk.size
        n, nt = self.n, self.nt
        self.rhs = np.concatenate(
            [region.hi, -region.lo, np.zeros(2 * nt), [region.h, region.l1_cap]]
        )
        self.m = 2 * n + 2 * nt + 2

    def G(self, z):
        x, t = z[: self.n], z[self.n :]
        xa = x[self.wk]
        w = self.r.l1_weights[self.wk]
        return np.concatenate([x, -x, xa - t, -xa - t, [self.r.g @ x, w @ t]])

    def GT(self, y):
        n, nt = self.n, self.nt
        y0, y1 = y[:n], y[n : 2 * n]
        y2, y3 = y[2 * n : 2 * n + nt], y[2 * n + nt : 2 * n + 2 * nt]
        yg, yw = y[-2], y[-1]
        gx = y0 - y1 + yg * self.r.g
        gx[self.wk] += y2 - y3
        gt = -y2 - y3 + yw * self.r.l1_weights[self.wk]
        return np.concatenate([gx, gt])

    def normal_matrix(self, d):
        """H_z + G^T diag(d) G."""
        n, nt = self.n, self.nt
        d0, d1 = d[:n], d[n : 2 * n]
        d2, d3 = d[2 * n : 2 * n + nt], d[2 * n + nt : 2 * n + 2 * nt]
        K = np.zeros((n + nt, n + nt))
        K[:n, :n] = self.H
        K[:n, :n] += d[-2] * np.outer(self.r.g, self.r.g)
        idx = np.arange(n)
        K[idx, idx] += d0 + d1
        ti = n + np.arange(nt)
        K[self.wk, self.wk] += d2 + d3
        K[ti, ti] += d2 + d3
        K[self.wk, ti] += d3 - d2
        K[ti, self.wk] += d3 - d2
        w = self.r.l1_weights[self.wk]
        K[n:, n:] += d[-1] * np.outer(w, w)
        return K


def _interior_point(H, q, region: FeasibleRegion, tol=1e-13, max_iter=100) -> np.ndarray:
    """Mehrotra predictor-corrector on the epigraph form; returns an approximate minimiser.

    Used to locate the optimal face when the l1 ball makes active-set
    updates slow; the result is polished by the face solver afterwards.
    """
    P = _EpigraphQp(H, q, region)
    nz = P.n + P.nt
    c = np.concatenate([q, np.zeros(P.nt)])

    def hz(z):
        return np.concatenate([H @ z[: P.n], np.zeros(P.nt)])

    z = np.zeros(nz)
    s = np.maximum(P.rhs - P.G(z), 1.0)
    lam = np.ones(P.m)
    scale = 1.0 + max(float(np.abs(q).max()), float(np.abs(P.rhs[np.isfinite(P.rhs)]).max()))
    for _ in range(max_iter):
        rd = hz(z) + c + P.GT(lam)
        rp = P.G(z) + s - P.rhs
        mu = float(s @ lam) / P.m
        if max(np.abs(rd).max(), np.abs(rp).max()) <= tol * scale and mu * P.m <= tol * scale:
            break
        K = P.normal_matrix(lam / s)
        # Jacobi scaling keeps the barrier terms (which span many decades) factorable
        sc = 1.0 / np.sqrt(np.maximum(np.diag(K), 1e-300))
        Ks = K * sc[:, None] * sc[None, :]
        L, reg = None, 0.0
        while L is None:
            try:
                L = np.linalg.cholesky(Ks + reg * np.eye(nz))
            except np.linalg.LinAlgError:
                reg = 1e-14 if reg == 0.0 else reg * 100.0

        def newton(rc):
            rhs = -rd - P.GT((-rc + lam * rp) / s)
            dz = sc * np.linalg.solve(L.T, np.linalg.solve(L, sc * rhs))
            ds = -rp - P.G(dz)
            dl = (-rc - lam * ds) / s
            return dz, ds, dl

        def step_len(v, dv):
            neg = dv < 0
            return min(1.0, float(np.min(-v[neg] / dv[neg], initial=np.inf)))

        dz, ds, dl = newton(s * lam)
        a_aff = min(step_len(s, ds), step_len(lam, dl))
        mu_aff = float((s + a_aff * ds) @ (lam + a_aff * dl)) / P.m
        sigma = (mu_aff / mu) ** 3
        dz, ds, dl = newton(s * lam + ds * dl - sigma * mu)
        a = 0.99 * min(step_len(s, ds), step_len(lam, dl))
        z, s, lam = z + a * dz, s + a * ds, lam + a * dl
    return z[: P.n]


def _snap(x: np.ndarray, region: FeasibleRegion, tol: float = 1e-7) -> np.ndarray:
    """Move near-active coordinates of an interior-point estimate onto their bounds."""
    x = x.copy()
    x[x >= region.hi - tol] = region.hi[x >= region.hi - tol]
    x[x <= region.lo + tol] = region.lo[x <= region.lo + tol]
    x[(region.l1_weights > 0) & (np.abs(x) <= tol)] = 0.0
    return x


def solve(
    qp: CollageQp,
    region: FeasibleRegion | None = None,
    *,
    kkt_tol: float = 1e-8,
    max_iter: int = 10_000,
    rcond: float = 1e-12,
    x0: np.ndarray | None = None,
) -> SolveReport:
    """Minimise x^T A x + b^T x + c over ``region`` (default :meth:`FeasibleRegion.for_qp`)."""
    if region is None:
        region = FeasibleRegion.for_qp(qp)
    A, b = qp.A, qp.b
    H = 2.0 * A

    def f(x):
        return float(x @ A @ x + b @ x)

    warm = x0 is None and region.has_ball
    if warm:
        x0 = _snap(_interior_point(H, b, region), region)
    x = region.project(np.zeros(b.size) if x0 is None else np.asarray(x0, dtype=float))
    if not region.contains(x):
        raise InfeasibleError("could not find a feasible starting point")
    face = _Face(H, b, region, rcond)
    fx = f(x)
    if warm:
        # land exactly on the optimal face, with the min-norm tie-break
        xf = face.step(x)
        if region.contains(xf, tol=1e-12) and f(xf) <= fx + 1e-14 * (1.0 + abs(fx)):
            x, fx = xf, f(xf)
    history = [fx + qp.c]
    kkt = np.inf
    stall = 0
    it = 0
    for it in range(1, max_iter + 1):
        grad = H @ x + b
        kkt = float(np.max(np.abs(x - region.project(x - grad)), initial=0.0))
        if kkt <= kkt_tol:
            return _report(qp, region, x, it - 1, True, kkt, history)
        # Cauchy step along the projection arc
        gg = float(grad @ grad)
        gHg = float(grad @ H @ grad)
        t = gg / gHg if gHg > 0 else 1.0 / np.sqrt(gg)
        xc, fc = x, fx
        for _ in range(60):
            trial = region.project(x - t * grad)
            ft = f(trial)
            if ft <= fx + 1e-4 * float(grad @ (trial - x)):
                xc, fc = trial, ft
                break
            t *= 0.5
        xn = face.step(xc)
        fn = f(xn)
        if fn > fc:
            xn, fn = xc, fc
        stall = stall + 1 if fn >= fx - 1e-15 * (1.0 + abs(fx)) else 0
        x, fx = xn, fn
        history.append(fx + qp.c)
        if stall >= 50:
            break
    grad = H @ x + b
    kkt = float(np.max(np.abs(x - region.project(x - grad)), initial=0.0))
    return _report(qp, region, x, it, kkt <= kkt_tol, kkt, history)


# separable (nonoverlapping) solver ---------------------------------------


def _block_box_qp(a, m, d, p, q, la, ua, lb, ub):
    """Vectorised min a*u^2 + 2m*u*v + d*v^2 + p*u + q*v over [la,ua] x [lb,ub].

    Ties are broken toward the smaller Euclidean norm.
    """
    cands = []

    def line(curv, slope, lo, hi):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(curv > 0, -slope / (2 * curv), np.where(slope > 0, -np.inf, np.where(slope < 0, np.inf, 0.0)))
        return np.clip(t, lo, hi)

    for uf in (la, ua):
        cands.append((uf, line(d, 2 * m * uf + q, lb, ub)))
    for vf in (lb, ub):
        cands.append((line(a, 2 * m * vf + p, la, ua), vf))
    Hs = np.stack([np.stack([2 * a, 2 * m], -1), np.stack([2 * m, 2 * d], -1)], -2)
    rhs = -np.stack([p, q], -1)
    z = np.einsum("kij,kj->ki", np.linalg.pinv(Hs, rcond=1e-13), rhs)
    resid = np.abs(np.einsum("kij,kj->ki", Hs, z) - rhs).max(-1)
    ok = (resid <= 1e-12 * (1 + np.abs(rhs).max(-1))) & (z[:, 0] >= la) & (z[:, 0] <= ua)
    ok &= (z[:, 1] >= lb) & (z[:, 1] <= ub)
    cands.append((np.where(ok, z[:, 0], np.nan), np.where(ok, z[:, 1], np.nan)))

    best_u = np.full(a.shape, np.nan)
    best_v = np.full(a.shape, np.nan)
    best_f = np.full(a.shape, np.inf)
    for u, v in cands:
        u = np.broadcast_to(u, a.shape)
        v = np.broadcast_to(v, a.shape)
        fv = a * u * u + 2 * m * u * v + d * v * v + p * u + q * v
        fv = np.where(np.isnan(fv), np.inf, fv)
        empty = ~np.isfinite(best_f)
        with np.errstate(invalid="ignore"):
            tol = 1e-14 * (1 + np.abs(best_f))
            better = fv < best_f - tol
            tie = (np.abs(fv - best_f) <= tol) & (u * u + v * v < best_u**2 + best_v**2)
        take = (empty & np.isfinite(fv)) | better | tie
        best_u = np.where(take, u, best_u)
        best_v = np.where(take, v, best_v)
        best_f = np.where(take, np.minimum(fv, best_f), best_f)
    return best_u, best_v, best_f


def solve_separable(qp: CollageQp, region: FeasibleRegion | None = None) -> SolveReport:
    """Dual search for block-diagonal forms built from nonoverlapping maps."""
    if region is None:
        region = FeasibleRegion.for_qp(qp)
    N = qp.n_maps
    A = qp.A
    k = np.arange(N)
    mask = np.zeros_like(A, dtype=bool)
    mask[k, k] = mask[N + k, N + k] = mask[k, N + k] = mask[N + k, k] = True
    if np.any(A[~mask] != 0):
        raise ValueError("quadratic form is not block-structured")
    w = region.l1_weights
    if w is not None and np.any(w[N:] > 0):
        raise ValueError("separable solver supports l1 weights on alpha only")
    a, d, m = A[k, k], A[N + k, N + k], A[k, N + k]
    p0, q0 = qp.b[:N], qp.b[N:]
    la, ua, lb, ub = region.lo[:N], region.hi[:N], region.lo[N:], region.hi[N:]
    g = region.g

    def primal(mu, nu):
        p = p0 + mu * g[:N]
        q = q0 + mu * g[N:]
        if nu == 0:
            u, v, _ = _block_box_qp(a, m, d, p, q, la, ua, lb, ub)
            return np.concatenate([u, v])
        pen = nu * w[:N]
        u1, v1, f1 = _block_box_qp(a, m, d, p + pen, q, np.maximum(la, 0), ua, lb, ub)
        u2, v2, f2 = _block_box_qp(a, m, d, p - pen, q, la, np.minimum(ua, 0), lb, ub)
        tol = 1e-14 * (1 + np.abs(f1))
        first = (f1 < f2 - tol) | ((np.abs(f1 - f2) <= tol) & (u1 * u1 + v1 * v1 <= u2 * u2 + v2 * v2))
        return np.concatenate([np.where(first, u1, u2), np.where(first, v1, v2)])

    def bisect(fun, ok):
        """Smallest multiplier >= 0 whose primal point passes ``ok``."""
        x = fun(0.0)
        if ok(x):
            return x
        hi = 1.0
        for _ in range(400):
            x = fun(hi)
            if ok(x):
                break
            hi *= 2.0
        else:
            raise InfeasibleError("no feasible multiplier found")
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            xm = fun(mid)
            if ok(xm):
                hi, x = mid, xm
            else:
                lo = mid
        return x

    if region.has_ball:
        def with_ball(mu):
            return bisect(lambda nu: primal(mu, nu), lambda x: region.l1(x) <= region.l1_cap)
    else:
        def with_ball(mu):
            return primal(mu, 0.0)

    x = bisect(with_ball, lambda x: g @ x <= region.h)
    kkt = kkt_residual(qp, region, x)
    return _report(qp, region, x, 0, True, kkt, [evaluate_form(qp, x)])

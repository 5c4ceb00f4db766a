"""Embedded interior-point solver for the conic IR.

The method is a homogeneous self-dual (HSD) embedding over the cone
F x R+^k x PSD(d_1) x ... with Nesterov-Todd scaling and a Mehrotra
predictor-corrector step.  Design notes:

* Free variables are kept out of the cone and handled natively through a
  bordered KKT system [[M, A_f], [A_f^T, 0]] with M = A_c G A_c^T, where G is
  the NT metric W (.) W on the cone coordinates.
* Per PSD block the scaling point is computed from Cholesky factors
  Lx, Ls and the SVD Ls^T Lx = U S V^T as R = Lx V S^{-1/2},
  R^{-T} = Ls U S^{-1/2}; both X and S scale to the diagonal S, which makes
  the scaled complementarity system diagonal (Jordan solve entrywise).
* Residuals are always evaluated on the ORIGINAL (unequilibrated) data, so
  the returned tolerances mean what they say.
* The embedding yields the exact per-iterate identity
  primal - dual = (-r_g - kappa)/tau, hence the recorded weak-duality bound
  primal >= dual - (|r_g| + kappa)/tau holds at every iterate.
* Infeasibility/unboundedness are reported from approximate Farkas
  certificates once tau collapses.

Determinism: pure numpy/scipy dense linear algebra, no randomness.
An alternative backend can be selected with the EQNRSFM_SOLVER_BACKEND
environment variable (or the ``backend=`` argument); "cvxopt" is registered
when that package is importable, and the IR itself can be exported for
out-of-process solvers.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import lu_factor, lu_solve

from ..config import DEFAULT_TOL
from ..lifting import LinearFunctional
from .program import ConicProgram, StandardForm, svec_len, unsvec, vectorize

_SQRT2 = math.sqrt(2.0)


class _NumericalBreakdown(Exception):
    """Internal: a linear solve produced nonfinite values (iterates diverged
    or the KKT system lost rank beyond what regularization can absorb)."""


@dataclass
class IterationRecord:
    pres: float
    dres: float
    relgap: float
    pobj: float
    dobj: float
    gap_bound: float
    mu: float
    step: float
    tau: float
    kappa: float


@dataclass
class SolverDiagnostics:
    iterations: list[IterationRecord] = field(default_factory=list)
    min_eigs: dict[str, float] = field(default_factory=dict)
    row_labels: list[str] = field(default_factory=list)
    detail: str = ""


@dataclass
class ConicSolution:
    status: str
    objective: float
    psd: dict[str, np.ndarray]
    soc: dict[str, np.ndarray]
    free: np.ndarray
    nonneg: np.ndarray
    duals: np.ndarray
    residuals: dict[str, float]
    diagnostics: SolverDiagnostics

    def value(self, f: LinearFunctional) -> float:
        """Evaluate a functional at the primal solution."""
        total = f.constant
        if f.block_id == "free":
            for r, _, v in f.entries:
                total += v * self.free[r]
        elif f.block_id == "nonneg":
            for r, _, v in f.entries:
                total += v * self.nonneg[r]
        elif f.block_id in self.psd:
            M = self.psd[f.block_id]
            for r, c, v in f.entries:
                total += v * M[r, c]
        elif f.block_id in self.soc:
            vec = self.soc[f.block_id]
            for r, _, v in f.entries:
                total += v * vec[r]
        else:
            raise KeyError(f"solution has no block {f.block_id!r}")
        return float(total)


# ---------------------------------------------------------------------------
# cone bookkeeping
# ---------------------------------------------------------------------------


class _Cone:
    """Layout of the cone part (nonneg scalars then svec'd PSD blocks)."""

    def __init__(self, n_nonneg: int, psd_dims: list[int]):
        self.nn = n_nonneg
        self.dims = psd_dims
        self.slices = []
        off = n_nonneg
        for d in psd_dims:
            self.slices.append(slice(off, off + svec_len(d)))
            off += svec_len(d)
        self.size = off
        self.degree = n_nonneg + sum(psd_dims)
        # per-dim svec gather indices (upper triangle, row-major)
        self._ut: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        for d in set(psd_dims):
            iu, ju = np.triu_indices(d)
            mult = np.where(iu == ju, 1.0, _SQRT2)
            self._ut[d] = (iu, ju, mult)

    def svec(self, d: int, M: np.ndarray) -> np.ndarray:
        iu, ju, mult = self._ut[d]
        return M[iu, ju] * mult

    def identity(self) -> np.ndarray:
        e = np.zeros(self.size)
        e[: self.nn] = 1.0
        for d, sl in zip(self.dims, self.slices):
            e[sl] = self.svec(d, np.eye(d))
        return e

    def mats(self, v: np.ndarray) -> list[np.ndarray]:
        return [unsvec(v[sl], d) for d, sl in zip(self.dims, self.slices)]


def _chol(M: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        # iterate is numerically on the cone boundary: floor the spectrum
        w, V = np.linalg.eigh(M)
        floor = max(np.max(np.abs(w)), 1.0) * 1e-14
        return np.linalg.cholesky((V * np.maximum(w, floor)) @ V.T)


class _Scaling:
    """NT scaling state for the current (x, s) cone pair."""

    def __init__(self, cone: _Cone, x: np.ndarray, s: np.ndarray):
        self.cone = cone
        self.w_nn = np.sqrt(x[: cone.nn] / s[: cone.nn]) if cone.nn else np.zeros(0)
        self.lam_nn = np.sqrt(x[: cone.nn] * s[: cone.nn]) if cone.nn else np.zeros(0)
        self.R: list[np.ndarray] = []
        self.RmT: list[np.ndarray] = []
        self.sig: list[np.ndarray] = []
        for d, sl in zip(cone.dims, cone.slices):
            X = unsvec(x[sl], d)
            S = unsvec(s[sl], d)
            Lx = _chol(X)
            Ls = _chol(S)
            U, sig, Vt = np.linalg.svd(Ls.T @ Lx)
            sig = np.maximum(sig, 1e-150)
            inv_root = 1.0 / np.sqrt(sig)
            self.R.append(Lx @ (Vt.T * inv_root))
            self.RmT.append(Ls @ (U * inv_root))
            self.sig.append(sig)

    def apply_G(self, v: np.ndarray) -> np.ndarray:
        """NT metric: w^2 v on nonnegatives, svec(W V W) per PSD block."""
        out = np.empty_like(v)
        out[: self.cone.nn] = self.w_nn**2 * v[: self.cone.nn]
        for R, d, sl in zip(self.R, self.cone.dims, self.cone.slices):
            Z = unsvec(v[sl], d)
            out[sl] = self.cone.svec(d, R @ (R.T @ Z @ R) @ R.T)
        return out

    def scaled_dx(self, k: int, dX: np.ndarray) -> np.ndarray:
        RmT = self.RmT[k]
        return RmT.T @ dX @ RmT

    def scaled_ds(self, k: int, dS: np.ndarray) -> np.ndarray:
        R = self.R[k]
        return R.T @ dS @ R


def _max_step_nn(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def _max_step_psd(sig: np.ndarray, dbar: np.ndarray) -> float:
    """Largest a with Sigma + a*dbar >= 0, via the whitened eigenvalue bound."""
    root = 1.0 / np.sqrt(sig)
    lam_min = float(np.linalg.eigvalsh(dbar * np.outer(root, root))[0])
    return np.inf if lam_min >= 0 else 1.0 / (-lam_min)


# ---------------------------------------------------------------------------
# equilibration
# ---------------------------------------------------------------------------


def _equilibrate(sf: StandardForm, iters: int = 6):
    """Ruiz-style scaling; PSD block columns are scaled uniformly per block so
    the cone is preserved, free/nonneg columns individually."""
    A = sf.A.tocsr().astype(float)
    rows, cols = A.shape
    dr = np.ones(rows)
    dc = np.ones(cols)
    groups: list[np.ndarray] = [np.array([j]) for j in range(sf.n_free + sf.n_nonneg)]
    for off, d in zip(sf.psd_offsets, sf.psd_dims):
        groups.append(np.arange(off, off + svec_len(d)))
    if A.nnz:
        for _ in range(iters):
            As = sparse.diags(dr) @ A @ sparse.diags(dc)
            As_abs = abs(As)
            rmax = As_abs.max(axis=1).toarray().ravel()
            rmax[rmax == 0] = 1.0
            dr /= np.sqrt(rmax)
            cmax = As_abs.max(axis=0).toarray().ravel()
            for g in groups:
                gmax = cmax[g].max() if len(g) else 0.0
                if gmax > 0:
                    dc[g] /= math.sqrt(gmax)
    A_s = (sparse.diags(dr) @ A @ sparse.diags(dc)).tocsr()
    b_s = dr * sf.b
    c_s = dc * sf.c
    alpha = 1.0 / max(1.0, float(np.max(np.abs(b_s))) if rows else 1.0)
    beta = 1.0 / max(1.0, float(np.max(np.abs(c_s))) if cols else 1.0)
    return A_s, alpha * b_s, beta * c_s, dr, dc, alpha, beta


# ---------------------------------------------------------------------------
# the HSD interior-point method
# ---------------------------------------------------------------------------


class _BlockRows:
    """Constraint-row structure of one PSD block, precomputed once.

    For each constraint row touching the block we store the symmetric-matrix
    entry lists (i, j, w) with w chosen so that the scaled constraint matrix
    is V_r = 1/2 (L^T M + M^T L), L = R[i,:], M = w * R[j,:].
    """

    def __init__(self, A: sparse.csr_matrix, col_off: int, d: int):
        sub = A[:, col_off : col_off + svec_len(d)].tocoo()
        # svec position -> (i, j)
        iu, ju = np.triu_indices(d)
        pos_i, pos_j = iu[sub.col], ju[sub.col]
        w = np.where(pos_i == pos_j, sub.data, _SQRT2 * sub.data)
        order = np.argsort(sub.row, kind="stable")
        self.rows = sub.row[order]
        self.i = pos_i[order]
        self.j = pos_j[order]
        self.w = w[order]
        self.touch, self.ptr = np.unique(self.rows, return_index=True)
        self.ptr = np.append(self.ptr, len(self.rows))
        self.d = d


def _solve_embedded(sf: StandardForm, tol: float, max_iter: int):
    A0 = sf.A.tocsr()
    b0, c0 = sf.b, sf.c
    rows = A0.shape[0]
    nf = sf.n_free
    A, b, c, dr, dc, al, be = _equilibrate(sf)
    cone = _Cone(sf.n_nonneg, sf.psd_dims)
    nc = cone.size

    Af = A[:, :nf].toarray() if nf else np.zeros((rows, 0))
    Ac = A[:, nf:].tocsr()
    AcT = Ac.T.tocsr()
    c_f, c_c = c[:nf], c[nf:]
    norm_b0 = 1.0 + float(np.linalg.norm(b0))
    norm_c0 = 1.0 + float(np.linalg.norm(c0))

    block_rows = [_BlockRows(Ac, off - nf, d) for off, d in zip(sf.psd_offsets, sf.psd_dims)]
    nn_cols = Ac[:, : cone.nn].tocsc()

    # start at the central ray
    xf = np.zeros(nf)
    xc = cone.identity()
    sc = cone.identity()
    y = np.zeros(rows)
    tau, kappa = 1.0, 1.0

    diag = SolverDiagnostics(row_labels=list(sf.row_labels))
    history = diag.iterations
    best = None
    delta_reg = 1e-9

    def original_point():
        x_orig = np.concatenate([xf, xc]) * dc / (al * tau)
        y_orig = dr * y / (be * tau)
        s_full = np.concatenate([np.zeros(nf), sc])
        s_orig = (s_full / dc) / (be * tau)
        return x_orig, y_orig, s_orig

    def original_residuals():
        x_orig, y_orig, s_orig = original_point()
        pres = float(np.linalg.norm(A0 @ x_orig - b0)) / norm_b0
        dres = float(np.linalg.norm(A0.T @ y_orig + s_orig - c0)) / norm_c0
        pobj = float(c0 @ x_orig)
        dobj = float(b0 @ y_orig)
        relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        return pres, dres, relgap, pobj, dobj, x_orig, y_orig, s_orig

    status, detail = "max_iter", "iteration limit reached"
    step = 0.0

    for it in range(max_iter + 1):
        # residuals of the homogeneous model (scaled data)
        x_all = np.concatenate([xf, xc])
        rp = A @ x_all - b * tau
        rd = -(A.T @ y) + c * tau - np.concatenate([np.zeros(nf), sc])
        rg = float(b @ y - c @ x_all - kappa)
        mu = (float(xc @ sc) + tau * kappa) / (cone.degree + 1)

        pres, dres, relgap, pobj, dobj, x_o, y_o, s_o = original_residuals()
        gap_bound = (abs(rg) + kappa) / tau
        history.append(
            IterationRecord(pres, dres, relgap, pobj, dobj, gap_bound, mu, step, tau, kappa)
        )
        cand = (max(pres, dres, relgap), it)
        if best is None or cand[0] < best[0][0]:
            best = (cand, (x_o, y_o, s_o, pobj))

        if pres <= tol and dres <= tol and relgap <= tol:
            status, detail = "optimal", f"converged in {it} iterations"
            best = (cand, (x_o, y_o, s_o, pobj))
            break

        # Endgame stall: the KKT system has hit its conditioning floor and
        # residuals stopped improving.  (Skipped while the homogenizer is
        # collapsing, where certificates form instead.)
        if it - best[0][1] >= 12 and tau > 1e-2:
            status, detail = (
                "max_iter",
                f"no residual progress since iteration {best[0][1]} (stalled)",
            )
            break

        # Farkas certificates once the homogenizer collapses
        if tau <= 1e-4:
            by = float(b @ y)
            cx = float(c @ (np.concatenate([xf, xc])))
            if by > tol:
                res_p = np.linalg.norm(A.T @ y + np.concatenate([np.zeros(nf), sc]))
                if res_p <= tol * by:
                    status, detail = "infeasible", "dual improving ray found"
                    break
            if cx < -tol:
                res_d = np.linalg.norm(A @ np.concatenate([xf, xc]))
                if res_d <= tol * (-cx):
                    status, detail = "unbounded", "primal improving ray found"
                    break

        if it == max_iter:
            break

        scal = _Scaling(cone, xc, sc)
        rd_c = rd[nf:]
        rd_f = rd[:nf]

        # KKT matrix M = A_c G A_c^T (+ free border), factored once per iteration
        M = np.zeros((rows, rows))
        if cone.nn:
            w2 = scal.w_nn**2
            M += (nn_cols.multiply(w2) @ nn_cols.T).toarray()
        for k, br in enumerate(block_rows):
            if len(br.touch) == 0:
                continue
            R = scal.R[k]
            B = np.empty((len(br.touch), svec_len(br.d)))
            for t in range(len(br.touch)):
                sl = slice(br.ptr[t], br.ptr[t + 1])
                L = R[br.i[sl], :]
                Mw = br.w[sl, None] * R[br.j[sl], :]
                LM = L.T @ Mw
                B[t] = cone.svec(br.d, 0.5 * (LM + LM.T))
            M[np.ix_(br.touch, br.touch)] += B @ B.T

        K = np.zeros((rows + nf, rows + nf))
        K[:rows, :rows] = M
        K[:rows, rows:] = Af
        K[rows:, :rows] = Af.T
        K_reg = K.copy()
        K_reg[:rows, :rows] += delta_reg * np.eye(rows)
        K_reg[rows:, rows:] -= delta_reg * np.eye(nf)
        try:
            with np.errstate(all="ignore"), warnings.catch_warnings():
                warnings.simplefilter("ignore")
                lu = lu_factor(K_reg, check_finite=False)
        except (ValueError, np.linalg.LinAlgError):
            status, detail = "max_iter", "KKT factorization failed"
            break

        def ksolve(rhs: np.ndarray) -> np.ndarray:
            with np.errstate(all="ignore"):
                u = lu_solve(lu, rhs, check_finite=False)
                for _ in range(2):
                    if not np.all(np.isfinite(u)):
                        raise _NumericalBreakdown
                    u += lu_solve(lu, rhs - K @ u, check_finite=False)
            if not np.all(np.isfinite(u)):
                raise _NumericalBreakdown
            return u

        g_c = scal.apply_G(c_c)
        r1 = np.concatenate([b + Ac @ g_c, c_f])
        try:
            u_q = ksolve(r1)
        except (_NumericalBreakdown, np.linalg.LinAlgError):
            status, detail = "max_iter", f"numerical breakdown at iteration {it}"
            break
        q2 = np.concatenate([b - Ac @ g_c, -c_f])
        denom_const = float(c_c @ g_c) + kappa / tau

        def newton(compl_nn, compl_psd, compl_tk):
            # h = R^{-T} Jinv R^{-1}, Jordan-solved entrywise in scaled space
            hv = np.empty(nc)
            if cone.nn:
                hv[: cone.nn] = compl_nn / scal.lam_nn / scal.w_nn
            for k, (d, sl) in enumerate(zip(cone.dims, cone.slices)):
                sig = scal.sig[k]
                Z = 2.0 * compl_psd[k] / (sig[:, None] + sig[None, :])
                RmT = scal.RmT[k]
                hv[sl] = cone.svec(d, RmT @ Z @ RmT.T)
            hv -= rd_c
            gv = scal.apply_G(hv)
            r0 = np.concatenate([-rp - Ac @ gv, rd_f])
            u_r = ksolve(r0)
            denom = float(q2 @ u_q) + denom_const
            if denom == 0.0 or not np.isfinite(denom):
                raise _NumericalBreakdown("singular tau pivot")
            dtau = (-rg + float(g_c @ hv) + compl_tk / tau - float(q2 @ u_r)) / denom
            sol = u_r + dtau * u_q
            dy = sol[:rows]
            dxf = sol[rows:]
            dxc = scal.apply_G(AcT @ dy - c_c * dtau + hv)
            ds = -(AcT @ dy) + c_c * dtau + rd_c
            dkappa = (compl_tk - kappa * dtau) / tau
            return dy, dxf, dxc, ds, dtau, dkappa

        def max_step(dxc, ds, dtau, dkappa):
            alpha = min(
                _max_step_nn(xc[: cone.nn], dxc[: cone.nn]),
                _max_step_nn(sc[: cone.nn], ds[: cone.nn]),
                _max_step_nn(np.array([tau, kappa]), np.array([dtau, dkappa])),
            )
            for k, (d, sl) in enumerate(zip(cone.dims, cone.slices)):
                dX = unsvec(dxc[sl], d)
                dS = unsvec(ds[sl], d)
                alpha = min(alpha, _max_step_psd(scal.sig[k], scal.scaled_dx(k, dX)))
                alpha = min(alpha, _max_step_psd(scal.sig[k], scal.scaled_ds(k, dS)))
            return alpha

        # predictor: pure Newton toward zero complementarity
        try:
            compl_nn_aff = -xc[: cone.nn] * sc[: cone.nn]
            compl_psd_aff = [-np.diag(sig**2) for sig in scal.sig]
            aff = newton(compl_nn_aff, compl_psd_aff, -tau * kappa)
            dy_a, dxf_a, dxc_a, ds_a, dtau_a, dkap_a = aff
            alpha_aff = min(1.0, max_step(dxc_a, ds_a, dtau_a, dkap_a))

            mu_aff = (
                float((xc + alpha_aff * dxc_a) @ (sc + alpha_aff * ds_a))
                + (tau + alpha_aff * dtau_a) * (kappa + alpha_aff * dkap_a)
            ) / (cone.degree + 1)
            sigma = min(1.0, max(1e-8, (max(mu_aff, 0.0) / max(mu, 1e-300)) ** 3))

            # corrector with Mehrotra second-order term
            compl_nn = (
                sigma * mu
                - xc[: cone.nn] * sc[: cone.nn]
                - dxc_a[: cone.nn] * ds_a[: cone.nn]
            )
            compl_psd = []
            for k, (d, sl) in enumerate(zip(cone.dims, cone.slices)):
                dxb = scal.scaled_dx(k, unsvec(dxc_a[sl], d))
                dsb = scal.scaled_ds(k, unsvec(ds_a[sl], d))
                cross = 0.5 * (dxb @ dsb + dsb @ dxb)
                compl_psd.append(sigma * mu * np.eye(d) - np.diag(scal.sig[k] ** 2) - cross)
            compl_tk = sigma * mu - tau * kappa - dtau_a * dkap_a

            dy, dxf_d, dxc_d, ds_d, dtau, dkappa = newton(compl_nn, compl_psd, compl_tk)
        except (_NumericalBreakdown, np.linalg.LinAlgError):
            status, detail = "max_iter", f"numerical breakdown at iteration {it}"
            break
        if not all(
            np.all(np.isfinite(v))
            for v in (dy, dxf_d, dxc_d, ds_d, np.array([dtau, dkappa]))
        ):
            status, detail = "max_iter", f"numerical breakdown at iteration {it}"
            break
        step = min(1.0, 0.99 * max_step(dxc_d, ds_d, dtau, dkappa))
        if step < 1e-8:
            status, detail = "max_iter", f"step collapsed at iteration {it}"
            break

        y += step * dy
        xf += step * dxf_d
        xc += step * dxc_d
        sc += step * ds_d
        tau += step * dtau
        kappa += step * dkappa

    diag.detail = detail
    (x_best, y_best, s_best, pobj_best) = best[1]
    if status in ("infeasible", "unbounded"):
        x_best, y_best, s_best = original_point()
    return status, x_best, y_best, s_best, diag


def _package(
    prog: ConicProgram,
    sf: StandardForm,
    status: str,
    x: np.ndarray,
    y: np.ndarray,
    diag: SolverDiagnostics,
) -> ConicSolution:
    nf, nn = sf.n_free, sf.n_nonneg
    free = x[:nf].copy()
    nonneg = x[nf : nf + nn].copy()
    psd: dict[str, np.ndarray] = {}
    for bid, d, off in zip(sf.psd_ids, sf.psd_dims, sf.psd_offsets):
        psd[bid] = unsvec(x[off : off + svec_len(d)], d)
    soc: dict[str, np.ndarray] = {}
    for bid, d in prog.soc_blocks:
        arrow = psd.pop(f"socarrow:{bid}")
        vec = np.empty(d)
        vec[0] = arrow[0, 0]
        vec[1:] = arrow[0, 1:]
        soc[bid] = vec
    for bid, M in psd.items():
        diag.min_eigs[bid] = float(np.linalg.eigvalsh(M)[0]) if M.size else 0.0

    pres = float(np.linalg.norm(sf.A @ x - sf.b)) / (1.0 + float(np.linalg.norm(sf.b)))
    pobj = float(sf.c @ x) + sf.objective_constant
    dobj = float(sf.b @ y) + sf.objective_constant
    relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    last = diag.iterations[-1] if diag.iterations else None
    residuals = {
        "primal": pres,
        "dual": last.dres if last else float("nan"),
        "gap": relgap,
    }
    return ConicSolution(
        status=status,
        objective=pobj,
        psd=psd,
        soc=soc,
        free=free,
        nonneg=nonneg,
        duals=y.copy(),
        residuals=residuals,
        diagnostics=diag,
    )


def _run_embedded(prog: ConicProgram, tol: float, max_iter: int) -> ConicSolution:
    sf = vectorize(prog)
    status, x, y, s, diag = _solve_embedded(sf, tol, max_iter)
    sol = _package(prog, sf, status, x, y, diag)
    if sol.status == "optimal":
        last = sol.diagnostics.iterations[-1]
        assert max(last.pres, last.dres, last.relgap) <= tol
    return sol


# ---------------------------------------------------------------------------
# backend registry
# ---------------------------------------------------------------------------


def _run_cvxopt(prog: ConicProgram, tol: float, max_iter: int) -> ConicSolution:
    """Adapter for the cvxopt conelp solver (optional cross-check backend)."""
    import cvxopt  # noqa: F401  (raises ImportError when unavailable)
    import cvxopt.solvers

    sf = vectorize(prog)
    nf, nn = sf.n_free, sf.n_nonneg
    ncols = sf.n_cols

    # cone rows: s = x restricted to nonneg coords, then full (column-major)
    # matrix entries per PSD block
    g_rows, g_cols, g_vals = [], [], []
    h_len = 0
    for i in range(nn):
        g_rows.append(h_len + i)
        g_cols.append(nf + i)
        g_vals.append(-1.0)
    h_len += nn
    for off, d in zip(sf.psd_offsets, sf.psd_dims):
        iu, ju = np.triu_indices(d)
        for p, (i, j) in enumerate(zip(iu.tolist(), ju.tolist())):
            v = -1.0 if i == j else -1.0 / _SQRT2
            g_rows.append(h_len + i * d + j)
            g_cols.append(off + p)
            g_vals.append(v)
            if i != j:
                g_rows.append(h_len + j * d + i)
                g_cols.append(off + p)
                g_vals.append(v)
        h_len += d * d
    G = cvxopt.spmatrix(g_vals, g_rows, g_cols, (h_len, ncols))
    h = cvxopt.matrix(np.zeros(h_len))
    Acoo = sf.A.tocoo()
    Amat = cvxopt.spmatrix(
        [float(v) for v in Acoo.data],
        [int(r) for r in Acoo.row],
        [int(cc) for cc in Acoo.col],
        (sf.A.shape[0], ncols),
    )
    dims = {"l": nn, "q": [], "s": list(sf.psd_dims)}
    opts = {
        "show_progress": False,
        "abstol": tol,
        "reltol": tol,
        "feastol": tol,
        "maxiters": max_iter,
    }
    res = cvxopt.solvers.conelp(
        cvxopt.matrix(sf.c), G, h, dims, Amat, cvxopt.matrix(sf.b), options=opts
    )
    status_map = {
        "optimal": "optimal",
        "primal infeasible": "infeasible",
        "dual infeasible": "unbounded",
        "unknown": "max_iter",
    }
    x = np.asarray(res["x"]).ravel() if res["x"] is not None else np.zeros(ncols)
    yv = np.asarray(res["y"]).ravel() if res["y"] is not None else np.zeros(sf.A.shape[0])
    diag = SolverDiagnostics(row_labels=list(sf.row_labels), detail=f"cvxopt: {res['status']}")
    return _package(prog, sf, status_map.get(res["status"], "max_iter"), x, yv, diag)


_BACKENDS = {
    "embedded": _run_embedded,
    "cvxopt": _run_cvxopt,
}


def solve(
    prog: ConicProgram,
    tol: float = DEFAULT_TOL.solver_tol,
    max_iter: int = DEFAULT_TOL.solver_max_iter,
    backend: str | None = None,
) -> ConicSolution:
    """Solve a conic program, returning primal/dual values and diagnostics.

    On ``status == "optimal"`` the primal, dual, and gap residuals (measured
    on the original problem data) are all at most ``tol``.
    """
    prog.validate()
    name = backend or os.environ.get("EQNRSFM_SOLVER_BACKEND", "embedded")
    if name not in _BACKENDS:
        raise ValueError(f"unknown solver backend {name!r}; have {sorted(_BACKENDS)}")
    return _BACKENDS[name](prog, tol, max_iter)

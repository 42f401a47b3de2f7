# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

"""Dense Goldfarb-Idnani dual active-set QP solver.

Problems are posed as

    minimize    1/2 x^T Q x + c^T x
    subject to  A x = b
                D x <= f

Internally the solver works on the dual form G = Q + rho I, CE^T x + ce0 = 0
and CI^T x + ci0 >= 0 with CE = A^T, ce0 = -b, CI = -D^T and ci0 = f. The
active constraint normals N are kept factored as J^T N = [R; 0] where
J = L^-T from the Cholesky factor of G and R is upper triangular.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
import typing as t

import numpy as np
import numpy.typing as npt
import scipy.linalg

from ._errors import InputError

log = logging.getLogger(__name__)

DEFAULT_RHO = 1e-8
VIOLATION_TOL = 1e-9

_EPS = float(np.finfo(float).eps)

TraceCallback = t.Callable[[int, float], None]


class QpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max_iterations"
    NUMERICAL_FAILURE = "numerical_failure"


def _as_matrix(value: t.Optional[npt.ArrayLike], cols: int) -> np.ndarray:
    if value is None:
        return np.zeros((0, cols))
    arr = np.array(value, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, cols) if arr.size else np.zeros((0, cols))
    return arr


def _as_vector(value: t.Optional[npt.ArrayLike]) -> np.ndarray:
    if value is None:
        return np.zeros(0)
    return np.array(value, dtype=float).reshape(-1)


@dataclasses.dataclass(frozen=True, eq=False)
class QpProblem:
    """Dense convex QP.

    Args:
        Q: Symmetric n x n Hessian.
        c: Linear cost of size n.
        A: Equality matrix of shape (m_e, n).
        b: Equality right hand side.
        D: Inequality matrix of shape (m_i, n), rows read D x <= f.
        f: Inequality right hand side.
    """

    Q: np.ndarray
    c: np.ndarray
    A: np.ndarray = dataclasses.field(default_factory=lambda: np.zeros((0, 0)))
    b: np.ndarray = dataclasses.field(default_factory=lambda: np.zeros(0))
    D: np.ndarray = dataclasses.field(default_factory=lambda: np.zeros((0, 0)))
    f: np.ndarray = dataclasses.field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        Q = np.array(self.Q, dtype=float)
        c = _as_vector(self.c)
        n = c.shape[0]
        if Q.shape != (n, n):
            raise InputError(f"Q has shape {Q.shape} but c has {n} entries")

        if not np.allclose(Q, Q.T, rtol=0.0, atol=1e-10 * max(1.0, float(np.max(np.abs(Q), initial=0.0)))):
            raise InputError("Q must be symmetric")

        A = _as_matrix(self.A if np.size(self.A) else None, n)
        b = _as_vector(self.b)
        D = _as_matrix(self.D if np.size(self.D) else None, n)
        f = _as_vector(self.f)
        if A.shape != (b.shape[0], n):
            raise InputError(f"A has shape {A.shape}, expected ({b.shape[0]}, {n})")
        if D.shape != (f.shape[0], n):
            raise InputError(f"D has shape {D.shape}, expected ({f.shape[0]}, {n})")

        for name, value in (("Q", Q), ("c", c), ("A", A), ("b", b), ("D", D), ("f", f)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def m_eq(self) -> int:
        return self.b.shape[0]

    @property
    def m_ineq(self) -> int:
        return self.f.shape[0]

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.Q @ x + self.c @ x)

    def max_violation(self, x: np.ndarray) -> float:
        """Largest equality residual or inequality excess at x, 0 when feasible."""
        worst = 0.0
        if self.m_eq:
            worst = max(worst, float(np.max(np.abs(self.A @ x - self.b))))
        if self.m_ineq:
            worst = max(worst, float(np.max(self.D @ x - self.f)))
        return worst


@dataclasses.dataclass(frozen=True, eq=False)
class QpSolution:
    """Result of a QP solve.

    Args:
        x: The primal solution, the last iterate when not optimal.
        objective: 1/2 x^T Q x + c^T x with the unregularized Q.
        active_set: Indices of the active inequality rows.
        status: The solver outcome.
        iterations: Number of active set changes after initialization.
        multipliers_eq: lambda with Q x + c + A^T lambda + D^T mu = 0.
        multipliers_ineq: mu, non-negative and zero for inactive rows.
    """

    x: np.ndarray
    objective: float
    active_set: t.Tuple[int, ...]
    status: QpStatus
    iterations: int
    multipliers_eq: np.ndarray
    multipliers_ineq: np.ndarray

    @property
    def ok(self) -> bool:
        return self.status == QpStatus.OPTIMAL


def regularize(Q: npt.ArrayLike, rho: float = DEFAULT_RHO) -> np.ndarray:
    """Returns Q + rho * I."""
    mat = np.array(Q, dtype=float)
    return mat + rho * np.eye(mat.shape[0])


class _NumericalBreakdown(Exception):
    pass


class GoldfarbIdnaniSolver:
    """Reusable solver holding the factorization workspace.

    One solve may run on an instance at a time. Separate instances can be used
    from separate threads.

    Args:
        rho: Diagonal regularization added to Q before factorizing.
        max_iterations: Override of the 10 * (n + m_i) iteration cap.
        trace: Called with (iteration, objective) whenever the dual objective
            of the working subproblem changes.
    """

    def __init__(
        self,
        rho: float = DEFAULT_RHO,
        max_iterations: t.Optional[int] = None,
        trace: t.Optional[TraceCallback] = None,
    ) -> None:
        self.rho = rho
        self.max_iterations = max_iterations
        self.trace = trace

        self._G = np.zeros((0, 0))
        self._J = np.zeros((0, 0))
        self._R = np.zeros((0, 0))
        self._R_norm = 1.0
        self._g0 = np.zeros(0)
        self._active: t.List[int] = []
        self._u: t.List[float] = []
        self._normals: t.List[np.ndarray] = []
        self._offsets: t.List[float] = []

    def solve(
        self,
        problem: QpProblem,
        hint_active_set: t.Optional[t.Iterable[int]] = None,
    ) -> QpSolution:
        n = problem.n
        if problem.m_eq > n:
            raise InputError(f"{problem.m_eq} equality rows exceed the {n} variables")

        # All-zero rows carry no information once the right hand side is checked.
        eq_keep = np.flatnonzero(np.any(problem.A != 0.0, axis=1))
        eq_zero = np.setdiff1d(np.arange(problem.m_eq), eq_keep)
        ineq_keep = np.flatnonzero(np.any(problem.D != 0.0, axis=1))
        ineq_zero = np.setdiff1d(np.arange(problem.m_ineq), ineq_keep)

        infeasible_trivial = bool(np.any(np.abs(problem.b[eq_zero]) > VIOLATION_TOL)) or bool(
            np.any(problem.f[ineq_zero] < -VIOLATION_TOL)
        )

        CE = problem.A[eq_keep].T
        ce0 = -problem.b[eq_keep]
        CI = -problem.D[ineq_keep].T
        ci0 = problem.f[ineq_keep].copy()

        hint: t.List[int] = []
        if hint_active_set:
            position = {int(orig): idx for idx, orig in enumerate(ineq_keep)}
            hint = [position[i] for i in hint_active_set if i in position]

        x = np.zeros(n)
        status = QpStatus.NUMERICAL_FAILURE
        iterations = 0
        if infeasible_trivial:
            status = QpStatus.INFEASIBLE
        else:
            try:
                x, status, iterations = self._run(problem, CE, ce0, CI, ci0, hint)
            except _NumericalBreakdown as e:
                log.debug("QP numerical breakdown: %s", e)
                status = QpStatus.NUMERICAL_FAILURE
            except (np.linalg.LinAlgError, ValueError) as e:
                log.debug("QP factorization failed: %s", e)
                status = QpStatus.NUMERICAL_FAILURE

        lam = np.zeros(problem.m_eq)
        mu = np.zeros(problem.m_ineq)
        active: t.List[int] = []
        me = CE.shape[1]
        if status == QpStatus.OPTIMAL:
            for k, (idx, u) in enumerate(zip(self._active, self._u)):
                if k < me:
                    lam[eq_keep[idx]] = -u
                else:
                    orig = int(ineq_keep[idx])
                    mu[orig] = u
                    active.append(orig)

        if not np.all(np.isfinite(x)):
            status = QpStatus.NUMERICAL_FAILURE
            x = np.nan_to_num(x)

        sol = QpSolution(
            x=x,
            objective=problem.objective(x),
            active_set=tuple(sorted(active)),
            status=status,
            iterations=iterations,
            multipliers_eq=lam,
            multipliers_ineq=mu,
        )
        log.debug(
            "QP n=%d m_e=%d m_i=%d finished with %s after %d iterations, %d active",
            n,
            problem.m_eq,
            problem.m_ineq,
            status.value,
            iterations,
            len(active),
        )
        return sol

    def _emit(self, iteration: int, value: float) -> None:
        if self.trace:
            self.trace(iteration, value)

    def _run(
        self,
        problem: QpProblem,
        CE: np.ndarray,
        ce0: np.ndarray,
        CI: np.ndarray,
        ci0: np.ndarray,
        hint: t.List[int],
    ) -> t.Tuple[np.ndarray, QpStatus, int]:
        n = problem.n
        me = CE.shape[1]
        mi = CI.shape[1]
        max_iter = self.max_iterations if self.max_iterations is not None else 10 * (n + problem.m_ineq)

        self._G = regularize(problem.Q, self.rho)
        L = scipy.linalg.cholesky(self._G, lower=True)
        self._J = scipy.linalg.solve_triangular(L, np.eye(n), lower=True).T
        self._R = np.zeros((n, n))
        self._R_norm = 1.0
        self._g0 = problem.c.copy()
        self._active = []
        self._u = []
        self._normals = []
        self._offsets = []

        # Unconstrained minimum -G^-1 c.
        x = -self._J @ (self._J.T @ self._g0)
        fval = 0.5 * float(self._g0 @ x)
        self._emit(0, fval)

        # Equalities enter the working set together through one QR of J^T CE.
        if me:
            if me > n:
                raise _NumericalBreakdown("more equality constraints than variables")
            q_full, r_full = scipy.linalg.qr(self._J.T @ CE)
            diag = np.abs(np.diag(r_full[:me, :me]))
            if float(np.min(diag)) <= 1e-12 * max(1.0, float(np.max(diag))):
                raise _NumericalBreakdown("equality constraints are linearly dependent")
            self._J = self._J @ q_full
            self._R[:me, :me] = r_full[:me, :me]
            self._R_norm = max(1.0, float(np.max(diag)))
            self._active = list(range(me))
            self._normals = [CE[:, i] for i in range(me)]
            self._offsets = [float(v) for v in ce0]
            x, u = self._solve_working_set()
            self._u = [float(v) for v in u]
            fval = 0.5 * float(x @ self._G @ x) + float(self._g0 @ x)
            self._emit(0, fval)

        inactive = np.ones(mi, dtype=bool)
        excluded = np.zeros(mi, dtype=bool)

        if hint:
            x, fval = self._seed_hint(CI, ci0, hint, me, inactive)
            self._emit(0, fval)

        iterations = 0
        while True:
            # Step 1: choose the most violated constraint.
            s = CI.T @ x + ci0
            candidates = np.flatnonzero(inactive & ~excluded)
            if candidates.size == 0 or float(np.min(s[candidates])) >= -VIOLATION_TOL:
                if np.any(s[excluded] < -VIOLATION_TOL):
                    raise _NumericalBreakdown("violated constraints are degenerate with the working set")
                return x, QpStatus.OPTIMAL, iterations

            ip = int(candidates[np.argmin(s[candidates])])
            np_ = CI[:, ip]
            saved = self._snapshot(x, fval, inactive)
            s_ip = float(s[ip])
            u_new = 0.0

            # Step 2a: determine the step direction, repeated after every drop.
            while True:
                if iterations >= max_iter:
                    return x, QpStatus.MAX_ITERATIONS, iterations

                iq = len(self._active)
                d = self._J.T @ np_
                z = self._update_z(d)
                r = self._update_r(d)

                # Partial step length, limited by dual feasibility.
                t1 = math.inf
                drop = -1
                for k in range(me, iq):
                    if r[k] > 0.0 and self._u[k] / r[k] < t1:
                        t1 = self._u[k] / r[k]
                        drop = k

                # Full step length, makes ip active.
                zn = float(z @ np_)
                t2 = math.inf
                if abs(float(z @ z)) > _EPS and zn > 0.0:
                    t2 = -s_ip / zn

                step = min(t1, t2)
                if math.isinf(step):
                    return x, QpStatus.INFEASIBLE, iterations

                iterations += 1
                if math.isinf(t2):
                    self._u = [u - step * rk for u, rk in zip(self._u, r)]
                    u_new += step
                    inactive[self._active[drop]] = True
                    self._delete_constraint(drop)
                    continue

                x = x + step * z
                fval += step * zn * (0.5 * step + u_new)
                self._u = [u - step * rk for u, rk in zip(self._u, r)]
                u_new += step
                self._emit(iterations, fval)

                if step == t2:
                    if not self._add_constraint(d):
                        x, fval = self._restore(saved, inactive)
                        excluded[ip] = True
                        break
                    self._active.append(ip)
                    self._u.append(u_new)
                    self._normals.append(np_)
                    self._offsets.append(float(ci0[ip]))
                    inactive[ip] = False
                    excluded[:] = False
                    break

                inactive[self._active[drop]] = True
                self._delete_constraint(drop)
                s_ip = float(np_ @ x + ci0[ip])

    def _snapshot(
        self,
        x: np.ndarray,
        fval: float,
        inactive: np.ndarray,
    ) -> t.Tuple[t.Any, ...]:
        return (
            list(self._active),
            list(self._u),
            list(self._normals),
            list(self._offsets),
            self._J.copy(),
            self._R.copy(),
            self._R_norm,
            x.copy(),
            fval,
            inactive.copy(),
        )

    def _restore(
        self,
        saved: t.Tuple[t.Any, ...],
        inactive: np.ndarray,
    ) -> t.Tuple[np.ndarray, float]:
        (
            self._active,
            self._u,
            self._normals,
            self._offsets,
            self._J,
            self._R,
            self._R_norm,
            x,
            fval,
            old_inactive,
        ) = saved
        inactive[:] = old_inactive
        return x, fval

    def _seed_hint(
        self,
        CI: np.ndarray,
        ci0: np.ndarray,
        hint: t.List[int],
        me: int,
        inactive: np.ndarray,
    ) -> t.Tuple[np.ndarray, float]:
        """Add hinted inequalities to the working set and restore dual feasibility."""
        for ip in dict.fromkeys(hint):
            np_ = CI[:, ip]
            d = self._J.T @ np_
            if not self._add_constraint(d):
                continue
            self._active.append(ip)
            self._u.append(0.0)
            self._normals.append(np_)
            self._offsets.append(float(ci0[ip]))
            inactive[ip] = False

        while True:
            x, u = self._solve_working_set()
            self._u = [float(v) for v in u]
            negative = [k for k in range(me, len(self._active)) if self._u[k] < 0.0]
            if not negative:
                break
            worst = min(negative, key=lambda k: self._u[k])
            inactive[self._active[worst]] = True
            self._delete_constraint(worst)

        return x, 0.5 * float(x @ self._G @ x) + float(self._g0 @ x)

    def _solve_working_set(self) -> t.Tuple[np.ndarray, np.ndarray]:
        """Primal and dual solution of the problem with the working set held as equalities."""
        iq = len(self._active)
        J1 = self._J[:, :iq]
        J2 = self._J[:, iq:]
        y2 = -J2.T @ self._g0
        if not iq:
            return J2 @ y2, np.zeros(0)

        R1 = self._R[:iq, :iq]
        y1 = -scipy.linalg.solve_triangular(R1, np.array(self._offsets), trans="T", lower=False)
        u = scipy.linalg.solve_triangular(R1, y1 + J1.T @ self._g0, lower=False)
        return J1 @ y1 + J2 @ y2, u

    def _update_z(self, d: np.ndarray) -> np.ndarray:
        iq = len(self._active)
        return t.cast(np.ndarray, self._J[:, iq:] @ d[iq:])

    def _update_r(self, d: np.ndarray) -> np.ndarray:
        iq = len(self._active)
        if iq == 0:
            return np.zeros(0)
        return t.cast(np.ndarray, scipy.linalg.solve_triangular(self._R[:iq, :iq], d[:iq], lower=False))

    def _add_constraint(self, d: np.ndarray) -> bool:
        """Givens-rotate d so the new normal only touches the first iq + 1 columns of J."""
        J = self._J
        n = J.shape[0]
        iq = len(self._active)
        d = d.copy()
        for j in range(n - 1, iq, -1):
            cc = d[j - 1]
            ss = d[j]
            h = math.hypot(cc, ss)
            if h == 0.0:
                continue
            d[j] = 0.0
            ss /= h
            cc /= h
            if cc < 0.0:
                cc = -cc
                ss = -ss
                d[j - 1] = -h
            else:
                d[j - 1] = h
            xny = ss / (1.0 + cc)
            t1 = J[:, j - 1].copy()
            t2 = J[:, j].copy()
            J[:, j - 1] = t1 * cc + t2 * ss
            J[:, j] = xny * (t1 + J[:, j - 1]) - t2

        self._R[: iq + 1, iq] = d[: iq + 1]
        if abs(d[iq]) <= _EPS * self._R_norm:
            # Linearly dependent on the working set, undo nothing but report it.
            self._R[: iq + 1, iq] = 0.0
            return False

        self._R_norm = max(self._R_norm, abs(d[iq]))
        return True

    def _delete_constraint(self, position: int) -> None:
        """Remove the working set entry at position and restore R to upper triangular."""
        J = self._J
        R = self._R
        iq = len(self._active)

        del self._active[position]
        del self._u[position]
        del self._normals[position]
        del self._offsets[position]

        R[:, position : iq - 1] = R[:, position + 1 : iq]
        R[:, iq - 1] = 0.0
        iq -= 1

        for j in range(position, iq):
            cc = R[j, j]
            ss = R[j + 1, j]
            h = math.hypot(cc, ss)
            if h == 0.0:
                continue
            cc /= h
            ss /= h
            R[j + 1, j] = 0.0
            if cc < 0.0:
                R[j, j] = -h
                cc = -cc
                ss = -ss
            else:
                R[j, j] = h
            xny = ss / (1.0 + cc)

            t1 = R[j, j + 1 : iq].copy()
            t2 = R[j + 1, j + 1 : iq].copy()
            R[j, j + 1 : iq] = t1 * cc + t2 * ss
            R[j + 1, j + 1 : iq] = xny * (t1 + R[j, j + 1 : iq]) - t2

            t1 = J[:, j].copy()
            t2 = J[:, j + 1].copy()
            J[:, j] = t1 * cc + t2 * ss
            J[:, j + 1] = xny * (J[:, j] + t1) - t2


def solve(
    p: QpProblem,
    rho: float = DEFAULT_RHO,
    trace: t.Optional[TraceCallback] = None,
) -> QpSolution:
    """Solve the QP from an empty working set."""
    return GoldfarbIdnaniSolver(rho=rho, trace=trace).solve(p)


def solve_warm(
    p: QpProblem,
    hint_active_set: t.Iterable[int],
    rho: float = DEFAULT_RHO,
    trace: t.Optional[TraceCallback] = None,
) -> QpSolution:
    """Solve the QP starting with the hinted inequality rows in the working set."""
    return GoldfarbIdnaniSolver(rho=rho, trace=trace).solve(p, hint_active_set=list(hint_active_set))

"""Exact linear-quadratic analytics.

Closed-loop quadratic values, the Gaussian-mixture discounted occupancy,
the expected adversarial consistency loss in reduced form, and the finite
model-grid selection experiments.  Everything is exact in expectation up
to an explicit series-truncation tolerance.

The reduced loss accumulates the controller-noise and process-noise trace
terms inside the discounted sum (each mixture component contributes its
own constant), which is what the definition-level loss integrates to; the
Monte Carlo oracle in the test suite pins this down.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TAIL_TOL = 1e-10
MAX_HORIZON = 200_000


@dataclass(frozen=True)
class LqrSystem:
    """True dynamics s' = A s + B a + noise with a quadratic cost surrogate."""

    a_true: np.ndarray  # (n, n)
    b_true: np.ndarray  # (n, k)
    q_cost: np.ndarray  # (n, n) PSD
    r_cost: np.ndarray  # (k, k) PSD
    sigma_star: float  # process noise scale
    sigma_k: float  # policy noise scale
    sigma_0: float  # initial-state noise scale
    s0: np.ndarray  # (n,)
    gamma: float

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a_true, dtype=np.float64))
        b = np.atleast_2d(np.asarray(self.b_true, dtype=np.float64))
        q = np.atleast_2d(np.asarray(self.q_cost, dtype=np.float64))
        r = np.atleast_2d(np.asarray(self.r_cost, dtype=np.float64))
        s0 = np.atleast_1d(np.asarray(self.s0, dtype=np.float64))
        n = a.shape[0]
        if a.shape != (n, n) or b.shape[0] != n or q.shape != (n, n):
            raise ValueError("inconsistent system dimensions")
        if r.shape != (b.shape[1], b.shape[1]) or s0.shape != (n,):
            raise ValueError("inconsistent system dimensions")
        for name, mat in (("q_cost", q), ("r_cost", r)):
            if not np.allclose(mat, mat.T, atol=1e-12):
                raise ValueError(f"{name} must be symmetric")
            if np.linalg.eigvalsh(mat).min() < -1e-12:
                raise ValueError(f"{name} must be positive semi-definite")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if min(self.sigma_star, self.sigma_k, self.sigma_0) < 0:
            raise ValueError("noise scales must be nonnegative")
        for name, val in (("a_true", a), ("b_true", b), ("q_cost", q), ("r_cost", r), ("s0", s0)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.a_true.shape[0]

    @property
    def k(self) -> int:
        return self.b_true.shape[1]

    @classmethod
    def benchmark_1d(
        cls,
        sigma_star: float = 0.1,
        sigma_k: float = 0.1,
        sigma_0: float = 0.1,
        gamma: float = 0.9,
    ) -> "LqrSystem":
        """The 1-D study system: s' = s - 0.5 a + noise, unit quadratic costs.

        The default process-noise scale reads the benchmark's N(0, .01) as a
        variance, i.e. sigma_star = 0.1; only with that reading does a richer
        model grid contain members whose policy-noise amplification mimics the
        process noise and improves the evaluation error, which is the whole
        point of the sweep.  Pass sigma_star=0.01 for the standard-deviation
        reading (every selection then sits at the mean dynamics).
        """
        return cls(
            a_true=np.array([[1.0]]),
            b_true=np.array([[-0.5]]),
            q_cost=np.array([[1.0]]),
            r_cost=np.array([[1.0]]),
            sigma_star=sigma_star,
            sigma_k=sigma_k,
            sigma_0=sigma_0,
            s0=np.array([1.0]),
            gamma=gamma,
        )


@dataclass(frozen=True)
class LqrValueQuadratic:
    """V(s) = s^T U s + q for a stable closed loop."""

    u_mat: np.ndarray
    q_const: float

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.u_mat, dtype=np.float64))
        if not np.allclose(u, u.T, atol=1e-9):
            raise ValueError("U must be symmetric")
        object.__setattr__(self, "u_mat", u)


@dataclass(frozen=True)
class LqrOccupancyMixture:
    """Discounted state occupancy: sum_i gamma^i N(means[i], covs[i]),
    with actions a = -K s + N(0, sigma_k^2 I) attached per component."""

    weights: np.ndarray  # (H+1,)
    means: np.ndarray  # (H+1, n)
    covs: np.ndarray  # (H+1, n, n)
    controller: np.ndarray  # (k, n)
    sigma_k: float

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def state_moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Discounted-sum first moment (n,) and second moment (n, n)."""
        first = np.einsum("i,ij->j", self.weights, self.means)
        second = np.einsum("i,ij,ik->jk", self.weights, self.means, self.means)
        second += np.einsum("i,ijk->jk", self.weights, self.covs)
        return first, second

    def density_sa(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        """Unnormalized mixture density over (s, a); 1-D systems only."""
        if self.means.shape[1] != 1 or self.controller.shape != (1, 1):
            raise ValueError("density_sa is implemented for 1-D systems")
        s = np.asarray(s, dtype=np.float64).ravel()
        a = np.asarray(a, dtype=np.float64).ravel()
        var_s = self.covs[:, 0, 0]
        if var_s.min() <= 0:
            raise ValueError("degenerate state component; needs sigma_0 > 0")
        mean_s = self.means[:, 0]
        norm_s = np.exp(
            -0.5 * (s[None, :] - mean_s[:, None]) ** 2 / var_s[:, None]
        ) / np.sqrt(2.0 * np.pi * var_s[:, None])
        state_mix = (self.weights[:, None] * norm_s).sum(axis=0)
        if self.sigma_k <= 0:
            raise ValueError("degenerate action law; needs sigma_k > 0")
        mean_a = -float(self.controller[0, 0]) * s
        norm_a = np.exp(-0.5 * (a - mean_a) ** 2 / self.sigma_k**2) / np.sqrt(
            2.0 * np.pi * self.sigma_k**2
        )
        return state_mix * norm_a


def closed_loop(a: np.ndarray, b: np.ndarray, k_controller: np.ndarray) -> np.ndarray:
    return np.atleast_2d(a) - np.atleast_2d(b) @ np.atleast_2d(k_controller)


def spectral_radius(mat: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvals(np.atleast_2d(mat))).max())


def is_discounted_stable(f_mat: np.ndarray, gamma: float) -> bool:
    return gamma * spectral_radius(f_mat) ** 2 < 1.0


def default_horizon(system: LqrSystem, k_controller: np.ndarray, tol: float = TAIL_TOL) -> int:
    """Horizon at which the discounted series tail drops below ``tol``."""
    f_star = closed_loop(system.a_true, system.b_true, k_controller)
    rho = spectral_radius(f_star)
    q = system.gamma * max(rho**2, 1.0)
    if q >= 1.0:
        raise ValueError("true closed loop is not discounted-stable; series diverges")
    h = int(np.ceil(np.log(tol) / np.log(q))) + 1
    return min(max(h, 1), MAX_HORIZON)


def lqr_value(
    system: LqrSystem,
    a: np.ndarray,
    b: np.ndarray,
    k_controller: np.ndarray,
    process_sigma: float = 0.0,
) -> LqrValueQuadratic | None:
    """Quadratic value of the controller in dynamics (a, b).

    Solves U = Q + K^T R K + gamma F^T U F exactly (the unique fixed point)
    and the matching constant q.  Returns None when gamma * rho(F)^2 >= 1:
    the closed loop diverges and the value is conceptually infinite.
    Pass ``process_sigma`` = the dynamics noise of (a, b); candidate models
    are deterministic, the true system has sigma_star.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    k = np.atleast_2d(np.asarray(k_controller, dtype=np.float64))
    f = closed_loop(a, b, k)
    if not is_discounted_stable(f, system.gamma):
        return None
    n = system.n
    rhs = system.q_cost + k.T @ system.r_cost @ k
    # vec(U) = (I - gamma F^T (x) F^T)^{-1} vec(rhs): exact fixed point
    lhs = np.eye(n * n) - system.gamma * np.kron(f.T, f.T)
    u = np.linalg.solve(lhs, rhs.reshape(-1)).reshape(n, n)
    u = 0.5 * (u + u.T)
    residual = np.abs(u - (rhs + system.gamma * f.T @ u @ f)).max()
    if residual > 1e-12 * max(1.0, np.abs(u).max()):
        raise ArithmeticError(f"value fixed point residual {residual:g}")
    q_const = (
        system.sigma_k**2 * np.trace(system.r_cost)
        + system.gamma * system.sigma_k**2 * np.trace(b.T @ u @ b)
        + system.gamma * process_sigma**2 * np.trace(u)
    ) / (1.0 - system.gamma)
    return LqrValueQuadratic(u_mat=u, q_const=float(q_const))


def lqr_policy_value(
    system: LqrSystem,
    a: np.ndarray,
    b: np.ndarray,
    k_controller: np.ndarray,
    process_sigma: float = 0.0,
) -> float | None:
    """J = E_{s0 ~ N(s0, sigma_0^2 I)}[V(s)]; None when the loop diverges."""
    value = lqr_value(system, a, b, k_controller, process_sigma)
    if value is None:
        return None
    u = value.u_mat
    return float(system.s0 @ u @ system.s0 + value.q_const + system.sigma_0**2 * np.trace(u))


def lqr_occupancy(
    system: LqrSystem, k_controller: np.ndarray, horizon: int
) -> LqrOccupancyMixture:
    """Occupancy of the controller in the true dynamics, truncated mixture.

    Components follow Sigma_0 = sigma_0^2 I and
    Sigma_{t+1} = F Sigma_t F^T + sigma_k^2 B B^T + sigma_star^2 I,
    with means F^t s0 and weights gamma^t.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    k = np.atleast_2d(np.asarray(k_controller, dtype=np.float64))
    f = closed_loop(system.a_true, system.b_true, k)
    n = system.n
    weights = system.gamma ** np.arange(horizon + 1)
    means = np.empty((horizon + 1, n))
    covs = np.empty((horizon + 1, n, n))
    means[0] = system.s0
    covs[0] = system.sigma_0**2 * np.eye(n)
    drive = (
        system.sigma_k**2 * (system.b_true @ system.b_true.T)
        + system.sigma_star**2 * np.eye(n)
    )
    for t in range(horizon):
        means[t + 1] = f @ means[t]
        covs[t + 1] = f @ covs[t] @ f.T + drive
    return LqrOccupancyMixture(
        weights=weights, means=means, covs=covs, controller=k, sigma_k=system.sigma_k
    )


def lqr_mml_loss(
    system: LqrSystem,
    a: np.ndarray,
    b: np.ndarray,
    k_controller: np.ndarray,
    u_adversary: np.ndarray,
    horizon: int | None = None,
    mixture: LqrOccupancyMixture | None = None,
) -> float:
    """Exact expected consistency loss of deterministic model (a, b) against
    the quadratic adversary U and the occupancy-ratio weight of ``k_controller``.

        sum_i gamma^i [ m_i^T Delta m_i + tr(Delta Sigma_i)
                        + sigma_k^2 tr(B^T U B - B*^T U B*) - sigma_star^2 tr(U) ]

    with Delta = (A-BK)^T U (A-BK) - (A*-B*K)^T U (A*-B*K) and the mixture
    moments of the true closed loop.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    k = np.atleast_2d(np.asarray(k_controller, dtype=np.float64))
    u = np.atleast_2d(np.asarray(u_adversary, dtype=np.float64))
    if not np.allclose(u, u.T, atol=1e-12):
        raise ValueError("adversary U must be symmetric")
    if mixture is not None:
        mix = mixture
    else:
        if horizon is None:
            horizon = default_horizon(system, k)
        mix = lqr_occupancy(system, k, horizon)
    f_model = closed_loop(a, b, k)
    f_star = closed_loop(system.a_true, system.b_true, k)
    delta = f_model.T @ u @ f_model - f_star.T @ u @ f_star
    const = system.sigma_k**2 * float(
        np.trace(b.T @ u @ b) - np.trace(system.b_true.T @ u @ system.b_true)
    ) - system.sigma_star**2 * float(np.trace(u))
    quad = np.einsum("ij,jk,ik->i", mix.means, delta, mix.means)
    traces = np.einsum("jk,ikj->i", delta, mix.covs)
    return float((mix.weights * (quad + traces + const)).sum())


def lqr_mle_loss(
    system: LqrSystem,
    a: np.ndarray,
    b: np.ndarray,
    k_controller: np.ndarray,
    horizon: int | None = None,
    mixture: LqrOccupancyMixture | None = None,
) -> float:
    """Expected one-step squared prediction error of the deterministic model
    under the behavior occupancy (Gaussian likelihood with fixed variance)."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    k = np.atleast_2d(np.asarray(k_controller, dtype=np.float64))
    if mixture is not None:
        mix = mixture
    else:
        if horizon is None:
            horizon = default_horizon(system, k)
        mix = lqr_occupancy(system, k, horizon)
    mass = mix.total_mass()
    first, second = mix.state_moments()
    da = system.a_true - a
    db = system.b_true - b
    m = da - db @ k  # state coefficient of the residual mean
    mean_sq = float(np.trace(m @ (second / mass) @ m.T))
    noise_sq = system.sigma_k**2 * float(np.trace(db @ db.T)) + system.n * system.sigma_star**2
    return mean_sq + noise_sq


def lqr_vaml_loss(
    system: LqrSystem,
    a: np.ndarray,
    b: np.ndarray,
    k_controller: np.ndarray,
    u_grid: list[np.ndarray],
    horizon: int | None = None,
    mixture: LqrOccupancyMixture | None = None,
) -> float:
    """Exact per-sample-supremum value-aware loss over a quadratic-U grid.

    1-D systems only: the integrand reduces to a polynomial in (s, zeta)
    whose Gaussian-mixture moments are available in closed form.
    """
    if system.n != 1 or system.k != 1:
        raise ValueError("lqr_vaml_loss is implemented for 1-D systems")
    a_val = float(np.atleast_2d(a)[0, 0])
    b_val = float(np.atleast_2d(b)[0, 0])
    k = np.atleast_2d(np.asarray(k_controller, dtype=np.float64))
    if mixture is not None:
        mix = mixture
    else:
        if horizon is None:
            horizon = default_horizon(system, k)
        mix = lqr_occupancy(system, k, horizon)
    mass = mix.total_mass()
    m = mix.means[:, 0]
    v = mix.covs[:, 0, 0]
    w = mix.weights / mass
    e_s2 = float((w * (m**2 + v)).sum())
    e_s4 = float((w * (m**4 + 6 * m**2 * v + 3 * v**2)).sum())
    f_model = float(closed_loop(a, b, k)[0, 0])
    f_star = float(closed_loop(system.a_true, system.b_true, k)[0, 0])
    b_star = float(system.b_true[0, 0])
    alpha = f_model**2 - f_star**2
    beta = 2.0 * system.sigma_k * (f_model * b_val - f_star * b_star)
    delta = system.sigma_k**2 * (b_val**2 - b_star**2)
    c0 = -(system.sigma_star**2)
    # E[(alpha s^2 + beta s z + delta z^2 + c0)^2], z ~ N(0,1) independent
    e_g2 = (
        alpha**2 * e_s4
        + beta**2 * e_s2
        + 3.0 * delta**2
        + c0**2
        + 2.0 * alpha * delta * e_s2
        + 2.0 * alpha * c0 * e_s2
        + 2.0 * delta * c0
    )
    u_sq = max(float(np.atleast_2d(u)[0, 0]) ** 2 for u in u_grid)
    return u_sq * e_g2


def lqr_model_grid(m_max: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """The deterministic study grid: (A_x, B_x) = (1 + x/10, -(0.5 + x/10))."""
    return [
        (np.array([[1.0 + x / 10.0]]), np.array([[-(0.5 + x / 10.0)]]))
        for x in range(m_max + 1)
    ]


@dataclass(frozen=True)
class LqrSelectionRow:
    m: int
    loss_kind: str
    chosen_index: int
    inner_value: float
    ope_error: float
    j_true: float
    j_chosen: float


def lqr_model_selection(
    system: LqrSystem,
    k_target: np.ndarray,
    model_grid_max: int,
    k_grid: list[np.ndarray] | None = None,
    u_grid: list[np.ndarray] | None = None,
    loss_kind: str = "mml",
    v_noise_eps: float = 0.0,
    seed: int = 0,
    horizon: int | None = None,
) -> list[LqrSelectionRow]:
    """Model selection over nested grids P_0..P_M for M in 2..model_grid_max.

    The adversary value grid defaults to the realizable quadratics {U_x} of
    the grid models under the target controller; the weight grid defaults to
    the target controller alone.  ``v_noise_eps`` adds seeded Gaussian noise
    to every adversary-value evaluation (the class-misspecification sweep);
    the likelihood loss has no adversary and stays exact.
    """
    if model_grid_max < 2:
        raise ValueError("model_grid_max must be >= 2")
    k_target = np.atleast_2d(np.asarray(k_target, dtype=np.float64))
    grid = lqr_model_grid(model_grid_max)
    j_true = lqr_policy_value(
        system, system.a_true, system.b_true, k_target, system.sigma_star
    )
    if j_true is None:
        raise ValueError("target controller does not stabilize the true system")
    j_models: list[float | None] = []
    u_by_model: list[np.ndarray | None] = []
    for a, b in grid:
        value = lqr_value(system, a, b, k_target, 0.0)
        j_models.append(lqr_policy_value(system, a, b, k_target, 0.0))
        u_by_model.append(None if value is None else value.u_mat)
    controllers = list(k_grid) if k_grid is not None else [k_target]
    mixtures = {
        i: lqr_occupancy(system, k, horizon if horizon is not None else default_horizon(system, k))
        for i, k in enumerate(controllers)
    }
    target_mix = lqr_occupancy(
        system,
        k_target,
        horizon if horizon is not None else default_horizon(system, k_target),
    )
    rng = np.random.default_rng(seed)
    rows: list[LqrSelectionRow] = []
    for m in range(2, model_grid_max + 1):
        models = grid[: m + 1]
        if u_grid is not None:
            u_set = list(u_grid)
        else:
            u_set = [u for u in u_by_model[: m + 1] if u is not None]
        if not u_set:
            raise ValueError("adversary value grid is empty")
        scores: list[float] = []
        for a, b in models:
            if loss_kind == "mml":
                best = 0.0
                for ki, k in enumerate(controllers):
                    for u in u_set:
                        val = lqr_mml_loss(system, a, b, k, u, mixture=mixtures[ki])
                        if v_noise_eps > 0:
                            val += v_noise_eps * rng.standard_normal()
                        best = max(best, abs(val))
                scores.append(best)
            elif loss_kind == "mle":
                scores.append(lqr_mle_loss(system, a, b, k_target, mixture=target_mix))
            elif loss_kind in ("vaml", "vaml-l2"):
                if v_noise_eps > 0:
                    best = 0.0
                    for u in u_set:
                        val = lqr_vaml_loss(system, a, b, k_target, [u], mixture=target_mix)
                        val += v_noise_eps * rng.standard_normal()
                        best = max(best, abs(val))
                    scores.append(best)
                else:
                    scores.append(
                        lqr_vaml_loss(system, a, b, k_target, u_set, mixture=target_mix)
                    )
            else:
                raise ValueError(f"unsupported loss kind {loss_kind!r}")
        chosen = int(np.argmin(scores))
        j_chosen = j_models[chosen]
        error = float("inf") if j_chosen is None else abs(j_chosen - j_true)
        rows.append(
            LqrSelectionRow(
                m=m,
                loss_kind=loss_kind,
                chosen_index=chosen,
                inner_value=float(scores[chosen]),
                ope_error=error,
                j_true=float(j_true),
                j_chosen=float("nan") if j_chosen is None else float(j_chosen),
            )
        )
    return rows


def lqr_coincide_argmin(
    system: LqrSystem,
    ab_grid: list[tuple[np.ndarray, np.ndarray]],
    k_grid: list[np.ndarray],
    horizon: int | None = None,
) -> int:
    """Grid form of the coincidence check.

    For each candidate (A, B), the inner maximum runs over controllers with
    the adversary value taken as the candidate's own closed-loop quadratic;
    a controller that destabilizes the candidate marks it divergent and the
    candidate ranks last.  Returns the argmin index.
    """
    scores = []
    for a, b in ab_grid:
        worst = 0.0
        for k in k_grid:
            value = lqr_value(system, a, b, k, 0.0)
            if value is None:
                worst = float("inf")
                break
            h = default_horizon(system, k) if horizon is None else horizon
            worst = max(worst, abs(lqr_mml_loss(system, a, b, k, value.u_mat, h)))
        scores.append(worst)
    return int(np.argmin(scores))


def lqr_literal_return_mc(
    system: LqrSystem,
    a: np.ndarray,
    b: np.ndarray,
    k_controller: np.ndarray,
    process_sigma: float,
    horizon: int,
    n_rollouts: int,
    seed: int,
) -> float:
    """Monte Carlo discounted return of the study's literal reward -(s + a).

    Kept separate from the quadratic machinery: the literal reward is linear,
    so its exact value depends only on mean dynamics.  Reported alongside the
    quadratic-surrogate numbers.
    """
    if system.n != 1 or system.k != 1:
        raise ValueError("implemented for 1-D systems")
    a_val = float(np.atleast_2d(a)[0, 0])
    b_val = float(np.atleast_2d(b)[0, 0])
    k_val = float(np.atleast_2d(k_controller)[0, 0])
    rng = np.random.default_rng(seed)
    s = system.s0[0] + system.sigma_0 * rng.standard_normal(n_rollouts)
    total = np.zeros(n_rollouts)
    disc = 1.0
    for _ in range(horizon + 1):
        act = -k_val * s + system.sigma_k * rng.standard_normal(n_rollouts)
        total += disc * -(s + act)
        s = a_val * s + b_val * act + process_sigma * rng.standard_normal(n_rollouts)
        disc *= system.gamma
    return float(total.mean())

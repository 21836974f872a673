"""Time evolution under the modified nonlinear wave equation.

The evolution is

    i hbar dpsi/dt = ( -hbar^2/2m lap + V + W[|psi|] ) psi,

where W collects every potential-family term except the order-2 one (that
term *is* the kinetic operator: for the amplitude R = |psi| the Bohmian
term reproduces -hbar^2/2m lap acting through the polar decomposition).
Since W depends on |psi| the equation is nonlinear whenever any order
other than 0 and 2 is present.

Integration is Strang splitting: half-step phase rotation by V + W, full
kinetic step (Fourier exponential on periodic grids, unitary Crank-Nicolson
on Dirichlet grids), then the closing half-step rotation recomputed from
the updated amplitude with a fixed-point corrector loop.  Phase rotations
leave |psi| untouched, so the corrector converges in one pass; the
configured number of passes is still honored.  Rotations by a real W and
the unitary kinetic step conserve the norm to roundoff.

Near wavefunction nodes the higher-order terms diverge; they are zeroed
below the amplitude floor and clamped at ``q_cap``, with clamp events
counted and reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from . import kernels
from .grid import (
    DIRICHLET,
    PERIODIC,
    UNIFORM,
    Grid,
    GridError,
    GridFunction,
    gradient,
    inner,
    integrate,
    power_laplacian,
)
from .qpotential import (
    PhysicalParams,
    QuantumPotentialSpec,
    dimensional_coefficient,
)

SPLIT_STEP = "split-step-spectral"
CRANK_NICOLSON = "crank-nicolson-fd"


@dataclass(frozen=True, eq=False)
class WaveField:
    """A complex field psi on a grid; R = |psi| and the phase derive from it."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.grid.points.shape:
            raise GridError("wave field length does not match its grid")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_amplitude(cls, R: GridFunction, phase: float = 0.0) -> "WaveField":
        return cls(R.grid, R.values * np.exp(1j * phase))

    @classmethod
    def gaussian(
        cls, grid: Grid, center: float, width: float, k0: float = 0.0
    ) -> "WaveField":
        """Normalized packet exp(-(x-c)^2/(4 w^2) + i k0 x); w is the
        position standard deviation of |psi|^2."""
        x = grid.points
        vals = np.exp(-((x - center) ** 2) / (4.0 * width**2) + 1j * k0 * x)
        return cls(grid, vals).normalized()

    def amplitude(self) -> GridFunction:
        return GridFunction(self.grid, np.abs(self.values))

    def normalized(self) -> "WaveField":
        n = norm(self)
        if n <= 0:
            raise GridError("cannot normalize a zero field")
        return WaveField(self.grid, self.values / math.sqrt(n))


def norm(psi: WaveField) -> float:
    """Integral of |psi|^2 over the grid measure."""
    return integrate(GridFunction(psi.grid, np.abs(psi.values) ** 2))


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    steps: int
    scheme: str = SPLIT_STEP
    corrector_iterations: int = 2
    q_cap: float | None = None  # default: 1e3 * eps0 * (lambda_c/L)^4
    store_every: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.scheme not in (SPLIT_STEP, CRANK_NICOLSON):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.corrector_iterations < 1:
            raise ValueError("corrector_iterations must be >= 1")
        if self.q_cap is not None and self.q_cap <= 0:
            raise ValueError("q_cap must be positive")
        if self.store_every < 1:
            raise ValueError("store_every must be >= 1")


@dataclass
class EvolutionResult:
    """Stored frames plus per-frame diagnostics and the clamp-event count."""

    frames: list[WaveField]
    times: np.ndarray
    step_indices: np.ndarray
    norms: np.ndarray
    energies: np.ndarray
    clamp_count: int


class _ExtraPotential:
    """Evaluator for W = sum of non-kinetic terms, with floor and clamp.

    The clamp guards against the near-node divergence of the quotient
    terms (order >= 4); the constant order-0 term is a bounded global
    phase and is added after clamping.
    """

    def __init__(self, grid, spec, params, q_cap):
        self.grid = grid
        self.params = params
        self.floor = spec.regularization_floor
        self.q_cap = q_cap
        self.constant = sum(
            dimensional_coefficient(t, params) for t in spec.terms if t.order == 0
        )
        self.terms = [
            (t.order // 2, dimensional_coefficient(t, params))
            for t in spec.terms
            if t.order not in (0, 2)
        ]
        self.method = "spectral" if grid.boundary == PERIODIC else "fd"

    def __call__(self, absvals: np.ndarray) -> tuple[np.ndarray, int]:
        total = np.full(self.grid.n, self.constant)
        if not self.terms:
            return total, 0
        rmax = float(np.max(absvals))
        mask = absvals <= self.floor * rmax
        Rf = GridFunction(self.grid, absvals)
        spikes = np.zeros(self.grid.n)
        for n, A in self.terms:
            D = power_laplacian(Rf, n, self.method).values
            contrib = np.zeros_like(spikes)
            np.divide(A * D, absvals, out=contrib, where=~mask)
            spikes += contrib
        clamps = int(np.count_nonzero(np.abs(spikes) > self.q_cap))
        if clamps:
            spikes = np.clip(spikes, -self.q_cap, self.q_cap)
        return total + spikes, clamps


def _validate_order2(spec: QuantumPotentialSpec, params: PhysicalParams) -> None:
    if not spec.has_order(2):
        return
    c2 = params.hbar**2 / (2.0 * params.mass)
    A2 = dimensional_coefficient(spec.term(2), params)
    if abs(A2 + c2) > 1e-12 * c2:
        raise ValueError(
            f"order-2 coefficient {A2!r} conflicts with the kinetic operator "
            f"-hbar^2/2m = {-c2!r}; the order-2 term lives in the kinetic step"
        )


class _KineticStep:
    """Full-dt kinetic propagator: Fourier exponential or Crank-Nicolson."""

    def __init__(self, grid: Grid, params: PhysicalParams, dt: float, scheme: str):
        self.grid = grid
        self.scheme = scheme
        c2 = params.hbar**2 / (2.0 * params.mass)
        if scheme == SPLIT_STEP:
            if grid.boundary != PERIODIC:
                raise GridError("split-step-spectral requires a periodic grid")
            k = 2.0 * np.pi * scipy.fft.fftfreq(grid.n, d=grid.spacing)
            self.phase = np.exp(-1j * (c2 * k**2 / params.hbar) * dt)
        else:
            if grid.boundary != DIRICHLET:
                raise GridError("crank-nicolson-fd requires a Dirichlet grid")
            m = grid.n - 2
            h = grid.spacing
            alpha = 1j * dt / (2.0 * params.hbar)
            self.h_diag = -c2 * (-2.0 / h**2)
            self.h_off = -c2 * (1.0 / h**2)
            self.d = np.full(m, 1.0 + alpha * self.h_diag, np.complex128)
            self.dl = np.full(m - 1, alpha * self.h_off, np.complex128)
            self.du = self.dl.copy()
            self.alpha = alpha

    def __call__(self, psi: np.ndarray) -> np.ndarray:
        if self.scheme == SPLIT_STEP:
            return scipy.fft.ifft(scipy.fft.fft(psi) * self.phase)
        inner_vals = psi[1:-1]
        rhs = (1.0 - self.alpha * self.h_diag) * inner_vals
        rhs[1:] -= self.alpha * self.h_off * inner_vals[:-1]
        rhs[:-1] -= self.alpha * self.h_off * inner_vals[1:]
        out = np.zeros_like(psi)
        out[1:-1] = kernels.solve_tridiagonal(self.dl, self.d, self.du, rhs)
        return out


def evolve(
    psi0: WaveField,
    V: GridFunction,
    spec: QuantumPotentialSpec,
    params: PhysicalParams,
    cfg: EvolutionConfig,
) -> EvolutionResult:
    """Propagate psi0 for cfg.steps steps of cfg.dt, storing every
    ``store_every``-th frame (plus the initial and final ones).

    Aborts with RuntimeError on NaN/overflow or if the norm drifts by more
    than 1e-4 relative (signals dt too large or node blow-up).
    """
    g = psi0.grid
    if g.kind != UNIFORM:
        raise GridError("evolution runs on uniform grids")
    if not V.grid.same_as(g):
        raise GridError("potential grid does not match the field grid")
    _validate_order2(spec, params)
    if cfg.q_cap is not None:
        q_cap = cfg.q_cap
    else:
        q_cap = 1e3 * params.rest_energy * (params.compton_wavelength / g.length) ** 4
    extra = _ExtraPotential(g, spec, params, q_cap)
    kinetic = _KineticStep(g, params, cfg.dt, cfg.scheme)
    hbar = params.hbar

    psi = psi0.values.copy()
    if cfg.scheme == CRANK_NICOLSON:
        psi[0] = 0.0
        psi[-1] = 0.0

    norm0 = norm(WaveField(g, psi))
    clamp_count = 0
    frames = [WaveField(g, psi.copy())]
    times = [0.0]
    steps_stored = [0]

    for step in range(1, cfg.steps + 1):
        W, c1 = extra(np.abs(psi))
        clamp_count += c1
        psi = psi * np.exp(-1j * (V.values + W) * cfg.dt / (2.0 * hbar))
        psi = kinetic(psi)
        W2, c2n = W, 0
        for _ in range(cfg.corrector_iterations):
            trial = psi * np.exp(-1j * (V.values + W2) * cfg.dt / (2.0 * hbar))
            W2, c2n = extra(np.abs(trial))
        clamp_count += c2n
        psi = psi * np.exp(-1j * (V.values + W2) * cfg.dt / (2.0 * hbar))

        if not np.all(np.isfinite(psi.view(np.float64))):
            raise RuntimeError(f"non-finite field at step {step} (dt too large?)")
        nrm = norm(WaveField(g, psi))
        if abs(nrm - norm0) > 1e-4 * norm0:
            raise RuntimeError(
                f"norm drifted to {nrm:.6g} at step {step}; aborting"
            )
        if step % cfg.store_every == 0 or step == cfg.steps:
            frames.append(WaveField(g, psi.copy()))
            times.append(step * cfg.dt)
            steps_stored.append(step)

    energies = np.array(
        [energy_functional(f, V, spec, params) for f in frames], dtype=np.float64
    )
    norms = np.array([norm(f) for f in frames], dtype=np.float64)
    return EvolutionResult(
        frames=frames,
        times=np.asarray(times),
        step_indices=np.asarray(steps_stored),
        norms=norms,
        energies=energies,
        clamp_count=clamp_count,
    )


# --------------------------------------------------------------------------
# Derived fields: velocity, force, energy, circulation
# --------------------------------------------------------------------------


def _complex_gradient(g: Grid, values: np.ndarray) -> np.ndarray:
    method = "spectral" if g.boundary == PERIODIC else "fd"
    re = gradient(GridFunction(g, values.real), method).values
    im = gradient(GridFunction(g, values.imag), method).values
    return re + 1j * im


def bohmian_velocity(
    psi: WaveField, params: PhysicalParams, floor: float = 1e-8
) -> GridFunction:
    """Guidance velocity v = (hbar/m) Im(grad psi / psi); zero below floor."""
    vals = psi.values
    dpsi = _complex_gradient(psi.grid, vals)
    dens = np.abs(vals) ** 2
    mask = np.abs(vals) <= floor * float(np.max(np.abs(vals)))
    v = np.zeros(psi.grid.n)
    np.divide(
        (params.hbar / params.mass) * np.imag(dpsi * np.conj(vals)),
        dens,
        out=v,
        where=~mask,
    )
    return GridFunction(psi.grid, v)


def quantum_force(
    R: GridFunction,
    V: GridFunction,
    spec: QuantumPotentialSpec,
    params: PhysicalParams,
    method: str = "fd",
) -> GridFunction:
    """Newtonian force -grad(V + Q[R]) along the grid."""
    from .qpotential import eval_complete_q

    q = eval_complete_q(R, params, spec, method)
    total = GridFunction(R.grid, V.values + q.values)
    return GridFunction(R.grid, -gradient(total, "fd").values)


def energy_functional(
    psi: WaveField,
    V: GridFunction,
    spec: QuantumPotentialSpec,
    params: PhysicalParams,
) -> float:
    """Conserved energy: kinetic + potential + non-kinetic family terms.

    The kinetic integrand hbar^2/2m |grad psi|^2 carries both the amplitude
    and phase gradients (the order-2 term); order-0 adds A0 * norm, and each
    order-2n >= 4 term adds A_{2n} * integral(lap^p R lap^q R), p + q = n.
    """
    g = psi.grid
    dpsi = _complex_gradient(g, psi.values)
    c2 = params.hbar**2 / (2.0 * params.mass)
    dens = np.abs(psi.values) ** 2
    total = integrate(
        GridFunction(g, c2 * np.abs(dpsi) ** 2 + V.values * dens)
    )
    method = "spectral" if g.boundary == PERIODIC else "fd"
    R = psi.amplitude()
    for t in spec.terms:
        if t.order == 2:
            continue  # realized by the kinetic integrand
        A = dimensional_coefficient(t, params)
        if t.order == 0:
            total += A * integrate(GridFunction(g, dens))
            continue
        n = t.order // 2
        p = (n + 1) // 2
        q = n - p
        left = power_laplacian(R, p, method)
        right = R if q == 0 else power_laplacian(R, q, method)
        total += A * inner(left, right)
    return float(total)


def circulation(psi: WaveField, params: PhysicalParams) -> float:
    """Line integral of the guidance velocity around a periodic grid:
    (hbar/m) times the total phase winding, quantized at 2 pi k hbar/m."""
    if psi.grid.boundary != PERIODIC:
        raise GridError("circulation is defined on periodic grids")
    vals = psi.values
    dtheta = np.angle(np.roll(vals, -1) * np.conj(vals))
    return float(params.hbar / params.mass * np.sum(dtheta))


# --------------------------------------------------------------------------
# Trajectories
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TrajectorySet:
    """Per-seed positions at every stored frame time."""

    seeds: np.ndarray
    times: np.ndarray
    paths: np.ndarray  # shape (n_frames, n_seeds)
    exited: np.ndarray  # bool per seed: hit a Dirichlet wall and froze

    def endpoints(self) -> np.ndarray:
        return self.paths[-1]


def sample_from_density(
    R0: GridFunction,
    count: int,
    rng: np.random.Generator | None = None,
    stratified: bool = True,
) -> np.ndarray:
    """Draw seed positions distributed as R0^2 by inverse-CDF sampling.

    Stratified mode places one draw per equal-probability stratum (jittered
    when an rng is supplied, midpoints otherwise), which removes the
    N^(-1/2) histogram noise of iid sampling while keeping the marginal
    distribution exactly proportional to R0^2.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    pts = R0.grid.points
    w = R0.values**2
    cell = 0.5 * (w[1:] + w[:-1]) * np.diff(pts)
    cdf = np.concatenate(([0.0], np.cumsum(cell)))
    if cdf[-1] <= 0:
        raise GridError("cannot sample from a zero density")
    cdf /= cdf[-1]
    if stratified:
        jitter = rng.random(count) if rng is not None else np.full(count, 0.5)
        u = (np.arange(count) + jitter) / count
    else:
        if rng is None:
            raise ValueError("iid sampling requires an rng")
        u = rng.random(count)
    return np.interp(u, cdf, pts)


def integrate_trajectories(
    evolution: EvolutionResult,
    seeds: np.ndarray,
    params: PhysicalParams,
    substeps: int = 1,
    floor: float = 1e-8,
) -> TrajectorySet:
    """RK4 advection of seeds through the stored frames' guidance velocity,
    linearly interpolated in space and time."""
    frames = evolution.frames
    if len(frames) < 2:
        raise ValueError("need at least two stored frames")
    g = frames[0].grid
    dts = np.diff(evolution.times)
    if not np.allclose(dts, dts[0], rtol=1e-9, atol=0):
        raise ValueError("stored frames must be uniformly spaced in time")
    seeds = np.asarray(seeds, dtype=np.float64)
    periodic = g.boundary == PERIODIC
    x0 = float(g.points[0])
    xmax = float(g.points[-1])
    if periodic:
        seeds = x0 + np.mod(seeds - x0, g.length)
    elif np.any((seeds < x0) | (seeds > xmax)):
        raise ValueError("seeds must lie inside the grid")
    vframes = np.stack(
        [bohmian_velocity(f, params, floor).values for f in frames]
    )
    paths, exited = kernels.advect_seeds(
        vframes,
        x0,
        float(g.spacing),
        float(dts[0]),
        seeds,
        substeps=substeps,
        periodic=periodic,
        length=float(g.length),
    )
    return TrajectorySet(
        seeds=seeds, times=evolution.times, paths=paths, exited=exited.astype(bool)
    )

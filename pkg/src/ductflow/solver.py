"""Galerkin time integration and field reconstruction.

State is the pair of coefficient vectors (c, dcoef) for the homogenized
velocity w = sum c_i psi_i and temperature theta = sum dcoef_i phi_i. The
physical velocity is reconstructed as v = w + delta, where delta = b +
grad(phi) carries the boundary flux; the temperature needs no lifting.

Time stepping is IMEX: the stiff linear forms (viscous + friction, heat
diffusion) go through a Crank-Nicolson solve factorized once, everything
else (transport, lifting couplings, boundary functionals, forcing) is
advanced with a second-order Adams-Bashforth extrapolation restarted at
window joints.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import hopf as hopf_mod
from . import poisson as poisson_mod
from .basis import (
    AssembledForms,
    DeltaEval,
    FaceDelta,
    TemperatureBasis,
    VelocityBasis,
    assemble_forms,
    build_temperature_basis,
    build_velocity_basis,
)
from .domain import DomainSpec, PatchKind, QuadratureGrid, build_domain
from .errors import NumericalAbort, ScenarioError
from .hopf import FluxProfile, HopfParams, flux_norms, profile_by_name, select_params


# ---------------------------------------------------------------------------
# Scenario configuration


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one run; parsed from a scenario file."""

    # domain
    L1: float = 1.0
    L2: float = 1.0
    a: float = 1.0
    N1: int = 16
    N2: int = 16
    N3: int = 32
    # physics
    nu: float = 1.0
    kappa_heat: float = 1.0
    gamma: float = 1.0
    omega_kind: str = "constant"       # constant | linear | bounded_smooth
    omega0: float = 1.0
    omega1: float = 0.0
    # forcing
    forcing_kind: str = "zero"         # zero | constant | shear
    forcing_vector: tuple = (0.0, 0.0, 0.0)
    forcing_amplitude: float = 0.0
    # flux
    flux_profile: str = "none"         # none | constant | parabolic-cap | pulsed
    flux_amplitude: float = 0.0
    flux_beta: float = 0.5
    flux_period: float = 1.0
    # cutoff parameters
    hopf_mode: str = "manual"          # auto | manual
    hopf_eps: float = 0.5
    hopf_rho: float = 0.5
    hopf_c_cal: float = 1.0
    # initial data
    init_v: str = "zero"               # zero | extension | modes
    init_v_amplitude: float = 0.0
    init_v_nmodes: int = 4
    init_theta: str = "zero"           # zero | constant | bump | front
    init_theta_mean: float = 0.0
    init_theta_amplitude: float = 0.0
    # time
    T: float = 0.5
    n_windows: int = 2
    dt: float = 2.0e-3
    # galerkin
    m: int = 16
    # audit
    mu: float = 0.8
    c_budget: float = 1.0
    c_recon: float = 1.0
    c_theta: float = 1.0
    theta_star: float = 1.0
    theta_star_upper: float = 2.0
    tol_overshoot: float = 0.01
    s2_stress_nu: bool = False

    def validate(self) -> None:
        try:
            self.domain_spec()
        except ValueError as exc:
            raise ScenarioError(f"domain: {exc}")
        if min(self.nu, self.kappa_heat) <= 0 or self.gamma < 0:
            raise ScenarioError("nu, kappa must be positive and gamma nonnegative")
        if self.gamma == 0:
            raise ScenarioError("gamma must be positive (slip friction coefficient)")
        if self.omega_kind not in ("constant", "linear", "bounded_smooth"):
            raise ScenarioError(f"unknown omega kind {self.omega_kind!r}")
        if self.forcing_kind not in ("zero", "constant", "shear"):
            raise ScenarioError(f"unknown forcing kind {self.forcing_kind!r}")
        if self.T <= 0:
            raise ScenarioError("window length T must be positive")
        if self.n_windows < 1:
            raise ScenarioError("need at least one window")
        if self.dt <= 0:
            raise ScenarioError("dt must be positive")
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ScenarioError("window length T must be an integer multiple of dt")
        if self.m < 1:
            raise ScenarioError("m must be >= 1")
        if not (self.mu > 2.0 / 3.0 and self.mu < 1.0):
            raise ScenarioError("audit exponent mu must lie in (2/3, 1)")
        if not (0 < self.theta_star < self.theta_star_upper):
            raise ScenarioError("need 0 < theta_star < theta_star_upper")
        if self.hopf_mode not in ("auto", "manual"):
            raise ScenarioError(f"unknown hopf mode {self.hopf_mode!r}")
        if self.init_v not in ("zero", "extension", "modes"):
            raise ScenarioError(f"unknown initial velocity kind {self.init_v!r}")
        if self.init_theta not in ("zero", "constant", "bump", "front"):
            raise ScenarioError(f"unknown initial temperature kind {self.init_theta!r}")

    @property
    def steps_per_window(self) -> int:
        return int(round(self.T / self.dt))

    def domain_spec(self) -> DomainSpec:
        return DomainSpec(
            L1=self.L1, L2=self.L2, a=self.a, N1=self.N1, N2=self.N2, N3=self.N3
        )


def omega_of(config: ScenarioConfig) -> Callable:
    if config.omega_kind == "constant":
        return lambda th: np.full_like(np.asarray(th, float), config.omega0)
    if config.omega_kind == "linear":
        return lambda th: config.omega0 + config.omega1 * np.asarray(th, float)
    return lambda th: config.omega0 + config.omega1 * np.tanh(np.asarray(th, float))


def forcing_field(config: ScenarioConfig, grid: QuadratureGrid) -> np.ndarray:
    out = np.zeros((3, *grid.shape))
    if config.forcing_kind == "zero":
        return out
    if config.forcing_kind == "constant":
        for c in range(3):
            out[c] = config.forcing_vector[c]
        return out
    # "shear": vertical force modulated across x1; has a nonzero projection
    # onto the divergence-free zero-flux basis, unlike a constant force
    X1 = grid.meshgrid()[0]
    out[2] = config.forcing_amplitude * np.cos(np.pi * X1 / grid.spec.L1)
    return out


# ---------------------------------------------------------------------------
# The lifting provider


class DeltaProvider:
    """Builds DeltaEval snapshots of delta = b + grad(phi) at given times."""

    def __init__(self, profile: FluxProfile, params: Optional[HopfParams], grid: QuadratureGrid):
        self.profile = profile
        self.params = params
        self.grid = grid
        self.is_zero = profile.name == "none"
        self._cache: Optional[DeltaEval] = None

    def __call__(self, t: float) -> Optional[DeltaEval]:
        if self.is_zero:
            return None
        if self.profile.is_static and self._cache is not None:
            return self._cache
        out = self._build(t)
        if self.profile.is_static:
            self._cache = out
        return out

    def _build(self, t: float) -> DeltaEval:
        grid = self.grid
        ext = hopf_mod.build_b(self.profile, self.params, grid, t)
        sol = poisson_mod.solve_neumann(ext.div_b, grid)
        sol_t = poisson_mod.solve_neumann(ext.div_b_t, grid)

        values = ext.b + sol.phi.require_grad()
        grad = ext.grad_b() + sol.phi.require_hess()
        dt_values = np.zeros_like(values)
        dt_values[2] = ext.alpha_t
        dt_values += sol_t.phi.require_grad()

        faces = {}
        for patch in grid.patches:
            alpha_f, galpha_f = hopf_mod.b_on_face(self.profile, self.params, grid, patch, t)
            gphi_f = poisson_mod.grad_on_face(sol, grid, patch)
            hphi_f = poisson_mod.hess_on_face(sol, grid, patch)
            vals = gphi_f.copy()
            vals[2] += alpha_f
            fgrad = hphi_f.copy()
            fgrad[2] += galpha_f
            faces[patch.kind] = FaceDelta(values=vals, grad=fgrad)
        return DeltaEval(t=t, values=values, grad=grad, dt_values=dt_values, faces=faces)


# ---------------------------------------------------------------------------
# State and stepping


@dataclass(frozen=True)
class State:
    t: float
    c: np.ndarray
    dcoef: np.ndarray

    def __post_init__(self):
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.dcoef))):
            raise ValueError("non-finite state coefficients")


class ImexStepper:
    """Crank-Nicolson for a fixed SPD matrix, AB2 for the explicit part."""

    def __init__(self, L: np.ndarray, dt: float):
        n = L.shape[0]
        eye = np.eye(n)
        self._solve = cho_factor(eye + 0.5 * dt * L)
        self._B = eye - 0.5 * dt * L
        self.dt = dt

    def step(self, x, E_now, E_prev=None):
        if E_prev is None:
            expl = E_now
        else:
            expl = 1.5 * E_now - 0.5 * E_prev
        return cho_solve(self._solve, self._B @ x + self.dt * expl)


@dataclass
class RunResult:
    config: ScenarioConfig
    times: np.ndarray
    series: dict
    coeffs_w: np.ndarray
    coeffs_th: np.ndarray
    steps_per_window: int
    n_windows: int
    dt_stability_estimate: float

    def window_joint_indices(self) -> np.ndarray:
        return np.arange(self.n_windows + 1) * self.steps_per_window

    def at_joints(self, key: str) -> np.ndarray:
        return self.series[key][self.window_joint_indices()]


SERIES_KEYS = [
    "t",
    "w_l2sq", "w_gradsq", "w_h1sq",
    "th_l2sq", "th_gradsq", "th_h1sq",
    "fric_sq",
    "th_min", "th_max", "th_integral", "th_l1", "inflow_theta",
    "flux_trace_err", "compat_residual",
    "delta_l2sq", "delta_gradsq",
    "v_l2sq", "v_gradsq",
    "omega_f_65sq", "omega_f_l3sq",
    "d_w13_total", "d_w13_sq_sum", "ddt_w165_sq_sum",
    "d_l2_sum", "d_l2_sq_sum", "d_l3_cap1", "d_l1_cap1",
    "d_h1_ext", "d_l2_ext",
]


class GalerkinSolver:
    """Owns the assembled system and advances it through the windows."""

    def __init__(self, config: ScenarioConfig):
        config.validate()
        self.config = config
        spec = config.domain_spec()
        self.patches, self.grid = build_domain(spec)
        self.profile = profile_by_name(
            config.flux_profile,
            spec,
            amplitude=config.flux_amplitude,
            beta=config.flux_beta,
            period=config.flux_period,
        )
        if self.profile.name != "none":
            hopf_mod.validate_profile(
                self.profile, self.grid, np.linspace(0.0, config.T, 9)
            )
        self.hopf_params = self._pick_hopf_params()
        self.delta_provider = DeltaProvider(self.profile, self.hopf_params, self.grid)
        self.vb: VelocityBasis = build_velocity_basis(self.grid, config.m)
        self.tb: TemperatureBasis = build_temperature_basis(self.grid, config.m)
        self.forms: AssembledForms = assemble_forms(
            self.vb,
            self.tb,
            self.grid,
            nu=config.nu,
            gamma=config.gamma,
            kappa_heat=config.kappa_heat,
            s2_stress_includes_nu=config.s2_stress_nu,
        )
        self.omega = omega_of(config)
        self.f_values = forcing_field(config, self.grid)
        self._psi_flat = self.vb.samples.reshape(config.m, 3, -1)
        self._phi_flat = self.tb.samples.reshape(self.tb.m, -1)
        self._gphi_flat = self.tb.grad.reshape(self.tb.m, 3, -1)
        self._theta_face = self._temperature_face_samples()
        self._stepper_w = ImexStepper(self.forms.K_visc + self.forms.K_fric, config.dt)
        self._stepper_th = ImexStepper(self.forms.K_theta, config.dt)
        self._H1_w = np.eye(config.m) + self.forms.G_grad_w
        self._E_prev = None

    # -- setup helpers -------------------------------------------------------

    def _pick_hopf_params(self) -> Optional[HopfParams]:
        cfg = self.config
        if self.profile.name == "none":
            return None
        if cfg.hopf_mode == "manual":
            return HopfParams(eps=cfg.hopf_eps, rho=cfg.hopf_rho, c_cal=cfg.hopf_c_cal)
        ts = np.linspace(0.0, cfg.T, 33)
        sup_norm = max(flux_norms(self.profile, self.grid, float(t)).w13_inf_total for t in ts)
        return select_params(cfg.nu, sup_norm, cfg.hopf_c_cal)

    def _temperature_face_samples(self) -> dict:
        out = {}
        for kind in (PatchKind.CAP_LO, PatchKind.CAP_HI):
            patch = self.grid.patch(kind)
            n1, n2 = patch.nodes[0].size, patch.nodes[1].size
            vals = np.zeros((self.tb.m, n1, n2))
            spec = self.grid.spec
            for idx, md in enumerate(self.tb.modes):
                f1 = np.cos(md.k[0] * np.pi * patch.nodes[0] / spec.L1)
                f2 = np.cos(md.k[1] * np.pi * patch.nodes[1] / spec.L2)
                s3 = 0.0 if kind == PatchKind.CAP_LO else 1.0
                f3 = math.cos(md.k[2] * math.pi * s3)
                vals[idx] = md.amplitude * f3 * np.outer(f1, f2)
            out[kind] = vals
        return out

    def initial_state(self) -> State:
        cfg = self.config
        delta0 = self.delta_provider(0.0)
        m = cfg.m
        if cfg.init_v == "modes":
            weights = 1.0 / np.sqrt(1.0 + np.arange(min(cfg.init_v_nmodes, m)))
            weights = weights / np.linalg.norm(weights)
            c = np.zeros(m)
            c[: weights.size] = cfg.init_v_amplitude * weights
        else:
            if cfg.init_v == "zero" and delta0 is not None:
                # v0 = 0: w0 is the projection of -delta(0)
                c = -self.forms.project_velocity(delta0.values)
            else:
                c = np.zeros(m)
        th0 = self._initial_theta_values()
        dcoef = self.forms.project_temperature(th0)
        return State(t=0.0, c=c, dcoef=dcoef)

    def _initial_theta_values(self) -> np.ndarray:
        cfg = self.config
        if cfg.init_theta == "zero":
            return np.zeros(self.grid.shape)
        if cfg.init_theta == "constant":
            return np.full(self.grid.shape, cfg.init_theta_mean)
        X1, _, X3 = self.grid.meshgrid()
        spec = self.grid.spec
        carrier = np.cos(np.pi * X1 / spec.L1) * np.cos(np.pi * (X3 + spec.a) / (2 * spec.a))
        if cfg.init_theta == "bump":
            # odd saturation of the carrier: smooth, range exactly
            # mean +- amplitude, zero volume average of the profile part
            prof = np.tanh(2.0 * carrier) / math.tanh(2.0)
        else:
            # "front": shifted saturation; its even harmonics populate the
            # bands that separate m = 16 from m = 32, so truncation
            # overshoot demonstrably shrinks under m-refinement
            beta, c0 = 1.2, 0.3
            hi = math.tanh(beta * (1.0 - c0))
            lo = math.tanh(beta * (-1.0 - c0))
            prof = (2.0 * np.tanh(beta * (carrier - c0)) - (hi + lo)) / (hi - lo)
        return cfg.init_theta_mean + cfg.init_theta_amplitude * prof

    # -- right-hand sides ------------------------------------------------------

    def theta_values(self, state: State) -> np.ndarray:
        return (state.dcoef @ self._phi_flat).reshape(self.grid.shape)

    def w_values(self, state: State) -> np.ndarray:
        m = self.config.m
        return np.einsum("i,icg->cg", state.c, self._psi_flat).reshape(3, *self.grid.shape)

    def rhs_velocity(self, state: State, delta: Optional[DeltaEval], return_terms: bool = False):
        forms = self.forms
        c = state.c
        terms = {}
        terms["conv_www"] = np.einsum("i,j,ijl->l", c, c, forms.T_vel)
        terms["visc"] = forms.K_visc @ c
        terms["fric"] = forms.K_fric @ c
        theta = self.theta_values(state)
        omega_f = self.omega(theta)[None, :, :, :] * self.f_values
        terms["f_omega"] = forms.project_velocity(omega_f)
        if delta is not None:
            g_wd, g_dw, _ = forms.delta_matrices(delta)
            terms["conv_wdelta"] = g_wd @ c
            terms["conv_deltaw"] = g_dw @ c
            B, Fb = forms.boundary_functionals(delta)
            terms["B"] = B
            terms["F_bdry"] = Fb
            terms["F_vol"] = forms.forcing_F_volume(delta)
            terms["F_form"] = forms.forcing_F_form(delta)
        else:
            z = np.zeros_like(c)
            terms["conv_wdelta"] = z
            terms["conv_deltaw"] = z
            terms["B"] = z
            terms["F_bdry"] = z
            terms["F_vol"] = z
            terms["F_form"] = z
        total = (
            -terms["conv_www"] - terms["conv_wdelta"] - terms["conv_deltaw"]
            - terms["visc"] - terms["fric"]
            + terms["B"] + terms["f_omega"]
            + terms["F_vol"] + terms["F_form"] + terms["F_bdry"]
        )
        if return_terms:
            terms["total"] = total
            return total, terms
        return total

    def rhs_temperature(self, state: State, delta: Optional[DeltaEval], return_terms: bool = False):
        forms = self.forms
        terms = {}
        terms["diff"] = forms.K_theta @ state.dcoef
        adv = np.einsum("i,j,ijl->l", state.c, state.dcoef, forms.T_th)
        if delta is not None:
            _, _, g_dth = forms.delta_matrices(delta)
            adv = adv + g_dth @ state.dcoef
        terms["adv"] = adv
        total = -terms["diff"] - terms["adv"]
        if return_terms:
            terms["total"] = total
            return total, terms
        return total

    def _explicit_parts(self, state: State, delta: Optional[DeltaEval]):
        """Everything except the implicit linear solves."""
        forms = self.forms
        c = state.c
        E_w = -np.einsum("i,j,ijl->l", c, c, forms.T_vel)
        theta = self.theta_values(state)
        omega_f = self.omega(theta)[None, :, :, :] * self.f_values
        E_w = E_w + forms.project_velocity(omega_f)
        E_th = -np.einsum("i,j,ijl->l", c, state.dcoef, forms.T_th)
        if delta is not None:
            g_wd, g_dw, g_dth = forms.delta_matrices(delta)
            E_w = E_w - g_wd @ c - g_dw @ c
            B, Fb = forms.boundary_functionals(delta)
            E_w = E_w + B + Fb + forms.forcing_F_volume(delta) + forms.forcing_F_form(delta)
            E_th = E_th - g_dth @ state.dcoef
        return E_w, E_th

    # -- time stepping -----------------------------------------------------------

    def reset_window(self) -> None:
        """Restart the Adams-Bashforth history (used at window joints)."""
        self._E_prev = None

    def step(self, state: State) -> State:
        dt = self.config.dt
        delta = self.delta_provider(state.t)
        E_w, E_th = self._explicit_parts(state, delta)
        prev = self._E_prev
        c_new = self._stepper_w.step(state.c, E_w, None if prev is None else prev[0])
        th_new = self._stepper_th.step(state.dcoef, E_th, None if prev is None else prev[1])
        self._E_prev = (E_w, E_th)
        if not (np.all(np.isfinite(c_new)) and np.all(np.isfinite(th_new))):
            raise NumericalAbort(
                f"non-finite state at t = {state.t + dt:.6g}", t=state.t, state=state
            )
        return State(t=state.t + dt, c=c_new, dcoef=th_new)

    def dt_stability_estimate(self, state: State, delta: Optional[DeltaEval]) -> float:
        """Crude advective limit 1 / (|w + delta|_max * kappa_max)."""
        vmax = float(np.max(np.abs(self.w_values(state))))
        if delta is not None:
            vmax += float(np.max(np.abs(delta.values)))
        spec = self.grid.spec
        kmax = max(
            self.vb.k_max[0] * math.pi / spec.L1,
            self.vb.k_max[1] * math.pi / spec.L2,
            self.vb.k_max[2] * math.pi / (2 * spec.a),
        )
        if vmax * kmax == 0.0:
            return math.inf
        return 1.0 / (vmax * kmax)

    # -- reconstruction and sampling ----------------------------------------------

    def reconstruct(self, state: State, delta: Optional[DeltaEval]):
        """(v, theta) nodal values; v = w + delta."""
        v = self.w_values(state)
        if delta is not None:
            v = v + delta.values
        return v, self.theta_values(state)

    def flux_trace_error(self, state: State, delta: Optional[DeltaEval]) -> float:
        """max over cap nodes of |v.n - d|; lateral faces are checked too."""
        err = 0.0
        t = state.t
        for patch in self.grid.patches:
            vals = np.einsum("i,icxy->cxy", state.c, self.vb.face_samples[patch.kind])
            if delta is not None:
                vals = vals + delta.faces[patch.kind].values
            vn = np.einsum("c,cxy->xy", patch.normal, vals)
            if patch.kind == PatchKind.CAP_LO:
                X, Y = patch.meshgrid()
                target = -self.profile.d1(X, Y, t)
            elif patch.kind == PatchKind.CAP_HI:
                X, Y = patch.meshgrid()
                target = self.profile.d2(X, Y, t)
            else:
                target = 0.0
            err = max(err, float(np.max(np.abs(vn - target))))
        return err

    def _sample(self, state: State, delta: Optional[DeltaEval]) -> dict:
        cfg = self.config
        forms = self.forms
        c, dcoef = state.c, state.dcoef
        grid = self.grid
        row = {"t": state.t}
        row["w_l2sq"] = float(c @ c)
        row["w_gradsq"] = float(c @ forms.G_grad_w @ c)
        row["w_h1sq"] = row["w_l2sq"] + row["w_gradsq"]
        row["th_l2sq"] = float(dcoef @ dcoef)
        row["th_gradsq"] = float(dcoef @ (self.tb.eigenvalues * dcoef))
        row["th_h1sq"] = row["th_l2sq"] + row["th_gradsq"]
        row["fric_sq"] = forms.friction_quadratic(c)

        theta = self.theta_values(state)
        row["th_min"] = float(theta.min())
        row["th_max"] = float(theta.max())
        row["th_integral"] = grid.integrate(theta)
        row["th_l1"] = grid.integrate(np.abs(theta))

        cap_lo = grid.patch(PatchKind.CAP_LO)
        X, Y = cap_lo.meshgrid()
        d1 = self.profile.d1(X, Y, state.t)
        th_face = np.einsum("i,ixy->xy", dcoef, self._theta_face[PatchKind.CAP_LO])
        row["inflow_theta"] = cap_lo.integrate(d1 * th_face)

        row["flux_trace_err"] = self.flux_trace_error(state, delta)
        row["compat_residual"] = hopf_mod.check_compatibility(self.profile, grid, state.t)

        if delta is not None:
            row["delta_l2sq"] = grid.integrate(np.sum(delta.values**2, axis=0))
            row["delta_gradsq"] = grid.integrate(np.sum(delta.grad**2, axis=(0, 1)))
        else:
            row["delta_l2sq"] = 0.0
            row["delta_gradsq"] = 0.0

        w_vals = self.w_values(state)
        v = w_vals if delta is None else w_vals + delta.values
        row["v_l2sq"] = grid.integrate(np.sum(v**2, axis=0))
        if delta is None:
            row["v_gradsq"] = row["w_gradsq"]
        else:
            gw = np.einsum("i,icdg->cdg", c, self.vb.grad.reshape(cfg.m, 3, 3, -1))
            gv = gw + delta.grad.reshape(3, 3, -1)
            row["v_gradsq"] = grid.cell_volume * float(np.sum(gv**2))

        th_clamped = np.clip(theta, cfg.theta_star, cfg.theta_star_upper)
        omega_f = self.omega(th_clamped)[None, :, :, :] * self.f_values
        mag = np.sqrt(np.sum(omega_f**2, axis=0))
        row["omega_f_65sq"] = grid.integrate(mag ** (6.0 / 5.0)) ** (2 * 5.0 / 6.0)
        row["omega_f_l3sq"] = grid.integrate(mag**3) ** (2.0 / 3.0)

        fn = flux_norms(self.profile, grid, state.t)
        row["d_w13_total"] = fn.w13_inf_total
        row["d_w13_sq_sum"] = sum(x**2 for x in fn.w13_cap)
        row["ddt_w165_sq_sum"] = sum(x**2 for x in fn.w1_65_dt_cap)
        row["d_l2_sum"] = sum(fn.l2_cap)
        row["d_l2_sq_sum"] = sum(x**2 for x in fn.l2_cap)
        row["d_l3_cap1"] = fn.l3_cap[0]
        row["d_l1_cap1"] = fn.l1_cap[0]
        depth = 2.0 * grid.spec.a
        row["d_l2_ext"] = math.sqrt(depth) * sum(fn.l2_cap)
        row["d_h1_ext"] = math.sqrt(depth) * sum(
            math.sqrt(l2**2 + g2**2) for l2, g2 in zip(fn.l2_cap, fn.g_l2_cap)
        )
        return row

    # -- the window loop ------------------------------------------------------------

    def run_windows(self, snapshot_cb: Optional[Callable] = None) -> RunResult:
        cfg = self.config
        state = self.initial_state()
        spw = cfg.steps_per_window
        n_samples = cfg.n_windows * spw + 1
        series = {k: np.zeros(n_samples) for k in SERIES_KEYS}
        coeffs_w = np.zeros((n_samples, cfg.m))
        coeffs_th = np.zeros((n_samples, self.tb.m))

        delta0 = self.delta_provider(0.0)
        est = self.dt_stability_estimate(state, delta0)
        if cfg.dt > est:
            warnings.warn(
                f"dt = {cfg.dt} exceeds the advective stability estimate {est:.3g}",
                RuntimeWarning,
            )

        def record(idx, st):
            delta = self.delta_provider(st.t)
            row = self._sample(st, delta)
            for k, vval in row.items():
                series[k][idx] = vval
            coeffs_w[idx] = st.c
            coeffs_th[idx] = st.dcoef
            if snapshot_cb is not None:
                snapshot_cb(idx, st, self, delta)

        record(0, state)
        idx = 1
        for window in range(cfg.n_windows):
            self.reset_window()
            for _ in range(spw):
                state = self.step(state)
                record(idx, state)
                idx += 1

        return RunResult(
            config=cfg,
            times=series["t"].copy(),
            series=series,
            coeffs_w=coeffs_w,
            coeffs_th=coeffs_th,
            steps_per_window=spw,
            n_windows=cfg.n_windows,
            dt_stability_estimate=est,
        )

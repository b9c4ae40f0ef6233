"""Constitutive laws: energies, dissipation, flow-rule inversion, heat laws.

Every function is pure and broadcasts over stacked inputs, so the assembly
loops can call them once per field instead of once per point.  Temperatures
are absolute (nonnegative); the enthalpy variable is the primitive of the
volumetric heat capacity, which for the constant-capacity law used here is
simply ``cv0 * theta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor
from .errors import InvalidConfig, SingularMatrix


@dataclass(frozen=True)
class MaterialParams:
    """Constitutive constants.

    Units are SI-like but the solver is routinely run desk-scale with
    nondimensional values.  ``validate()`` enforces the admissibility
    constraints; direct construction skips it so experiments can switch
    individual mechanisms off (e.g. ``mu = 0`` for a bending-only problem).
    """

    rho: float = 1.0            # mass density
    lam: float = 40.0           # first elastic modulus (volumetric)
    mu: float = 40.0            # second elastic modulus (shear)
    kappa0: float = 1e-4        # hyperstress modulus on the deformation Hessian
    kappa1: float = 1e-4        # plastic-gradient modulus
    q: float = 4.0              # plastic-gradient exponent
    delta: float = 0.05         # isochoric-penalty parameter (0 disables hardening)
    r: float = 4.0              # hardening exponent
    sigma0: float = 0.3         # reference yield stress (0 gives pure creep)
    theta_ref: float = 1e3      # yield softening temperature scale
    mu_v: float = 0.5           # viscous creep modulus
    cv0: float = 1.0            # volumetric heat capacity
    k0: float = 0.1             # heat conductivity
    boundary_spring: float = 100.0   # elastic support stiffness on the boundary
    boundary_heat_transfer: float = 0.0  # Robin heat-transfer coefficient

    def validate(self, dim: int = 2) -> None:
        """Raise InvalidConfig when any admissibility constraint fails."""
        checks = [
            (self.rho > 0, "rho must be positive"),
            (self.mu > 0, "mu must be positive"),
            (self.lam + self.mu > 0, "lam + mu must be positive"),
            (self.kappa0 > 0, "kappa0 must be positive"),
            (self.kappa1 > 0, "kappa1 must be positive"),
            (self.q > dim, f"q must exceed the spatial dimension ({dim})"),
            (self.delta >= 0, "delta must be nonnegative"),
            (self.sigma0 >= 0, "sigma0 must be nonnegative"),
            (self.theta_ref > 0, "theta_ref must be positive"),
            (self.mu_v > 0, "mu_v must be positive"),
            (self.cv0 > 0, "cv0 must be positive"),
            (self.k0 > 0, "k0 must be positive"),
            (self.boundary_spring >= 0, "boundary_spring must be nonnegative"),
            (self.boundary_heat_transfer >= 0, "boundary_heat_transfer must be nonnegative"),
        ]
        if self.q > dim:
            r_min = self.q * dim / (self.q - dim)
            checks.append((self.r >= r_min, f"r must be >= q*d/(q-d) = {r_min:g}"))
        errors = [msg for ok, msg in checks if not ok]
        if errors:
            raise InvalidConfig("; ".join(errors))


# ----------------------------------------------------------------------
# elastic response (quadratic in the elastic Green-Lagrange strain)
# ----------------------------------------------------------------------

def green_lagrange(f_el: np.ndarray) -> np.ndarray:
    """E = (F^T F - I) / 2 for stacked matrices."""
    d = f_el.shape[-1]
    ftf = np.einsum("...ki,...kj->...ij", f_el, f_el)
    return 0.5 * (ftf - np.eye(d))


def elastic_energy(params: MaterialParams, f_el: np.ndarray) -> np.ndarray:
    """Energy density lam/2 (tr E)^2 + mu E:E, frame indifferent by construction."""
    e = green_lagrange(f_el)
    tr = np.trace(e, axis1=-2, axis2=-1)
    return 0.5 * params.lam * tr**2 + params.mu * tensor.contract2(e, e)


def elastic_energy_deriv(params: MaterialParams, f_el: np.ndarray) -> np.ndarray:
    """Derivative wrt F_el: F_el (lam tr(E) I + 2 mu E)."""
    d = f_el.shape[-1]
    e = green_lagrange(f_el)
    tr = np.trace(e, axis1=-2, axis2=-1)
    s2 = params.lam * tr[..., None, None] * np.eye(d) + 2.0 * params.mu * e
    return np.einsum("...ik,...kj->...ij", f_el, s2)


# ----------------------------------------------------------------------
# hardening / isochoric penalty
# ----------------------------------------------------------------------

def hardening_energy(params: MaterialParams, p: np.ndarray) -> np.ndarray:
    """Volumetric penalty delta/max(1, det P)^r + (det P - 1)^2/(2 delta).

    Returns +inf where det P <= 0 (a sentinel value, not an error).  With
    delta == 0 hardening is disabled and the energy is identically zero.
    """
    j = tensor.det(p)
    if params.delta == 0.0:
        return np.zeros_like(j)
    out = np.where(
        j > 0.0,
        params.delta / np.maximum(1.0, j) ** params.r
        + (j - 1.0) ** 2 / (2.0 * params.delta),
        np.inf,
    )
    return out


def hardening_energy_deriv(params: MaterialParams, p: np.ndarray) -> np.ndarray:
    """Derivative wrt P, using d(det P)/dP = Cof P.

    At det P = 1 the barrier branch is flat from the left; the selection 0 is
    used there so the reference state P = I carries no hardening force beyond
    the quadratic term (which also vanishes at det P = 1).
    """
    j = tensor.det(p)
    if params.delta == 0.0:
        return np.zeros_like(p)
    dpsi_dj = (j - 1.0) / params.delta
    barrier = np.where(j > 1.0, -params.r * params.delta / np.abs(j) ** (params.r + 1), 0.0)
    dpsi_dj = dpsi_dj + barrier
    return dpsi_dj[..., None, None] * tensor.cof(p)


# ----------------------------------------------------------------------
# dissipation potential, its regularisation and closed-form inversion
# ----------------------------------------------------------------------

def yield_stress(params: MaterialParams, theta) -> np.ndarray:
    """Temperature-softened yield stress sigma0 / (1 + theta/theta_ref)."""
    return params.sigma0 / (1.0 + np.asarray(theta, dtype=float) / params.theta_ref)


def dissipation(params: MaterialParams, theta, rate: np.ndarray, eps: float) -> np.ndarray:
    """Regularised dissipation density at plastification rate `rate`.

    The rate-independent part sigma_Y |R| is smoothed near R = 0 into a
    quadratic of width `eps`; the viscous part mu_v/2 |R|^2 is untouched.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    sy = yield_stress(params, theta)
    s = tensor.frobenius(rate)
    r1 = np.where(s <= eps, sy * s**2 / (2.0 * eps), sy * (s - 0.5 * eps))
    return r1 + 0.5 * params.mu_v * s**2


def dissipation_unregularized(params: MaterialParams, theta, rate: np.ndarray) -> np.ndarray:
    """sigma_Y(theta) |R| + mu_v/2 |R|^2 (the eps -> 0 potential)."""
    s = tensor.frobenius(rate)
    return yield_stress(params, theta) * s + 0.5 * params.mu_v * s**2


def dissipation_deriv(params: MaterialParams, theta, rate: np.ndarray, eps: float) -> np.ndarray:
    """Gradient of `dissipation` wrt the rate; equals 0 at R = 0."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    sy = yield_stress(params, theta)
    s = tensor.frobenius(rate)
    # magnitude of the gradient: sigma_Y min(s/eps, 1) + mu_v s, along R/|R|
    coeff = np.where(
        s > 0.0,
        (sy * np.minimum(s / eps, 1.0) + params.mu_v * s) / np.where(s > 0.0, s, 1.0),
        0.0,
    )
    return coeff[..., None, None] * rate


def invert_flow(params: MaterialParams, theta, target: np.ndarray, eps: float) -> np.ndarray:
    """Solve dissipation_deriv(theta, R, eps) = target for R in closed form.

    The gradient magnitude h(s) = sigma_Y min(s/eps, 1) + mu_v s is piecewise
    linear and strictly increasing (mu_v > 0), so the inverse is explicit:
    the quadratic branch applies while |target| <= sigma_Y + mu_v eps.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if params.mu_v <= 0.0:
        raise ValueError("invert_flow requires mu_v > 0")
    sy = np.broadcast_to(yield_stress(params, theta), target.shape[:-2]).astype(float)
    tau = tensor.frobenius(target)
    s_quad = tau * eps / (sy + params.mu_v * eps)
    s_lin = (tau - sy) / params.mu_v
    s = np.where(tau <= sy + params.mu_v * eps, s_quad, s_lin)
    scale = np.where(tau > 0.0, s / np.where(tau > 0.0, tau, 1.0), 0.0)
    return scale[..., None, None] * target


def heat_production(params: MaterialParams, theta, rate: np.ndarray, eps: float) -> np.ndarray:
    """Damped heat-production rate dR(theta;R):R / (1 + eps |R|^2)."""
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    s = tensor.frobenius(rate)
    sy = yield_stress(params, theta)
    if eps == 0.0:
        power = sy * s + params.mu_v * s**2
    else:
        power = sy * np.minimum(s / eps, 1.0) * s + params.mu_v * s**2
    return power / (1.0 + eps * s**2)


# ----------------------------------------------------------------------
# heat transport and the enthalpy transform
# ----------------------------------------------------------------------

def effective_conductivity(params: MaterialParams, p: np.ndarray, theta=None) -> np.ndarray:
    """Conductivity pulled back through the plastic strain.

    K(P) = Cof(P)^T k0 Cof(P) / det P; symmetric positive definite whenever
    det P > 0.  The temperature argument is accepted for interface symmetry;
    the default conductivity law is temperature independent.
    """
    j = tensor.det(p)
    if np.any(j <= tensor.singular_tol(p)):
        raise SingularMatrix("effective_conductivity needs det P > 0")
    c = tensor.cof(p)
    ctc = np.einsum("...ki,...kj->...ij", c, c)
    return params.k0 * ctc / j[..., None, None]


def enthalpy(params: MaterialParams, theta) -> np.ndarray:
    """Enthalpy transform of the temperature (primitive of the heat capacity,
    normalised to vanish at zero)."""
    return params.cv0 * np.asarray(theta, dtype=float)


def enthalpy_inv(params: MaterialParams, vartheta) -> np.ndarray:
    """Inverse of `enthalpy` (exact for the constant-capacity law)."""
    return np.asarray(vartheta, dtype=float) / params.cv0


def thermal_free_energy(params: MaterialParams, theta) -> np.ndarray:
    """Purely thermal free-energy density -cv0 theta (ln theta - 1).

    Chosen so that the heat capacity -theta d2/dtheta2 of it is the constant
    cv0 and the entropy density is cv0 ln theta.
    """
    th = np.asarray(theta, dtype=float)
    out = np.where(th > 0.0, -params.cv0 * th * (np.log(np.where(th > 0.0, th, 1.0)) - 1.0), 0.0)
    return out


def entropy_density(params: MaterialParams, theta) -> np.ndarray:
    """cv0 ln(theta); -inf sentinel at theta = 0."""
    th = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore"):
        return params.cv0 * np.log(th)

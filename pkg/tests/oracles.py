"""Independent slow-path evaluators used as oracles by the test suite.

Everything here is computed directly from mode definitions (wavevector,
component amplitudes, parity rule) and plain quadrature sums, bypassing the
package's cached samples, assembled matrices and einsum fast paths. Keep
this file boring and explicit on purpose.
"""

import math

import numpy as np


def velocity_mode_fields(mode, grid):
    """(values[3, ...], grad[3, 3, ...]) of one velocity mode, from formulas."""
    spec = grid.spec
    lengths = spec.lengths
    origins = spec.origins
    X = grid.meshgrid()
    s = [(X[a] - origins[a]) / lengths[a] for a in range(3)]
    kap = [mode.k[a] * math.pi / lengths[a] for a in range(3)]
    values = np.zeros((3, *grid.shape))
    grad = np.zeros((3, 3, *grid.shape))
    for c in range(3):
        if mode.coef[c] == 0.0:
            continue
        factors = []
        for a in range(3):
            arg = mode.k[a] * math.pi * s[a]
            factors.append(np.sin(arg) if a == c else np.cos(arg))
        values[c] = mode.coef[c] * factors[0] * factors[1] * factors[2]
        for d in range(3):
            if kap[d] == 0.0:
                continue
            dfac = list(factors)
            arg = mode.k[d] * math.pi * s[d]
            if d == c:
                dfac[d] = np.cos(arg)
                sign = 1.0
            else:
                dfac[d] = np.sin(arg)
                sign = -1.0
            grad[c, d] = mode.coef[c] * sign * kap[d] * dfac[0] * dfac[1] * dfac[2]
    return values, grad


def velocity_mode_on_face(mode, grid, patch):
    """Mode values on a boundary face, from formulas."""
    spec = grid.spec
    lengths = spec.lengths
    origins = spec.origins
    g1, g2 = patch.meshgrid()
    coords = [None, None, None]
    coords[patch.plane_axes[0]] = g1
    coords[patch.plane_axes[1]] = g2
    coords[patch.axis] = np.full(g1.shape, patch.coord)
    s = [(coords[a] - origins[a]) / lengths[a] for a in range(3)]
    values = np.zeros((3, *g1.shape))
    for c in range(3):
        if mode.coef[c] == 0.0:
            continue
        prod = np.ones(g1.shape)
        for a in range(3):
            arg = mode.k[a] * math.pi * s[a]
            prod = prod * (np.sin(arg) if a == c else np.cos(arg))
        values[c] = mode.coef[c] * prod
    return values


def temperature_mode_fields(mode, grid):
    spec = grid.spec
    lengths = spec.lengths
    origins = spec.origins
    X = grid.meshgrid()
    s = [(X[a] - origins[a]) / lengths[a] for a in range(3)]
    factors = [np.cos(mode.k[a] * math.pi * s[a]) for a in range(3)]
    values = mode.amplitude * factors[0] * factors[1] * factors[2]
    grad = np.zeros((3, *grid.shape))
    for d in range(3):
        kap = mode.k[d] * math.pi / lengths[d]
        if kap == 0.0:
            continue
        dfac = list(factors)
        dfac[d] = np.sin(mode.k[d] * math.pi * s[d])
        grad[d] = -mode.amplitude * kap * dfac[0] * dfac[1] * dfac[2]
    return values, grad


def integrate(grid, arr):
    return grid.cell_volume * float(np.sum(arr))


def sym(grad):
    """D[i, j] = d_i u_j + d_j u_i from grad[c, d] = d_d u_c."""
    nd = grad.ndim
    gt = np.swapaxes(grad, 0, 1)
    return gt + np.swapaxes(gt, 0, 1)


def slow_field_sum(coeffs, fields):
    out = np.zeros_like(fields[0])
    for a, f in zip(coeffs, fields):
        out = out + a * f
    return out


def slow_rhs_velocity(c, dcoef, vmodes, tmodes, grid, nu, gamma,
                      omega_fn, f_values, delta=None, s2_stress_includes_nu=False):
    """Every term of the velocity weak form by direct quadrature.

    Returns a dict of named length-m arrays; 'total' is the assembled
    right-hand side for c'. `delta` is a DeltaEval-like object or None.
    """
    m = len(vmodes)
    vals = [velocity_mode_fields(md, grid) for md in vmodes]
    psis = [v[0] for v in vals]
    gpsis = [v[1] for v in vals]
    w = slow_field_sum(c, psis)
    gw = slow_field_sum(c, gpsis)
    theta = slow_field_sum(dcoef, [temperature_mode_fields(md, grid)[0] for md in tmodes])

    def dot_psi(field3):
        return np.array([integrate(grid, np.sum(field3 * psis[j], axis=0)) for j in range(m)])

    adv = np.einsum("ag,cag->cg", w.reshape(3, -1), gw.reshape(3, 3, -1)).reshape(3, *grid.shape)
    terms = {"conv_www": dot_psi(adv)}

    if delta is not None:
        dvals = delta.values
        dgrad = delta.grad
        wd = np.einsum("ag,cag->cg", w.reshape(3, -1), dgrad.reshape(3, 3, -1)).reshape(3, *grid.shape)
        dw = np.einsum("ag,cag->cg", dvals.reshape(3, -1), gw.reshape(3, 3, -1)).reshape(3, *grid.shape)
        terms["conv_wdelta"] = dot_psi(wd)
        terms["conv_deltaw"] = dot_psi(dw)
    else:
        terms["conv_wdelta"] = np.zeros(m)
        terms["conv_deltaw"] = np.zeros(m)

    dw_sym = sym(gw)
    terms["visc"] = np.array(
        [nu * integrate(grid, np.sum(dw_sym * sym(gpsis[j]), axis=(0, 1))) for j in range(m)]
    )

    fric = np.zeros(m)
    for patch in grid.patches:
        if patch.kind.is_cap:
            continue
        wf = slow_field_sum(c, [velocity_mode_on_face(md, grid, patch) for md in vmodes])
        for tau in (patch.tau1, patch.tau2):
            w_tau = np.einsum("c,cxy->xy", tau, wf)
            for j, md in enumerate(vmodes):
                pj = velocity_mode_on_face(md, grid, patch)
                fric[j] += gamma * patch.weight * np.sum(w_tau * np.einsum("c,cxy->xy", tau, pj))
    terms["fric"] = fric

    B = np.zeros(m)
    Fb = np.zeros(m)
    Fvol = np.zeros(m)
    Fform = np.zeros(m)
    if delta is not None:
        for patch in grid.patches:
            fd = delta.faces[patch.kind]
            dsym = sym(fd.grad)
            for tau in (patch.tau1, patch.tau2):
                stress = np.einsum("i,ijxy,j->xy", patch.normal, dsym, tau)
                if patch.kind.is_cap:
                    coef = nu if s2_stress_includes_nu else 1.0
                    bdata = -coef * stress
                else:
                    bdata = -nu * stress - gamma * np.einsum("c,cxy->xy", tau, fd.values)
                for j, md in enumerate(vmodes):
                    pj = velocity_mode_on_face(md, grid, patch)
                    pj_tau = np.einsum("c,cxy->xy", tau, pj)
                    B[j] += patch.weight * np.sum(bdata * pj_tau)
                    Fb[j] += nu * patch.weight * np.sum(stress * pj_tau)
        dadv = np.einsum(
            "ag,cag->cg", delta.values.reshape(3, -1), delta.grad.reshape(3, 3, -1)
        ).reshape(3, *grid.shape)
        Fvol = dot_psi(-delta.dt_values - dadv)
        dsym_vol = sym(delta.grad)
        Fform = np.array(
            [
                -(nu / 2.0) * integrate(grid, np.sum(dsym_vol * sym(gpsis[j]), axis=(0, 1)))
                for j in range(m)
            ]
        )
    terms["B"] = B
    terms["F_bdry"] = Fb
    terms["F_vol"] = Fvol
    terms["F_form"] = Fform

    terms["f_omega"] = dot_psi(omega_fn(theta) * f_values)
    terms["total"] = (
        -terms["conv_www"] - terms["conv_wdelta"] - terms["conv_deltaw"]
        - terms["visc"] - terms["fric"]
        + terms["B"] + terms["f_omega"]
        + terms["F_vol"] + terms["F_form"] + terms["F_bdry"]
    )
    return terms


def slow_rhs_temperature(c, dcoef, vmodes, tmodes, grid, kappa_heat, delta=None):
    mt = len(tmodes)
    tvals = [temperature_mode_fields(md, grid) for md in tmodes]
    phis = [t[0] for t in tvals]
    gphis = [t[1] for t in tvals]
    theta_grad = slow_field_sum(dcoef, gphis)
    w = slow_field_sum(c, [velocity_mode_fields(md, grid)[0] for md in vmodes])
    carrier = w if delta is None else w + delta.values
    adv = np.einsum("ag,ag->g", carrier.reshape(3, -1), theta_grad.reshape(3, -1)).reshape(grid.shape)

    terms = {}
    terms["diff"] = np.array(
        [
            kappa_heat * integrate(grid, np.sum(theta_grad * gphis[j], axis=0))
            for j in range(mt)
        ]
    )
    terms["adv"] = np.array([integrate(grid, adv * phis[j]) for j in range(mt)])
    terms["total"] = -terms["diff"] - terms["adv"]
    return terms

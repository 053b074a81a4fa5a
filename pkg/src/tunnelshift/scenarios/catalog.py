"""Named scenarios: parameters, presets and the tables each one produces."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import analysis, barrier, larmor, pointer, spin_model
from ..envelopes import GaussianProfile
from ..numerics import Grid1D, NumericsError, SampledEnvelope
from .config import ConfigError, Param, check_params


@dataclass(frozen=True)
class Column:
    name: str
    unit: str
    producer: str


@dataclass
class Table:
    """One CSV: named columns of equal length plus free-form metadata."""

    name: str
    columns: list
    data: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.columns) != len(self.data):
            raise ValueError("one data array per column")
        n = {len(np.asarray(d)) for d in self.data}
        if len(n) > 1:
            raise ValueError(f"table {self.name}: columns differ in length {sorted(n)}")


@dataclass
class Context:
    seed: int = 0


@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    summary: str
    physics: dict
    numerics: dict
    run: Callable
    presets: dict = field(default_factory=lambda: {"desk": {}})

    def resolve(self, preset: str, physics: dict, numerics: dict):
        """Fill defaults (preset overrides first), then check every constraint."""
        over = self.presets[preset]
        defaulted = []
        phys, num = {}, {}
        for table, given, out, sec in ((self.physics, physics, phys, "physics"), (self.numerics, numerics, num, "numerics")):
            for key, p in table.items():
                if key in given:
                    out[key] = given[key]
                else:
                    out[key] = over.get(key, p.default)
                    defaulted.append(f"{sec}.{key}")
            check_params(self.id, table, out, sec)
        return phys, num, tuple(defaulted)


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _count(v):
    return v >= 16


def _all_pos(v):
    return all(x > 0 for x in v)


POS = dict(check=_pos, rule="> 0")
NONNEG = dict(check=_nonneg, rule=">= 0")
COUNT = dict(check=_count, rule=">= 16")

SPIN = "spin_model.transmit_comb (weighted sum of delayed copies)"
FREE_SPIN = "spin_model.gaussian_pulse (free envelope)"
SHIFTED = "envelopes.GaussianProfile (free envelope at complex shift)"
PROPAGATE = "barrier.propagate (momentum quadrature of T(p) times the incident amplitude)"


def _env_table(name, env: SampledEnvelope, meta=None, x_name="x", x_unit="length", producer=PROPAGATE, extra=None):
    """Position, real/imag/modulus and log10 modulus of an envelope (scale applied in log10 column)."""
    vals = env.values
    mod = np.abs(vals)
    with np.errstate(divide="ignore"):
        log10 = np.log10(mod) + float(env.scale.log_mag) / math.log(10.0)
    cols = [Column(x_name, x_unit, "grid")]
    data = [env.x]
    # the scale is applied when it fits a double, otherwise only the log column is absolute
    if abs(float(env.scale.log_mag)) < 700:
        full = env.full()
        cols += [Column("re", "amplitude", producer), Column("im", "amplitude", producer), Column("abs", "amplitude", producer)]
        data += [full.real, full.imag, np.abs(full)]
    cols.append(Column("log10_abs", "log10 amplitude", producer))
    data.append(log10)
    for col, arr in extra or ():
        cols.append(col)
        data.append(arr)
    return Table(name, cols, data, dict(meta or {}))


def _peak_norm(v):
    m = np.abs(v)
    top = m.max()
    return m / top if top > 0 else m


def _comb_grid(sigma: float, shift: float, span: float, points: int) -> Grid1D:
    lo = min(0.0, shift) - 6.0 * sigma - span
    hi = max(0.0, shift) + 6.0 * sigma
    return Grid1D.from_range(lo, hi, points)


# --------------------------------------------------------------------------
# spin model scenarios
# --------------------------------------------------------------------------

def run_fig3(cfg, ctx):
    K = cfg.physics["K"]
    tables = []
    for tag, a in zip("abcdefghij", cfg.physics["alphas"]):
        comb = spin_model.solve_eta(K, a)
        eta = comb.eta
        mods = np.asarray(comb.weights.log_mag, dtype=float) / math.log(10.0)
        prod = "spin_model.solve_eta (Lagrange weights reproducing the moments)"
        tables.append(
            Table(
                f"fig3{tag}_eta",
                [Column("m", "1", "index"), Column("eta_re", "1", prod), Column("eta_im", "1", prod), Column("log10_abs_eta", "1", prod)],
                [np.arange(K + 1), eta.real, eta.imag, mods],
                {"K": K, "alpha_over_dx": a, "log10_sum_abs_eta": comb.log_abs_sum() / math.log(10.0)},
            )
        )
    return tables


def _fig4_case(name, K, alpha_tilde, sigma_tilde, dx, points):
    Kdx = K * dx
    alpha = complex(alpha_tilde) * Kdx
    sigma = sigma_tilde * Kdx
    comb = spin_model.solve_eta(K, alpha / dx, dx)
    grid = _comb_grid(sigma, alpha.real, Kdx, points)
    g0 = spin_model.gaussian_pulse(sigma, grid)
    out = spin_model.transmit_comb(g0, comb)
    ref = GaussianProfile(sigma, alpha)(grid.points)
    dist = analysis.shape_distance(out, SampledEnvelope(grid, ref))
    log_sqrt_p = float(out.scale.log_mag)  # -log sum|eta| = log sqrt(P_best)
    raw = out.values
    with np.errstate(divide="ignore"):
        log10_post = np.log10(np.abs(raw)) + log_sqrt_p / math.log(10.0)
    lp10 = spin_model.log10_best_success_probability(comb)
    env = Table(
        name,
        [
            Column("x", "dx", "grid"),
            Column("x_over_Kdx", "1", "grid"),
            Column("free_abs", "amplitude", FREE_SPIN),
            Column("transmitted_raw_re", "amplitude", SPIN),
            Column("transmitted_raw_im", "amplitude", SPIN),
            Column("transmitted_raw_abs", "amplitude", SPIN),
            Column("log10_transmitted_times_sqrtP", "log10 amplitude", SPIN + " times sqrt(P_best)"),
            Column("log10_transmitted_times_P", "log10 amplitude", SPIN + " times P_best"),
            Column("transmitted_peaknorm", "1", SPIN),
            Column("shifted_free_peaknorm", "1", SHIFTED),
        ],
        [
            grid.points,
            grid.points / Kdx,
            np.abs(g0.values),
            raw.real,
            raw.imag,
            np.abs(raw),
            log10_post,
            log10_post + 0.5 * lp10,
            _peak_norm(raw),
            _peak_norm(ref),
        ],
        {"K": K, "alpha_tilde": complex(alpha_tilde), "sigma_tilde": sigma_tilde, "dx": dx,
         "log10_P_best": lp10, "shape_distance": dist},
    )
    return env, comb, alpha


def _band_table(name, comb, alpha, half_width, points, rel_tol):
    p = np.linspace(-half_width, half_width, points)
    T = spin_model.spin_transmission(comb, p)
    dev = np.abs(T * np.exp(1j * alpha * p) - 1.0)
    band = analysis.band_detect(lambda q: spin_model.spin_transmission(comb, q), alpha, rel_tol, 0.0, half_width, points)
    prod = "spin_model.spin_transmission (comb transmission amplitude)"
    with np.errstate(divide="ignore"):
        lt = np.log10(np.abs(T))
    return Table(
        name,
        [Column("p", "1/dx", "grid"), Column("T_re", "1", prod), Column("T_im", "1", prod),
         Column("log10_abs_T", "1", prod), Column("shift_deviation", "1", "analysis.band_detect (|T exp(i p alpha) - 1|)")],
        [p, T.real, T.imag, lt, dev],
        {"band_lo": band.lo, "band_hi": band.hi, "band_rel_tol": rel_tol, "alpha": alpha},
    )


def run_fig4(cfg, ctx):
    ph, nu = cfg.physics, cfg.numerics
    K, dx = ph["K"], nu["dx"]
    real_env, comb, alpha = _fig4_case("fig4a_envelope", K, ph["alpha_tilde"], ph["sigma_tilde"], dx, nu["points"])
    cplx_env, _, _ = _fig4_case("fig4b_envelope", K, ph["complex_alpha_tilde"], ph["sigma_tilde"], dx, nu["points"])
    edge = K / (math.e * abs(alpha))
    band = _band_table("fig4c_band", comb, alpha, 4.0 * edge, nu["band_points"], nu["band_tol"])
    band.meta["superoscillation_edge_K_over_e_alpha"] = edge
    return [real_env, cplx_env, band]


def run_fig5(cfg, ctx):
    ph, nu = cfg.physics, cfg.numerics
    K = ph["K"]
    a = np.linspace(ph["alpha_min"], ph["alpha_max"], nu["points"])
    prod = "spin_model.log10_best_success_probability (best post-selection probability)"
    lp = np.array([spin_model.log10_best_success_probability(spin_model.solve_eta(K, complex(x, ph["alpha_im"]) * K)) for x in a])
    m = np.arange(K + 1)
    lp_delay = np.array([spin_model.log10_best_success_probability(spin_model.solve_eta(K, -float(j))) for j in m])
    return [
        Table("fig5_sweep", [Column("alpha_tilde", "1", "grid"), Column("log10_P_best", "1", prod)], [a, lp],
              {"K": K, "alpha_im": ph["alpha_im"]}),
        Table("fig5_delay_points", [Column("alpha_tilde", "1", "grid (alpha = -m dx)"), Column("log10_P_best", "1", prod)],
              [-m / K, lp_delay], {"K": K}),
    ]


def run_fig6(cfg, ctx):
    ph, nu = cfg.physics, cfg.numerics
    dx = 1.0
    alpha, sigma = ph["alpha_over_dx"], ph["sigma_over_dx"]
    comb = spin_model.solve_eta(ph["K"], alpha)
    grid = _comb_grid(sigma, alpha, ph["K"] * dx, nu["points"])
    g0 = spin_model.gaussian_pulse(sigma, grid)
    out = spin_model.transmit_comb(g0, comb)
    ref = GaussianProfile(sigma, alpha)(grid.points)
    dist = analysis.shape_distance(out, SampledEnvelope(grid, ref))
    env = Table(
        "fig6_envelope",
        [Column("x", "dx", "grid"), Column("free_abs", "amplitude", FREE_SPIN),
         Column("transmitted_raw_abs", "amplitude", SPIN), Column("transmitted_peaknorm", "1", SPIN),
         Column("shifted_free_peaknorm", "1", SHIFTED)],
        [grid.points, np.abs(g0.values), np.abs(out.values), _peak_norm(out.values), _peak_norm(ref)],
        {"K": ph["K"], "alpha_over_dx": alpha, "sigma_over_dx": sigma, "shape_distance": dist,
         "eta": ", ".join("%.15g" % e.real for e in comb.eta)},
    )
    band = _band_table("fig6_band", comb, alpha, nu["band_half_width"], nu["band_points"], nu["band_tol"])
    band.meta["two_over_sigma"] = 2.0 / sigma
    return [env, band]


def _humps_out(comb, humps, points, span):
    sig = max(w for _, w in humps)
    lo = min(c for c, _ in humps) - 6.0 * sig - span
    hi = max(c for c, _ in humps) + 6.0 * sig + max(comb.alpha.real, 0.0)
    grid = Grid1D.from_range(lo, hi, points)
    g0 = spin_model.multi_hump(humps, grid)
    return grid, g0, spin_model.transmit_comb(g0, comb)


def run_fig10(cfg, ctx):
    ph, nu = cfg.physics, cfg.numerics
    K, dx = ph["K"], 1.0
    alpha = ph["alpha_tilde"] * K * dx
    comb = spin_model.solve_eta(K, alpha)
    humps = ph["humps"]
    grid, g0, out = _humps_out(comb, humps, nu["points"], K * dx)
    _, s0, s_out = _humps_out(comb, humps[:1], nu["points"], K * dx)
    # per-hump peaks, each searched between the midpoints of its neighbours
    centres = sorted(c for c, _ in humps)
    mids = [grid.start] + [0.5 * (a + b) for a, b in zip(centres, centres[1:])] + [grid.stop]
    meta = {"K": K, "alpha_tilde": ph["alpha_tilde"], "humps": " | ".join("%.15g, %.15g" % h for h in humps)}
    locs = []
    for i, c in enumerate(centres):
        region = (mids[i] + alpha, mids[i + 1] + alpha) if i + 1 < len(centres) else (mids[i] + alpha, grid.stop)
        loc = analysis.peak(out, region=region).location
        locs.append(loc)
        meta[f"hump{i}_advancement"] = loc - c
    meta["single_hump_advancement"] = analysis.peak(s_out).location - humps[0][0]
    if len(centres) > 1:
        meta["spacing_ratio"] = (locs[-1] - locs[0]) / (centres[-1] - centres[0])
    return [
        Table("fig10_two_hump",
              [Column("x", "dx", "grid"), Column("free_abs", "amplitude", "spin_model.multi_hump (sum of Gaussians)"),
               Column("transmitted_raw_abs", "amplitude", SPIN), Column("transmitted_peaknorm", "1", SPIN)],
              [grid.points, np.abs(g0.values), np.abs(out.values), _peak_norm(out.values)], meta),
        Table("fig10_single_hump",
              [Column("x", "dx", "grid"), Column("free_abs", "amplitude", FREE_SPIN),
               Column("transmitted_raw_abs", "amplitude", SPIN)],
              [s0.x, np.abs(s0.values), np.abs(s_out.values)], {"K": K, "alpha_tilde": ph["alpha_tilde"]}),
    ]


def run_chop(cfg, ctx):
    ph, nu = cfg.physics, cfg.numerics
    K, dx = ph["K"], 1.0
    Kdx = K * dx
    alpha = ph["alpha_tilde"] * Kdx
    sigma = ph["sigma_tilde"] * Kdx
    comb = spin_model.solve_eta(K, alpha)
    grid = _comb_grid(sigma, alpha, Kdx, nu["points"])
    full = spin_model.gaussian_pulse(sigma, grid)
    out_full = spin_model.transmit_comb(full, comb)
    tables = []
    pk = np.abs(out_full.values).max()
    for keep, name in (("front", "chop_rear_chopped"), ("rear", "chop_front_chopped")):
        g = spin_model.chop_pulse(full, ph["cut_at"], keep, ph["smoothing"])
        out = spin_model.transmit_comb(g, comb)
        edge = g.profile.front_edge
        x = grid.points
        meta = {"keep": keep, "cut_at": ph["cut_at"], "smoothing": ph["smoothing"], "free_front_edge": edge}
        if keep == "front":
            region = x >= ph["cut_at"] + 0.5 * ph["smoothing"]
            meta["advanced_region_start"] = ph["cut_at"] + 0.5 * ph["smoothing"]
            meta["max_diff_vs_full_peaknorm"] = float(np.abs(out.values[region] - out_full.values[region]).max() / pk)
        else:
            beyond = x > edge
            top = np.abs(out.values).max()
            meta["max_beyond_front_over_peak"] = float(np.abs(out.values[beyond]).max() / top) if beyond.any() else 0.0
        tables.append(Table(
            name,
            [Column("x", "dx", "grid"), Column("free_abs", "amplitude", "spin_model.chop_pulse (windowed Gaussian)"),
             Column("transmitted_raw_re", "amplitude", SPIN), Column("transmitted_raw_im", "amplitude", SPIN),
             Column("transmitted_raw_abs", "amplitude", SPIN)],
            [x, np.abs(g.values), out.values.real, out.values.imag, np.abs(out.values)], meta))
    tables.insert(0, Table(
        "chop_full",
        [Column("x", "dx", "grid"), Column("free_abs", "amplitude", FREE_SPIN),
         Column("transmitted_raw_re", "amplitude", SPIN), Column("transmitted_raw_im", "amplitude", SPIN),
         Column("transmitted_raw_abs", "amplitude", SPIN)],
        [grid.points, np.abs(full.values), out_full.values.real, out_full.values.imag, np.abs(out_full.values)],
        {"K": K, "alpha_tilde": ph["alpha_tilde"], "sigma_tilde": ph["sigma_tilde"]}))
    return tables


# --------------------------------------------------------------------------
# barrier scenarios
# --------------------------------------------------------------------------

def run_fig7(cfg, ctx):
    ph, nu = cfg.physics, cfg.numerics
    b = barrier.BarrierSpec(ph["W"], ph["d"], ph["mu"])
    p0 = ph["p0"]
    if not p0 < b.threshold:
        raise ConfigError(f"field 'physics.p0' = {p0} violates constraint p0 < sqrt(2 mu W) = {b.threshold:.6g} (tunnelling)")
    prof = barrier.dad(b, p0, tol=nu["tol"], tail_tol=nu["tail_tol"], max_points=nu["max_points"])
    x = prof.grid.points
    sel = np.nonzero((x >= nu["emit_min"]) & (x <= nu["emit_max"]))[0]
    stride = max(1, int(math.ceil(sel.size / nu["emit_points"])))
    sel = sel[::stride]
    prod = "barrier.dad (delay amplitude distribution, smooth part)"
    prod_xi = "barrier.dad (inverse transform of T(p) - 1)"
    m1_fd = barrier.barrier_moment(b, p0, 1)
    m2_fd = barrier.barrier_moment(b, p0, 2)
    meta = {
        "W": b.W, "d": b.d, "mu": b.mu, "p0": p0,
        "grid_points": prof.grid.count, "grid_step": prof.grid.step,
        "delta_weight": complex(prof.delta_weight),
        "norm": complex(prof.moment(0)),
        "moment1_dad": complex(prof.moment(1)), "moment1_finite_difference": complex(m1_fd),
        "moment2_dad": complex(prof.moment(2)), "moment2_finite_difference": complex(m2_fd),
        "causality_ratio": prof.causality_ratio(),
        "imag_xi_ratio": prof.imag_xi_ratio(),
        "emit_stride": stride,
    }
    return [Table(
        "fig7_dad",
        [Column("x", "length", "grid"), Column("xi_re", "1/length", prod_xi), Column("xi_im", "1/length", prod_xi),
         Column("eta_smooth_re", "1/length", prod), Column("eta_smooth_im", "1/length", prod)],
        [x[sel], prof.xi[sel].real, prof.xi[sel].imag, prof.smooth_part[sel].real, prof.smooth_part[sel].imag],
        meta,
    )]


def _barrier_pair(prefix, b, pk, t, points, rtol, extra_meta=None):
    grid = barrier._default_x_grid(b, pk, t, points)
    free = barrier.propagate(b, pk, t, "free", grid, rtol)
    tr = barrier.propagate(b, pk, t, "transmitted", grid, rtol)
    T0 = barrier.rect_transmission(b, pk.p0)
    log_t0 = float(T0.log_mag)
    with np.errstate(divide="ignore"):
        over = np.log10(np.abs(tr.values)) + (float(tr.scale.log_mag) - log_t0) / math.log(10.0)
    meta = {"W": b.W, "d": b.d, "mu": b.mu, "p0": pk.p0, "sigma": pk.sigma, "x0": pk.x0, "t": t,
            "log10_abs_T_p0": log_t0 / math.log(10.0)}
    meta.update(extra_meta or {})
    ftab = _env_table(f"{prefix}_free", free, meta)
    ttab = _env_table(f"{prefix}_transmitted", tr, meta,
                      extra=[(Column("log10_abs_over_abs_T_p0", "log10 amplitude", PROPAGATE + " divided by |T(p0)|"), over)])
    return free, tr, ftab, ttab


def run_fig8(cfg, ctx):
    ph, nu = cfg.physics, cfg.numerics
    mu = ph["mu"]
    out = []
    for tag, name in (("above", "fig8_above"), ("tunnel", "fig8_tunnel")):
        b = barrier.BarrierSpec(ph[f"W_{tag}"], ph[f"d_{tag}"], mu)
        pk = barrier.PacketSpec(ph[f"p0_{tag}"], ph[f"sigma_{tag}"], ph[f"x0_{tag}"])
        t = ph[f"t_{tag}"]
        free, tr, ftab, ttab = _barrier_pair(name, b, pk, t, nu["points"], nu["rtol"])
        lead = analysis.advancement(tr, free)
        meta = {"advancement": lead}
        if pk.p0 > b.threshold:
            k0 = math.sqrt(pk.p0**2 - 2.0 * mu * b.W)
            meta["time_delay"] = -lead * mu / pk.p0
            meta["predicted_time_delay"] = mu * b.d * (1.0 / k0 - 1.0 / pk.p0)
        else:
            alpha = barrier.complex_shift(b, pk.p0)
            meta["predicted_advancement"] = barrier.predicted_advancement(alpha, pk.sigma, t, mu)
            meta["peak_ratio_to_T_p0_free"] = math.exp(
                analysis.peak(tr).log_height - analysis.peak(free).log_height - float(barrier.rect_transmission(b, pk.p0).log_mag)
            )
        ttab.meta.update(meta)
        out += [ftab, ttab]
    return out


def run_fig9(cfg, ctx):
    ph, nu = cfg.physics, cfg.numerics
    p0, mu = ph["p0"], ph["mu"]
    d = ph["p0d"] / p0
    W = p0 * p0 / (2.0 * mu * ph["energy_ratio"])
    sigma = barrier.hartman_packet_width(d, ph["eps"], ph["sigma_over_d"])
    b = barrier.BarrierSpec(W, d, mu)
    pk = barrier.PacketSpec(p0, sigma, ph["x0_over_sigma"] * sigma)
    t = ph["p0t_over_d"] * d / p0
    alpha = barrier.complex_shift(b, p0)
    pred = barrier.predicted_advancement(alpha, sigma, t, mu)
    free, tr, ftab, ttab = _barrier_pair("fig9_envelope", b, pk, t, nu["points"], nu["rtol"])
    lead = analysis.advancement(tr, free)
    q = np.linspace(-nu["ratio_span"], nu["ratio_span"], nu["ratio_points"]) / sigma
    r = barrier.approx_ratio(b, p0, p0 + q)
    dev = np.abs(r - 1.0)
    meta = {"d": d, "W": W, "sigma": sigma, "t": t, "advancement": lead, "predicted_advancement": pred,
            "relative_error": abs(lead - pred) / abs(pred), "max_ratio_deviation": float(dev.max())}
    ttab.meta.update(meta)
    x_over_d = (free.x, free.x / d)
    for tab in (ftab, ttab):
        tab.columns.insert(1, Column("x_over_d", "1", "grid"))
        tab.data.insert(1, x_over_d[1])
        tab.columns.append(Column("peaknorm", "1", PROPAGATE))
    ftab.data.append(_peak_norm(free.values))
    ttab.data.append(_peak_norm(tr.values))
    prod = "barrier.approx_ratio (linearised over exact transmission)"
    ratio = Table(
        "fig9_ratio",
        [Column("q_sigma", "1", "grid"), Column("ratio_re", "1", prod), Column("ratio_im", "1", prod),
         Column("deviation", "1", prod)],
        [q * sigma, r.real, r.imag, dev],
        {"p0d": ph["p0d"], "max_ratio_deviation": float(dev.max())},
    )
    return [ftab, ttab, ratio]


def run_larmor(cfg, ctx):
    ph, nu = cfg.physics, cfg.numerics
    b = barrier.BarrierSpec(ph["W"], ph["d"], ph["mu"])
    tau_grid = Grid1D(nu["tau_start"], nu["tau_step"], nu["tau_points"])
    phi = larmor.traversal_amplitude(b, ph["p0"], ph["V_window"], tau_grid, ph["taper_fraction"])
    back = phi.back_transform()
    live = phi.v_samples != 0
    rt = float(np.abs(back[live] - phi.v_samples[live]).max())
    dtau, dv = larmor.uncertainty_diagnostics(phi)
    mod = np.abs(phi.values)
    meta = {"W": b.W, "d": b.d, "mu": b.mu, "p0": ph["p0"], "V_window": ph["V_window"],
            "sum_rule_error": abs(phi.integral() - phi.reference), "roundtrip_error": rt,
            "peak_tau": float(phi.tau[int(np.argmax(mod))]), "delta_tau": dtau, "delta_V": dv,
            "uncertainty_product": dtau * dv}
    meta.update({k: v for k, v in phi.metadata.items()})
    if ph["p0"] > b.threshold:
        meta["classical_duration"] = larmor.classical_duration(b, ph["p0"])
    prod = "larmor.traversal_amplitude (Fourier transform of T over barrier height)"
    prod_v = "barrier transmission at height W + V times the raised-cosine window"
    return [
        Table("larmor_phi",
              [Column("tau", "time", "grid"), Column("phi_re", "1/time", prod), Column("phi_im", "1/time", prod),
               Column("phi_abs", "1/time", prod)],
              [phi.tau, phi.values.real, phi.values.imag, mod], meta),
        Table("larmor_window",
              [Column("V", "energy", "grid"), Column("T_windowed_re", "1", prod_v), Column("T_windowed_im", "1", prod_v)],
              [phi.v_grid.points[live], phi.v_samples[live].real, phi.v_samples[live].imag], {}),
    ]


def run_pointer(cfg, ctx):
    ph, nu = cfg.physics, cfg.numerics
    A = Grid1D.from_range(ph["a_min"], 0.0, nu["a_points"])
    sel = pointer.SelectionPair.from_eta(A, pointer.gaussian_lobes(A.points, ph["lobes"]))
    wv = pointer.weak_value(sel, ph["sigma_sharp"])
    sig = np.asarray(ph["sigmas"], dtype=float)
    stats = []
    for s in sig:
        psi = pointer.pointer_amplitude(sel, pointer.gaussian_pointer(s, pointer.pointer_grid(sel, s, nu["points_per_sigma"])))
        stats.append(pointer.pointer_statistics(psi))
    means = np.array([s.mean for s in stats])
    var = np.array([s.variance for s in stats])
    prod = "pointer.pointer_statistics (moments of the post-selected pointer)"
    meta = {"weak_value": wv.value, "anomalous": wv.anomalous, "sharp_at_sigma_sharp": wv.sharp,
            "sigma_sharp": ph["sigma_sharp"]}
    if sig.size >= 2 and np.all(means != wv.value.real):
        meta["weak_limit_exponent"] = pointer.weak_limit_exponent(sig, means, wv.value.real)
    sweep = Table("pointer_sweep",
                  [Column("sigma", "length", "input"), Column("mean", "length", prod), Column("variance", "length^2", prod)],
                  [sig, means, var], meta)
    s = ph["sigma_sharp"]
    grid = pointer.pointer_grid(sel, s, nu["points_per_sigma"])
    psi = pointer.pointer_amplitude(sel, pointer.gaussian_pointer(s, grid))
    dens = np.abs(psi.values) ** 2
    dens = dens / (np.sum(dens) * grid.step)
    sharp = Table("pointer_sharp",
                  [Column("x", "length", "grid"), Column("density", "1/length", "pointer.pointer_amplitude (normalised |Psi|^2)")],
                  [grid.points, dens], {"sigma": s, "mean": pointer.pointer_statistics(psi).mean})
    rng = np.random.default_rng(ctx.seed)
    draws = pointer.sample_readings(psi, nu["samples"], rng)
    edges = np.linspace(grid.start, grid.stop, nu["bins"] + 1)
    hist, _ = np.histogram(draws, edges)
    samples = Table("pointer_samples",
                    [Column("bin_center", "length", "grid"), Column("count", "1", "pointer.sample_readings (seeded draws)")],
                    [0.5 * (edges[1:] + edges[:-1]), hist],
                    {"seed": ctx.seed, "samples": nu["samples"], "sample_mean": float(draws.mean())})
    return [sweep, sharp, samples]


def run_custom(cfg, ctx):
    ph, nu = cfg.physics, cfg.numerics
    b = barrier.BarrierSpec(ph["W"], ph["d"], ph["mu"])
    pk = barrier.PacketSpec(ph["p0"], ph["sigma"], ph["x0"])
    t = ph["t"]
    grid = barrier._default_x_grid(b, pk, t, nu["points"])
    free = barrier.propagate(b, pk, t, "free", grid, nu["rtol"])
    tr = barrier.propagate(b, pk, t, "transmitted", grid, nu["rtol"])
    # identical headers, so a barrier of zero height gives byte-identical files
    meta = {"W": b.W, "d": b.d, "mu": b.mu, "p0": pk.p0, "sigma": pk.sigma, "x0": pk.x0, "t": t}
    return [_env_table("custom_free", free, meta), _env_table("custom_transmitted", tr, meta)]


# --------------------------------------------------------------------------
# catalog
# --------------------------------------------------------------------------

def _p(kind, default, check=None, rule="", help=""):
    return Param(kind, default, check, rule, help)


_K = _p("int", 30, lambda v: 1 <= v <= 200, "1 <= K <= 200", "number of spin-1/2 components (comb size)")
_SPIN_NUM = {"points": _p("int", 1001, **COUNT)}

_BARRIER_PHYS = {
    "W": _p("float", 2.0, **NONNEG), "d": _p("float", 5.0, **POS), "mu": _p("float", 1.0, **POS),
    "p0": _p("float", 1.0, **POS),
}


def _fig8_phys():
    out = {"mu": _p("float", 1.0, **POS)}
    for tag, vals in (("above", (10.0, 25.0, 30.0, 5.0, -20.0, 8.0)), ("tunnel", (1.0, 2.0, 5.0, 10.0, -40.0, 60.0))):
        p0, W, d, s, x0, t = vals
        out.update({
            f"p0_{tag}": _p("float", p0, **POS), f"W_{tag}": _p("float", W, **NONNEG), f"d_{tag}": _p("float", d, **POS),
            f"sigma_{tag}": _p("float", s, **POS), f"x0_{tag}": _p("float", x0, lambda v: v < 0, "< 0"),
            f"t_{tag}": _p("float", t, **NONNEG),
        })
    return out


CATALOG: dict = {}


def _register(spec: ScenarioSpec):
    CATALOG[spec.id] = spec


_register(ScenarioSpec(
    "fig3", "Comb weights eta_m for several shifts", {
        "K": _K,
        "alphas": _p("floats", (-15.0, -15.5, 120.0), rule="", help="shifts alpha/dx, one table each (at most 10)"),
    }, {}, run_fig3))
_register(ScenarioSpec(
    "fig4", "Comb output against the shifted free pulse; transmission band", {
        "K": _K,
        "sigma_tilde": _p("float", 2.0, **POS, help="pulse width over K dx"),
        "alpha_tilde": _p("complex", 4 + 0j, help="shift over K dx, first case"),
        "complex_alpha_tilde": _p("complex", 3.5 + 2j, help="shift over K dx, second case"),
    }, {
        "dx": _p("float", 1.0, **POS), "points": _p("int", 1001, **COUNT),
        "band_points": _p("int", 2001, **COUNT), "band_tol": _p("float", 0.1, **POS),
    }, run_fig4))
_register(ScenarioSpec(
    "fig5", "Best post-selection probability against the shift", {
        "K": _K,
        "alpha_min": _p("float", 0.0), "alpha_max": _p("float", 8.0),
        "alpha_im": _p("float", 0.0),
    }, {"points": _p("int", 400, lambda v: v >= 2, ">= 2")}, run_fig5))
_register(ScenarioSpec(
    "fig6", "Single-moment comb: no clean advancement", {
        "K": _p("int", 1, lambda v: 1 <= v <= 200, "1 <= K <= 200"),
        "alpha_over_dx": _p("float", 4.0), "sigma_over_dx": _p("float", 2.0, **POS),
    }, {
        "points": _p("int", 801, **COUNT), "band_points": _p("int", 2001, **COUNT),
        "band_half_width": _p("float", 3.0, **POS), "band_tol": _p("float", 0.1, **POS),
    }, run_fig6))
_register(ScenarioSpec(
    "fig7", "Delay amplitude distribution of a tunnelling barrier", dict(_BARRIER_PHYS), {
        "tol": _p("float", 1e-7, **POS), "tail_tol": _p("float", 1e-8, **POS),
        "max_points": _p("int", 1 << 22, **COUNT),
        "emit_min": _p("float", -40.0), "emit_max": _p("float", 5.0),
        "emit_points": _p("int", 4001, **COUNT),
    }, run_fig7))
_register(ScenarioSpec(
    "fig8", "Free and transmitted packets above and below the barrier", _fig8_phys(), {
        "points": _p("int", 1024, **COUNT), "rtol": _p("float", 1e-10, **POS),
    }, run_fig8))
_register(ScenarioSpec(
    "fig9", "Broad-barrier advancement and linearised transmission", {
        "p0": _p("float", 1.0, **POS), "mu": _p("float", 1.0, **POS),
        "p0d": _p("float", 1e3, **POS, help="p0 times barrier width"),
        "energy_ratio": _p("float", 0.25, lambda v: 0 < v < 1, "0 < p0^2/(2 mu W) < 1 (tunnelling)"),
        "eps": _p("float", 1.0, lambda v: 0 < v <= 1, "0 < eps <= 1 (sharp-measurement width scaling)"),
        "sigma_over_d": _p("float", 0.15, **POS, help="c in sigma = c d^((1+eps)/2)"),
        "x0_over_sigma": _p("float", -3.0, lambda v: v <= -3, "<= -3 (packet starts clear of the barrier)"),
        "p0t_over_d": _p("float", 1.5, **POS),
    }, {
        "points": _p("int", 1024, **COUNT), "rtol": _p("float", 1e-10, **POS),
        "ratio_points": _p("int", 2001, **COUNT), "ratio_span": _p("float", 4.0, **POS, help="in units of 1/sigma"),
    }, run_fig9, presets={"desk": {"p0d": 1e3}, "paper": {"p0d": 1e5}}))
_register(ScenarioSpec(
    "fig10", "Two-hump pulse through the comb", {
        "K": _K, "alpha_tilde": _p("float", 4.0),
        "humps": _p("humps", ((-150.0, 60.0), (150.0, 60.0)),
                    lambda v: all(w > 0 for _, w in v), "hump widths > 0", "center, width pairs in dx separated by '|'"),
    }, {"points": _p("int", 1151, **COUNT)}, run_fig10))
_register(ScenarioSpec(
    "chop", "Front- and rear-chopped pulses through the comb", {
        "K": _K, "alpha_tilde": _p("float", 4.0), "sigma_tilde": _p("float", 2.0, **POS),
        "cut_at": _p("float", 0.0), "smoothing": _p("float", 10.0, **NONNEG),
    }, {"points": _p("int", 1001, **COUNT)}, run_chop))
_register(ScenarioSpec(
    "larmor", "Traversal-time amplitude from barrier-height perturbations", {
        "W": _p("float", 25.0, **NONNEG), "d": _p("float", 30.0, **POS), "mu": _p("float", 1.0, **POS),
        "p0": _p("float", 10.0, **POS), "V_window": _p("float", 5.0, **POS),
        "taper_fraction": _p("float", 0.25, lambda v: 0 <= v < 1, "0 <= taper_fraction < 1"),
    }, {
        "tau_start": _p("float", -40.96), "tau_step": _p("float", 0.02, **POS),
        "tau_points": _p("int", 4096, **COUNT),
    }, run_larmor))
_register(ScenarioSpec(
    "pointer", "Pre- and post-selected pointer: weak and strong limits", {
        "lobes": _p("lobes", ((-2.0, 0.4, 13.0), (-8.0, 0.4, -7.0)),
                    lambda v: all(w > 0 for _, w, _ in v), "lobe widths > 0", "center, width, weight triples separated by '|'"),
        "a_min": _p("float", -10.0, lambda v: v < 0, "< 0"),
        "sigmas": _p("floats", (20.0, 30.0, 50.0, 80.0, 120.0), _all_pos, "all > 0"),
        "sigma_sharp": _p("float", 4.0, **POS),
    }, {
        "a_points": _p("int", 2001, **COUNT), "points_per_sigma": _p("float", 8.0, **POS),
        "samples": _p("int", 10000, lambda v: v >= 1, ">= 1"), "bins": _p("int", 200, lambda v: v >= 1, ">= 1"),
    }, run_pointer))
_register(ScenarioSpec(
    "custom", "Free and transmitted packet for any barrier and packet", {
        **_BARRIER_PHYS,
        "sigma": _p("float", 10.0, **POS), "x0": _p("float", -40.0, lambda v: v < 0, "< 0"),
        "t": _p("float", 60.0, **NONNEG),
    }, {"points": _p("int", 1024, **COUNT), "rtol": _p("float", 1e-10, **POS)}, run_custom))

SCENARIO_IDS = tuple(CATALOG)


def get(sid: str) -> ScenarioSpec:
    try:
        return CATALOG[sid]
    except KeyError:
        raise ConfigError(f"unknown scenario id '{sid}' (known: {', '.join(SCENARIO_IDS)})") from None


__all__ = ["CATALOG", "SCENARIO_IDS", "Column", "Context", "ScenarioSpec", "Table", "get", "NumericsError"]

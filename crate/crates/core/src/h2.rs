//! Per-node output variance `V_N` of the closed loop.
//!
//! `V_N = ‖S‖²_H2 / N`, where `S` maps the noise `w` to the centred output.
//! Three independent routes are provided:
//!
//! * closed-form modal sums `V_N = (1/2N) Σ_{n≥2} s_n` ([`vn_p`],
//!   [`vn_dapi`], [`vn_fdpd`]),
//! * a per-mode Lyapunov solve on the 2×2 / 3×3 modal subsystems
//!   ([`vn_modal_oracle`]),
//! * a Lyapunov solve on the full closed loop after deflating the
//!   unobservable network-average subspace ([`vn_full_oracle`]).
//!
//! Mode 1 (`lambda_1 = 0`) is the network average, which the output cannot
//! see, and is excluded everywhere.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::closed_loop::{
    eigenvalues, hurwitz_eigenvalues, is_stable_mode, modal_subsystem, ClosedLoopSystem,
    DapiGains, FdpdGains, Gains, PGains,
};
use crate::error::{Error, Result};
use crate::graph::LaplacianSpectrum;
use crate::lyapunov::{solve_lyapunov_kronecker, solve_lyapunov_schur};
use crate::math::compensated_sum;

/// Largest network the full-system oracle accepts by default.
pub const DEFAULT_ORACLE_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    ModalLyapunov,
    FullLyapunov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeContribution {
    /// 1-based mode index.
    pub mode: usize,
    pub lambda: f64,
    pub s_n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub v_n: f64,
    /// Empty for [`Method::FullLyapunov`].
    pub per_mode: Vec<ModeContribution>,
    pub bound: Option<f64>,
    pub method: Method,
    pub stable: bool,
}

/// `s_n = 1 / ((f0 + f λ)(g0 + g λ))`, or `None` when the mode is marginal.
pub fn p_mode_term(gains: &PGains, lambda: f64) -> Option<f64> {
    let denom = (gains.f0 + gains.f * lambda) * (gains.g0 + gains.g * lambda);
    (denom > 0.0 && denom.is_finite()).then(|| 1.0 / denom)
}

/// DAPI modal term
///
/// ```text
/// 1/s_n = f λ (g λ + g0) + K_I f (g0 + λ(c + g)) / (f + c g0 + c λ (c + g))
/// ```
///
/// This is the observability-Gramian value of the DAPI modal subsystem. See
/// [`dapi_mode_term_variant`] for the frequently quoted variant that drops
/// the `c g g0 λ²` contribution.
pub fn dapi_mode_term(gains: &DapiGains, lambda: f64) -> Option<f64> {
    let DapiGains { f, g, g0, ki, c } = *gains;
    let filter = f + c * g0 + c * lambda * (c + g);
    if filter <= 0.0 {
        return None;
    }
    let inv = f * lambda * (g * lambda + g0) + ki * f * (g0 + lambda * (c + g)) / filter;
    (inv > 0.0 && inv.is_finite()).then(|| 1.0 / inv)
}

/// The DAPI modal term in the widely circulated form
///
/// ```text
/// 1/s_n = f g λ² + [K_I f (g0 + λ(c+g)) + g0 f λ (c² λ + f + c g0)] / (f + c g0 + c λ (c+g))
/// ```
///
/// It coincides with [`dapi_mode_term`] when `c = 0` or `g = 0` and
/// otherwise overestimates `s_n`; it does not match the Lyapunov solution.
/// Kept for comparison only.
pub fn dapi_mode_term_variant(gains: &DapiGains, lambda: f64) -> Option<f64> {
    let DapiGains { f, g, g0, ki, c } = *gains;
    let filter = f + c * g0 + c * lambda * (c + g);
    if filter <= 0.0 {
        return None;
    }
    let inv = f * g * lambda * lambda
        + (ki * f * (g0 + lambda * (c + g)) + g0 * f * lambda * (c * c * lambda + f + c * g0)) / filter;
    (inv > 0.0 && inv.is_finite()).then(|| 1.0 / inv)
}

/// F-DPD modal term
///
/// ```text
/// 1/s_n = (f0 + f λ)(g λ + K_D (τ g λ + 1) / (τ² (f0 + f λ) + τ g λ + 1))
/// ```
pub fn fdpd_mode_term(gains: &FdpdGains, lambda: f64) -> Option<f64> {
    let FdpdGains { f, g, f0, kd, tau } = *gains;
    let stiffness = f0 + f * lambda;
    let filter = tau * tau * stiffness + tau * g * lambda + 1.0;
    if filter <= 0.0 {
        return None;
    }
    let inv = stiffness * (g * lambda + kd * (tau * g * lambda + 1.0) / filter);
    (inv > 0.0 && inv.is_finite()).then(|| 1.0 / inv)
}

fn sum_modes(
    spectrum: &LaplacianSpectrum,
    method: Method,
    bound: Option<f64>,
    mut term: impl FnMut(usize, f64) -> Result<(f64, bool)>,
) -> Result<VarianceReport> {
    let n = spectrum.node_count();
    let mut per_mode = Vec::with_capacity(n.saturating_sub(1));
    let mut stable = true;
    for (mode, lambda) in spectrum.modes() {
        let (s_n, mode_stable) = term(mode, lambda)?;
        stable &= mode_stable;
        per_mode.push(ModeContribution { mode, lambda, s_n });
    }
    let v_n = compensated_sum(per_mode.iter().map(|m| m.s_n)) / (2.0 * n as f64);
    Ok(VarianceReport { v_n, per_mode, bound, method, stable })
}

fn closed_form(
    spectrum: &LaplacianSpectrum,
    gains: Gains,
    term: impl Fn(f64) -> Option<f64>,
) -> Result<VarianceReport> {
    let check_modes = !matches!(gains, Gains::P(_));
    sum_modes(spectrum, Method::ClosedForm, gains.uniform_bound(), |mode, lambda| {
        let s_n = term(lambda).ok_or(Error::UnboundedVariance { mode })?;
        let stable = !check_modes || is_stable_mode(&modal_subsystem(&gains, lambda, mode)?);
        Ok((s_n, stable))
    })
}

/// `V_N = (1/2N) Σ_{n≥2} 1 / ((f0 + f λ_n)(g0 + g λ_n))`.
pub fn vn_p(spectrum: &LaplacianSpectrum, gains: &PGains) -> Result<VarianceReport> {
    gains.validate()?;
    closed_form(spectrum, Gains::P(*gains), |lambda| p_mode_term(gains, lambda))
}

/// DAPI variance with the uniform bound `(f + c g0) / (2 K_I f g0)`.
pub fn vn_dapi(spectrum: &LaplacianSpectrum, gains: &DapiGains) -> Result<VarianceReport> {
    gains.validate()?;
    closed_form(spectrum, Gains::Dapi(*gains), |lambda| dapi_mode_term(gains, lambda))
}

/// F-DPD variance with the uniform bound `(τ² f0 + 1) / (2 f0 K_D)`.
/// `tau = 0` is evaluated as P control with `g0 = K_D`.
pub fn vn_fdpd(spectrum: &LaplacianSpectrum, gains: &FdpdGains) -> Result<VarianceReport> {
    gains.validate()?;
    if gains.tau == 0.0 {
        let mut report = vn_p(spectrum, &gains.ideal_pd())?;
        report.bound = Gains::Fdpd(*gains).uniform_bound();
        return Ok(report);
    }
    closed_form(spectrum, Gains::Fdpd(*gains), |lambda| fdpd_mode_term(gains, lambda))
}

pub fn vn_closed_form(spectrum: &LaplacianSpectrum, gains: &Gains) -> Result<VarianceReport> {
    match gains {
        Gains::P(g) => vn_p(spectrum, g),
        Gains::Dapi(g) => vn_dapi(spectrum, g),
        Gains::Fdpd(g) => vn_fdpd(spectrum, g),
    }
}

/// `V_N = (1/N) Σ_{n≥2} B̂ᵀ P_n B̂` with `Â_nᵀ P_n + P_n Â_n = -Ĉᵀ Ĉ`.
/// Per-mode contributions are reported as `s_n = 2 B̂ᵀ P_n B̂` so that they
/// are comparable with the closed forms.
pub fn vn_modal_oracle(spectrum: &LaplacianSpectrum, gains: &Gains) -> Result<VarianceReport> {
    gains.validate()?;
    let bound = gains.uniform_bound();
    let effective = match gains {
        Gains::Fdpd(g) if g.tau == 0.0 => Gains::P(g.ideal_pd()),
        other => *other,
    };
    sum_modes(spectrum, Method::ModalLyapunov, bound, |mode, lambda| {
        let sub = modal_subsystem(&effective, lambda, mode)?;
        if !is_stable_mode(&sub) {
            return Err(Error::Unstable { mode: Some(mode) });
        }
        let q = sub.c.transpose() * &sub.c;
        let p = solve_lyapunov_kronecker(&sub.a, &q)?;
        let norm_sq = (sub.b.transpose() * &p * &sub.b)[(0, 0)];
        Ok((2.0 * norm_sq, true))
    })
}

/// Orthonormal basis of the complement of `1` in `R^n` (Helmert columns).
pub(crate) fn centred_basis(n: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(n, n - 1);
    for k in 1..n {
        let scale = 1.0 / libm::sqrt((k * (k + 1)) as f64);
        for i in 0..k {
            h[(i, k - 1)] = scale;
        }
        h[(k, k - 1)] = -(k as f64) * scale;
    }
    h
}

/// The closed loop split into its network-average part and the rest.
#[derive(Debug, Clone)]
pub struct Deflated {
    /// Dynamics on the complement of the average subspace.
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// Dynamics of the per-block averages (`order × order`).
    pub average_a: DMatrix<f64>,
}

/// Projects the closed loop onto the complement of the per-block average
/// directions `e_k ⊗ 1/√N`. Those directions span an invariant subspace
/// that holds every marginal mode and is invisible to the centred output;
/// both facts are verified numerically.
pub fn deflate_average(sys: &ClosedLoopSystem) -> Result<Deflated> {
    let n = sys.node_count;
    let order = sys.kind.order();
    if n < 2 {
        return Err(Error::InvalidSize { what: "network", got: n, min: 2 });
    }
    let h = centred_basis(n);
    let mut w = DMatrix::zeros(order * n, order * (n - 1));
    let mut w_avg = DMatrix::zeros(order * n, order);
    let inv_sqrt_n = 1.0 / libm::sqrt(n as f64);
    for k in 0..order {
        w.view_mut((k * n, k * (n - 1)), (n, n - 1)).copy_from(&h);
        w_avg.view_mut((k * n, k), (n, 1)).fill(inv_sqrt_n);
    }

    let scale = sys.a.norm().max(1.0);
    let aw = &sys.a * &w;
    let a = w.transpose() * &aw;
    if (&aw - &w * &a).norm() > 1e-9 * scale {
        return Err(Error::Numerical("average subspace is not invariant"));
    }
    if (&sys.c * &w_avg).norm() > 1e-12 * sys.c.norm().max(1.0) {
        return Err(Error::ObservableMarginalMode);
    }
    Ok(Deflated {
        b: w.transpose() * &sys.b,
        c: &sys.c * &w,
        average_a: w_avg.transpose() * &sys.a * &w_avg,
        a,
    })
}

pub fn vn_full_oracle(sys: &ClosedLoopSystem) -> Result<VarianceReport> {
    vn_full_oracle_with_limit(sys, DEFAULT_ORACLE_LIMIT)
}

/// Full-state Lyapunov computation on the deflated closed loop:
/// `V = tr(B_rᵀ P B_r)` with `A_rᵀ P + P A_r = -C_rᵀ C_r`, `V_N = V / N`.
pub fn vn_full_oracle_with_limit(sys: &ClosedLoopSystem, limit: usize) -> Result<VarianceReport> {
    let n = sys.node_count;
    if n > limit {
        return Err(Error::TooLarge { n, limit });
    }
    let reduced = deflate_average(sys)?;
    if !hurwitz_eigenvalues(&eigenvalues(&reduced.a)?) {
        return Err(Error::Unstable { mode: None });
    }
    let q = reduced.c.transpose() * &reduced.c;
    let p = solve_lyapunov_schur(&reduced.a, &q)?;
    let v = (reduced.b.transpose() * p * &reduced.b).trace();
    Ok(VarianceReport {
        v_n: v / n as f64,
        per_mode: Vec::new(),
        bound: None,
        method: Method::FullLyapunov,
        stable: true,
    })
}

//! Tuning of the DAPI averaging gain `c` and sensitivity of F-DPD to the
//! filter constant `tau`.

use alloc::vec::Vec;

use crate::closed_loop::{DapiGains, FdpdGains};
use crate::error::{Error, Result};
use crate::graph::LaplacianSpectrum;
use crate::h2::vn_dapi;
use crate::math::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CStarVerdict {
    /// Some `c* > 0` beats `c = 0`.
    PositiveOptimum,
    /// `V_N` is increasing in `c > 0`, so `c* = 0`.
    ZeroOptimum,
    /// The per-mode condition is mixed; only a numeric search decides.
    Indeterminate,
}

impl CStarVerdict {
    pub fn name(self) -> &'static str {
        match self {
            CStarVerdict::PositiveOptimum => "positive",
            CStarVerdict::ZeroOptimum => "zero",
            CStarVerdict::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CStarClassification {
    pub verdict: CStarVerdict,
    /// `f > (g λ_n + g0)² / λ_n` for `n = 2..=N`.
    pub witness: Vec<bool>,
}

/// Classifies the optimal averaging gain from the sign of `∂s_n/∂c` at
/// `c = 0` for every mode. `gains.c` is ignored.
pub fn classify_c_star(spectrum: &LaplacianSpectrum, gains: &DapiGains) -> CStarClassification {
    let witness: Vec<bool> = spectrum
        .modes()
        .map(|(_, lambda)| {
            let r = gains.g * lambda + gains.g0;
            lambda > 0.0 && gains.f > r * r / lambda
        })
        .collect();
    let verdict = if witness.iter().all(|&w| w) {
        CStarVerdict::PositiveOptimum
    } else if witness.iter().all(|&w| !w) {
        CStarVerdict::ZeroOptimum
    } else {
        CStarVerdict::Indeterminate
    };
    CStarClassification { verdict, witness }
}

/// The commonly quoted complete-graph optimum
/// `max(0, sqrt(f/(N l)) - g + g0/(N l))`.
///
/// The `g0` term has the wrong sign: the minimizer of `V_N^DAPI` is
/// [`c_star_complete_exact`], and the two differ by `2 g0 / (N l)`
/// whenever both are positive.
pub fn c_star_complete(n: usize, l: f64, f: f64, g: f64, g0: f64) -> f64 {
    let nl = n as f64 * l;
    (libm::sqrt(f / nl) - g + g0 / nl).max(0.0)
}

/// Minimizer of `V_N^DAPI` over `c ≥ 0` on the complete graph:
/// `max(0, sqrt(f/(N l)) - g - g0/(N l))`, the positive root of
/// `c² + 2 (g + g0/λ) c + (g + g0/λ)² - f/λ` at `λ = N l`.
pub fn c_star_complete_exact(n: usize, l: f64, f: f64, g: f64, g0: f64) -> f64 {
    let nl = n as f64 * l;
    (libm::sqrt(f / nl) - g - g0 / nl).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSearchConfig {
    pub bracket_hi: f64,
    pub abs_tolerance: f64,
    pub max_iterations: usize,
    /// Points of the bracketing scan, including `c = 0`.
    pub grid_points: usize,
}

impl ScalarSearchConfig {
    /// `bracket_hi = 10 (sqrt(f/λ₂) + g + g0/λ₂)`.
    pub fn for_dapi(spectrum: &LaplacianSpectrum, gains: &DapiGains) -> Self {
        let l2 = spectrum.algebraic_connectivity().max(spectrum.zero_tolerance());
        Self {
            bracket_hi: 10.0 * (libm::sqrt(gains.f / l2) + gains.g + gains.g0 / l2),
            abs_tolerance: 1e-7,
            max_iterations: 200,
            grid_points: 64,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.bracket_hi.is_finite() && self.bracket_hi > 0.0) {
            return Err(Error::InvalidParameter { name: "bracket_hi", reason: "must be positive" });
        }
        if !(self.abs_tolerance.is_finite() && self.abs_tolerance > 0.0) {
            return Err(Error::InvalidParameter { name: "abs_tolerance", reason: "must be positive" });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter { name: "max_iterations", reason: "must be positive" });
        }
        if self.grid_points < 3 {
            return Err(Error::InvalidParameter { name: "grid_points", reason: "need at least 3" });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CStarSearch {
    pub c_star: f64,
    pub v_star: f64,
    /// The bracketing scan `(c, V_N)`; unbounded points are `+inf`.
    pub grid: Vec<(f64, f64)>,
}

/// `0` followed by `points - 1` log-spaced values in `[hi * 1e-6, hi]`.
pub fn scan_grid(hi: f64, points: usize) -> Vec<f64> {
    let lo = hi * 1e-6;
    let steps = (points - 2) as f64;
    core::iter::once(0.0)
        .chain((0..points - 1).map(|k| lo * libm::pow(hi / lo, k as f64 / steps)))
        .collect()
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
/// Returns the midpoint of the final bracket, whose width is at most
/// `2 * abs_tolerance`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut func: F,
    mut lo: f64,
    mut hi: f64,
    abs_tolerance: f64,
    max_iterations: usize,
) -> Result<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = func(x1);
    let mut f2 = func(x2);
    let mut iterations = 0;
    while hi - lo > 2.0 * abs_tolerance {
        if iterations == max_iterations {
            return Err(Error::NoConvergence { iterations });
        }
        iterations += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = func(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = func(x2);
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimizes `V_N^DAPI` over `c ∈ [0, bracket_hi]`: a scan seeds the
/// bracket around the best grid point, then golden-section search refines
/// it. `gains.c` is ignored.
pub fn c_star_numeric(
    spectrum: &LaplacianSpectrum,
    gains: &DapiGains,
    cfg: &ScalarSearchConfig,
) -> Result<CStarSearch> {
    cfg.validate()?;
    gains.with_c(0.0).validate()?;
    let objective = |c: f64| match vn_dapi(spectrum, &gains.with_c(c)) {
        Ok(r) if r.v_n.is_finite() => r.v_n,
        _ => f64::INFINITY,
    };

    let cs = scan_grid(cfg.bracket_hi, cfg.grid_points);
    let grid: Vec<(f64, f64)> = cs.iter().map(|&c| (c, objective(c))).collect();
    let (best, &(c_grid, v_grid)) = grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("grid is non-empty");
    if !v_grid.is_finite() {
        return Err(Error::Search { bracket_hi: cfg.bracket_hi });
    }

    let lo = if best == 0 { 0.0 } else { cs[best - 1] };
    let hi = cs[(best + 1).min(cs.len() - 1)];
    let c_refined = golden_section(objective, lo, hi, cfg.abs_tolerance, cfg.max_iterations)?;
    let v_refined = objective(c_refined);
    let (c_star, v_star) = if v_refined <= v_grid { (c_refined, v_refined) } else { (c_grid, v_grid) };
    Ok(CStarSearch { c_star, v_star, grid })
}

fn fdpd_sensitivity_denominator(gains: &FdpdGains, lambda: f64) -> f64 {
    let FdpdGains { f, g, f0, kd, tau } = *gains;
    let gl = g * lambda;
    gl * gl * tau + f * g * lambda * lambda * tau * tau + f0 * gl * tau * tau + kd * gl * tau + gl + kd
}

/// `dV_N^F-DPD / dτ = (1/2N) Σ_{n≥2} K_D τ (g λ τ + 2) / Q_n²`, with
/// `Q_n = g²λ²τ + f g λ² τ² + f0 g λ τ² + K_D g λ τ + g λ + K_D`.
///
/// Zero at `tau = 0` and positive for `tau > 0`.
pub fn fdpd_dv_dtau(spectrum: &LaplacianSpectrum, gains: &FdpdGains) -> f64 {
    let FdpdGains { g, kd, tau, .. } = *gains;
    let n = spectrum.node_count() as f64;
    compensated_sum(spectrum.modes().map(|(_, lambda)| {
        let q = fdpd_sensitivity_denominator(gains, lambda);
        kd * tau * (g * lambda * tau + 2.0) / (q * q)
    })) / (2.0 * n)
}

/// The commonly quoted variant with per-mode numerator
/// `K_D g λ² τ² + 2 K_D λ τ` over `2 Q_n²`. Each term equals `λ_n / 2`
/// times the corresponding term of [`fdpd_dv_dtau`], so it has the right
/// sign but not the right magnitude. Kept for comparison only.
pub fn fdpd_dv_dtau_variant(spectrum: &LaplacianSpectrum, gains: &FdpdGains) -> f64 {
    let FdpdGains { g, kd, tau, .. } = *gains;
    let n = spectrum.node_count() as f64;
    compensated_sum(spectrum.modes().map(|(_, lambda)| {
        let q = fdpd_sensitivity_denominator(gains, lambda);
        (kd * g * lambda * lambda * tau * tau + 2.0 * kd * lambda * tau) / (2.0 * q * q)
    })) / (2.0 * n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::graph::WeightedGraph;
    use crate::h2::vn_fdpd;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn classification_examples() {
        let s = LaplacianSpectrum::complete(4, 1.0).unwrap();
        let gains = DapiGains::new(4.0, 0.0, 1.0, 1.0, 0.1).unwrap();
        let c = classify_c_star(&s, &gains);
        assert_eq!(c.verdict, CStarVerdict::PositiveOptimum);
        assert_eq!(c.witness, vec![true; 3]);

        let s = LaplacianSpectrum::ring(4, 1.0).unwrap();
        let gains = DapiGains::new(0.1, 1.0, 1.0, 1.0, 0.1).unwrap();
        assert_eq!(classify_c_star(&s, &gains).verdict, CStarVerdict::ZeroOptimum);

        // λ = 2: (0 + 1)²/2 = 0.5 < 1; λ = 4: (4 + 1)²/4 > 1.
        let gains = DapiGains::new(1.0, 1.0, 1.0, 1.0, 0.1).unwrap();
        let c = classify_c_star(&LaplacianSpectrum::ring(4, 1.0).unwrap(), &gains.with_c(0.0));
        assert_eq!(c.verdict, CStarVerdict::ZeroOptimum);
        let s = LaplacianSpectrum::new(vec![0.0, 0.5, 4.0], 1e-9).unwrap();
        // λ = 0.5: 2²/0.5 = 8 > 3; λ = 4: 2²/4 = 1 < 3.
        let gains = DapiGains::new(3.0, 0.0, 2.0, 1.0, 0.1).unwrap();
        let c = classify_c_star(&s, &gains);
        assert_eq!(c.witness, vec![false, true]);
        assert_eq!(c.verdict, CStarVerdict::Indeterminate);
    }

    #[test]
    fn complete_graph_closed_form() {
        assert_abs_diff_eq!(c_star_complete(4, 1.0, 4.0, 0.0, 1.0), 1.25, epsilon = 1e-15);
        assert_eq!(c_star_complete(4, 1.0, 1.0, 2.0, 1.0), 0.0);
        assert_abs_diff_eq!(c_star_complete(100, 1.0, 1.0, 0.0, 0.01), 0.1001, epsilon = 1e-15);
        assert_abs_diff_eq!(c_star_complete_exact(4, 1.0, 4.0, 0.0, 1.0), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(c_star_complete_exact(100, 1.0, 1.0, 0.0, 0.01), 0.0999, epsilon = 1e-15);
        assert_eq!(c_star_complete_exact(4, 1.0, 1.0, 0.0, 3.0), 0.0);
    }

    #[test]
    fn golden_section_quadratic() {
        let x = golden_section(|x| (x - 0.2) * (x - 0.2), -1.0, 1.0, 1e-9, 200).unwrap();
        assert_abs_diff_eq!(x, 0.2, epsilon = 1e-9);
        assert_eq!(
            golden_section(|x| x * x, -1.0, 1.0, 1e-12, 5),
            Err(Error::NoConvergence { iterations: 5 })
        );
    }

    #[test]
    fn numeric_optimum_complete_four() {
        let s = LaplacianSpectrum::complete(4, 1.0).unwrap();
        let gains = DapiGains::new(4.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        let cfg = ScalarSearchConfig::for_dapi(&s, &gains);
        let r = c_star_numeric(&s, &gains, &cfg).unwrap();
        // Independent scipy minimization of the Lyapunov-based mode term gives 0.75.
        assert!((r.c_star - 0.75).abs() <= 10.0 * cfg.abs_tolerance, "{}", r.c_star);
        assert_eq!(r.grid.len(), 64);
        assert_relative_eq!(r.v_star, vn_dapi(&s, &gains.with_c(0.75)).unwrap().v_n, max_relative = 1e-9);
        assert!(r.v_star < vn_dapi(&s, &gains.with_c(1.25)).unwrap().v_n);
    }

    #[test]
    fn numeric_optimum_zero_case() {
        let s = LaplacianSpectrum::ring(4, 1.0).unwrap();
        let gains = DapiGains::new(0.1, 1.0, 1.0, 1.0, 0.3).unwrap();
        assert_eq!(classify_c_star(&s, &gains).verdict, CStarVerdict::ZeroOptimum);
        let cfg = ScalarSearchConfig::for_dapi(&s, &gains);
        let r = c_star_numeric(&s, &gains, &cfg).unwrap();
        assert!(r.c_star <= cfg.abs_tolerance);
    }

    /// Regression fixture for the path of 10 nodes, pinned against a dense
    /// scan at resolution 1e-4.
    #[test]
    fn numeric_optimum_path_ten_matches_dense_scan() {
        let s = WeightedGraph::path(10, 1.0).unwrap().spectrum().unwrap();
        let gains = DapiGains::new(1.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        let cfg = ScalarSearchConfig::for_dapi(&s, &gains);
        let r = c_star_numeric(&s, &gains, &cfg).unwrap();

        let (mut c_scan, mut v_scan) = (0.0, f64::INFINITY);
        for k in 0..=50_000 {
            let c = k as f64 * 1e-4;
            let v = vn_dapi(&s, &gains.with_c(c)).unwrap().v_n;
            if v < v_scan {
                (c_scan, v_scan) = (c, v);
            }
        }
        assert!(r.c_star >= 0.0);
        assert!((r.c_star - c_scan).abs() <= 1e-4, "{} vs {}", r.c_star, c_scan);
        assert!(r.v_star <= v_scan + 1e-12);
        // Frozen from an independent numpy scan of the modal sum.
        assert!(r.c_star <= 1e-4);
        assert_relative_eq!(r.v_star, 0.193_606_799_704_360_7, max_relative = 1e-9);
    }

    #[test]
    fn search_config_errors() {
        let s = LaplacianSpectrum::complete(4, 1.0).unwrap();
        let gains = DapiGains::new(4.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        let mut cfg = ScalarSearchConfig::for_dapi(&s, &gains);
        cfg.abs_tolerance = 0.0;
        assert!(c_star_numeric(&s, &gains, &cfg).is_err());
        cfg.abs_tolerance = 1e-12;
        cfg.max_iterations = 3;
        assert!(matches!(c_star_numeric(&s, &gains, &cfg), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn dv_dtau_zero_at_ideal_pd() {
        let s = LaplacianSpectrum::ring(6, 1.0).unwrap();
        for g in [0.0, 0.5, 2.0] {
            let gains = FdpdGains::new(1.0, g, 1.0, 1.0, 0.0).unwrap();
            assert_eq!(fdpd_dv_dtau(&s, &gains), 0.0);
            assert_eq!(fdpd_dv_dtau_variant(&s, &gains), 0.0);
        }
    }

    fn central_difference(s: &LaplacianSpectrum, gains: &FdpdGains) -> f64 {
        let h = 1e-5 * gains.tau.max(1.0);
        let v = |tau: f64| vn_fdpd(s, &gains.with_tau(tau)).unwrap().v_n;
        (v(gains.tau + h) - v(gains.tau - h)) / (2.0 * h)
    }

    #[test]
    fn dv_dtau_matches_finite_differences() {
        let s = LaplacianSpectrum::ring(4, 1.0).unwrap();
        let gains = FdpdGains::new(1.0, 1.0, 1.0, 1.0, 0.1).unwrap();
        let d = fdpd_dv_dtau(&s, &gains);
        assert!(d > 0.0);
        assert_relative_eq!(d, central_difference(&s, &gains), max_relative = 1e-6);

        // g = 0: s_n = (τ² F + 1)/(F K_D), so each term is 2τ/K_D.
        let gains = FdpdGains::new(1.0, 0.0, 1.0, 2.0, 0.3).unwrap();
        let d = fdpd_dv_dtau(&s, &gains);
        assert_relative_eq!(d, 3.0 * (2.0 * 0.3 / 2.0) / 8.0, max_relative = 1e-14);
        assert_relative_eq!(d, central_difference(&s, &gains), max_relative = 1e-6);
    }

    #[test]
    fn dv_dtau_variant_is_scaled_by_half_lambda() {
        // Ring of 4 has λ = 2, 2, 4: the variant weights the terms by 1, 1, 2.
        let s = LaplacianSpectrum::ring(4, 1.0).unwrap();
        let gains = FdpdGains::new(1.0, 0.0, 1.0, 1.0, 0.1).unwrap();
        let exact_term = 2.0 * 0.1 / 1.0 / 8.0;
        assert_relative_eq!(fdpd_dv_dtau(&s, &gains), 3.0 * exact_term, max_relative = 1e-14);
        assert_relative_eq!(fdpd_dv_dtau_variant(&s, &gains), 4.0 * exact_term, max_relative = 1e-14);
    }
}

//! Size sweeps of `V_N` over standard graph families.

use alloc::vec::Vec;

use crate::closed_loop::Gains;
use crate::error::{Error, Result};
use crate::graph::LaplacianSpectrum;
use crate::h2::vn_closed_form;

/// Fewest finite points accepted by [`fit_exponent`].
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Path,
    Ring,
    /// Periodic lattice; the sweep parameter is the side length and `N = side^dim`.
    Torus { dim: usize },
    Complete,
}

impl Family {
    pub fn name(self) -> alloc::string::String {
        match self {
            Family::Path => "path".into(),
            Family::Ring => "ring".into(),
            Family::Torus { dim } => alloc::format!("torus{dim}"),
            Family::Complete => "complete".into(),
        }
    }

    /// Number of nodes for a sweep parameter.
    pub fn node_count(self, size: usize) -> usize {
        match self {
            Family::Torus { dim } => size.saturating_pow(dim as u32),
            _ => size,
        }
    }

    /// Closed-form spectrum; no eigensolve is involved.
    pub fn spectrum(self, size: usize, weight: f64) -> Result<LaplacianSpectrum> {
        match self {
            Family::Path => LaplacianSpectrum::path(size, weight),
            Family::Ring => LaplacianSpectrum::ring(size, weight),
            Family::Torus { dim } => LaplacianSpectrum::torus(size, dim, weight),
            Family::Complete => LaplacianSpectrum::complete(size, weight),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub n: usize,
    /// `None` when the variance is unbounded (a mode with zero damping).
    pub v_n: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult {
    pub family: Family,
    pub gains: Gains,
    pub points: Vec<ScalingPoint>,
    pub fitted_exponent: Option<f64>,
    pub fit_window: (usize, usize),
    pub bound: Option<f64>,
}

impl ScalingResult {
    pub fn in_window(&self, n: usize) -> bool {
        n >= self.fit_window.0 && n <= self.fit_window.1
    }
}

/// Evaluates a single size of a sweep.
pub fn scaling_point(family: Family, gains: &Gains, size: usize, weight: f64) -> Result<ScalingPoint> {
    let spectrum = family.spectrum(size, weight)?;
    let n = spectrum.node_count();
    match vn_closed_form(&spectrum, gains) {
        Ok(report) => Ok(ScalingPoint { n, v_n: Some(report.v_n) }),
        Err(Error::UnboundedVariance { .. }) => Ok(ScalingPoint { n, v_n: None }),
        Err(e) => Err(e),
    }
}

/// Default fit window: the upper half of the points, widened to at least
/// [`MIN_FIT_POINTS`] when the sweep has that many.
pub fn default_window(ns: &[usize]) -> (usize, usize) {
    match (ns.first(), ns.last()) {
        (Some(_), Some(&hi)) => {
            let take = (ns.len() - ns.len() / 2).max(MIN_FIT_POINTS).min(ns.len());
            (ns[ns.len() - take], hi)
        }
        _ => (0, 0),
    }
}

/// Sweeps `sizes` (strictly ascending sweep parameters) and fits the
/// log–log slope over `window` (in node counts).
pub fn run_scaling(
    family: Family,
    gains: &Gains,
    sizes: &[usize],
    weight: f64,
    window: Option<(usize, usize)>,
) -> Result<ScalingResult> {
    gains.validate()?;
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter { name: "sizes", reason: "must be strictly ascending" });
    }
    let points = sizes
        .iter()
        .map(|&s| scaling_point(family, gains, s, weight))
        .collect::<Result<Vec<_>>>()?;
    let ns: Vec<usize> = points.iter().map(|p| p.n).collect();
    let fit_window = window.unwrap_or_else(|| default_window(&ns));
    let fitted_exponent = fit_exponent(&points, fit_window).ok();
    Ok(ScalingResult { family, gains: *gains, points, fitted_exponent, fit_window, bound: gains.uniform_bound() })
}

/// Ordinary least-squares slope of `ln V_N` against `ln N` over the finite,
/// positive points with `N` inside `window`.
pub fn fit_exponent(points: &[ScalingPoint], window: (usize, usize)) -> Result<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.n >= window.0 && p.n <= window.1)
        .filter_map(|p| p.v_n.filter(|v| v.is_finite() && *v > 0.0).map(|v| (libm::log(p.n as f64), libm::log(v))))
        .collect();
    if logs.len() < MIN_FIT_POINTS {
        return Err(Error::Fit { found: logs.len(), required: MIN_FIT_POINTS });
    }
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit { found: 1, required: MIN_FIT_POINTS });
    }
    Ok(sxy / sxx)
}

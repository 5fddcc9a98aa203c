//! Euler–Maruyama simulation of the noise-driven closed loop.
//!
//! Each step applies `s ← s + A s dt + B √dt σ ξ` with `ξ` standard normal
//! per node.
//!
//! Random numbers: node `i` draws from `ChaCha8Rng::seed_from_u64(seed)` on
//! stream `i`; the initial-state perturbation draws from stream `N`. Equal
//! `(system, config)` pairs therefore give bit-identical trajectories.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::closed_loop::{
    assemble, droop_preset, eigenvalues, hurwitz_eigenvalues, power_preset, ClosedLoopSystem, FdpdGains,
    Gains, PGains,
};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::h2::deflate_average;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Zero,
    /// Zero-mean normal perturbation of the velocity (frequency) block.
    RandomFrequencyPerturbation { scale: f64 },
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    /// `None` picks five slowest-mode time constants, capped at `horizon / 2`.
    pub burn_in: Option<f64>,
    pub noise_intensity: f64,
    pub seed: u64,
    pub initial_state: InitialState,
    /// Keep every k-th step.
    pub record_every: usize,
    /// When false only the output `y` is kept.
    pub record_states: bool,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64, seed: u64) -> Self {
        Self {
            dt,
            horizon,
            burn_in: None,
            noise_intensity: 1.0,
            seed,
            initial_state: InitialState::Zero,
            record_every: 1,
            record_states: true,
        }
    }

    fn validate(&self, state_dim: usize) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter { name: "dt", reason: "must be positive" });
        }
        if !(self.horizon.is_finite() && self.horizon > self.dt) {
            return Err(Error::InvalidParameter { name: "horizon", reason: "must exceed dt" });
        }
        if let Some(b) = self.burn_in {
            if !(b.is_finite() && b >= 0.0 && b < self.horizon) {
                return Err(Error::InvalidParameter { name: "burn_in", reason: "must lie in [0, horizon)" });
            }
        }
        if !(self.noise_intensity.is_finite() && self.noise_intensity >= 0.0) {
            return Err(Error::InvalidParameter { name: "noise_intensity", reason: "must be non-negative" });
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter { name: "record_every", reason: "must be positive" });
        }
        match &self.initial_state {
            InitialState::RandomFrequencyPerturbation { scale } if !(scale.is_finite() && *scale >= 0.0) => {
                Err(Error::InvalidParameter { name: "initial_state", reason: "scale must be non-negative" })
            }
            InitialState::Explicit(s) if s.len() != state_dim => {
                Err(Error::InvalidParameter { name: "initial_state", reason: "length must equal the state dimension" })
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimWarning {
    /// `dt * max|Re ξ|` exceeds 0.1.
    CoarseStep { ratio: f64 },
    /// The explicit step amplifies an undamped average mode. The centred
    /// output is unaffected, but recorded states grow.
    GrowingAverage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Row-major `times.len() × state_dim`; empty unless states were recorded.
    pub states: Vec<f64>,
    /// Row-major `times.len() × node_count`.
    pub output: Vec<f64>,
    pub node_count: usize,
    pub state_dim: usize,
    /// Burn-in used by [`Trajectory::empirical_vn`].
    pub burn_in: f64,
    pub warnings: Vec<SimWarning>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn has_states(&self) -> bool {
        !self.states.is_empty()
    }

    pub fn state(&self, row: usize) -> &[f64] {
        &self.states[row * self.state_dim..(row + 1) * self.state_dim]
    }

    pub fn output_row(&self, row: usize) -> &[f64] {
        &self.output[row * self.node_count..(row + 1) * self.node_count]
    }

    pub fn empirical_vn(&self) -> Result<f64> {
        empirical_vn(self, self.burn_in)
    }
}

/// Time average of `‖y(t)‖² / N` over recorded samples with `t > burn_in`.
pub fn empirical_vn(traj: &Trajectory, burn_in: f64) -> Result<f64> {
    let n = traj.node_count as f64;
    let (mut sum, mut count) = (0.0, 0usize);
    for (row, &t) in traj.times.iter().enumerate() {
        if t > burn_in {
            sum += traj.output_row(row).iter().map(|y| y * y).sum::<f64>() / n;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyWindow);
    }
    Ok(sum / count as f64)
}

/// Compressed rows of a dense matrix.
struct SparseRows {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseRows {
    fn new(m: &DMatrix<f64>) -> Self {
        let mut offsets = vec![0];
        let (mut cols, mut values) = (Vec::new(), Vec::new());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 {
                    cols.push(j);
                    values.push(v);
                }
            }
            offsets.push(cols.len());
        }
        Self { offsets, cols, values }
    }

    fn row_dot(&self, row: usize, x: &[f64]) -> f64 {
        (self.offsets[row]..self.offsets[row + 1]).map(|k| self.values[k] * x[self.cols[k]]).sum()
    }
}

struct StepCheck {
    slowest_rate: f64,
    average_a: DMatrix<f64>,
    warnings: Vec<SimWarning>,
}

fn check_step(sys: &ClosedLoopSystem, dt: f64) -> Result<StepCheck> {
    let reduced = deflate_average(sys)?;
    let n = sys.node_count;
    let order = sys.state_dim() / n;
    // A (e_k ⊗ 1) = (A_avg e_k) ⊗ 1 is needed to integrate the averages apart.
    for k in 0..order {
        let column = DMatrix::from_fn(sys.state_dim(), 1, |i, _| if i / n == k { 1.0 } else { 0.0 });
        let image = &sys.a * column;
        let expected = DMatrix::from_fn(sys.state_dim(), 1, |i, _| reduced.average_a[(i / n, k)]);
        if (image - expected).norm() > 1e-9 * sys.a.norm().max(1.0) {
            return Err(Error::Numerical("average subspace is not invariant"));
        }
    }

    let observable: Vec<Complex<f64>> = eigenvalues(&reduced.a)?;
    if !hurwitz_eigenvalues(&observable) {
        return Err(Error::Unstable { mode: None });
    }
    let average = eigenvalues(&reduced.average_a)?;
    let fastest = observable.iter().chain(&average).map(|z| libm::fabs(z.re)).fold(0.0, f64::max);
    let ratio = dt * fastest;
    if ratio > 1.0 {
        return Err(Error::StepSize { dt, ratio });
    }
    let growth = |z: &Complex<f64>| crate::math::cabs(Complex::new(1.0, 0.0) + z * dt);
    // The explicit update must contract every decaying mode.
    if observable.iter().any(|z| growth(z) >= 1.0) {
        return Err(Error::StepSize { dt, ratio });
    }
    let mut warnings = Vec::new();
    if ratio > 0.1 {
        warnings.push(SimWarning::CoarseStep { ratio });
    }
    // Pure integrators (ξ = 0) are left alone: a random walk is not amplified.
    if average.iter().any(|z| growth(z) > 1.0 + 1e-12) {
        warnings.push(SimWarning::GrowingAverage);
    }
    let slowest_rate = observable.iter().map(|z| libm::fabs(z.re)).fold(f64::INFINITY, f64::min);
    Ok(StepCheck { slowest_rate, average_a: reduced.average_a, warnings })
}

/// Removes the per-block means of `s` into `means`.
fn split_means(s: &mut [f64], n: usize, means: &mut [f64]) {
    for (block, mean) in s.chunks_mut(n).zip(means.iter_mut()) {
        *mean = block.iter().sum::<f64>() / n as f64;
        block.iter_mut().for_each(|x| *x -= *mean);
    }
}

/// Integrates the closed loop.
///
/// The state is carried as its centred part plus the per-block averages,
/// each stepped with its own (invariant) dynamics. The averages may drift
/// or oscillate without bound; keeping them apart means the output `y`
/// never suffers cancellation against them.
pub fn simulate_em(sys: &ClosedLoopSystem, cfg: &SimConfig) -> Result<Trajectory> {
    let n = sys.node_count;
    let dim = sys.state_dim();
    let order = dim / n;
    cfg.validate(dim)?;
    let check = check_step(sys, cfg.dt)?;
    let burn_in = cfg.burn_in.unwrap_or_else(|| (5.0 / check.slowest_rate).min(cfg.horizon / 2.0));

    let a = SparseRows::new(&sys.a);
    let b = SparseRows::new(&sys.b);
    let mut node_rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            rng
        })
        .collect();

    let mut centred = match &cfg.initial_state {
        InitialState::Zero => vec![0.0; dim],
        InitialState::Explicit(s) => s.clone(),
        InitialState::RandomFrequencyPerturbation { scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(n as u64);
            let mut s = vec![0.0; dim];
            for v in &mut s[n..2 * n] {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = scale * z;
            }
            s
        }
    };
    let mut average = vec![0.0; order];
    split_means(&mut centred, n, &mut average);

    let steps = libm::round(cfg.horizon / cfg.dt) as usize;
    let rows = steps / cfg.record_every + 1;
    let mut traj = Trajectory {
        times: Vec::with_capacity(rows),
        states: Vec::with_capacity(if cfg.record_states { rows * dim } else { 0 }),
        output: Vec::with_capacity(rows * n),
        node_count: n,
        state_dim: dim,
        burn_in,
        warnings: check.warnings,
    };
    let record = |traj: &mut Trajectory, t: f64, centred: &[f64], average: &[f64]| {
        traj.times.push(t);
        if cfg.record_states {
            traj.states.extend(centred.iter().enumerate().map(|(i, x)| x + average[i / n]));
        }
        traj.output.extend_from_slice(&centred[..n]);
    };
    record(&mut traj, 0.0, &centred, &average);

    let diffusion = libm::sqrt(cfg.dt) * cfg.noise_intensity;
    let mut increment = vec![0.0; dim];
    let mut noise = vec![0.0; n];
    let mut noise_means = vec![0.0; order];
    let mut next_average = vec![0.0; order];
    let mut leak = vec![0.0; order];
    for k in 1..=steps {
        for (i, d) in increment.iter_mut().enumerate() {
            *d = a.row_dot(i, &centred) * cfg.dt;
        }
        noise_means.iter_mut().for_each(|m| *m = 0.0);
        if diffusion != 0.0 {
            for (z, rng) in noise.iter_mut().zip(&mut node_rngs) {
                *z = StandardNormal.sample(rng);
            }
            for (i, d) in increment.iter_mut().enumerate() {
                let kick = diffusion * b.row_dot(i, &noise);
                *d += kick;
                noise_means[i / n] += kick / n as f64;
            }
        }
        for (i, x) in centred.iter_mut().enumerate() {
            *x += increment[i] - noise_means[i / n];
        }
        // Rounding leaks a little mass into the averages; put it back.
        split_means(&mut centred, n, &mut leak);
        for (r, next) in next_average.iter_mut().enumerate() {
            let drift: f64 = (0..order).map(|c| check.average_a[(r, c)] * average[c]).sum();
            *next = average[r] + drift * cfg.dt + noise_means[r] + leak[r];
        }
        core::mem::swap(&mut average, &mut next_average);
        if k % cfg.record_every == 0 {
            record(&mut traj, k as f64 * cfg.dt, &centred, &average);
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fig1Scenario {
    DapiPath10,
    DapiPath100,
    PPath10,
    PPath100,
    FdpdPlatoon100,
    PPlatoon100,
}

/// Grid reference frequency (rad/s) used for the power-network scenarios.
pub const OMEGA_REF: f64 = core::f64::consts::TAU * 60.0;

impl Fig1Scenario {
    pub const ALL: [Fig1Scenario; 6] = [
        Fig1Scenario::DapiPath10,
        Fig1Scenario::DapiPath100,
        Fig1Scenario::PPath10,
        Fig1Scenario::PPath100,
        Fig1Scenario::FdpdPlatoon100,
        Fig1Scenario::PPlatoon100,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Fig1Scenario::DapiPath10 => "dapi_path_10",
            Fig1Scenario::DapiPath100 => "dapi_path_100",
            Fig1Scenario::PPath10 => "p_path_10",
            Fig1Scenario::PPath100 => "p_path_100",
            Fig1Scenario::FdpdPlatoon100 => "fdpd_platoon_100",
            Fig1Scenario::PPlatoon100 => "p_platoon_100",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn node_count(self) -> usize {
        match self {
            Fig1Scenario::DapiPath10 | Fig1Scenario::PPath10 => 10,
            _ => 100,
        }
    }

    /// Swing-equation parameters `m = 20/ω_ref`, `d = 10/ω_ref`, `b = 0.3`
    /// with `K_I = 1`, `c = 0.1` for the power network; all-ones gains with
    /// `τ = 0.1` for the platoon.
    pub fn gains(self) -> Gains {
        let (m, d, b, l) = (20.0 / OMEGA_REF, 10.0 / OMEGA_REF, 0.3, 1.0);
        match self {
            Fig1Scenario::DapiPath10 | Fig1Scenario::DapiPath100 => {
                Gains::Dapi(power_preset(m, d, b, l, 1.0, 0.1).expect("preset parameters are valid"))
            }
            Fig1Scenario::PPath10 | Fig1Scenario::PPath100 => {
                Gains::P(droop_preset(m, d, b, l).expect("preset parameters are valid"))
            }
            Fig1Scenario::FdpdPlatoon100 => Gains::Fdpd(FdpdGains { f: 1.0, g: 1.0, f0: 1.0, kd: 1.0, tau: 0.1 }),
            // No velocity measurement: relative feedback plus absolute position only.
            Fig1Scenario::PPlatoon100 => Gains::P(PGains { f: 1.0, g: 1.0, f0: 1.0, g0: 0.0 }),
        }
    }

    pub fn graph(self) -> WeightedGraph {
        WeightedGraph::path(self.node_count(), 1.0).expect("path size is valid")
    }

    pub fn system(self) -> Result<ClosedLoopSystem> {
        assemble(&self.graph(), &self.gains())
    }

    pub fn config(self, seed: u64) -> SimConfig {
        let power = !matches!(self, Fig1Scenario::FdpdPlatoon100 | Fig1Scenario::PPlatoon100);
        let large = self.node_count() == 100;
        SimConfig {
            dt: 0.01,
            horizon: if large { 5000.0 } else { 1000.0 },
            burn_in: None,
            noise_intensity: 1.0,
            seed,
            initial_state: if power {
                InitialState::RandomFrequencyPerturbation { scale: 0.1 }
            } else {
                InitialState::Zero
            },
            record_every: if large { 50 } else { 10 },
            record_states: true,
        }
    }
}

pub fn reproduce_fig1(scenario: Fig1Scenario, seed: u64) -> Result<Trajectory> {
    simulate_em(&scenario.system()?, &scenario.config(seed))
}

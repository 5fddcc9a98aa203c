//! Closed-loop state-space models for P, DAPI and F-DPD control.
//!
//! State ordering is block-wise: `[x; v]` for P control and `[x; v; z]` for
//! the two dynamic controllers, with `z` the integral (DAPI) or filtered
//! derivative (F-DPD) state. Noise enters the `v` block, and the output is
//! the centred position `y = (I - 11ᵀ/N) x`.

use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerKind {
    P,
    Dapi,
    Fdpd,
}

impl ControllerKind {
    /// States per node.
    pub fn order(self) -> usize {
        match self {
            ControllerKind::P => 2,
            ControllerKind::Dapi | ControllerKind::Fdpd => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::P => "p",
            ControllerKind::Dapi => "dapi",
            ControllerKind::Fdpd => "fdpd",
        }
    }
}

/// Proportional consensus gains: relative position `f`, relative velocity
/// `g`, absolute position `f0`, absolute velocity `g0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PGains {
    pub f: f64,
    pub g: f64,
    pub f0: f64,
    pub g0: f64,
}

impl PGains {
    pub fn new(f: f64, g: f64, f0: f64, g0: f64) -> Result<Self> {
        let gains = Self { f, g, f0, g0 };
        gains.validate()?;
        Ok(gains)
    }

    pub fn validate(&self) -> Result<()> {
        nonneg("f", self.f)?;
        nonneg("g", self.g)?;
        nonneg("f0", self.f0)?;
        nonneg("g0", self.g0)
    }
}

/// Distributed averaging PI gains. `ki` is the integral gain and `c` the
/// gain of the consensus filter on the integral states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DapiGains {
    pub f: f64,
    pub g: f64,
    pub g0: f64,
    pub ki: f64,
    pub c: f64,
}

impl DapiGains {
    pub fn new(f: f64, g: f64, g0: f64, ki: f64, c: f64) -> Result<Self> {
        let gains = Self { f, g, g0, ki, c };
        gains.validate()?;
        Ok(gains)
    }

    pub fn validate(&self) -> Result<()> {
        positive("f", self.f)?;
        nonneg("g", self.g)?;
        positive("g0", self.g0)?;
        positive("ki", self.ki)?;
        nonneg("c", self.c)
    }

    pub fn with_c(self, c: f64) -> Self {
        Self { c, ..self }
    }

    /// The P gains recovered as `c -> 0`: the integral gain takes the place
    /// of absolute position feedback.
    pub fn p_limit(&self) -> PGains {
        PGains { f: self.f, g: self.g, f0: self.ki, g0: self.g0 }
    }
}

/// Filtered distributed PD gains. `kd` is the derivative gain and `tau` the
/// filter time constant; `tau = 0` is ideal PD control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdpdGains {
    pub f: f64,
    pub g: f64,
    pub f0: f64,
    pub kd: f64,
    pub tau: f64,
}

impl FdpdGains {
    pub fn new(f: f64, g: f64, f0: f64, kd: f64, tau: f64) -> Result<Self> {
        let gains = Self { f, g, f0, kd, tau };
        gains.validate()?;
        Ok(gains)
    }

    pub fn validate(&self) -> Result<()> {
        nonneg("f", self.f)?;
        nonneg("g", self.g)?;
        positive("f0", self.f0)?;
        positive("kd", self.kd)?;
        nonneg("tau", self.tau)
    }

    pub fn with_tau(self, tau: f64) -> Self {
        Self { tau, ..self }
    }

    /// Ideal PD control is P control with `g0 = kd`.
    pub fn ideal_pd(&self) -> PGains {
        PGains { f: self.f, g: self.g, f0: self.f0, g0: self.kd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gains {
    P(PGains),
    Dapi(DapiGains),
    Fdpd(FdpdGains),
}

impl Gains {
    pub fn kind(&self) -> ControllerKind {
        match self {
            Gains::P(_) => ControllerKind::P,
            Gains::Dapi(_) => ControllerKind::Dapi,
            Gains::Fdpd(_) => ControllerKind::Fdpd,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Gains::P(g) => g.validate(),
            Gains::Dapi(g) => g.validate(),
            Gains::Fdpd(g) => g.validate(),
        }
    }

    /// Upper bound on `V_N` that holds for every network, when one exists.
    pub fn uniform_bound(&self) -> Option<f64> {
        match self {
            Gains::P(_) => None,
            Gains::Dapi(g) => Some((g.f + g.c * g.g0) / (2.0 * g.ki * g.f * g.g0)),
            Gains::Fdpd(g) => Some((g.tau * g.tau * g.f0 + 1.0) / (2.0 * g.f0 * g.kd)),
        }
    }
}

impl From<PGains> for Gains {
    fn from(g: PGains) -> Self {
        Gains::P(g)
    }
}

impl From<DapiGains> for Gains {
    fn from(g: DapiGains) -> Self {
        Gains::Dapi(g)
    }
}

impl From<FdpdGains> for Gains {
    fn from(g: FdpdGains) -> Self {
        Gains::Fdpd(g)
    }
}

fn nonneg(name: &'static str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::InvalidParameter { name, reason: "must be finite and non-negative" });
    }
    Ok(())
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidParameter { name, reason: "must be finite and positive" });
    }
    Ok(())
}

/// Frequency-control preset for the linearized swing equation
/// `m θ̈ + d θ̇ = -Σ b (θ_i - θ_j)` with DAPI secondary control.
///
/// `l` is the uniform edge weight of the graph the gains will be used with.
pub fn power_preset(m: f64, d: f64, b: f64, l: f64, ki: f64, c: f64) -> Result<DapiGains> {
    positive("m", m)?;
    positive("d", d)?;
    positive("l", l)?;
    DapiGains::new(b / (l * m), 0.0, d / m, ki, c)
}

/// The same swing-equation mapping without integral action (droop control).
pub fn droop_preset(m: f64, d: f64, b: f64, l: f64) -> Result<PGains> {
    positive("m", m)?;
    positive("d", d)?;
    positive("l", l)?;
    positive("b", b)?;
    PGains::new(b / (l * m), 0.0, 0.0, d / m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub kind: ControllerKind,
    pub node_count: usize,
}

impl ClosedLoopSystem {
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
}

fn connected_laplacian(graph: &WeightedGraph) -> Result<DMatrix<f64>> {
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(graph.laplacian())
}

fn io_matrices(n: usize, order: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut b = DMatrix::zeros(order * n, n);
    b.view_mut((n, 0), (n, n)).fill_with_identity();
    let mut c = DMatrix::zeros(n, order * n);
    let centring = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    c.view_mut((0, 0), (n, n)).copy_from(&centring);
    (b, c)
}

pub fn assemble_p(graph: &WeightedGraph, gains: &PGains) -> Result<ClosedLoopSystem> {
    gains.validate()?;
    let l = connected_laplacian(graph)?;
    let n = graph.node_count();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a.view_mut((0, n), (n, n)).copy_from(&eye);
    a.view_mut((n, 0), (n, n)).copy_from(&(-(&l * gains.f) - &eye * gains.f0));
    a.view_mut((n, n), (n, n)).copy_from(&(-(&l * gains.g) - &eye * gains.g0));
    let (b, c) = io_matrices(n, 2);
    Ok(ClosedLoopSystem { a, b, c, kind: ControllerKind::P, node_count: n })
}

pub fn assemble_dapi(graph: &WeightedGraph, gains: &DapiGains) -> Result<ClosedLoopSystem> {
    gains.validate()?;
    let l = connected_laplacian(graph)?;
    let n = graph.node_count();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut a = DMatrix::zeros(3 * n, 3 * n);
    a.view_mut((0, n), (n, n)).copy_from(&eye);
    a.view_mut((n, 0), (n, n)).copy_from(&-(&l * gains.f));
    a.view_mut((n, n), (n, n)).copy_from(&(-(&l * gains.g) - &eye * gains.g0));
    a.view_mut((n, 2 * n), (n, n)).copy_from(&(&eye * gains.ki));
    a.view_mut((2 * n, n), (n, n)).copy_from(&-&eye);
    a.view_mut((2 * n, 2 * n), (n, n)).copy_from(&-(&l * gains.c));
    let (b, c) = io_matrices(n, 3);
    Ok(ClosedLoopSystem { a, b, c, kind: ControllerKind::Dapi, node_count: n })
}

pub fn assemble_fdpd(graph: &WeightedGraph, gains: &FdpdGains) -> Result<ClosedLoopSystem> {
    gains.validate()?;
    if gains.tau == 0.0 {
        return Err(Error::IdealPdRedirect { equivalent: gains.ideal_pd() });
    }
    let l = connected_laplacian(graph)?;
    let n = graph.node_count();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut a = DMatrix::zeros(3 * n, 3 * n);
    a.view_mut((0, n), (n, n)).copy_from(&eye);
    a.view_mut((n, 0), (n, n)).copy_from(&(-(&l * gains.f) - &eye * gains.f0));
    a.view_mut((n, n), (n, n)).copy_from(&-(&l * gains.g));
    a.view_mut((n, 2 * n), (n, n)).copy_from(&eye);
    a.view_mut((2 * n, n), (n, n)).copy_from(&(&eye * (-gains.kd / gains.tau)));
    a.view_mut((2 * n, 2 * n), (n, n)).copy_from(&(&eye * (-1.0 / gains.tau)));
    let (b, c) = io_matrices(n, 3);
    Ok(ClosedLoopSystem { a, b, c, kind: ControllerKind::Fdpd, node_count: n })
}

/// Dispatches on the controller kind. F-DPD with `tau = 0` is assembled as
/// the equivalent P system.
pub fn assemble(graph: &WeightedGraph, gains: &Gains) -> Result<ClosedLoopSystem> {
    match gains {
        Gains::P(g) => assemble_p(graph, g),
        Gains::Dapi(g) => assemble_dapi(graph, g),
        Gains::Fdpd(g) if g.tau == 0.0 => assemble_p(graph, &g.ideal_pd()),
        Gains::Fdpd(g) => assemble_fdpd(graph, g),
    }
}

/// One decoupled subsystem of the closed loop, obtained by diagonalizing
/// the Laplacian. `mode_index` is 1-based; mode 1 is the network average.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalSubsystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
    pub lambda: f64,
    pub mode_index: usize,
    pub kind: ControllerKind,
}

pub fn modal_subsystem(gains: &Gains, lambda: f64, mode_index: usize) -> Result<ModalSubsystem> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParameter { name: "lambda", reason: "must be finite and non-negative" });
    }
    gains.validate()?;
    let (kind, a) = match gains {
        Gains::P(p) => (
            ControllerKind::P,
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -p.f * lambda - p.f0, -p.g * lambda - p.g0]),
        ),
        Gains::Dapi(d) => (
            ControllerKind::Dapi,
            DMatrix::from_row_slice(
                3,
                3,
                &[0.0, 1.0, 0.0, -d.f * lambda, -d.g * lambda - d.g0, d.ki, 0.0, -1.0, -d.c * lambda],
            ),
        ),
        Gains::Fdpd(p) => {
            if p.tau == 0.0 {
                return Err(Error::IdealPdRedirect { equivalent: p.ideal_pd() });
            }
            (
                ControllerKind::Fdpd,
                DMatrix::from_row_slice(
                    3,
                    3,
                    &[
                        0.0,
                        1.0,
                        0.0,
                        -p.f * lambda - p.f0,
                        -p.g * lambda,
                        1.0,
                        0.0,
                        -p.kd / p.tau,
                        -1.0 / p.tau,
                    ],
                ),
            )
        }
    };
    let order = kind.order();
    let mut b = DVector::zeros(order);
    b[1] = 1.0;
    let mut c = RowDVector::zeros(order);
    c[0] = 1.0;
    Ok(ModalSubsystem { a, b, c, lambda, mode_index, kind })
}

/// Coefficients `[a_{k-1}, ..., a_0]` of the monic characteristic polynomial
/// `det(ξI - A)` of a 2×2 or 3×3 matrix.
fn characteristic_coefficients(a: &DMatrix<f64>) -> Vec<f64> {
    match a.nrows() {
        2 => alloc::vec![-a.trace(), a.determinant()],
        3 => {
            let minor = |i: usize, j: usize| a[(i, i)] * a[(j, j)] - a[(i, j)] * a[(j, i)];
            alloc::vec![-a.trace(), minor(0, 1) + minor(0, 2) + minor(1, 2), -a.determinant()]
        }
        _ => unreachable!("modal subsystems are 2x2 or 3x3"),
    }
}

/// Routh–Hurwitz test for monic polynomials of degree 2 or 3.
pub fn routh_hurwitz(coefficients: &[f64]) -> bool {
    match *coefficients {
        [a1, a0] => a1 > 0.0 && a0 > 0.0,
        [a2, a1, a0] => a2 > 0.0 && a1 > 0.0 && a0 > 0.0 && a2 * a1 > a0,
        _ => false,
    }
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let (_, t) = crate::math::complex_schur(a)?;
    Ok(t.diagonal().iter().copied().collect())
}

/// Numerical Hurwitz check: every eigenvalue has real part below
/// `-1e-10 * spectral_radius`.
pub fn is_hurwitz(a: &DMatrix<f64>) -> Result<bool> {
    let eig = eigenvalues(a)?;
    Ok(hurwitz_eigenvalues(&eig))
}

pub(crate) fn hurwitz_eigenvalues(eig: &[Complex<f64>]) -> bool {
    let radius = eig.iter().map(|z| crate::math::cabs(*z)).fold(0.0, f64::max);
    if radius == 0.0 {
        return false;
    }
    let eps = 1e-10 * radius;
    eig.iter().all(|z| z.re < -eps)
}

/// P and F-DPD modes use the Routh–Hurwitz conditions on the characteristic
/// polynomial; DAPI modes use the numerical eigenvalue test.
pub fn is_stable_mode(sub: &ModalSubsystem) -> bool {
    match sub.kind {
        ControllerKind::P | ControllerKind::Fdpd => routh_hurwitz(&characteristic_coefficients(&sub.a)),
        ControllerKind::Dapi => is_hurwitz(&sub.a).unwrap_or(false),
    }
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use coherence_core::simulate::SimWarning;
use coherence_core::{
    assemble, c_star_numeric, classify_c_star, run_scaling, simulate_em, vn_closed_form, vn_full_oracle,
    vn_modal_oracle, ControllerKind, DapiGains, Family, FdpdGains, Fig1Scenario, Gains, InitialState, PGains,
    ScalarSearchConfig, SimConfig,
};

use crate::config::{parse_controller, parse_gains};
use crate::inputs::{load_graph, parse_family, parse_sizes, parse_window};
use crate::output::{write_scaling, write_trajectory, write_tune, write_variance};

#[derive(Debug, Parser)]
#[command(name = "coherence", version, about = "Coherence of double-integrator consensus networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-node variance V_N with per-mode contributions.
    Variance(VarianceArgs),
    /// Optimal DAPI averaging gain c*.
    Tune(TuneArgs),
    /// Euler–Maruyama trajectory of the noise-driven network.
    Simulate(SimulateArgs),
    /// V_N across a family of growing graphs, with a log–log exponent fit.
    Scale(ScaleArgs),
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// path, ring, complete, torus<d>, or an edge-list file.
    #[arg(long)]
    pub graph: String,
    /// Node count (side length for tori).
    #[arg(long)]
    pub n: Option<usize>,
    /// Uniform edge weight for family graphs.
    #[arg(long, default_value_t = 1.0)]
    pub weight: f64,
}

/// Gains come from `--gains-file`, or from `--controller` plus individual
/// flags. Unset flags default to 1, except `c` and `tau` (0.1).
#[derive(Debug, Args)]
pub struct GainArgs {
    #[arg(long, conflicts_with = "controller")]
    pub gains_file: Option<PathBuf>,
    /// p, dapi or fdpd.
    #[arg(long, value_parser = parse_kind)]
    pub controller: Option<ControllerKind>,
    #[arg(long, conflicts_with = "gains_file")]
    pub f: Option<f64>,
    #[arg(long, conflicts_with = "gains_file")]
    pub g: Option<f64>,
    #[arg(long, conflicts_with = "gains_file")]
    pub f0: Option<f64>,
    #[arg(long, conflicts_with = "gains_file")]
    pub g0: Option<f64>,
    #[arg(long, conflicts_with = "gains_file")]
    pub ki: Option<f64>,
    #[arg(long, conflicts_with = "gains_file")]
    pub c: Option<f64>,
    #[arg(long, conflicts_with = "gains_file")]
    pub kd: Option<f64>,
    #[arg(long, conflicts_with = "gains_file")]
    pub tau: Option<f64>,
}

fn parse_kind(s: &str) -> Result<ControllerKind, String> {
    parse_controller(s).ok_or_else(|| format!("unknown controller `{s}` (expected p, dapi or fdpd)"))
}

impl GainArgs {
    pub fn is_set(&self) -> bool {
        self.gains_file.is_some() || self.controller.is_some()
    }

    pub fn has_explicit_gains(&self) -> bool {
        [self.f, self.g, self.f0, self.g0, self.ki, self.c, self.kd, self.tau].iter().any(Option::is_some)
    }

    pub fn resolve(&self) -> Result<Gains> {
        if let Some(path) = &self.gains_file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            return parse_gains(&text).with_context(|| format!("parsing {}", path.display()));
        }
        let kind = self.controller.context("either --gains-file or --controller is required")?;
        let unused: Vec<&str> = [
            ("f0", self.f0, kind != ControllerKind::Dapi),
            ("g0", self.g0, kind != ControllerKind::Fdpd),
            ("ki", self.ki, kind == ControllerKind::Dapi),
            ("c", self.c, kind == ControllerKind::Dapi),
            ("kd", self.kd, kind == ControllerKind::Fdpd),
            ("tau", self.tau, kind == ControllerKind::Fdpd),
        ]
        .into_iter()
        .filter(|(_, v, applies)| v.is_some() && !applies)
        .map(|(name, _, _)| name)
        .collect();
        if !unused.is_empty() {
            bail!("--{} does not apply to {}", unused.join(", --"), kind.name());
        }
        let one = |v: Option<f64>| v.unwrap_or(1.0);
        let tenth = |v: Option<f64>| v.unwrap_or(0.1);
        let gains = match kind {
            ControllerKind::P => Gains::P(PGains::new(one(self.f), one(self.g), one(self.f0), one(self.g0))?),
            ControllerKind::Dapi => Gains::Dapi(DapiGains::new(
                one(self.f),
                one(self.g),
                one(self.g0),
                one(self.ki),
                tenth(self.c),
            )?),
            ControllerKind::Fdpd => Gains::Fdpd(FdpdGains::new(
                one(self.f),
                one(self.g),
                one(self.f0),
                one(self.kd),
                tenth(self.tau),
            )?),
        };
        Ok(gains)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Closed-form modal sum.
    Closed,
    /// Per-mode Lyapunov solves.
    Modal,
    /// Lyapunov solve on the full deflated system (small graphs only).
    Full,
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub gains: GainArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Closed)]
    pub method: MethodArg,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// DAPI gains; `c` is ignored.
    #[command(flatten)]
    pub gains: GainArgs,
    /// Points in the bracketing scan.
    #[arg(long, default_value_t = 64)]
    pub grid_points: usize,
    /// Upper end of the search interval; scaled to the graph by default.
    #[arg(long)]
    pub bracket_hi: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Preset network, gains and run length (see --list-scenarios).
    #[arg(long, conflicts_with_all = ["graph", "n", "gains_file", "controller"])]
    pub scenario: Option<String>,
    #[arg(long)]
    pub list_scenarios: bool,
    /// path, ring, complete, torus<d>, or an edge-list file.
    #[arg(long)]
    pub graph: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub weight: f64,
    #[command(flatten)]
    pub gains: GainArgs,
    /// Step size [default: 0.01].
    #[arg(long)]
    pub dt: Option<f64>,
    /// Simulated time [default: 100].
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Samples before this time are excluded from the empirical V_N.
    #[arg(long)]
    pub burn_in: Option<f64>,
    /// Keep every k-th step.
    #[arg(long)]
    pub record_every: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// Scale of a random initial velocity perturbation.
    #[arg(long)]
    pub perturb: Option<f64>,
    /// Also write the velocity and controller-state blocks.
    #[arg(long)]
    pub all_blocks: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScaleArgs {
    /// path, ring, complete or torus<d>.
    #[arg(long, value_parser = parse_family_arg)]
    pub family: Family,
    #[command(flatten)]
    pub gains: GainArgs,
    /// Comma list or geometric:start:stop:factor (side lengths for tori).
    #[arg(long)]
    pub sizes: String,
    #[arg(long, default_value_t = 1.0)]
    pub weight: f64,
    /// Fit window in node counts, lo:hi; upper half of the sweep by default.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_family_arg(s: &str) -> Result<Family, String> {
    parse_family(s).ok_or_else(|| format!("unknown family `{s}` (expected path, ring, complete or torus<d>)"))
}

fn open_out(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Variance(args) => variance(args),
        Command::Tune(args) => tune(args),
        Command::Simulate(args) => simulate(args),
        Command::Scale(args) => scale(args),
    }
}

fn variance(args: VarianceArgs) -> Result<()> {
    let graph = load_graph(&args.graph.graph, args.graph.n, args.graph.weight)?;
    let gains = args.gains.resolve()?;
    let report = match args.method {
        MethodArg::Closed => vn_closed_form(&graph.spectrum()?, &gains)?,
        MethodArg::Modal => vn_modal_oracle(&graph.spectrum()?, &gains)?,
        MethodArg::Full => {
            let mut r = vn_full_oracle(&assemble(&graph, &gains)?)?;
            r.bound = gains.uniform_bound();
            r
        }
    };
    write_variance(open_out(args.out.as_ref())?, &report)
}

fn tune(args: TuneArgs) -> Result<()> {
    let graph = load_graph(&args.graph.graph, args.graph.n, args.graph.weight)?;
    let gains = match args.gains.resolve()? {
        Gains::Dapi(d) => d,
        other => bail!("tune needs DAPI gains, got {}", other.kind().name()),
    };
    let spectrum = graph.spectrum()?;
    let mut cfg = ScalarSearchConfig::for_dapi(&spectrum, &gains);
    cfg.grid_points = args.grid_points;
    if let Some(hi) = args.bracket_hi {
        cfg.bracket_hi = hi;
    }
    let search = c_star_numeric(&spectrum, &gains, &cfg)?;
    let verdict = classify_c_star(&spectrum, &gains).verdict;
    write_tune(open_out(args.out.as_ref())?, &search, verdict)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    if args.list_scenarios {
        for s in Fig1Scenario::ALL {
            println!("{}", s.name());
        }
        return Ok(());
    }
    let (sys, mut cfg) = if let Some(name) = &args.scenario {
        let scenario = Fig1Scenario::from_name(name).with_context(|| format!("unknown scenario `{name}`"))?;
        if args.gains.has_explicit_gains() {
            bail!("gain flags cannot be combined with --scenario");
        }
        (scenario.system()?, scenario.config(args.seed))
    } else {
        let graph = args.graph.as_deref().context("--graph (or --scenario) is required")?;
        if !args.gains.is_set() {
            bail!("--controller or --gains-file (or --scenario) is required");
        }
        let graph = load_graph(graph, args.n, args.weight)?;
        let sys = assemble(&graph, &args.gains.resolve()?)?;
        let mut cfg = SimConfig::new(0.01, 100.0, args.seed);
        cfg.record_every = 10;
        (sys, cfg)
    };
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if let Some(k) = args.record_every {
        cfg.record_every = k;
    }
    if let Some(s) = args.noise {
        cfg.noise_intensity = s;
    }
    if let Some(scale) = args.perturb {
        cfg.initial_state = InitialState::RandomFrequencyPerturbation { scale };
    }
    cfg.burn_in = args.burn_in.or(cfg.burn_in);
    cfg.record_states = true;

    let traj = simulate_em(&sys, &cfg)?;
    for w in &traj.warnings {
        match w {
            SimWarning::CoarseStep { ratio } => {
                eprintln!("warning: dt times the fastest decay rate is {ratio:.3}; results may be biased")
            }
            SimWarning::GrowingAverage => {
                eprintln!("warning: the network average drifts; the centred output is unaffected")
            }
        }
    }
    write_trajectory(open_out(args.out.as_ref())?, &traj, args.all_blocks)?;
    match traj.empirical_vn() {
        Ok(v) => eprintln!("empirical V_N = {v} (burn-in {})", traj.burn_in),
        Err(e) => eprintln!("empirical V_N unavailable: {e}"),
    }
    Ok(())
}

fn scale(args: ScaleArgs) -> Result<()> {
    let gains = args.gains.resolve()?;
    let sizes = parse_sizes(&args.sizes)?;
    let window = args.window.as_deref().map(parse_window).transpose()?;
    let result = run_scaling(args.family, &gains, &sizes, args.weight, window)?;
    write_scaling(open_out(args.out.as_ref())?, &result)?;
    let (lo, hi) = result.fit_window;
    match result.fitted_exponent {
        Some(e) => eprintln!("{} {}: exponent {e:.4} over N in [{lo}, {hi}]", result.family.name(), gains.kind().name()),
        None => eprintln!("{} {}: no exponent (too few finite points in [{lo}, {hi}])", result.family.name(), gains.kind().name()),
    }
    Ok(())
}

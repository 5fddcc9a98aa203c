use coherence_core::closed_loop::eigenvalues;
use coherence_core::h2::deflate_average;
use coherence_core::{
    assemble, reproduce_fig1, simulate_em, vn_closed_form, ClosedLoopSystem, Fig1Scenario, Gains, InitialState,
    PGains, SimConfig, Trajectory, WeightedGraph,
};

/// Mean of `‖y‖²/N` after burn-in and its batch-means standard error.
fn batch_means(traj: &Trajectory, batches: usize) -> (f64, f64) {
    let n = traj.node_count as f64;
    let samples: Vec<f64> = (0..traj.len())
        .filter(|&r| traj.times[r] > traj.burn_in)
        .map(|r| traj.output_row(r).iter().map(|y| y * y).sum::<f64>() / n)
        .collect();
    let size = samples.len() / batches;
    let means: Vec<f64> = samples.chunks_exact(size).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
    (mean, (var / means.len() as f64).sqrt())
}

fn ring_p(n: usize, gains: PGains) -> (ClosedLoopSystem, f64) {
    let g = WeightedGraph::ring(n, 1.0).unwrap();
    let gains = Gains::P(gains);
    let expected = vn_closed_form(&g.spectrum().unwrap(), &gains).unwrap().v_n;
    (assemble(&g, &gains).unwrap(), expected)
}

#[test]
fn halving_dt_stays_within_monte_carlo_error() {
    let (sys, _) = ring_p(8, PGains::new(1.0, 1.0, 1.0, 1.0).unwrap());
    let run = |dt: f64| {
        let mut cfg = SimConfig::new(dt, 4000.0, 17);
        cfg.record_every = (0.1 / dt).round() as usize;
        cfg.record_states = false;
        batch_means(&simulate_em(&sys, &cfg).unwrap(), 40)
    };
    let (v1, se1) = run(0.02);
    let (v2, se2) = run(0.01);
    let se = (se1 * se1 + se2 * se2).sqrt();
    assert!((v1 - v2).abs() < se, "{v1} vs {v2}, combined standard error {se}");
}

#[test]
fn ensemble_matches_closed_form_on_ring() {
    let (sys, expected) = ring_p(20, PGains::new(1.0, 1.0, 1.0, 0.0).unwrap());
    let modes = eigenvalues(&deflate_average(&sys).unwrap().a).unwrap();
    // Keep the Euler–Maruyama variance inflation dt |ξ|² / (2 |Re ξ|) near 1%.
    let inflation = modes.iter().map(|z| z.norm_sqr() / (2.0 * z.re.abs())).fold(0.0, f64::max);
    let dt = 0.01 / inflation;
    let runs: Vec<f64> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..20u64)
            .map(|seed| {
                let sys = &sys;
                scope.spawn(move || {
                    let mut cfg = SimConfig::new(dt, 3000.0, 100 + seed);
                    cfg.record_every = (0.25 / dt).round() as usize;
                    cfg.record_states = false;
                    simulate_em(sys, &cfg).unwrap().empirical_vn().unwrap()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mean = runs.iter().sum::<f64>() / runs.len() as f64;
    assert!((mean - expected).abs() <= 0.05 * expected, "{mean} vs {expected}");
}

#[test]
fn trajectories_are_reproducible_and_centred() {
    let (sys, _) = ring_p(10, PGains::new(1.0, 1.0, 1.0, 0.5).unwrap());
    let mut cfg = SimConfig::new(0.01, 50.0, 5);
    cfg.initial_state = InitialState::RandomFrequencyPerturbation { scale: 0.1 };
    let a = simulate_em(&sys, &cfg).unwrap();
    let b = simulate_em(&sys, &cfg).unwrap();
    let bits = |t: &Trajectory| t.states.iter().chain(&t.output).map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    for row in 0..a.len() {
        assert!(a.output_row(row).iter().sum::<f64>().abs() <= 1e-10);
    }
}

#[test]
fn fig1_small_scenarios_order_as_expected() {
    let dapi = reproduce_fig1(Fig1Scenario::DapiPath10, 3).unwrap();
    let p = reproduce_fig1(Fig1Scenario::PPath10, 3).unwrap();
    assert!(dapi.warnings.is_empty(), "{:?}", dapi.warnings);
    let (vd, vp) = (dapi.empirical_vn().unwrap(), p.empirical_vn().unwrap());
    assert!(vp > vd, "{vp} vs {vd}");
    // Initial frequency perturbation lands in the v block only.
    let first = dapi.state(0);
    assert!(first[..10].iter().all(|&x| x == 0.0));
    assert!(first[10..20].iter().any(|&v| v != 0.0));
}

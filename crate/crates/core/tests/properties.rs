use coherence_core::closed_loop::{eigenvalues, is_hurwitz, routh_hurwitz};
use coherence_core::h2::{dapi_mode_term, deflate_average, fdpd_mode_term};
use coherence_core::{
    assemble, c_star_complete_exact, c_star_numeric, classify_c_star, fdpd_dv_dtau, is_stable_mode,
    modal_subsystem, vn_closed_form, vn_dapi, vn_fdpd, vn_full_oracle, vn_modal_oracle, vn_p, CStarVerdict,
    DapiGains, FdpdGains, Gains, LaplacianSpectrum, PGains, ScalarSearchConfig, WeightedGraph,
};
use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;

fn weight() -> impl Strategy<Value = f64> {
    0.2f64..3.0
}

fn gain() -> impl Strategy<Value = f64> {
    0.1f64..3.0
}

/// Random spanning tree plus extra edges.
fn connected_graph(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (2..=max_n).prop_flat_map(|n| {
        let parents = proptest::collection::vec((any::<prop::sample::Index>(), weight()), n - 1);
        let extra = proptest::collection::vec((0..n, 0..n, weight()), 0..=n);
        (Just(n), parents, extra).prop_map(|(n, parents, extra)| {
            let mut edges: Vec<(usize, usize, f64)> =
                parents.iter().enumerate().map(|(i, (p, w))| (p.index(i + 1), i + 1, *w)).collect();
            for (a, b, w) in extra {
                let (a, b) = (a.min(b), a.max(b));
                if a != b && !edges.iter().any(|&(x, y, _)| (x.min(y), x.max(y)) == (a, b)) {
                    edges.push((a, b, w));
                }
            }
            WeightedGraph::new(n, edges).unwrap()
        })
    })
}

/// Arbitrary edge sets, possibly disconnected.
fn any_graph(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n, weight()), 0..=2 * n).prop_map(move |raw| {
            let mut edges: Vec<(usize, usize, f64)> = Vec::new();
            for (a, b, w) in raw {
                let (a, b) = (a.min(b), a.max(b));
                if a != b && !edges.iter().any(|&(x, y, _)| (x, y) == (a, b)) {
                    edges.push((a, b, w));
                }
            }
            WeightedGraph::new(n, edges).unwrap()
        })
    })
}

fn p_gains() -> impl Strategy<Value = PGains> {
    (gain(), gain(), gain(), gain()).prop_map(|(f, g, f0, g0)| PGains::new(f, g, f0, g0).unwrap())
}

fn dapi_gains() -> impl Strategy<Value = DapiGains> {
    (gain(), prop_oneof![Just(0.0), gain()], gain(), gain(), gain())
        .prop_map(|(f, g, g0, ki, c)| DapiGains::new(f, g, g0, ki, c).unwrap())
}

fn fdpd_gains() -> impl Strategy<Value = FdpdGains> {
    (gain(), prop_oneof![Just(0.0), gain()], gain(), gain(), 0.01f64..2.0)
        .prop_map(|(f, g, f0, kd, tau)| FdpdGains::new(f, g, f0, kd, tau).unwrap())
}

fn any_gains() -> impl Strategy<Value = Gains> {
    prop_oneof![p_gains().prop_map(Gains::P), dapi_gains().prop_map(Gains::Dapi), fdpd_gains().prop_map(Gains::Fdpd)]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn laplacian_is_symmetric_with_zero_row_sums(g in any_graph(16)) {
        let l = g.laplacian();
        prop_assert_eq!(&l, &l.transpose());
        for row in l.row_iter() {
            prop_assert!(row.sum().abs() <= 1e-12);
        }
    }

    #[test]
    fn spectrum_matches_trace_and_connectivity(g in any_graph(16)) {
        let s = g.spectrum().unwrap();
        let l = g.laplacian();
        prop_assert_eq!(s.eigenvalues().len(), g.node_count());
        prop_assert!(s.eigenvalues().iter().all(|&v| v >= -s.zero_tolerance()));
        let sum: f64 = s.eigenvalues().iter().sum();
        prop_assert!((sum - l.trace()).abs() <= 1e-9 * l.trace().max(1.0));
        prop_assert_eq!(g.is_connected(), s.algebraic_connectivity() > s.zero_tolerance());
        prop_assert_eq!(g.is_connected(), s.is_connected());
    }

    #[test]
    fn edge_list_round_trip(g in any_graph(12)) {
        let back = WeightedGraph::from_edge_list(&g.to_edge_list()).unwrap();
        prop_assert_eq!(back.node_count(), g.node_count());
        prop_assert!((back.laplacian() - g.laplacian()).norm() <= 1e-12 * g.laplacian().norm().max(1.0));
    }

    #[test]
    fn block_diagonalization_preserves_spectra(g in connected_graph(12), gains in any_gains()) {
        let full = eigenvalues(&assemble(&g, &gains).unwrap().a).unwrap();
        let spectrum = g.spectrum().unwrap();
        let mut modal: Vec<Complex<f64>> = Vec::new();
        for (n, &lambda) in spectrum.eigenvalues().iter().enumerate() {
            modal.extend(eigenvalues(&modal_subsystem(&gains, lambda, n + 1).unwrap().a).unwrap());
        }
        prop_assert_eq!(full.len(), modal.len());
        // Greedy nearest matching.
        let mut unused = full.clone();
        for z in &modal {
            let (k, d) = unused
                .iter()
                .enumerate()
                .map(|(k, w)| (k, (w - z).norm_sqr().sqrt()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            prop_assert!(d <= 1e-8 * z.norm_sqr().sqrt().max(1.0), "{} unmatched, nearest distance {}", z, d);
            unused.swap_remove(k);
        }
    }

    #[test]
    fn p_modes_are_stable(gains in (gain(), gain(), 0.0f64..3.0, 0.0f64..3.0), lambda in 0.01f64..50.0) {
        let gains = PGains::new(gains.0, gains.1, gains.2, gains.3).unwrap();
        let sub = modal_subsystem(&Gains::P(gains), lambda, 2).unwrap();
        prop_assert!(is_stable_mode(&sub));
    }

    #[test]
    fn average_mode_is_unobservable(g in connected_graph(10), gains in any_gains()) {
        let sys = assemble(&g, &gains).unwrap();
        prop_assert!(deflate_average(&sys).is_ok());
        let n = g.node_count();
        for k in 0..gains.kind().order() {
            let dir = DMatrix::from_fn(sys.state_dim(), 1, |i, _| if i / n == k { 1.0 } else { 0.0 });
            prop_assert!((&sys.c * dir).norm() <= 1e-12);
        }
    }

    #[test]
    fn three_way_agreement(g in connected_graph(20), gains in any_gains()) {
        let spectrum = g.spectrum().unwrap();
        let closed = vn_closed_form(&spectrum, &gains).unwrap().v_n;
        let modal = vn_modal_oracle(&spectrum, &gains).unwrap().v_n;
        let full = vn_full_oracle(&assemble(&g, &gains).unwrap()).unwrap().v_n;
        prop_assert!(rel(closed, modal) <= 1e-8, "{} vs {}", closed, modal);
        prop_assert!(rel(closed, full) <= 1e-8, "{} vs {}", closed, full);
    }

    #[test]
    fn mode_terms_non_increasing_in_lambda(dapi in dapi_gains(), fdpd in fdpd_gains()) {
        let grid: Vec<f64> = (0..400).map(|k| 1e-3 * 1.03f64.powi(k)).collect();
        for w in grid.windows(2) {
            let (a, b) = (dapi_mode_term(&dapi, w[0]).unwrap(), dapi_mode_term(&dapi, w[1]).unwrap());
            prop_assert!(b <= a * (1.0 + 1e-12), "DAPI s_n rises from {} to {} at lambda {}", a, b, w[1]);
            let (a, b) = (fdpd_mode_term(&fdpd, w[0]).unwrap(), fdpd_mode_term(&fdpd, w[1]).unwrap());
            prop_assert!(b <= a * (1.0 + 1e-12), "F-DPD s_n rises from {} to {} at lambda {}", a, b, w[1]);
        }
    }

    #[test]
    fn uniform_bounds_hold(g in connected_graph(20), dapi in dapi_gains(), fdpd in fdpd_gains()) {
        let s = g.spectrum().unwrap();
        let r = vn_dapi(&s, &dapi).unwrap();
        prop_assert!(r.v_n < r.bound.unwrap());
        let r = vn_fdpd(&s, &fdpd).unwrap();
        prop_assert!(r.v_n < r.bound.unwrap());
    }

    #[test]
    fn limits_recover_p_control(g in connected_graph(20), dapi in dapi_gains(), fdpd in fdpd_gains()) {
        let s = g.spectrum().unwrap();
        let p_dapi = vn_p(&s, &dapi.p_limit()).unwrap().v_n;
        let p_fdpd = vn_p(&s, &fdpd.ideal_pd()).unwrap().v_n;
        let mut last = (f64::INFINITY, f64::INFINITY);
        for eps in [1e-2, 1e-4, 1e-6] {
            let gap_dapi = rel(vn_dapi(&s, &dapi.with_c(eps)).unwrap().v_n, p_dapi);
            let gap_fdpd = rel(vn_fdpd(&s, &fdpd.with_tau(eps)).unwrap().v_n, p_fdpd);
            prop_assert!(gap_dapi <= last.0 && gap_fdpd <= last.1);
            last = (gap_dapi, gap_fdpd);
        }
        prop_assert!(last.0 <= 1e-4 && last.1 <= 1e-4);
    }

    #[test]
    fn tau_monotone_with_matching_derivative(g in connected_graph(20), fdpd in fdpd_gains()) {
        let s = g.spectrum().unwrap();
        let v = |tau: f64| vn_fdpd(&s, &fdpd.with_tau(tau)).unwrap().v_n;
        let taus: Vec<f64> = (0..32).map(|k| 2.0 * k as f64 / 31.0).collect();
        let values: Vec<f64> = taus.iter().map(|&t| v(t)).collect();
        prop_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        for &tau in &taus[1..] {
            let h = 1e-5 * tau.max(1.0);
            let fd = (v(tau + h) - v(tau - h)) / (2.0 * h);
            let d = fdpd_dv_dtau(&s, &fdpd.with_tau(tau));
            prop_assert!(rel(d, fd) <= 1e-6, "tau {}: {} vs {}", tau, d, fd);
        }
    }

    #[test]
    fn interior_optimum_beats_endpoints(g in connected_graph(12), dapi in dapi_gains()) {
        let s = g.spectrum().unwrap();
        prop_assume!(classify_c_star(&s, &dapi).verdict == CStarVerdict::PositiveOptimum);
        let cfg = ScalarSearchConfig::for_dapi(&s, &dapi);
        let r = c_star_numeric(&s, &dapi, &cfg).unwrap();
        prop_assert!(r.v_star < vn_dapi(&s, &dapi.with_c(0.0)).unwrap().v_n);
        prop_assert!(r.v_star < vn_dapi(&s, &dapi.with_c(cfg.bracket_hi)).unwrap().v_n);
    }

    #[test]
    fn zero_optimum_is_monotone(g in connected_graph(12), f in 0.01f64..0.5, rest in (0.5f64..3.0, 0.5f64..3.0, gain())) {
        let dapi = DapiGains::new(f, rest.0, rest.1, rest.2, 0.0).unwrap();
        let s = g.spectrum().unwrap();
        prop_assume!(classify_c_star(&s, &dapi).verdict == CStarVerdict::ZeroOptimum);
        let hi = ScalarSearchConfig::for_dapi(&s, &dapi).bracket_hi;
        let v: Vec<f64> = (0..256).map(|k| vn_dapi(&s, &dapi.with_c(hi * k as f64 / 255.0)).unwrap().v_n).collect();
        prop_assert!(v.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fdpd_routh_hurwitz_matches_eigenvalues(gains in fdpd_gains(), lambda in 0.0f64..40.0) {
        let sub = modal_subsystem(&Gains::Fdpd(gains), lambda, 2).unwrap();
        prop_assert_eq!(is_stable_mode(&sub), is_hurwitz(&sub.a).unwrap());
    }

    #[test]
    fn routh_hurwitz_matches_companion_roots(c in proptest::collection::vec(-5.0f64..5.0, 2..=3)) {
        let k = c.len();
        // Companion matrix of ξ^k + c[0] ξ^(k-1) + ... + c[k-1].
        let mut m = DMatrix::zeros(k, k);
        for j in 0..k {
            m[(0, j)] = -c[j];
        }
        for i in 1..k {
            m[(i, i - 1)] = 1.0;
        }
        let roots = eigenvalues(&m).unwrap();
        let margin = roots.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
        prop_assume!(margin > 1e-6);
        prop_assert_eq!(routh_hurwitz(&c), roots.iter().all(|z| z.re < 0.0));
    }

    #[test]
    fn complete_graph_optimum_matches_exact_formula(
        n in 2usize..30,
        l in 0.5f64..2.0,
        f in 0.5f64..20.0,
        g in 0.0f64..0.5,
        g0 in 0.05f64..2.0,
        ki in 0.2f64..3.0,
    ) {
        let dapi = DapiGains::new(f, g, g0, ki, 0.0).unwrap();
        let s = LaplacianSpectrum::complete(n, l).unwrap();
        prop_assume!(classify_c_star(&s, &dapi).verdict == CStarVerdict::PositiveOptimum);
        let cfg = ScalarSearchConfig::for_dapi(&s, &dapi);
        let r = c_star_numeric(&s, &dapi, &cfg).unwrap();
        prop_assert!((r.c_star - c_star_complete_exact(n, l, f, g, g0)).abs() <= 10.0 * cfg.abs_tolerance);
    }
}

#[test]
fn torus_of_dimension_one_is_a_ring() {
    for side in 3..12 {
        let t = WeightedGraph::torus(side, 1, 1.5).unwrap();
        let r = WeightedGraph::ring(side, 1.5).unwrap();
        assert_eq!(t.laplacian(), r.laplacian());
    }
}

#[test]
fn analytic_spectra_match_eigensolver() {
    for n in [3, 8, 33, 128, 512] {
        let cases = [
            (WeightedGraph::ring(n, 1.3).unwrap(), LaplacianSpectrum::ring(n, 1.3).unwrap()),
            (WeightedGraph::path(n, 0.7).unwrap(), LaplacianSpectrum::path(n, 0.7).unwrap()),
        ];
        for (g, analytic) in cases {
            let numeric = g.spectrum().unwrap();
            for (a, b) in analytic.eigenvalues().iter().zip(numeric.eigenvalues()) {
                assert!((a - b).abs() <= 1e-9 * analytic.eigenvalues()[n - 1], "n={n}: {a} vs {b}");
            }
        }
    }
    for (side, dim) in [(3, 2), (5, 2), (8, 2), (3, 3), (6, 3)] {
        let numeric = WeightedGraph::torus(side, dim, 1.0).unwrap().spectrum().unwrap();
        let analytic = LaplacianSpectrum::torus(side, dim, 1.0).unwrap();
        for (a, b) in analytic.eigenvalues().iter().zip(numeric.eigenvalues()) {
            assert!((a - b).abs() <= 1e-9 * 4.0 * dim as f64);
        }
    }
}

#[test]
fn complete_graph_dapi_decreases_with_size() {
    let dapi = DapiGains::new(1.0, 0.5, 1.0, 1.0, 0.3).unwrap();
    let v: Vec<f64> =
        (2..200).map(|n| vn_dapi(&LaplacianSpectrum::complete(n, 1.0).unwrap(), &dapi).unwrap().v_n).collect();
    assert!(v.windows(2).all(|w| w[1] < w[0]));
    assert!(v[v.len() - 1] < 0.01 * v[0]);
}

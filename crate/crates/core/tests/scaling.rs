use coherence_core::{run_scaling, DapiGains, Family, FdpdGains, Gains, PGains};

fn bounded_gains() -> [Gains; 2] {
    [
        Gains::Dapi(DapiGains::new(1.0, 0.0, 1.0, 1.0, 0.1).unwrap()),
        Gains::Fdpd(FdpdGains::new(1.0, 1.0, 1.0, 1.0, 0.1).unwrap()),
    ]
}

/// Sweep parameters whose node counts cover [256, 4096].
fn sweep(family: Family) -> Vec<usize> {
    match family {
        Family::Torus { dim: 2 } => vec![16, 23, 32, 45, 64],
        Family::Torus { dim: 3 } => vec![7, 8, 10, 13, 16],
        _ => vec![256, 512, 1024, 2048, 4096],
    }
}

#[test]
fn bounded_controllers_on_all_families() {
    let families = [Family::Ring, Family::Path, Family::Torus { dim: 1 }, Family::Torus { dim: 2 }, Family::Torus { dim: 3 }];
    for family in families {
        for gains in bounded_gains() {
            let sizes = sweep(family);
            let r = run_scaling(family, &gains, &sizes, 1.0, Some((256, 4096))).unwrap();
            let bound = r.bound.unwrap();
            for p in &r.points {
                assert!(p.v_n.unwrap() < bound, "{family:?} {gains:?} N={}", p.n);
            }
            let e = r.fitted_exponent.unwrap();
            assert!((-0.2..=0.1).contains(&e), "{family:?} {gains:?}: exponent {e}");
        }
    }
}

#[test]
fn ring_p_control_exponents() {
    let sizes = [256, 512, 1024, 2048, 4096];
    let exponent = |f0: f64| {
        let gains = Gains::P(PGains::new(1.0, 1.0, f0, 0.0).unwrap());
        run_scaling(Family::Ring, &gains, &sizes, 1.0, Some((256, 4096))).unwrap().fitted_exponent.unwrap()
    };
    assert!((0.85..=1.15).contains(&exponent(1.0)));
    assert!((2.7..=3.3).contains(&exponent(0.0)));
}

#[test]
fn complete_graph_p_control_vanishes() {
    let gains = Gains::P(PGains::new(1.0, 2.0, 0.0, 0.0).unwrap());
    let sizes: Vec<usize> = (2..=512).collect();
    let r = run_scaling(Family::Complete, &gains, &sizes, 0.5, None).unwrap();
    let v: Vec<f64> = r.points.iter().map(|p| p.v_n.unwrap()).collect();
    assert!(v.windows(2).all(|w| w[1] < w[0]));
    assert!(v[v.len() - 1] < 1e-4);
    assert!(r.fitted_exponent.unwrap() < -1.5);
}

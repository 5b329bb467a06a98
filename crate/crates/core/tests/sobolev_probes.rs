use viscosplash::geometry::InterfaceCurve;
use viscosplash::grid::{build_reference_grid, Grid};
use viscosplash::sobolev::*;
use viscosplash::tensor::Vec2;

fn grid() -> Grid {
    let c = InterfaceCurve::circle(Vec2::new(0.0, 0.0), 1.0, 32).unwrap();
    build_reference_grid(&c, 32).unwrap()
}

fn bump(g: &Grid) -> Vec<f64> {
    g.sample(|p| (-(p.norm_squared()) * 2.0).exp() * (1.0 + 0.3 * p.x))
}

#[test]
fn zero_field_has_zero_norm() {
    let g = grid();
    assert_eq!(h_norm(&g, &vec![0.0; g.len()], 2.25, 64), 0.0);
    let series = vec![vec![0.0; g.len()]; 5];
    let l = time_space_norms(&g, &series, 0.1, &NormSpec::default()).unwrap();
    assert_eq!(l, NormLedger::default());
}

#[test]
fn order_zero_is_discrete_l2_of_cutoff_field() {
    let g = grid();
    let f = bump(&g);
    let sq = to_square(&g, &f, 64);
    let h = sq.side / sq.m as f64;
    let l2 = (sq.values.iter().map(|v| v * v).sum::<f64>() * h * h).sqrt();
    assert!((h_norm(&g, &f, 0.0, 64) - l2).abs() < 1e-10);
}

#[test]
fn monotone_in_order() {
    let g = grid();
    let f = bump(&g);
    let mut last = 0.0;
    for s in [0.0, 0.5, 1.0, 2.25, 3.25] {
        let n = h_norm(&g, &f, s, 64);
        assert!(n >= last);
        last = n;
    }
}

#[test]
fn ledger_is_homogeneous() {
    let g = grid();
    let f = bump(&g);
    let series: Vec<Vec<f64>> = (0..8)
        .map(|k| {
            f.iter()
                .map(|v| v * (1.0 + 0.2 * k as f64 + 0.5 * (k * k) as f64))
                .collect()
        })
        .collect();
    let spec = NormSpec::default();
    let a = time_space_norms(&g, &series, 0.05, &spec).unwrap();
    let scaled: Vec<Vec<f64>> = series
        .iter()
        .map(|s| s.iter().map(|v| -3.0 * v).collect())
        .collect();
    let b = time_space_norms(&g, &scaled, 0.05, &spec).unwrap();
    for (x, y) in [
        (a.l2_hs, b.l2_hs),
        (a.hs2_l2, b.hs2_l2),
        (a.k_s, b.k_s),
        (a.weighted_sup, b.weighted_sup),
        (a.h2_hgamma, b.h2_hgamma),
        (a.boundary, b.boundary),
    ] {
        assert!((3.0 * x - y).abs() <= 1e-10 * y.abs());
    }
}

#[test]
fn too_few_samples() {
    let g = grid();
    let series = vec![vec![0.0; g.len()]; 3];
    assert!(time_space_norms(&g, &series, 0.1, &NormSpec::default()).is_err());
}

#[test]
fn weighted_sup_of_linear_growth() {
    let g = grid();
    let f = bump(&g);
    let spec = NormSpec::default();
    let dt = 0.1;
    let series: Vec<Vec<f64>> = (0..11)
        .map(|k| f.iter().map(|v| v * k as f64 * dt).collect())
        .collect();
    let l = time_space_norms(&g, &series, dt, &spec).unwrap();
    let expect = 1.0f64.powf(0.75) * h_norm(&g, &f, spec.s + 1.0, spec.window);
    assert!((l.weighted_sup / expect - 1.0).abs() < 1e-12);
}

#[test]
fn fractional_time_norm_scales_with_frequency() {
    let g = grid();
    let f = bump(&g);
    let spec = NormSpec::default();
    let t_end = 8.0 * std::f64::consts::PI;
    let n = 513;
    let dt = t_end / (n - 1) as f64;
    let norms: Vec<f64> = [1.0, 2.0, 4.0]
        .iter()
        .map(|w: &f64| {
            let series: Vec<Vec<f64>> = (0..n)
                .map(|k| {
                    let a = (w * k as f64 * dt).sin();
                    f.iter().map(|v| v * a).collect()
                })
                .collect();
            time_space_norms(&g, &series, dt, &spec).unwrap().hs2_l2
        })
        .collect();
    for (i, w) in [2.0f64, 4.0].iter().enumerate() {
        let ratio = norms[i + 1] / norms[0];
        let expect = w.powf(spec.s / 2.0);
        assert!(
            (ratio / expect - 1.0).abs() < 0.1,
            "ω={w}: {ratio} vs {expect}"
        );
    }
}

#[test]
fn product_probe_is_bounded() {
    let p = product_lemma_probe(200, 2.25, 2.4, &[8, 16, 32], 7).unwrap();
    println!("{:?} slope {}", p.max_ratio, p.slope);
    assert!(p.pass, "slope {}", p.slope);
}

#[test]
fn integration_probe_is_monotone() {
    let p = integration_lemma_probe(50, 0.25, 0.1, &[1.0, 0.5, 0.25, 0.125], 129, 11).unwrap();
    println!("{:?}", p.max_ratio);
    assert!(p.pass);
}

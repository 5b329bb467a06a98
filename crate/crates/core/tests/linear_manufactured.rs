mod common;

use common::manufactured::{params, solve};
use viscosplash::linear::DEFAULT_BETA;

fn orders(dt: f64, beta: f64) {
    let p = params();
    let e: Vec<_> = [32, 64, 128]
        .iter()
        .map(|&n| solve(n, &p, dt, beta))
        .collect();
    for w in e.windows(2) {
        let ov = (w[0].velocity / w[1].velocity).log2();
        let oq = (w[0].pressure / w[1].pressure).log2();
        assert!(ov >= 1.9 && oq >= 1.9, "orders v={ov} q={oq}");
    }
    for x in &e {
        assert!(x.residual < x.tol, "residual {}", x.residual);
    }
}

#[test]
fn second_order_at_small_dt() {
    orders(0.01, DEFAULT_BETA);
}

#[test]
fn second_order_at_large_dt() {
    orders(1.0, DEFAULT_BETA);
}

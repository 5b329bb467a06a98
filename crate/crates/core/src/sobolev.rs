//! Spectral stand-ins for space-time Sobolev norms and empirical probes of the
//! product and time-integration estimates. Diagnostic grade only.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::splash::loglog_slope;
use crate::tensor::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub s: f64,
    pub gamma: f64,
    /// Side of the periodic square in samples.
    pub window: usize,
}

impl Default for NormSpec {
    fn default() -> Self {
        Self {
            s: 2.25,
            gamma: 1.1,
            window: 64,
        }
    }
}

impl NormSpec {
    pub fn new(s: f64, gamma: f64, window: usize) -> Result<Self> {
        if !(s > 2.0 && s < 2.5) {
            return Err(Error::param("/s", "must lie in (2, 2.5)"));
        }
        if !(gamma > 1.0 && gamma < s - 1.0) {
            return Err(Error::param("/gamma", "must lie in (1, s - 1)"));
        }
        if window < 8 {
            return Err(Error::param("/window", "must be at least 8"));
        }
        Ok(Self { s, gamma, window })
    }
}

/// Signed frequency index of DFT bin `k` out of `n`.
fn signed(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

fn fft2(values: &[f64], m: usize) -> Vec<Complex<f64>> {
    let a = values.iter().map(|v| Complex::new(*v, 0.0)).collect();
    fft2_in_place(a, m, false)
}

fn fft2_in_place(mut a: Vec<Complex<f64>>, m: usize, inverse: bool) -> Vec<Complex<f64>> {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    };
    for row in a.chunks_mut(m) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); m];
    for j in 0..m {
        for i in 0..m {
            col[i] = a[i * m + j];
        }
        fft.process(&mut col);
        for i in 0..m {
            a[i * m + j] = col[i];
        }
    }
    a
}

/// `H^s` norm of a row-major `m × m` sample of a function on the periodic
/// square of side `side`: `(h²/m²) Σ (1+|ξ|²)^s |F_k|²`.
pub fn periodic_h_norm(values: &[f64], m: usize, side: f64, s: f64) -> f64 {
    assert_eq!(values.len(), m * m, "sample must be m × m");
    let f = fft2(values, m);
    let h = side / m as f64;
    let scale = TAU / side;
    let mut acc = 0.0;
    for i in 0..m {
        let ki = signed(i, m) * scale;
        for j in 0..m {
            let kj = signed(j, m) * scale;
            acc += (1.0 + ki * ki + kj * kj).powf(s) * f[i * m + j].norm_sqr();
        }
    }
    (acc * h * h / (m * m) as f64).sqrt()
}

/// Smooth cutoff in the radial grid fraction: 1 for `ρ ≤ 0.9`, 0 at the
/// boundary.
pub fn cutoff(rho: f64) -> f64 {
    if rho <= 0.9 {
        return 1.0;
    }
    if rho >= 1.0 {
        return 0.0;
    }
    let x = (rho - 0.9) / 0.1;
    let a = (-1.0 / (1.0 - x)).exp();
    let b = (-1.0 / x).exp();
    a / (a + b)
}

/// Cutoff field resampled on a periodic square enclosing the domain.
#[derive(Debug, Clone)]
pub struct SquareSample {
    pub values: Vec<f64>,
    pub m: usize,
    pub side: f64,
}

pub fn to_square(grid: &Grid, field: &[f64], m: usize) -> SquareSample {
    let weights: Vec<f64> = (0..grid.len())
        .map(|p| {
            let (_, j) = grid.label(p);
            cutoff(1.0 - j as f64 / grid.n_rings() as f64)
        })
        .collect();
    let cut: Vec<f64> = field.iter().zip(&weights).map(|(f, w)| f * w).collect();
    let (lo, hi) = grid.nodes().iter().fold(
        (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY)),
        |(lo, hi), p| (lo.inf(p), hi.sup(p)),
    );
    let side = (hi - lo).max() * 1.25;
    let origin = (lo + hi) * 0.5 - Vec2::repeat(side * 0.5);
    let h = side / m as f64;
    let mut values = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let p = origin + Vec2::new(j as f64 * h, i as f64 * h);
            values[i * m + j] = grid.interpolate(&cut, &p).unwrap_or(0.0);
        }
    }
    SquareSample { values, m, side }
}

/// Approximate `H^s` norm of a grid field: smooth cutoff, zero padding to a
/// periodic square of `window` samples, spectral weight. Depends on the
/// cutoff.
pub fn h_norm(grid: &Grid, field: &[f64], s: f64, window: usize) -> f64 {
    let sq = to_square(grid, field, window);
    periodic_h_norm(&sq.values, sq.m, sq.side, s)
}

/// Euclidean combination of component norms.
pub fn h_norm_vec(grid: &Grid, field: &[Vec2], s: f64, window: usize) -> f64 {
    let (a, b) = crate::grid::split(field);
    h_norm(grid, &a, s, window).hypot(h_norm(grid, &b, s, window))
}

/// Squared spectral coefficients and angular frequencies of the even
/// reflection of a uniformly sampled series; the reflection doubles the
/// energy, which the weight sums below undo.
fn reflected_spectrum(series: &[f64], dt: f64) -> (Vec<f64>, Vec<f64>) {
    let n = series.len();
    let mut ext: Vec<Complex<f64>> = series.iter().map(|v| Complex::new(*v, 0.0)).collect();
    ext.extend(series[1..n - 1].iter().rev().map(|v| Complex::new(*v, 0.0)));
    let len = ext.len();
    FftPlanner::new().plan_fft_forward(len).process(&mut ext);
    let period = len as f64 * dt;
    let power = ext
        .iter()
        .map(|c| c.norm_sqr() * dt / len as f64 / 2.0)
        .collect();
    let omega = (0..len).map(|k| TAU * signed(k, len) / period).collect();
    (power, omega)
}

/// Interval `H^σ` norm in time, `(1+ω²)^σ` weight.
pub fn time_h_norm(series: &[f64], dt: f64, sigma: f64) -> f64 {
    let (p, w) = reflected_spectrum(series, dt);
    p.iter()
        .zip(&w)
        .map(|(a, o)| a * (1.0 + o * o).powf(sigma))
        .sum::<f64>()
        .sqrt()
}

/// `H^σ` norm in time of the extension by zero to `t < 0` and by reflection
/// about `t = T`; admissible for `σ < 1/2`, or `σ < 3/2` when the series
/// starts at 0.
pub fn time_h_norm_from_rest(series: &[f64], dt: f64, sigma: f64) -> f64 {
    let n = series.len();
    let mut ext = vec![0.0; n - 1];
    ext.extend_from_slice(series);
    ext.extend(series[1..n - 1].iter().rev());
    let mut a: Vec<Complex<f64>> = ext.iter().map(|v| Complex::new(*v, 0.0)).collect();
    let len = a.len();
    FftPlanner::new().plan_fft_forward(len).process(&mut a);
    let period = len as f64 * dt;
    a.iter()
        .enumerate()
        .map(|(k, c)| {
            let w = TAU * signed(k, len) / period;
            (1.0 + w * w).powf(sigma) * c.norm_sqr() * dt / len as f64 / 2.0
        })
        .sum::<f64>()
        .sqrt()
}

/// Homogeneous `Ḣ^σ` seminorm in time, `|ω|^{2σ}` weight.
pub fn time_h_seminorm(series: &[f64], dt: f64, sigma: f64) -> f64 {
    let (p, w) = reflected_spectrum(series, dt);
    p.iter()
        .zip(&w)
        .map(|(a, o)| a * o.abs().powf(2.0 * sigma))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NormLedger {
    /// `L²_t H^s_x`, trapezoidal in time.
    pub l2_hs: f64,
    /// `Ḣ^{s/2}_t L²_x` via the reflected DFT.
    pub hs2_l2: f64,
    /// `√(l2_hs² + hs2_l2²)`.
    pub k_s: f64,
    /// `sup_{t>0} t^{-1/4} ‖f(t)‖_{H^{s+1}}`.
    pub weighted_sup: f64,
    /// `‖∂²_t f‖_{L²_t H^γ_x}` via second differences.
    pub h2_hgamma: f64,
    /// `L²_t H^{s-1/2}` of the boundary trace plus `Ḣ^{(s-1/2)/2}_t L²`.
    pub boundary: f64,
}

fn boundary_h_norm(trace: &[f64], perimeter: f64, s: f64) -> f64 {
    let n = trace.len();
    let mut a: Vec<Complex<f64>> = trace.iter().map(|v| Complex::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut a);
    let h = perimeter / n as f64;
    let acc: f64 = a
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let xi = TAU * signed(k, n) / perimeter;
            (1.0 + xi * xi).powf(s) * c.norm_sqr()
        })
        .sum();
    (acc * h / n as f64).sqrt()
}

/// Time-space ledger of a uniformly sampled series of grid fields.
pub fn time_space_norms(
    grid: &Grid,
    series: &[Vec<f64>],
    dt: f64,
    spec: &NormSpec,
) -> Result<NormLedger> {
    let nt = series.len();
    if nt < 4 {
        return Err(Error::Shape(format!(
            "need at least 4 time samples, got {nt}"
        )));
    }
    if series.iter().any(|f| f.len() != grid.len()) || !(dt > 0.0) {
        return Err(Error::Shape("series does not match the grid".into()));
    }
    let s = spec.s;
    let w = spec.window;
    let trap = |k: usize| if k == 0 || k == nt - 1 { 0.5 * dt } else { dt };

    let hs: Vec<f64> = series.par_iter().map(|f| h_norm(grid, f, s, w)).collect();
    let l2_hs = (0..nt).map(|k| trap(k) * hs[k] * hs[k]).sum::<f64>().sqrt();

    let weights = grid.weights();
    let hs2_l2 = (0..grid.len())
        .map(|p| {
            let col: Vec<f64> = series.iter().map(|f| f[p]).collect();
            weights[p] * time_h_seminorm(&col, dt, s / 2.0).powi(2)
        })
        .sum::<f64>()
        .sqrt();

    let weighted_sup = series
        .par_iter()
        .enumerate()
        .skip(1)
        .map(|(k, f)| (k as f64 * dt).powf(-0.25) * h_norm(grid, f, s + 1.0, w))
        .reduce(|| 0.0, f64::max);

    let h2_hgamma = (1..nt - 1)
        .into_par_iter()
        .map(|k| {
            let d2: Vec<f64> = (0..grid.len())
                .map(|p| (series[k + 1][p] - 2.0 * series[k][p] + series[k - 1][p]) / (dt * dt))
                .collect();
            dt * h_norm(grid, &d2, spec.gamma, w).powi(2)
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum::<f64>()
        .sqrt();

    let nb = grid.n_theta();
    let bnd = grid.boundary_curve();
    let perimeter: f64 = (0..nb).map(|i| (bnd[(i + 1) % nb] - bnd[i]).norm()).sum();
    let sb = s - 0.5;
    let bl2 = (0..nt)
        .map(|k| trap(k) * boundary_h_norm(&series[k][..nb], perimeter, sb).powi(2))
        .sum::<f64>();
    let bt = (0..nb)
        .map(|i| {
            let col: Vec<f64> = series.iter().map(|f| f[i]).collect();
            (perimeter / nb as f64) * time_h_seminorm(&col, dt, sb / 2.0).powi(2)
        })
        .sum::<f64>();

    Ok(NormLedger {
        l2_hs,
        hs2_l2,
        k_s: l2_hs.hypot(hs2_l2),
        weighted_sup,
        h2_hgamma,
        boundary: (bl2 + bt).sqrt(),
    })
}

/// Random real field on `[0, 2π)²` with modes `|k|_∞ ≤ band`, sampled on an
/// `m × m` grid: `Σ a_k cos(k·x) + c_k sin(k·x)` with `a, c ~ U(-1, 1)`.
pub fn random_band_limited(rng: &mut impl Rng, band: usize, m: usize) -> Vec<f64> {
    assert!(m > 2 * band, "grid too coarse for the band");
    let b = band as i64;
    let wrap = |k: i64| k.rem_euclid(m as i64) as usize;
    let mut spec = vec![Complex::new(0.0, 0.0); m * m];
    for kx in -b..=b {
        for ky in 0..=b {
            if ky == 0 && kx < 0 {
                continue;
            }
            let a: f64 = rng.gen_range(-1.0..1.0);
            let c: f64 = rng.gen_range(-1.0..1.0);
            if kx == 0 && ky == 0 {
                spec[0] = Complex::new(a, 0.0);
                continue;
            }
            spec[wrap(ky) * m + wrap(kx)] = Complex::new(0.5 * a, -0.5 * c);
            spec[wrap(-ky) * m + wrap(-kx)] = Complex::new(0.5 * a, 0.5 * c);
        }
    }
    fft2_in_place(spec, m, true).iter().map(|z| z.re).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductProbe {
    pub s: f64,
    pub r: f64,
    pub bands: Vec<usize>,
    pub trials: usize,
    /// Largest ratio per band.
    pub max_ratio: Vec<f64>,
    pub slope: f64,
    pub pass: bool,
}

fn product_ratio(v: &[f64], w: &[f64], m: usize, s: f64, r: f64) -> f64 {
    let vw: Vec<f64> = v.iter().zip(w).map(|(a, b)| a * b).collect();
    let den = periodic_h_norm(v, m, TAU, r) * periodic_h_norm(w, m, TAU, s);
    if den == 0.0 {
        return 0.0;
    }
    periodic_h_norm(&vw, m, TAU, s) / den
}

/// Ratio `‖vw‖_{H^s} / (‖v‖_{H^r} ‖w‖_{H^s})` over random band-limited
/// pairs. Passes when the log-log slope of the per-band maximum against the
/// band limit stays below 0.1.
pub fn product_lemma_probe(
    trials: usize,
    s: f64,
    r: f64,
    bands: &[usize],
    seed: u64,
) -> Result<ProductProbe> {
    if !(r > 1.0 && r >= s && s >= 0.0) {
        return Err(Error::param("/r", "need r > 1 and r ≥ s ≥ 0"));
    }
    if trials == 0 || bands.is_empty() {
        return Err(Error::param(
            "/trials",
            "need at least one trial and one band",
        ));
    }
    let max_ratio: Vec<f64> = bands
        .iter()
        .enumerate()
        .map(|(bi, &band)| {
            // the product has twice the band; keep it unaliased
            let m = (4 * band + 4).next_power_of_two();
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((bi as u64) << 32) ^ t as u64);
                    let v = random_band_limited(&mut rng, band, m);
                    let w = random_band_limited(&mut rng, band, m);
                    product_ratio(&v, &w, m, s, r)
                })
                .reduce(|| 0.0, f64::max)
        })
        .collect();
    let x: Vec<f64> = bands.iter().map(|b| *b as f64).collect();
    let slope = loglog_slope(&x, &max_ratio).unwrap_or(0.0);
    Ok(ProductProbe {
        s,
        r,
        bands: bands.to_vec(),
        trials,
        max_ratio,
        slope,
        pass: slope < 0.1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationProbe {
    pub s: f64,
    pub eps: f64,
    pub horizons: Vec<f64>,
    /// Largest `‖V‖_{H^{s+1-ε}} / ‖v‖_{H^s}` per horizon.
    pub max_ratio: Vec<f64>,
    pub pass: bool,
}

/// Random smooth function on `[0, 1]`: a few cosine modes plus a mean.
fn random_profile(rng: &mut impl Rng) -> Vec<(f64, f64)> {
    (0..6)
        .map(|k| (k as f64 * PI, rng.gen_range(-1.0..1.0) / (1.0 + k as f64)))
        .collect()
}

/// Time-integration probe: for `V(t) = ∫₀ᵗ v` on `[0, T]` the ratio
/// `‖V‖_{H^{s+1-ε}} / ‖v‖_{H^s}` must not increase as `T` decreases. Both
/// norms use [`time_h_norm_from_rest`].
/// `horizons` are given in decreasing order.
pub fn integration_lemma_probe(
    trials: usize,
    s: f64,
    eps: f64,
    horizons: &[f64],
    samples: usize,
    seed: u64,
) -> Result<IntegrationProbe> {
    if !(s > 0.0 && s < 0.5) || !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param("/s", "need 0 < s < 1/2 and 0 < ε < 1"));
    }
    if horizons.windows(2).any(|w| w[1] >= w[0]) || samples < 8 {
        return Err(Error::param(
            "/horizons",
            "horizons must decrease; need ≥ 8 samples",
        ));
    }
    let max_ratio: Vec<f64> = horizons
        .iter()
        .map(|&t_end| {
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ t as u64);
                    let prof = random_profile(&mut rng);
                    let dt = t_end / (samples - 1) as f64;
                    let v: Vec<f64> = (0..samples)
                        .map(|k| {
                            let x = k as f64 * dt;
                            prof.iter().map(|(w, a)| a * (w * x).cos()).sum()
                        })
                        .collect();
                    let mut big_v = vec![0.0; samples];
                    for k in 1..samples {
                        big_v[k] = big_v[k - 1] + 0.5 * dt * (v[k] + v[k - 1]);
                    }
                    time_h_norm_from_rest(&big_v, dt, s + 1.0 - eps)
                        / time_h_norm_from_rest(&v, dt, s)
                })
                .reduce(|| 0.0, f64::max)
        })
        .collect();
    let pass = max_ratio.windows(2).all(|w| w[1] <= w[0]);
    Ok(IntegrationProbe {
        s,
        eps,
        horizons: horizons.to_vec(),
        max_ratio,
        pass,
    })
}

#![allow(dead_code)]

use std::f64::consts::PI;

use freespectra::{LayerSpec, NetworkSpec, Nonlinearity};
use rand::seq::IndexedRandom;
use rand::Rng;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `∫ f` over `[a, b]` with a 32-point rule on panels no wider than `panel`,
/// panel edges forced onto every `breaks` point inside the interval.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], panel: f64) -> f64 {
    let (nodes, weights) = gauss_legendre(32);
    let mut edges: Vec<f64> = breaks.iter().copied().filter(|x| *x > a && *x < b).collect();
    edges.push(a);
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in edges.windows(2) {
        let pieces = ((w[1] - w[0]) / panel).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / pieces as f64;
        for k in 0..pieces {
            let lo = w[0] + h * k as f64;
            let mid = lo + 0.5 * h;
            total += nodes
                .iter()
                .zip(&weights)
                .map(|(x, wt)| wt * f(mid + 0.5 * h * x))
                .sum::<f64>()
                * 0.5
                * h;
        }
    }
    total
}

/// `E[φ(√q N)²]` by composite quadrature split at the activation's kinks.
pub fn g_quadrature(nl: Nonlinearity, q: f64) -> f64 {
    let s = q.sqrt();
    let cut = 40.0;
    let kinks: Vec<f64> = match nl {
        Nonlinearity::Linear => vec![],
        Nonlinearity::Relu => vec![0.0],
        Nonlinearity::HardTanh => vec![-1.0 / s, 1.0 / s],
        Nonlinearity::HardSine => {
            let kmax = (cut * s / 2.0).ceil() as i64 + 1;
            (-kmax..=kmax).map(|k| (2 * k + 1) as f64 / s).collect()
        }
    };
    let density = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    integrate(
        |x| {
            let v = nl.apply(s * x);
            v * v * density(x)
        },
        -cut,
        cut,
        &kinks,
        0.5,
    )
}

/// Marchenko–Pastur density with unit ratio and variance.
pub fn mp_density(x: f64) -> f64 {
    if x <= 0.0 || x >= 4.0 {
        0.0
    } else {
        (x * (4.0 - x)).sqrt() / (2.0 * PI * x)
    }
}

/// Closed-form CDF of the same law.
pub fn mp_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 4.0 {
        return 1.0;
    }
    // with x = 4 sin²θ the integral reduces to (2θ + sin 2θ)/π
    let theta = (x / 4.0).sqrt().asin();
    (2.0 * theta + (2.0 * theta).sin()) / PI
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}

pub const RATIOS: [f64; 3] = [0.5, 1.0, 2.0];

/// Random network with 1 to `max_depth` layers, mixed nonlinearities,
/// ratios in {1/2, 1, 2} and gains in [1/2, 4].
pub fn random_spec(rng: &mut impl Rng, max_depth: usize, with_bias: bool) -> NetworkSpec {
    let depth = rng.random_range(1..=max_depth);
    let layers = (0..depth)
        .map(|_| {
            let nl = *Nonlinearity::ALL.choose(rng).unwrap();
            let bias = if with_bias { rng.random_range(0.0..0.5) } else { 0.0 };
            LayerSpec::new(nl, rng.random_range(0.5..=4.0), bias, *RATIOS.choose(rng).unwrap())
        })
        .collect();
    NetworkSpec::new(layers, 1.0).unwrap()
}

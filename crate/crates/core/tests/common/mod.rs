//! Shared oracles for the integration tests.

use num_complex::Complex64;
use num_traits::Zero;
use salem_core::cantor_tree::{interval_of, MeasureTree};
use salem_core::discrete_ap::{property_ii_brute, ResidueSet};

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    adaptive(f, a, m, left, tol / 2.0, depth - 1) + adaptive(f, m, b, right, tol / 2.0, depth - 1)
}

/// `∫ exp(−2πikx) dμ_n` by adaptive Simpson over each cell of the step density.
#[allow(dead_code)]
pub fn quadrature(tree: &MeasureTree, n: usize, k: i64) -> Complex64 {
    let schedule = tree.schedule();
    let q = schedule.resolution(n).to_string().parse::<f64>().unwrap();
    let p = schedule.cell_count(n).to_string().parse::<f64>().unwrap();
    let density = q / p;
    let two_pi_k = 2.0 * std::f64::consts::PI * k as f64;
    let re = |x: f64| (two_pi_k * x).cos();
    let im = |x: f64| -(two_pi_k * x).sin();
    let mut total = Complex64::zero();
    for path in tree.level(n).unwrap() {
        let (c, _) = interval_of(path, schedule).unwrap();
        let a = c.to_string().parse::<f64>().unwrap() / q;
        // pre-split so no initial Simpson panel spans a full period
        let pieces = (8.0 * k.unsigned_abs() as f64 / q).ceil().max(1.0) as usize;
        let h = 1.0 / q / pieces as f64;
        for j in 0..pieces {
            let (lo, hi) = (a + j as f64 * h, a + (j + 1) as f64 * h);
            let r = adaptive(&re, lo, hi, simpson(&re, lo, hi), 1e-15, 40);
            let i = adaptive(&im, lo, hi, simpson(&im, lo, hi), 1e-15, 40);
            total += Complex64::new(r, i) * density;
        }
    }
    total
}

/// Brute force on nested grids, refined until three successive grids agree.
#[allow(dead_code)]
pub fn brute_stable(set: &ResidueSet) -> bool {
    let mut history = vec![property_ii_brute(set, 2)];
    let mut grid = 2;
    while history.len() < 3 || history[history.len() - 3..].iter().any(|&v| v != history[history.len() - 1]) {
        grid *= 2;
        assert!(grid <= 256, "brute force did not stabilise for {set:?}");
        history.push(property_ii_brute(set, grid));
    }
    history[history.len() - 1]
}

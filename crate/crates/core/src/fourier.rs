//! Fourier coefficients of the step measures and the diagnostics built on
//! them.
//!
//! Convention: `μ̂(k) = ∫ exp(−2πikx) dμ(x)`. For a cell `[c/Q, (c+1)/Q)`
//!
//! ```text
//! ∫ exp(−2πikx) dx = (1/Q) · exp(−iπ k(2c+1)/Q) · sinc(πk/Q)
//! ```
//!
//! and the phase numerator `k(2c+1)` is reduced modulo `2Q` in exact integer
//! arithmetic before anything is converted to floating point, so the phase
//! error does not grow with `|k|` or with the size of `Q`.

use std::io::Write;

use num_bigint::{BigInt, BigUint, Sign};
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::cantor_tree::{level_intervals, MeasureTree, Schedule, StepMeasure};
use crate::error::{Error, Result};
use crate::exponent::ln_biguint;

/// Band suprema at or below this are treated as zero.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// Default frequency cap for scans over `|k| < Q_{n+1}`.
pub const DEFAULT_K_CAP: i64 = 1 << 20;

/// Neumaier-compensated sum.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// `num/den` as `f64` for integers of any size.
fn ratio_f64(num: &BigInt, den: &BigUint) -> f64 {
    let bits = num.bits().max(den.bits());
    let shift = bits.saturating_sub(900);
    let n = (num >> shift).to_f64().unwrap_or(0.0);
    let d = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}

enum PhaseTable {
    /// `2Q < 2^64`: products of residues fit in `u128`.
    Small {
        two_q: u64,
        q: u64,
        odd: Vec<u64>,
    },
    Big {
        two_q: BigUint,
        q: BigUint,
        odd: Vec<BigUint>,
    },
}

/// Precomputed phase data for one step measure.
pub struct FourierKernel {
    table: PhaseTable,
    q: BigUint,
    cells: f64,
}

impl FourierKernel {
    pub fn new(measure: &StepMeasure) -> Self {
        let q = measure.denominator().clone();
        let two_q = &q * 2u32;
        let odd = measure.offsets().iter().map(|c| c * 2u32 + 1u32);
        let table = match two_q.to_u64() {
            Some(two_q) => {
                PhaseTable::Small { two_q, q: two_q / 2, odd: odd.map(|v| v.to_u64().expect("below 2Q")).collect() }
            }
            None => PhaseTable::Big { two_q, q: q.clone(), odd: odd.collect() },
        };
        FourierKernel { table, q, cells: measure.cell_count() as f64 }
    }

    /// `μ̂_n(k)`.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        match &self.table {
            PhaseTable::Small { two_q, q, odd } => {
                let residue = (k as i128).rem_euclid(*two_q as i128) as u64;
                let mut re = CompensatedSum::default();
                let mut im = CompensatedSum::default();
                for &o in odd {
                    let r = ((residue as u128 * o as u128) % *two_q as u128) as u64;
                    let (s, c) = half_turn_angle_small(r, *q).sin_cos();
                    re.add(c);
                    im.add(-s);
                }
                let sinc = if k == 0 {
                    1.0
                } else {
                    let u = std::f64::consts::PI * (k as f64 / *q as f64);
                    sin_half_turn_small(residue, *q) / u
                };
                Complex64::new(re.value(), im.value()) * (sinc / self.cells)
            }
            PhaseTable::Big { .. } => self.coefficient_big(&BigInt::from(k)),
        }
    }

    /// `μ̂_n(k)` for an arbitrarily large frequency.
    pub fn coefficient_big(&self, k: &BigInt) -> Complex64 {
        if let (PhaseTable::Small { .. }, Some(small)) = (&self.table, k.to_i64()) {
            return self.coefficient(small);
        }
        let (two_q, q, odd): (BigUint, BigUint, Vec<BigUint>) = match &self.table {
            PhaseTable::Small { two_q, odd, .. } => {
                (BigUint::from(*two_q), BigUint::from(*two_q / 2), odd.iter().map(|&o| BigUint::from(o)).collect())
            }
            PhaseTable::Big { two_q, q, odd } => (two_q.clone(), q.clone(), odd.clone()),
        };
        let two_q_signed = BigInt::from(two_q.clone());
        let residue = k.mod_floor(&two_q_signed).to_biguint().expect("non-negative");
        let mut re = CompensatedSum::default();
        let mut im = CompensatedSum::default();
        for o in &odd {
            let r = (&residue * o) % &two_q;
            let (s, c) = half_turn_angle_big(&r, &q).sin_cos();
            re.add(c);
            im.add(-s);
        }
        let sinc = if k.is_zero() {
            1.0
        } else {
            let u = std::f64::consts::PI * ratio_f64(k, &self.q);
            sin_half_turn_big(&residue, &q) / u
        };
        Complex64::new(re.value(), im.value()) * (sinc / self.cells)
    }
}

/// `π·r/Q` for `r ∈ [0, 2Q)`, folded into `(−π, π]`.
fn half_turn_angle_small(r: u64, q: u64) -> f64 {
    let signed = if r > q { -((2 * q - r) as f64) } else { r as f64 };
    std::f64::consts::PI * (signed / q as f64)
}

fn half_turn_angle_big(r: &BigUint, q: &BigUint) -> f64 {
    let signed = if r > q { BigInt::from_biguint(Sign::Minus, &(q * 2u32) - r) } else { BigInt::from(r.clone()) };
    std::f64::consts::PI * ratio_f64(&signed, q)
}

/// `sin(π·r/Q)` with the argument reduced in integers to `[0, π/2]`, so
/// multiples of `π` give exactly zero.
fn sin_half_turn_small(r: u64, q: u64) -> f64 {
    let (mut r, mut sign) = (r, 1.0);
    if r >= q {
        r -= q;
        sign = -1.0;
    }
    if r > q - r {
        r = q - r;
    }
    sign * (std::f64::consts::PI * (r as f64 / q as f64)).sin()
}

fn sin_half_turn_big(r: &BigUint, q: &BigUint) -> f64 {
    let (mut r, mut sign) = (r.clone(), 1.0);
    if &r >= q {
        r -= q;
        sign = -1.0;
    }
    let rest = q - &r;
    if r > rest {
        r = rest;
    }
    sign * (std::f64::consts::PI * ratio_f64(&BigInt::from(r), q)).sin()
}

/// `∫_{c/Q}^{(c+1)/Q} exp(−2πikx) dx`.
pub fn interval_ft(c: &BigUint, q: &BigUint, k: i64) -> Complex64 {
    assert!(!q.is_zero() && c < q, "need 0 <= c < Q");
    let measure = StepMeasure::new(0, q.clone(), vec![c.clone()]).expect("valid single cell");
    // a single cell carries mass 1, so rescale by its length 1/Q
    FourierKernel::new(&measure).coefficient(k) / q.to_f64().unwrap_or(f64::INFINITY)
}

/// `μ̂_n(k)` of a tree.
pub fn mu_hat(tree: &MeasureTree, n: usize, k: i64) -> Result<Complex64> {
    Ok(FourierKernel::new(&level_intervals(tree, n)?).coefficient(k))
}

/// Coefficients of one level at a set of frequencies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierCoeffs {
    pub level: usize,
    pub values: Vec<(i64, Complex64)>,
}

impl FourierCoeffs {
    pub fn get(&self, k: i64) -> Option<Complex64> {
        self.values.iter().find(|(kk, _)| *kk == k).map(|&(_, v)| v)
    }

    /// CSV with header `k,re,im,abs`, frequencies ascending.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut rows: Vec<&(i64, Complex64)> = self.values.iter().collect();
        rows.sort_by_key(|(k, _)| *k);
        writeln!(out, "k,re,im,abs")?;
        for (k, v) in rows {
            writeln!(out, "{k},{:?},{:?},{:?}", v.re, v.im, v.norm())?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }
}

/// `μ̂_n` at every frequency of `ks`, in parallel; each value is produced by
/// the same per-frequency routine as [`mu_hat`].
pub fn mu_hat_batch(measure: &StepMeasure, ks: &[i64]) -> FourierCoeffs {
    let kernel = FourierKernel::new(measure);
    let values = ks.par_iter().map(|&k| (k, kernel.coefficient(k))).collect();
    FourierCoeffs { level: measure.level(), values }
}

pub fn mu_hat_batch_tree(tree: &MeasureTree, n: usize, ks: &[i64]) -> Result<FourierCoeffs> {
    Ok(mu_hat_batch(&level_intervals(tree, n)?, ks))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayBand {
    /// Band index `b`: frequencies `[2^b, 2^{b+1})`.
    pub band: u32,
    pub sup: f64,
    pub argmax: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub sigma_hat: f64,
    pub c_hat: f64,
    pub slope: f64,
    pub intercept: f64,
    pub bands_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayStatus {
    Fitted,
    FlatZero,
}

/// Per-band suprema of `|μ̂_n(k)|` and the fitted power law `Ĉ·k^{−σ̂/2}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayProfile {
    pub level: usize,
    pub status: DecayStatus,
    pub bands: Vec<DecayBand>,
    /// Bands left out of the fit because their supremum vanished.
    pub excluded_bands: Vec<u32>,
    pub fit: Option<DecayFit>,
}

impl DecayProfile {
    /// Value of the fitted envelope at `k`.
    pub fn envelope(&self, k: f64) -> Option<f64> {
        self.fit.map(|f| f.c_hat * k.powf(-f.sigma_hat / 2.0))
    }
}

/// Fits `log sup_b` against `log 2^b` over the complete dyadic bands
/// `[2^b, 2^{b+1})` with `2^b ≥ k_min` inside the sampled range.
pub fn decay_profile(coeffs: &FourierCoeffs, k_min: i64) -> Result<DecayProfile> {
    let k_min = k_min.max(1);
    let k_max = coeffs.values.iter().map(|(k, _)| *k).max().unwrap_or(0);
    let first = 64 - (k_min - 1).leading_zeros(); // ⌈log2 k_min⌉
    let mut bands = Vec::new();
    let mut b = first;
    while b < 62 && (1i64 << (b + 1)) - 1 <= k_max {
        let (lo, hi) = (1i64 << b, 1i64 << (b + 1));
        let best = coeffs.values.iter().filter(|(k, _)| (lo..hi).contains(k)).map(|&(k, v)| (v.norm(), k)).fold(
            None::<(f64, i64)>,
            |acc, cur| match acc {
                Some(a) if a.0 >= cur.0 => Some(a),
                _ => Some(cur),
            },
        );
        if let Some((sup, argmax)) = best {
            bands.push(DecayBand { band: b, sup, argmax });
        }
        b += 1;
    }
    if bands.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "decay fit needs at least 3 complete dyadic bands above k = {k_min}, found {}",
            bands.len()
        )));
    }
    if bands.iter().all(|b| b.sup <= ZERO_TOLERANCE) {
        return Ok(DecayProfile {
            level: coeffs.level,
            status: DecayStatus::FlatZero,
            bands,
            excluded_bands: Vec::new(),
            fit: None,
        });
    }
    let (used, excluded): (Vec<DecayBand>, Vec<DecayBand>) = bands.iter().partition(|b| b.sup > ZERO_TOLERANCE);
    let excluded_bands: Vec<u32> = excluded.iter().map(|b| b.band).collect();
    if used.len() < 3 {
        return Err(Error::InvalidArgument(format!("only {} bands with nonzero supremum; need 3", used.len())));
    }
    let pts: Vec<(f64, f64)> = used.iter().map(|b| (b.band as f64 * std::f64::consts::LN_2, b.sup.ln())).collect();
    let (slope, intercept) = least_squares(&pts);
    Ok(DecayProfile {
        level: coeffs.level,
        status: DecayStatus::Fitted,
        bands,
        excluded_bands,
        fit: Some(DecayFit {
            sigma_hat: -2.0 * slope,
            c_hat: intercept.exp(),
            slope,
            intercept,
            bands_used: used.len(),
        }),
    })
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Relative defect of `μ̂_n(k + Q_nℓ)·(k + Q_nℓ) = k·μ̂_n(k)`:
/// `|(k+Q_nℓ)μ̂_n(k+Q_nℓ) − kμ̂_n(k)| / max(1, |kμ̂_n(k)|)`.
pub fn modulation_check(tree: &MeasureTree, n: usize, k: i64, ell: i64) -> Result<f64> {
    let measure = level_intervals(tree, n)?;
    modulation_residual(&measure, k, ell)
}

pub fn modulation_residual(measure: &StepMeasure, k: i64, ell: i64) -> Result<f64> {
    let q = BigInt::from(measure.denominator().clone());
    if ell == 0 {
        return Err(Error::Precondition("ell must be nonzero".into()));
    }
    if BigInt::from(k).magnitude() >= q.magnitude() {
        return Err(Error::Precondition(format!("need |k| < Q_n, got k = {k}")));
    }
    let kernel = FourierKernel::new(measure);
    let shifted = BigInt::from(k) + &q * ell;
    let lhs = kernel.coefficient_big(&shifted) * ratio_f64(&shifted, &BigUint::one());
    let rhs = kernel.coefficient(k) * k as f64;
    Ok((lhs - rhs).norm() / rhs.norm().max(1.0))
}

/// Hoeffding's tail bound `4·exp(−κ²/(4R²|J|))` for sums of `|J|` independent,
/// zero-mean complex variables bounded by `R`. Values above 1 are returned
/// unchanged.
pub fn hoeffding_bound(kappa: f64, r: f64, j: u64) -> f64 {
    4.0 * (-(kappa * kappa) / (4.0 * r * r * j as f64)).exp()
}

/// The per-frequency increment bound and its union-bound proxy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncrementBound {
    /// `ln` of `L_{n+1}²·P_n·Q_n^{−σ} / (16·M_{n+1}^{2+σ})`.
    pub log_exponent: f64,
    /// `4·exp(−exponent)`.
    pub per_k: f64,
    /// `min(1, 2·Q_{n+1}·per_k)`.
    pub epsilon_proxy: f64,
}

/// `P(|μ̂_{n+1}(k) − μ̂_n(k)| > Q_{n+1}^{−σ/2}) ≤ 4·exp(−L²P_nQ_n^{−σ}/(16M^{2+σ}))`
/// with `L = L_{n+1}`, `M = M_{n+1}`. The exponent is assembled in log space
/// so astronomically large `Q_n` is harmless.
pub fn increment_bound(schedule: &Schedule, n: usize, sigma: f64) -> Result<IncrementBound> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::Precondition(format!("sigma must be positive, got {sigma}")));
    }
    if n + 1 > schedule.len() {
        return Err(Error::InvalidArgument(format!(
            "level {n} has no successor in a schedule of length {}",
            schedule.len()
        )));
    }
    let l_next = schedule.branching(n + 1) as f64;
    let m_next = schedule.base(n + 1) as f64;
    let log_exponent = 2.0 * l_next.ln() + ln_biguint(schedule.cell_count(n))
        - sigma * ln_biguint(schedule.resolution(n))
        - 16f64.ln()
        - (2.0 + sigma) * m_next.ln();
    let exponent = log_exponent.exp();
    let per_k = 4.0 * (-exponent).exp();
    let log_proxy = 2f64.ln() + ln_biguint(schedule.resolution(n + 1)) + 4f64.ln() - exponent;
    Ok(IncrementBound { log_exponent, per_k, epsilon_proxy: log_proxy.exp().min(1.0) })
}

/// Martingale increments `|μ̂_{n+1}(k) − μ̂_n(k)|` over `0 < k < Q_{n+1}`
/// (capped), compared with the threshold `Q_{n+1}^{−σ/2}`. Both measures
/// are real, so negative frequencies mirror the positive ones and only
/// `k > 0` is scanned.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementReport {
    pub level: usize,
    pub sigma: f64,
    pub threshold: f64,
    pub k_scanned: u64,
    /// Scanned fraction of `{1, …, Q_{n+1} − 1}`.
    pub coverage: f64,
    pub max_increment: f64,
    pub exceedance_count: u64,
    pub bound: IncrementBound,
    pub increments: Vec<(i64, f64)>,
}

pub fn increment_scan(tree: &MeasureTree, n: usize, sigma: f64, k_cap: i64) -> Result<IncrementReport> {
    tree.check_level(n + 1)?;
    let schedule = tree.schedule();
    let bound = increment_bound(schedule, n, sigma)?;
    let q_next = schedule.resolution(n + 1);
    let full = q_next - 1u32;
    let k_max = full.to_i64().map_or(k_cap, |f| f.min(k_cap)).max(0);
    let coarse = FourierKernel::new(&level_intervals(tree, n)?);
    let fine = FourierKernel::new(&level_intervals(tree, n + 1)?);
    let threshold = (-sigma / 2.0 * ln_biguint(q_next)).exp();
    let increments: Vec<(i64, f64)> =
        (1..=k_max).into_par_iter().map(|k| (k, (fine.coefficient(k) - coarse.coefficient(k)).norm())).collect();
    let exceedance_count = increments.iter().filter(|(_, d)| *d > threshold).count() as u64;
    let max_increment = increments.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    let coverage = if full.is_zero() { 1.0 } else { ratio_f64(&BigInt::from(k_max), &full) };
    Ok(IncrementReport {
        level: n,
        sigma,
        threshold,
        k_scanned: k_max as u64,
        coverage,
        max_increment,
        exceedance_count,
        bound,
        increments,
    })
}

/// `4·Q_{n1}^{−σ/2}`, the telescoped bound on `|μ̂_m(k) − μ̂_{n0}(k)|` for
/// `Q_{n1} ≤ |k| < Q_{n1+1}`. Requires `Q_{n+1} ≥ 2Q_n` throughout.
pub fn tail_envelope(schedule: &Schedule, sigma: f64, n1: usize) -> Result<f64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::Precondition(format!("sigma must be positive, got {sigma}")));
    }
    if n1 > schedule.len() {
        return Err(Error::InvalidArgument(format!("level {n1} beyond schedule length {}", schedule.len())));
    }
    for n in 0..schedule.len() {
        if schedule.resolution(n + 1) < &(schedule.resolution(n) * 2u32) {
            return Err(Error::Precondition(format!("Q_{} < 2 Q_{n}", n + 1)));
        }
    }
    Ok(4.0 * (-sigma / 2.0 * ln_biguint(schedule.resolution(n1))).exp())
}

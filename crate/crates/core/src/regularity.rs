//! Exact ball masses of `μ_n` and the Ahlfors / Frostman constant checks.
//!
//! Balls are open intervals `(x − r, x + r)`, taken on the circle `R/Z`
//! unless `circle` is false, in which case they are clipped to `[0, 1]`.
//! Comparisons `mass ≤ C·r^t` with `t = p/q` are decided exactly as
//! `mass^q ≤ C^q·r^p`.

use std::io::Write;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::cantor_tree::{level_intervals, MeasureTree, StepMeasure, Variant};
use crate::error::{Error, Result};
use crate::exponent::{ln_rational, rational_pow, RationalExponent};

fn rat(n: impl Into<BigInt>, d: impl Into<BigInt>) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Mass of `(a, b)` for `0 ≤ a ≤ b ≤ 1`, in units of one cell's mass.
fn interval_cell_units(measure: &StepMeasure, a: &BigRational, b: &BigRational) -> BigRational {
    if a >= b {
        return BigRational::zero();
    }
    let q = BigInt::from(measure.denominator().clone());
    let lo = a * &q;
    let hi = b * &q;
    let fa = lo.floor().to_integer();
    let fb = hi.floor().to_integer();
    let offsets = measure.offsets();
    let present = |c: &BigInt| -> bool { c.to_biguint().is_some_and(|c: BigUint| offsets.binary_search(&c).is_ok()) };
    if fa == fb {
        return if present(&fa) { &hi - &lo } else { BigRational::zero() };
    }
    let mut units = BigRational::zero();
    if present(&fa) {
        units += BigRational::from_integer(&fa + BigInt::one()) - &lo;
    }
    if present(&fb) {
        units += &hi - BigRational::from_integer(fb.clone());
    }
    // full cells fa+1 ..= fb-1
    let first: BigUint = (&fa + BigInt::one()).to_biguint().unwrap_or_default();
    let last: BigUint = fb.to_biguint().unwrap_or_default();
    let start = offsets.partition_point(|c| *c < first);
    let end = offsets.partition_point(|c| *c < last);
    units += BigRational::from_integer(BigInt::from(end.saturating_sub(start)));
    units
}

/// Exact `μ_n((x − r, x + r))`.
pub fn ball_mass(measure: &StepMeasure, x: &BigRational, r: &BigRational, circle: bool) -> Result<BigRational> {
    let one = BigRational::one();
    if !r.is_positive() || r > &one {
        return Err(Error::Precondition(format!("radius must lie in (0, 1], got {r}")));
    }
    if x.is_negative() || x >= &one {
        return Err(Error::Precondition(format!("centre must lie in [0, 1), got {x}")));
    }
    let zero = BigRational::zero();
    let lo = x - r;
    let hi = x + r;
    let units = if circle {
        if (r * BigInt::from(2)) >= one {
            BigRational::from_integer(BigInt::from(measure.cell_count()))
        } else if lo < zero {
            interval_cell_units(measure, &(lo + &one), &one) + interval_cell_units(measure, &zero, &hi)
        } else if hi > one {
            interval_cell_units(measure, &lo, &one) + interval_cell_units(measure, &zero, &(hi - &one))
        } else {
            interval_cell_units(measure, &lo, &hi)
        }
    } else {
        let lo = if lo < zero { zero.clone() } else { lo };
        let hi = if hi > one { one.clone() } else { hi };
        interval_cell_units(measure, &lo, &hi)
    };
    Ok(units * measure.mass_per_cell())
}

pub fn ball_mass_tree(
    tree: &MeasureTree,
    n: usize,
    x: &BigRational,
    r: &BigRational,
    circle: bool,
) -> Result<BigRational> {
    ball_mass(&level_intervals(tree, n)?, x, r, circle)
}

/// Dyadic radii `2^{-j}` in `[floor, 1]`.
pub fn dyadic_radii(floor: &BigRational) -> Vec<BigRational> {
    let mut out = Vec::new();
    let mut r = BigRational::one();
    while &r >= floor && r.is_positive() {
        out.push(r.clone());
        r /= BigInt::from(2);
    }
    out
}

/// One `(x, r)` evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallSample {
    pub x: String,
    pub r: String,
    pub mass: String,
    pub ratio: f64,
}

/// Exact decision of `mass ≤ c·r^t` (`upper`) or `mass ≥ c·r^t`.
fn compare_scaled_power(
    mass: &BigRational,
    c: &BigRational,
    r: &BigRational,
    t: RationalExponent,
    upper: bool,
) -> bool {
    let lhs = rational_pow(mass, t.den);
    let rhs = rational_pow(c, t.den) * rational_pow(r, t.num);
    if upper {
        lhs <= rhs
    } else {
        lhs >= rhs
    }
}

fn ratio(mass: &BigRational, r: &BigRational, t: f64) -> f64 {
    if mass.is_zero() {
        return 0.0;
    }
    (ln_rational(mass) - t * ln_rational(r)).exp()
}

/// The two constants read off the construction for variant A:
/// `μ(B(x,r)) ≤ (2M+1)·r^t` everywhere and `μ(B(x,r)) ≥ r^t/(M^t|X|)` on the support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AhlforsReference {
    pub upper_constant: u64,
    pub lower_constant: f64,
    pub upper_holds: bool,
    pub lower_holds: bool,
    /// Whether the comparisons were exact (t read as a small rational).
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub level: usize,
    pub t: f64,
    pub radii: Vec<String>,
    pub points_scanned: usize,
    pub c_upper: f64,
    pub c_lower: f64,
    pub worst_upper: BallSample,
    pub worst_lower: BallSample,
    pub reference: Option<AhlforsReference>,
    #[serde(skip)]
    pub samples: Vec<BallSample>,
}

impl RegularityReport {
    /// `x,r,mass,ratio` rows.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,r,mass,ratio")?;
        for s in &self.samples {
            writeln!(out, "{},{},{},{:?}", s.x, s.r, s.mass, s.ratio)?;
        }
        Ok(())
    }
}

/// Lowest radius at which `μ_n` stands in for the limit measure: `M_n/Q_n`.
pub fn resolution_floor(tree: &MeasureTree, n: usize) -> BigRational {
    if n == 0 {
        return BigRational::one();
    }
    let s = tree.schedule();
    rat(BigInt::from(s.base(n)), BigInt::from(s.resolution(n).clone()))
}

/// Default number of stratified grid points added to the upper scan.
pub const DEFAULT_GRID: u64 = 512;

/// Scans `μ_n(B(x, r))/r^t`. Upper ratios use cell endpoints, midpoints
/// and a uniform grid; lower ratios use cell midpoints, which lie in the
/// support at every finite level.
pub fn frostman_scan(
    tree: &MeasureTree,
    n: usize,
    t: f64,
    radii: &[BigRational],
    grid: u64,
) -> Result<RegularityReport> {
    let measure = level_intervals(tree, n)?;
    if radii.is_empty() {
        return Err(Error::InvalidArgument("no radii given".into()));
    }
    let floor = resolution_floor(tree, n);
    if let Some(bad) = radii.iter().find(|r| **r < floor || **r > BigRational::one()) {
        return Err(Error::Precondition(format!("radius {bad} outside [M_n/Q_n, 1] = [{floor}, 1]")));
    }
    let q = BigInt::from(measure.denominator().clone());
    let two_q: BigInt = &q * BigInt::from(2);
    let mut upper_points: Vec<BigRational> = Vec::new();
    let mut midpoints: Vec<BigRational> = Vec::new();
    for c in measure.offsets() {
        let c = BigInt::from(c.clone());
        upper_points.push(rat(c.clone(), q.clone()));
        let next: BigInt = &c + BigInt::one();
        if next < q {
            upper_points.push(rat(next, q.clone()));
        }
        midpoints.push(rat(&c * BigInt::from(2) + BigInt::one(), two_q.clone()));
    }
    upper_points.extend(midpoints.iter().cloned());
    upper_points.extend((0..grid).map(|i| rat(BigInt::from(i), BigInt::from(grid.max(1)))));
    upper_points.sort();
    upper_points.dedup();

    let circle = true;
    let eval = |x: &BigRational, r: &BigRational| -> Result<(BigRational, BallSample)> {
        let x: &BigRational = x;
        let mass = ball_mass(&measure, x, r, circle)?;
        let sample =
            BallSample { x: x.to_string(), r: r.to_string(), mass: mass.to_string(), ratio: ratio(&mass, r, t) };
        Ok((mass, sample))
    };
    let upper: Vec<(BigRational, BigRational, BallSample)> = upper_points
        .par_iter()
        .flat_map_iter(|x| radii.iter().map(move |r| (x, r)))
        .map(|(x, r)| eval(x, r).map(|(m, s)| (m, r.clone(), s)))
        .collect::<Result<Vec<_>>>()?;
    let lower: Vec<(BigRational, BigRational, BallSample)> = midpoints
        .par_iter()
        .flat_map_iter(|x| radii.iter().map(move |r| (x, r)))
        .map(|(x, r)| eval(x, r).map(|(m, s)| (m, r.clone(), s)))
        .collect::<Result<Vec<_>>>()?;

    let worst_upper = upper.iter().max_by(|a, b| a.2.ratio.total_cmp(&b.2.ratio)).expect("nonempty scan");
    let worst_lower = lower.iter().min_by(|a, b| a.2.ratio.total_cmp(&b.2.ratio)).expect("nonempty support");

    let reference = (tree.schedule().variant() == Variant::A).then(|| {
        let schedule = tree.schedule();
        let m = schedule.base(1);
        let size = schedule.max_branching();
        let upper_constant = 2 * m + 1;
        let lower_constant = 1.0 / ((m as f64).powf(t) * size as f64);
        match RationalExponent::from_f64(t) {
            Some(te) => {
                let cu = BigRational::from_integer(BigInt::from(upper_constant));
                let upper_holds = upper.par_iter().all(|(mass, r, _)| compare_scaled_power(mass, &cu, r, te, true));
                // mass ≥ r^t/(M^t|X|)  ⇔  (mass·|X|)^q · M^p ≥ r^p
                let lower_holds = lower.par_iter().all(|(mass, r, _)| {
                    let lhs = rational_pow(&(mass * BigInt::from(size)), te.den)
                        * rational_pow(&BigRational::from_integer(BigInt::from(m)), te.num);
                    lhs >= rational_pow(r, te.num)
                });
                AhlforsReference { upper_constant, lower_constant, upper_holds, lower_holds, exact: true }
            }
            None => AhlforsReference {
                upper_constant,
                lower_constant,
                upper_holds: worst_upper.2.ratio <= upper_constant as f64,
                lower_holds: worst_lower.2.ratio >= lower_constant,
                exact: false,
            },
        }
    });

    Ok(RegularityReport {
        level: n,
        t,
        radii: radii.iter().map(|r| r.to_string()).collect(),
        points_scanned: upper_points.len(),
        c_upper: worst_upper.2.ratio,
        c_lower: worst_lower.2.ratio,
        worst_upper: worst_upper.2.clone(),
        worst_lower: worst_lower.2.clone(),
        reference,
        samples: upper.into_iter().map(|(_, _, s)| s).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelMassCheck {
    pub level: usize,
    /// `1/(n+1)!`
    pub radius: String,
    pub max_mass: String,
    /// `2/P_n`
    pub bound: String,
    pub holds: bool,
    /// `max_mass / r^{1−2ε}`
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremBReport {
    pub epsilon: f64,
    pub levels: Vec<LevelMassCheck>,
    pub all_hold: bool,
    /// Least-squares slope of `ln ratio` against level; ≤ 0 means the
    /// ratio is nonincreasing in trend.
    pub ratio_trend_slope: f64,
    /// Levels where the ratio still exceeds 1 (expected only for small n).
    pub ratio_above_one: Vec<usize>,
}

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// For each level `n`, `r = 1/(n+1)!`: the exact maximum of
/// `μ_n(x − r, x + r)` over `x` against `2/P_n` (an interval this short
/// meets at most two level-`n` cells). The maximum of the piecewise-linear
/// map `x ↦ μ_n(B(x, r))` is attained where `x ± r` hits a cell boundary,
/// so those centres are scanned, plus cell midpoints.
pub fn theorem_b_mass_check(tree: &MeasureTree, levels: &[usize], epsilon: f64) -> Result<TheoremBReport> {
    if tree.schedule().variant() != Variant::B {
        return Err(Error::InvalidArgument("mass check applies to variant B trees".into()));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Precondition(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    let mut checks = Vec::with_capacity(levels.len());
    for &n in levels {
        let measure = level_intervals(tree, n)?;
        let r = rat(BigInt::one(), BigInt::from(factorial(n as u64 + 1)));
        let q = BigInt::from(measure.denominator().clone());
        let one = BigRational::one();
        let wrap = |v: BigRational| {
            let f = v.floor();
            v - f
        };
        let mut centres: Vec<BigRational> = Vec::new();
        for c in measure.offsets() {
            let c = BigInt::from(c.clone());
            for edge in [rat(c.clone(), q.clone()), rat(&c + BigInt::one(), q.clone())] {
                centres.push(wrap(&edge + &r));
                centres.push(wrap(&edge - &r));
            }
            centres.push(rat(&c * BigInt::from(2) + BigInt::one(), &q * BigInt::from(2)));
        }
        centres.retain(|x| x < &one);
        centres.sort();
        centres.dedup();
        let max_mass = centres
            .par_iter()
            .map(|x| ball_mass(&measure, x, &r, true))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or_default();
        let bound = rat(BigInt::from(2), BigInt::from(tree.schedule().cell_count(n).clone()));
        let ratio = ratio(&max_mass, &r, 1.0 - 2.0 * epsilon);
        checks.push(LevelMassCheck {
            level: n,
            radius: r.to_string(),
            max_mass: max_mass.to_string(),
            bound: bound.to_string(),
            holds: max_mass <= bound,
            ratio,
        });
    }
    let pts: Vec<(f64, f64)> =
        checks.iter().filter(|c| c.ratio > 0.0).map(|c| (c.level as f64, c.ratio.ln())).collect();
    let ratio_trend_slope = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        0.0
    };
    Ok(TheoremBReport {
        epsilon,
        all_hold: checks.iter().all(|c| c.holds),
        ratio_above_one: checks.iter().filter(|c| c.ratio > 1.0).map(|c| c.level).collect(),
        levels: checks,
        ratio_trend_slope,
    })
}

/// Parses `p/q` or an integer into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidArgument(format!("not a rational number: {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(p, q))
        }
        None => {
            // decimals are read exactly: "0.125" = 125/1000
            let t = s.trim();
            match t.split_once('.') {
                Some((int, frac)) => {
                    let digits = format!("{int}{frac}");
                    let p: BigInt = digits.parse().map_err(|_| bad())?;
                    let q = num_traits::pow(BigInt::from(10), frac.len());
                    Ok(BigRational::new(p, q))
                }
                None => Ok(BigRational::from_integer(t.parse().map_err(|_| bad())?)),
            }
        }
    }
}

/// `(a mod 1)` for rationals; used for wrapping centres onto `[0, 1)`.
pub fn frac(v: &BigRational) -> BigRational {
    let (q, _) = v.numer().div_mod_floor(v.denom());
    v - BigRational::from_integer(q)
}

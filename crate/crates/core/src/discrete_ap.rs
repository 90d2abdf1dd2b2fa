//! Discrete additive combinatorics: AP-free sets, the doubling embedding,
//! the interval-union progression test and the `Z/nZ` uniformity demo.
//!
//! Throughout, a *nontrivial* 3-AP on the circle `R/Z` is a triple of
//! pairwise-distinct points `x, y, z` with `x + z ≡ 2y (mod 1)`.

use std::collections::HashSet;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default size up to which [`behrend_sphere`] searches exhaustively.
pub const BEHREND_EXHAUSTIVE_THRESHOLD: u64 = 64;

/// Default modulus up to which [`max_property_ii`] searches exhaustively.
pub const PROPERTY_II_EXHAUSTIVE_THRESHOLD: u64 = 25;

/// A subset of `Z/mZ`, elements kept sorted and distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawResidueSet")]
pub struct ResidueSet {
    #[serde(rename = "m")]
    modulus: u64,
    elements: Vec<u64>,
}

#[derive(Deserialize)]
struct RawResidueSet {
    m: u64,
    elements: Vec<u64>,
}

impl TryFrom<RawResidueSet> for ResidueSet {
    type Error = Error;

    fn try_from(raw: RawResidueSet) -> Result<Self> {
        ResidueSet::new(raw.m, raw.elements)
    }
}

impl ResidueSet {
    /// Builds a set from arbitrary-order residues. Rejects duplicates and
    /// elements outside `[0, m)`.
    pub fn new(modulus: u64, elements: impl IntoIterator<Item = u64>) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::InvalidArgument("modulus must be at least 1".into()));
        }
        let mut elements: Vec<u64> = elements.into_iter().collect();
        elements.sort_unstable();
        if let Some(&bad) = elements.iter().find(|&&e| e >= modulus) {
            return Err(Error::InvalidArgument(format!("element {bad} outside [0, {modulus})")));
        }
        if elements.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("duplicate residues".into()));
        }
        Ok(ResidueSet { modulus, elements })
    }

    /// All of `Z/mZ`.
    pub fn full(modulus: u64) -> Result<Self> {
        ResidueSet::new(modulus, 0..modulus)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, x: u64) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    /// `(X + shift) mod m`, re-sorted.
    pub fn translate(&self, shift: u64) -> ResidueSet {
        let m = self.modulus;
        let s = shift % m;
        let mut elements: Vec<u64> = self.elements.iter().map(|&e| (e + s) % m).collect();
        elements.sort_unstable();
        ResidueSet { modulus: m, elements }
    }

    /// The lexicographically smallest translate. Two sets are translates of
    /// each other iff their canonical translates coincide.
    pub fn canonical_translate(&self) -> ResidueSet {
        if self.elements.is_empty() {
            return self.clone();
        }
        let m = self.modulus;
        self.elements
            .iter()
            .map(|&e| self.translate(m - e))
            .min_by(|a, b| a.elements.cmp(&b.elements))
            .expect("nonempty")
    }
}

/// How a base set was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Provably optimal: exhaustive search.
    Exhaustive,
    /// A lower-bound construction, not necessarily maximal.
    Heuristic,
    /// Supplied by the caller.
    Given,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApKind {
    IntegerAp,
    ModularAp,
    IntervalSpanningAp,
}

/// A progression witness `(a, b, c)`, with `a + c = 2b` in the sense given by `kind`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApWitness {
    pub triple: [u64; 3],
    pub kind: ApKind,
}

/// True iff no `x < y < z` in `set` has `x + z = 2y` (integers, no wraparound).
pub fn is_ap_free(set: &[u64]) -> bool {
    let members: HashSet<u64> = set.iter().copied().collect();
    let mut sorted: Vec<u64> = members.iter().copied().collect();
    sorted.sort_unstable();
    for (i, &x) in sorted.iter().enumerate() {
        for &z in &sorted[i + 1..] {
            if (x + z) % 2 == 0 && members.contains(&((x + z) / 2)) {
                return false;
            }
        }
    }
    true
}

/// Lexicographically smallest `(a, b, c)` of pairwise-distinct residues in
/// `set` with `a + c ≡ 2b (mod n)`.
pub fn find_3ap_mod(set: &ResidueSet) -> Option<ApWitness> {
    let n = set.modulus();
    for &a in set.elements() {
        for &b in set.elements() {
            if b == a {
                continue;
            }
            let c = ((2 * b as u128 + n as u128 - a as u128) % n as u128) as u64;
            if c != a && c != b && set.contains(c) {
                return Some(ApWitness { triple: [a, b, c], kind: ApKind::ModularAp });
            }
        }
    }
    None
}

/// Largest nonzero Fourier coefficient of the indicator of `set`, with the
/// `1/n` normalization, and the uniformity threshold `|A|²/n² − 1/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Uniformity {
    pub max_coeff: f64,
    pub argmax: u64,
    pub threshold: f64,
}

pub fn dft_uniformity(set: &ResidueSet) -> Result<Uniformity> {
    let n = set.modulus();
    if n < 2 {
        return Err(Error::InvalidArgument("uniformity needs n >= 2 (no nonzero frequency otherwise)".into()));
    }
    let mut max_coeff = -1.0f64;
    let mut argmax = 1;
    for k in 1..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for &a in set.elements() {
            // exact phase reduction before converting to floating point
            let r = ((a as u128 * k as u128) % n as u128) as f64;
            acc += Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * r / n as f64);
        }
        let v = acc.norm() / n as f64;
        if v > max_coeff {
            max_coeff = v;
            argmax = k;
        }
    }
    let size = set.len() as f64;
    let nf = n as f64;
    Ok(Uniformity { max_coeff, argmax, threshold: size * size / (nf * nf) - 1.0 / nf })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityReport {
    pub uniformity: Uniformity,
    pub condition_holds: bool,
    pub ap: Option<ApWitness>,
}

pub fn uniformity_demo(set: &ResidueSet) -> Result<UniformityReport> {
    let uniformity = dft_uniformity(set)?;
    Ok(UniformityReport {
        uniformity,
        condition_holds: uniformity.max_coeff < uniformity.threshold,
        ap: find_3ap_mod(set),
    })
}

/// A set where the uniformity condition holds yet no 3-AP mod `n` exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityCounterexample {
    pub set: ResidueSet,
    pub uniformity: Uniformity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformitySweep {
    pub n_min: u64,
    pub exhaustive_max: u64,
    pub random_max: u64,
    pub samples_per_n: u64,
    pub seed: u64,
    pub sets_checked: u64,
    pub condition_held: u64,
    pub counterexamples: Vec<UniformityCounterexample>,
}

/// Runs [`uniformity_demo`] on every subset of `Z/nZ` for
/// `n_min ≤ n ≤ exhaustive_max`, and on `samples` uniformly random subsets
/// for `n_min ≤ n ≤ random_max`. Random subsets take their membership bits
/// from `derive_seed(seed, ·)`.
pub fn uniformity_sweep(
    n_min: u64,
    exhaustive_max: u64,
    random_max: u64,
    samples: u64,
    seed: u64,
) -> Result<UniformitySweep> {
    if n_min < 2 {
        return Err(Error::InvalidArgument("uniformity needs n >= 2".into()));
    }
    if exhaustive_max > 24 || random_max > 64 {
        return Err(Error::InvalidArgument(
            "exhaustive sweep is limited to n <= 24 and random sampling to n <= 64".into(),
        ));
    }
    let check = |n: u64, mask: u64| -> Result<(bool, Option<UniformityCounterexample>)> {
        let set = ResidueSet::new(n, (0..n).filter(|i| mask >> i & 1 == 1))?;
        let report = uniformity_demo(&set)?;
        let bad = (report.condition_holds && report.ap.is_none())
            .then_some(UniformityCounterexample { set, uniformity: report.uniformity });
        Ok((report.condition_holds, bad))
    };
    let mut jobs: Vec<(u64, u64)> = Vec::new();
    for n in n_min..=exhaustive_max {
        jobs.extend((0..1u64 << n).map(|mask| (n, mask)));
    }
    for n in n_min..=random_max {
        let keep = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        jobs.extend((0..samples).map(|i| (n, crate::cantor_tree::derive_seed(seed, n << 32 | i) & keep)));
    }
    let results = jobs.par_iter().map(|&(n, mask)| check(n, mask)).collect::<Result<Vec<_>>>()?;
    let mut sweep = UniformitySweep {
        n_min,
        exhaustive_max,
        random_max,
        samples_per_n: samples,
        seed,
        sets_checked: results.len() as u64,
        condition_held: 0,
        counterexamples: Vec::new(),
    };
    for (held, bad) in results {
        sweep.condition_held += held as u64;
        if let Some(bad) = bad {
            if !sweep.counterexamples.contains(&bad) {
                sweep.counterexamples.push(bad);
            }
        }
    }
    Ok(sweep)
}

/// An AP-free subset of `{1, …, m'}` together with how it was found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BehrendSet {
    pub m_prime: u64,
    pub elements: Vec<u64>,
    pub method: Method,
    /// `(d, digits, norm)` of the winning sphere shell, heuristic method only.
    pub sphere: Option<(u64, u32, u64)>,
}

/// AP-free subset of `{1, …, m'}` using the default exhaustive threshold.
pub fn behrend_sphere(m_prime: u64) -> BehrendSet {
    behrend_sphere_with_threshold(m_prime, BEHREND_EXHAUSTIVE_THRESHOLD)
}

pub fn behrend_sphere_with_threshold(m_prime: u64, exhaustive_threshold: u64) -> BehrendSet {
    let result = if m_prime == 0 {
        BehrendSet { m_prime, elements: Vec::new(), method: Method::Exhaustive, sphere: None }
    } else if m_prime <= exhaustive_threshold.min(127) {
        BehrendSet { m_prime, elements: max_ap_free(m_prime), method: Method::Exhaustive, sphere: None }
    } else {
        let (elements, params) = sphere_shell(m_prime);
        BehrendSet { m_prime, elements, method: Method::Heuristic, sphere: Some(params) }
    };
    debug_assert!(is_ap_free(&result.elements));
    result
}

/// Lexicographically smallest maximum AP-free subset of `{1, …, n}`, `n ≤ 127`.
///
/// Uses `r(len)` for every shorter prefix length as the bound on what a
/// suffix can still contribute, since `{i, …, n}` is a translate of
/// `{1, …, n − i + 1}`.
fn max_ap_free(n: u64) -> Vec<u64> {
    assert!((1..=127).contains(&n));
    let n = n as usize;
    // best[len] = maximum AP-free size inside an interval of `len` integers
    let mut best = vec![0usize; n + 1];
    for len in 1..=n {
        let target = best[len - 1] + 1;
        // provisional upper bound while searching at this length
        best[len] = target;
        // A set beating best[len-1] must use both endpoints.
        let found = ap_free_search(len, target, &best, true).is_some();
        best[len] = if found { target } else { best[len - 1] };
    }
    let set = ap_free_search(n, best[n], &best, false).expect("maximum is attainable");
    set.into_iter().map(|e| e as u64 + 1).collect()
}

/// Depth-first search (include-before-exclude, ascending) for an AP-free
/// subset of `{0, …, len−1}` of exactly `target` elements. The first hit is
/// the lexicographically smallest such set.
fn ap_free_search(len: usize, target: usize, best: &[usize], endpoints: bool) -> Option<Vec<usize>> {
    struct Ctx<'a> {
        len: usize,
        target: usize,
        best: &'a [usize],
        endpoints: bool,
        chosen: Vec<usize>,
    }

    fn go(ctx: &mut Ctx<'_>, next: usize, forbidden: u128) -> bool {
        let have = ctx.chosen.len();
        if have == ctx.target {
            return !ctx.endpoints || ctx.chosen.last() == Some(&(ctx.len - 1));
        }
        if next >= ctx.len {
            return false;
        }
        let remaining = ctx.len - next;
        if have + ctx.best[remaining] < ctx.target {
            return false;
        }
        if forbidden & (1u128 << next) == 0 {
            let mut f = forbidden;
            for &x in &ctx.chosen {
                let z = 2 * next - x;
                if z < ctx.len {
                    f |= 1u128 << z;
                }
            }
            ctx.chosen.push(next);
            if go(ctx, next + 1, f) {
                return true;
            }
            ctx.chosen.pop();
        }
        if ctx.endpoints && next == 0 {
            return false;
        }
        go(ctx, next + 1, forbidden)
    }

    if target == 0 {
        return Some(Vec::new());
    }
    let mut ctx = Ctx { len, target, best, endpoints, chosen: Vec::with_capacity(target) };
    go(&mut ctx, 0, 0).then_some(ctx.chosen)
}

/// Classical sphere-shell construction. Digit vectors with digits below
/// `d/2` add without carries, and a sphere contains no three collinear
/// equally spaced points, so each shell is AP-free. Returns the largest
/// shell fitting in `{1, …, m'}` over `d ∈ 3..=40`, digit counts up to
/// `⌈log_d m'⌉ + 1`; ties keep the first shell in scan order.
fn sphere_shell(m_prime: u64) -> (Vec<u64>, (u64, u32, u64)) {
    let mut best: (Vec<u64>, (u64, u32, u64)) = (vec![1], (0, 0, 0));
    for d in 3..=40u64 {
        let max_digits = digits_needed(m_prime, d) + 1;
        let half = d.div_ceil(2); // digits 0 ≤ x_i < d/2
        for k in 1..=max_digits {
            let mut shells: std::collections::BTreeMap<u64, Vec<u64>> = Default::default();
            enumerate_digits(d, k, half, m_prime, &mut shells);
            for (norm, values) in shells {
                if values.len() > best.0.len() {
                    let mut v = values;
                    v.sort_unstable();
                    best = (v, (d, k, norm));
                }
            }
        }
    }
    best
}

fn digits_needed(m: u64, d: u64) -> u32 {
    let mut k = 0;
    let mut p = 1u128;
    while p < m as u128 {
        p *= d as u128;
        k += 1;
    }
    k.max(1)
}

fn enumerate_digits(d: u64, k: u32, half: u64, m_prime: u64, shells: &mut std::collections::BTreeMap<u64, Vec<u64>>) {
    // value + 1 must lie in {1, …, m'}
    #[allow(clippy::too_many_arguments)]
    fn rec(
        pos: u32,
        k: u32,
        d: u64,
        half: u64,
        place: u128,
        value: u128,
        norm: u64,
        limit: u128,
        shells: &mut std::collections::BTreeMap<u64, Vec<u64>>,
    ) {
        if value >= limit {
            return;
        }
        if pos == k {
            shells.entry(norm).or_default().push(value as u64 + 1);
            return;
        }
        for digit in 0..half {
            let v = value + digit as u128 * place;
            if v >= limit {
                break;
            }
            rec(pos + 1, k, d, half, place * d as u128, v, norm + digit * digit, limit, shells);
        }
    }
    rec(0, k, d, half, 1, 0, 0, m_prime as u128, shells);
}

/// `{2x mod m : x ∈ X'}`. Every element of `X'` must be at most `⌊m/5⌋`,
/// which rules out wraparound progressions.
pub fn double_embed(x_prime: &[u64], m: u64) -> Result<ResidueSet> {
    if m == 0 {
        return Err(Error::InvalidArgument("modulus must be positive".into()));
    }
    let slack = m / 5;
    if let Some(&bad) = x_prime.iter().find(|&&x| x > slack) {
        return Err(Error::Precondition(format!("element {bad} exceeds floor(m/5) = {slack}")));
    }
    ResidueSet::new(m, x_prime.iter().map(|&x| (2 * x) % m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PropertyIi {
    pub holds: bool,
    pub witness: Option<ApWitness>,
}

/// Decides whether the union of cells `[j/m, (j+1)/m)`, `j ∈ X`, contains a
/// nontrivial 3-AP not confined to a single cell.
///
/// Points `x ∈ I_a`, `y ∈ I_b`, `z ∈ I_c` (pairwise distinct) with
/// `x + z ≡ 2y (mod 1)` exist iff `a, b, c` are not all equal and
/// `(a + c − 2b) mod m ∈ {m−1, 0, 1}`: the offsets inside the cells make
/// `m(x + z − 2y) − (a + c − 2b)` range over the open interval `(−2, 2)`.
/// The verdict is translation invariant.
///
/// The witness prefers pairwise-distinct index triples, then the
/// lexicographically smallest triple.
pub fn property_ii_oracle(set: &ResidueSet) -> PropertyIi {
    let m = set.modulus();
    let mut fallback: Option<[u64; 3]> = None;
    for &a in set.elements() {
        for &b in set.elements() {
            // c ≡ 2b − a + s, s ∈ {−1, 0, 1}
            let centre = (2 * b as u128 + m as u128 - a as u128) % m as u128;
            let mut candidates: Vec<u64> = [m as u128 - 1, 0, 1]
                .iter()
                .map(|&s| ((centre + s) % m as u128) as u64)
                .filter(|&c| set.contains(c) && !(a == b && b == c))
                .collect();
            candidates.sort_unstable();
            candidates.dedup();
            for c in candidates {
                if a != b && b != c && a != c {
                    return PropertyIi {
                        holds: false,
                        witness: Some(ApWitness { triple: [a, b, c], kind: ApKind::IntervalSpanningAp }),
                    };
                }
                if fallback.is_none() {
                    fallback = Some([a, b, c]);
                }
            }
        }
    }
    match fallback {
        Some(triple) => {
            PropertyIi { holds: false, witness: Some(ApWitness { triple, kind: ApKind::IntervalSpanningAp }) }
        }
        None => PropertyIi { holds: true, witness: None },
    }
}

/// Brute-force counterpart of [`property_ii_oracle`] that works with actual
/// points. Every cell is sampled at `grid` equally spaced rational points;
/// for each sampled pair `(x, z)` both circle midpoints `y = (x+z)/2` and
/// `y = (x+z+1)/2` are computed exactly and tested for membership in the
/// union. Returns `true` when no spanning progression is realized.
///
/// Points are integers over the common denominator `2·m·grid`.
pub fn property_ii_brute(set: &ResidueSet, grid: u64) -> bool {
    let m = set.modulus();
    let g = grid.max(1);
    let denom = 2 * m * g;
    let cell_width = 2 * g;
    let points: Vec<u64> = set.elements().iter().flat_map(|&j| (0..g).map(move |i| j * cell_width + 2 * i)).collect();
    let member = |p: u64| set.contains(p / cell_width);
    for &x in &points {
        for &z in &points {
            if x == z {
                continue;
            }
            for y in [(x + z) / 2, ((x + z + denom) / 2) % denom] {
                if y == x || y == z || !member(y) {
                    continue;
                }
                let (cx, cy, cz) = (x / cell_width, y / cell_width, z / cell_width);
                if !(cx == cy && cy == cz) {
                    return false;
                }
            }
        }
    }
    true
}

/// Result of [`max_property_ii`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BaseSet {
    pub set: ResidueSet,
    pub method: Method,
}

/// Maximum-cardinality subset of `Z/mZ` passing [`property_ii_oracle`]
/// (lexicographically smallest among maxima) for `m ≤ exhaustive_threshold`;
/// above it, the doubled Behrend set `2·behrend_sphere(⌊m/5⌋)`.
pub fn max_property_ii(m: u64, exhaustive_threshold: u64) -> Result<BaseSet> {
    if m < 2 {
        return Err(Error::InvalidArgument("max_property_ii needs m >= 2".into()));
    }
    if m <= exhaustive_threshold {
        let elements = exhaustive_property_ii(m);
        return Ok(BaseSet { set: ResidueSet::new(m, elements)?, method: Method::Exhaustive });
    }
    let m_prime = m / 5;
    let set = if m_prime == 0 { ResidueSet::new(m, [0])? } else { double_embed(&behrend_sphere(m_prime).elements, m)? };
    Ok(BaseSet { set, method: Method::Heuristic })
}

fn spanning(a: u64, b: u64, c: u64, m: u64) -> bool {
    if a == b && b == c {
        return false;
    }
    let r = (a as u128 + c as u128 + 2 * m as u128 - 2 * b as u128) % m as u128;
    r == 0 || r == 1 || r == m as u128 - 1
}

/// The lexicographically smallest maximum set always contains 0 (translate
/// any maximum set so its least element is 0), so the search fixes 0.
fn exhaustive_property_ii(m: u64) -> Vec<u64> {
    fn compatible(chosen: &[u64], e: u64, m: u64) -> bool {
        let with = |u: u64| chosen.iter().copied().chain(std::iter::once(u));
        for u in with(e) {
            for v in with(e) {
                if spanning(e, u, v, m) || spanning(u, e, v, m) {
                    return false;
                }
            }
        }
        true
    }

    fn go(chosen: &mut Vec<u64>, next: u64, m: u64, best: &mut Vec<u64>) {
        if chosen.len() > best.len() {
            *best = chosen.clone();
        }
        if next >= m {
            return;
        }
        // no two cyclically adjacent residues, so at most ⌈r/2⌉ of the r remaining
        let remaining = m - next;
        if chosen.len() as u64 + remaining.div_ceil(2) <= best.len() as u64 {
            return;
        }
        if compatible(chosen, next, m) {
            chosen.push(next);
            go(chosen, next + 1, m, best);
            chosen.pop();
        }
        go(chosen, next + 1, m, best);
    }

    let mut chosen = vec![0];
    let mut best = Vec::new();
    if compatible(&[], 0, m) {
        go(&mut chosen, 2, m, &mut best);
    }
    if best.is_empty() {
        best.push(0);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rs(m: u64, e: &[u64]) -> ResidueSet {
        ResidueSet::new(m, e.iter().copied()).unwrap()
    }

    #[test]
    fn residue_set_validation() {
        assert!(ResidueSet::new(0, []).is_err());
        assert!(ResidueSet::new(5, [5]).is_err());
        assert!(ResidueSet::new(5, [1, 1]).is_err());
        assert_eq!(rs(5, &[3, 1]).elements(), &[1, 3]);
        assert_eq!(rs(10, &[7, 8]).canonical_translate().elements(), &[0, 1]);
    }

    #[test]
    fn ap_free_examples() {
        assert!(!is_ap_free(&[1, 3, 5]));
        assert!(is_ap_free(&[]));
        assert!(is_ap_free(&[1, 2, 4, 5]));
    }

    #[test]
    fn modular_ap_examples() {
        assert_eq!(find_3ap_mod(&rs(10, &[0, 1, 2])).unwrap().triple, [0, 1, 2]);
        assert!(find_3ap_mod(&rs(5, &[0, 1])).is_none());
        let w = find_3ap_mod(&rs(5, &[1, 3, 0])).unwrap();
        let [a, b, c] = w.triple;
        assert_eq!((a + c) % 5, (2 * b) % 5);
        assert_eq!(w.triple, [0, 3, 1]);
    }

    #[test]
    fn dft_examples() {
        assert!(dft_uniformity(&ResidueSet::full(9).unwrap()).unwrap().max_coeff < 1e-12);
        let single = dft_uniformity(&rs(4, &[0])).unwrap();
        assert!((single.max_coeff - 0.25).abs() < 1e-15);
        let pair = dft_uniformity(&rs(4, &[0, 2])).unwrap();
        assert!((pair.max_coeff - 0.5).abs() < 1e-15);
        assert_eq!(pair.argmax, 2);
        assert!(dft_uniformity(&rs(1, &[0])).is_err());
    }

    #[test]
    fn uniformity_sweep_small_n() {
        let low = uniformity_sweep(2, 8, 0, 0, 0).unwrap();
        assert_eq!(low.counterexamples.len(), 1);
        assert_eq!(low.counterexamples[0].set, ResidueSet::new(2, [0, 1]).unwrap());
        let rest = uniformity_sweep(3, 10, 16, 200, 9).unwrap();
        assert!(rest.counterexamples.is_empty());
        assert_eq!(rest.sets_checked, (3..=10).map(|n| 1u64 << n).sum::<u64>() + 14 * 200);
    }

    #[test]
    fn uniformity_demo_examples() {
        let full = uniformity_demo(&ResidueSet::full(7).unwrap()).unwrap();
        assert!(full.condition_holds && full.ap.is_some());
        let single = uniformity_demo(&rs(7, &[0])).unwrap();
        assert!(!single.condition_holds);
    }

    #[test]
    fn behrend_small_cases() {
        assert_eq!(behrend_sphere(1).elements, vec![1]);
        let five = behrend_sphere(5);
        assert_eq!(five.elements, vec![1, 2, 4, 5]);
        assert_eq!(five.method, Method::Exhaustive);
    }

    fn brute_max_ap_free(n: u64) -> usize {
        (0u32..1 << n)
            .filter_map(|mask| {
                let s: Vec<u64> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                is_ap_free(&s).then_some(s.len())
            })
            .max()
            .unwrap()
    }

    #[test]
    fn exhaustive_behrend_matches_subset_enumeration() {
        for n in 1..=14 {
            let got = behrend_sphere(n);
            assert_eq!(got.elements.len(), brute_max_ap_free(n), "n = {n}");
            assert!(is_ap_free(&got.elements));
        }
        // frozen from subset enumeration for n = 15..=20
        for (n, size) in [(15, 8), (16, 8), (17, 8), (18, 8), (19, 8), (20, 9)] {
            assert_eq!(behrend_sphere(n).elements.len(), size, "n = {n}");
        }
    }

    #[test]
    fn double_embed_examples() {
        assert_eq!(double_embed(&[1, 2], 10).unwrap().elements(), &[2, 4]);
        assert_eq!(double_embed(&[1, 2, 4, 5], 25).unwrap().elements(), &[2, 4, 8, 10]);
        assert!(matches!(double_embed(&[3], 10), Err(Error::Precondition(_))));
    }

    #[test]
    fn oracle_examples() {
        assert!(property_ii_oracle(&rs(2, &[0])).holds);
        let whole = property_ii_oracle(&rs(2, &[0, 1]));
        assert!(!whole.holds);
        assert_eq!(whole.witness.unwrap().triple, [0, 0, 1]);
        assert!(property_ii_oracle(&rs(25, &[2, 4, 8, 10])).holds);
        let bad = property_ii_oracle(&rs(10, &[0, 1, 2]));
        assert_eq!(bad.witness.unwrap().triple, [0, 1, 2]);
    }

    #[test]
    fn brute_force_agrees_on_examples() {
        for set in [rs(2, &[0]), rs(2, &[0, 1]), rs(25, &[2, 4, 8, 10]), rs(10, &[0, 1, 2])] {
            assert_eq!(property_ii_brute(&set, 4), property_ii_oracle(&set).holds, "{set:?}");
        }
    }

    #[test]
    fn max_property_ii_examples() {
        let two = max_property_ii(2, 25).unwrap();
        assert_eq!(two.set.elements(), &[0]);
        assert_eq!(max_property_ii(3, 25).unwrap().set.len(), 1);
        assert_eq!(max_property_ii(4, 25).unwrap().set.len(), 1);
        let ten = max_property_ii(10, 25).unwrap();
        assert!(ten.set.len() >= 2);
        assert!(property_ii_oracle(&ten.set).holds);
        assert_eq!(ten.method, Method::Exhaustive);
        let big = max_property_ii(60, 25).unwrap();
        assert_eq!(big.method, Method::Heuristic);
        assert!(property_ii_oracle(&big.set).holds);
    }
}

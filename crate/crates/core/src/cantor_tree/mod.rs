//! The random Cantor-series measures: schedules, the seeded tree of
//! translations, exact cell geometry and persistence.
//!
//! A node `j = (j_1 … j_n)` of the full tree `Σ*` owns the half-open cell
//! `[c/Q_n, (c+1)/Q_n)` with `c = Σ j_i · Q_n / Q_i`. A realized node at
//! level `n` keeps the children `(X + ℓ_j) mod M_{n+1}`, where `X` is the
//! level's base set and `ℓ_j` is drawn uniformly from `[M_{n+1}]`. The
//! level-`n` measure `μ_n` spreads mass `1/P_n` uniformly over each
//! surviving cell.

mod persist;
mod schedule;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub use persist::{load_tree, save_tree, tree_from_json, tree_to_json, TreeFile, TREE_FORMAT_VERSION};
pub use schedule::{schedule_a, schedule_b, schedule_b_with_threshold, Schedule, Variant};

/// A digit string `(j_1, …, j_n)`; the empty string is the root.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodePath(Vec<u64>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn new(digits: Vec<u64>) -> Self {
        NodePath(digits)
    }

    pub fn digits(&self) -> &[u64] {
        &self.0
    }

    pub fn level(&self) -> usize {
        self.0.len()
    }

    pub fn child(&self, digit: u64) -> NodePath {
        let mut d = self.0.clone();
        d.push(digit);
        NodePath(d)
    }

    /// Checks `j_i ∈ [M_i]` against a schedule.
    pub fn validate(&self, schedule: &Schedule) -> Result<()> {
        if self.level() > schedule.len() {
            return Err(Error::InvalidArgument(format!(
                "path of length {} exceeds schedule length {}",
                self.level(),
                schedule.len()
            )));
        }
        for (i, &d) in self.0.iter().enumerate() {
            let m = schedule.base(i + 1);
            if d >= m {
                return Err(Error::InvalidArgument(format!("digit {d} at position {} outside [0, {m})", i + 1)));
            }
        }
        Ok(())
    }
}

/// Dotted form `j1.j2.….jn`; the root is the empty string.
impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for NodePath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Ok(NodePath::root());
        }
        s.split('.')
            .map(|p| p.parse::<u64>().map_err(|_| Error::Schema(format!("bad path component {p:?} in {s:?}"))))
            .collect::<Result<Vec<_>>>()
            .map(NodePath)
    }
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The translation `ℓ_j ∈ [M]` of a node, a pure function of the seed and
/// the path.
///
/// Mixing: `h ← splitmix64(seed)`, then for each digit
/// `h ← splitmix64(h ^ splitmix64(digit + 1))`, finally
/// `h ← splitmix64(h ^ length)`. Draw `i` is `splitmix64(h + i·γ)` with the
/// golden-ratio increment `γ`; draws at or above the largest multiple of
/// `M` below `2^64` are rejected, so the result is exactly uniform.
pub fn derive_translation(seed: u64, path: &NodePath, base: u64) -> u64 {
    if base <= 1 {
        return 0;
    }
    let mut h = splitmix64(seed);
    for &d in path.digits() {
        h = splitmix64(h ^ splitmix64(d.wrapping_add(1)));
    }
    h = splitmix64(h ^ path.level() as u64);
    // accepted draws are v ≤ limit, and limit + 1 is a multiple of base
    let rejected = (u64::MAX % base + 1) % base;
    let limit = u64::MAX - rejected;
    let mut i = 0u64;
    loop {
        let v = splitmix64(h.wrapping_add(i.wrapping_mul(GOLDEN_GAMMA)));
        if v <= limit {
            return v % base;
        }
        i += 1;
    }
}

/// Derives the `index`-th run seed from a base seed.
pub fn derive_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ splitmix64(index.wrapping_add(0x5eed)))
}

/// A realized random tree, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureTree {
    schedule: Schedule,
    seed: u64,
    depth: usize,
    translations: BTreeMap<NodePath, u64>,
    /// `levels[n]` = `J_n`, sorted lexicographically (= by cell offset).
    levels: Vec<Vec<NodePath>>,
}

/// Realizes `J_0, …, J_depth` with translations derived from `seed`.
pub fn build_tree(schedule: &Schedule, seed: u64, depth: usize) -> Result<MeasureTree> {
    build_with(schedule, seed, depth, |path, base| Ok(derive_translation(seed, path, base)))
}

/// Builds from explicitly supplied translations; every internal node must
/// have one, in range.
pub(crate) fn build_from_translations(
    schedule: &Schedule,
    seed: u64,
    depth: usize,
    given: &BTreeMap<NodePath, u64>,
) -> Result<MeasureTree> {
    let tree = build_with(schedule, seed, depth, |path, base| {
        let l = *given.get(path).ok_or_else(|| Error::Schema(format!("missing translation for node {path:?}")))?;
        if l >= base {
            return Err(Error::Schema(format!("translation {l} at node \"{path}\" outside [0, {base})")));
        }
        Ok(l)
    })?;
    if tree.translations.len() != given.len() {
        return Err(Error::Schema("translations given for nodes outside the realized tree".into()));
    }
    Ok(tree)
}

fn build_with<F>(schedule: &Schedule, seed: u64, depth: usize, translation: F) -> Result<MeasureTree>
where
    F: Fn(&NodePath, u64) -> Result<u64> + Sync,
{
    if depth > schedule.len() {
        return Err(Error::InvalidArgument(format!("depth {depth} exceeds schedule length {}", schedule.len())));
    }
    let mut levels = vec![vec![NodePath::root()]];
    let mut translations = BTreeMap::new();
    for n in 0..depth {
        let base_set = &schedule.base_set(n + 1).set;
        let m = base_set.modulus();
        let expanded: Vec<(NodePath, u64, Vec<NodePath>)> = levels[n]
            .par_iter()
            .map(|node| {
                let shift = translation(node, m)?;
                let children = base_set.translate(shift).elements().iter().map(|&a| node.child(a)).collect();
                Ok((node.clone(), shift, children))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut next = Vec::with_capacity(expanded.len() * base_set.len());
        for (node, shift, children) in expanded {
            translations.insert(node, shift);
            next.extend(children);
        }
        assert_eq!(BigUint::from(next.len()), *schedule.cell_count(n + 1), "|J_n| must equal P_n");
        levels.push(next);
    }
    Ok(MeasureTree { schedule: schedule.clone(), seed, depth, translations, levels })
}

impl MeasureTree {
    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn translations(&self) -> &BTreeMap<NodePath, u64> {
        &self.translations
    }

    pub fn translation(&self, path: &NodePath) -> Option<u64> {
        self.translations.get(path).copied()
    }

    /// `J_n` in offset order.
    pub fn level(&self, n: usize) -> Result<&[NodePath]> {
        self.check_level(n)?;
        Ok(&self.levels[n])
    }

    /// The child set `X_j ⊂ [M_{n+1}]` of an internal node.
    pub fn child_set(&self, path: &NodePath) -> Option<crate::discrete_ap::ResidueSet> {
        let shift = self.translation(path)?;
        Some(self.schedule.base_set(path.level() + 1).set.translate(shift))
    }

    pub fn is_realized(&self, path: &NodePath) -> bool {
        path.level() <= self.depth && self.levels[path.level()].binary_search(path).is_ok()
    }

    pub(crate) fn check_level(&self, n: usize) -> Result<()> {
        if n > self.depth {
            return Err(Error::DepthExceeded { requested: n, depth: self.depth });
        }
        Ok(())
    }
}

/// Numerator `c` and denominator `Q_n` of the cell `[c/Q_n, (c+1)/Q_n)`.
pub fn interval_of(path: &NodePath, schedule: &Schedule) -> Result<(BigUint, BigUint)> {
    path.validate(schedule)?;
    Ok((offset_unchecked(path, schedule), schedule.resolution(path.level()).clone()))
}

fn offset_unchecked(path: &NodePath, schedule: &Schedule) -> BigUint {
    // Horner form of Σ j_i · Q_n / Q_i
    path.digits().iter().enumerate().fold(BigUint::zero(), |acc, (i, &d)| acc * schedule.base(i + 1) + d)
}

/// `μ_n` as exact data: `P_n` disjoint cells of width `1/Q_n`, each of mass `1/P_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMeasure {
    level: usize,
    denominator: BigUint,
    offsets: Vec<BigUint>,
    mass_per_cell: BigRational,
}

impl StepMeasure {
    /// Validates sortedness, range and total mass.
    pub fn new(level: usize, denominator: BigUint, offsets: Vec<BigUint>) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::InvalidArgument("denominator must be positive".into()));
        }
        if offsets.is_empty() {
            return Err(Error::InvalidArgument("a probability measure needs a cell".into()));
        }
        if offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("offsets must be strictly increasing".into()));
        }
        if offsets.last().is_some_and(|c| *c >= denominator) {
            return Err(Error::InvalidArgument("offset outside [0, Q)".into()));
        }
        let mass_per_cell = BigRational::new(BigInt::one(), BigInt::from(offsets.len()));
        Ok(StepMeasure { level, denominator, offsets, mass_per_cell })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn denominator(&self) -> &BigUint {
        &self.denominator
    }

    pub fn offsets(&self) -> &[BigUint] {
        &self.offsets
    }

    pub fn mass_per_cell(&self) -> &BigRational {
        &self.mass_per_cell
    }

    pub fn cell_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn total_mass(&self) -> BigRational {
        &self.mass_per_cell * BigInt::from(self.offsets.len())
    }

    pub fn contains_cell(&self, c: &BigUint) -> bool {
        self.offsets.binary_search(c).is_ok()
    }
}

/// The cells of `J_n`, sorted by offset.
pub fn level_intervals(tree: &MeasureTree, n: usize) -> Result<StepMeasure> {
    tree.check_level(n)?;
    let offsets: Vec<BigUint> = tree.levels[n].par_iter().map(|p| offset_unchecked(p, &tree.schedule)).collect();
    StepMeasure::new(n, tree.schedule.resolution(n).clone(), offsets)
}

/// `μ(I_j)`: `1/P_n` for a surviving level-`n` node, `0` otherwise.
pub fn cell_mass(tree: &MeasureTree, path: &NodePath) -> Result<BigRational> {
    path.validate(&tree.schedule)?;
    tree.check_level(path.level())?;
    if tree.is_realized(path) {
        let p = tree.schedule.cell_count(path.level());
        Ok(BigRational::new(BigInt::one(), BigInt::from(p.clone())))
    } else {
        Ok(BigRational::zero())
    }
}

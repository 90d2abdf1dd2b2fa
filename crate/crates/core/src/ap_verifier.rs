//! Finite-depth certification that the support of `μ_n` carries no
//! nontrivial 3-term progression spanning several cells.
//!
//! Two checks are combined. Every internal node's child set must satisfy
//! property (ii), and an exhaustive scan over triples of level-`n` cells
//! must find none on which a progression can be realized. Progressions
//! lying inside one level-`n` cell cannot be seen at depth `n` and are
//! reported as deferred.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::cantor_tree::{interval_of, MeasureTree, NodePath};
use crate::discrete_ap::{property_ii_oracle, ApWitness};
use crate::error::Result;

/// Verdict for one deduplicated child set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetVerdict {
    pub m: u64,
    /// Canonical translate of the child set.
    pub elements: Vec<u64>,
    pub holds: bool,
    /// Number of internal nodes whose child set is a translate of this one.
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeFailure {
    pub path: String,
    pub child_set: Vec<u64>,
    /// Witness on the canonical translate of `child_set`.
    pub witness: ApWitness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeCertificates {
    pub all_pass: bool,
    pub nodes_checked: usize,
    pub verdicts: Vec<SetVerdict>,
    pub failures: Vec<NodeFailure>,
}

/// Property (ii) for every internal node of the tree.
pub fn node_certificates(tree: &MeasureTree) -> NodeCertificates {
    node_certificates_to(tree, tree.depth())
}

/// Property (ii) for the internal nodes at levels `0..depth`.
pub fn node_certificates_to(tree: &MeasureTree, depth: usize) -> NodeCertificates {
    let mut cache: HashMap<(u64, Vec<u64>), (Option<ApWitness>, usize)> = HashMap::new();
    let mut order: Vec<(u64, Vec<u64>)> = Vec::new();
    let mut failures = Vec::new();
    let mut nodes_checked = 0;
    for n in 0..depth.min(tree.depth()) {
        for path in tree.level(n).expect("level within depth") {
            let child = tree.child_set(path).expect("internal node has a translation");
            let canon = child.canonical_translate();
            let key = (canon.modulus(), canon.elements().to_vec());
            let entry = cache.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                (property_ii_oracle(&canon).witness, 0)
            });
            entry.1 += 1;
            nodes_checked += 1;
            if let Some(witness) = entry.0 {
                failures.push(NodeFailure { path: path.to_string(), child_set: child.elements().to_vec(), witness });
            }
        }
    }
    let verdicts: Vec<SetVerdict> = order
        .into_iter()
        .map(|key| {
            let (witness, nodes) = &cache[&key];
            SetVerdict { m: key.0, elements: key.1, holds: witness.is_none(), nodes: *nodes }
        })
        .collect();
    NodeCertificates { all_pass: failures.is_empty(), nodes_checked, verdicts, failures }
}

/// Three level-`n` cells `[c/Q, (c+1)/Q)` holding pairwise-distinct points
/// `x, y, z` with `x + z ≡ 2y`. `defect` is the representative of
/// `c_a + c_c − 2c_b` in `{−1, 0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CellTriple {
    #[serde(serialize_with = "ser_cells")]
    pub cells: [BigUint; 3],
    pub defect: i8,
    pub paths: [String; 3],
}

fn ser_cells<S: serde::Serializer>(cells: &[BigUint; 3], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(3)?;
    for c in cells {
        t.serialize_element(&c.to_string())?;
    }
    t.end()
}

/// Every triple of level-`n` cells `(c_a, c_b, c_c)`, not all equal and
/// `c_a ≤ c_c`, with `c_a + c_c − 2c_b ∈ {−1, 0, 1}` modulo `Q_n` (or as
/// integers when `line` is set). For each pair `(c_a, c_c)` the admissible
/// values of `c_b` are solved for and looked up in the sorted offsets.
pub fn cross_cell_scan(tree: &MeasureTree, n: usize, line: bool) -> Result<Vec<CellTriple>> {
    let paths = tree.level(n)?;
    let q = tree.schedule().resolution(n).clone();
    let cells: Vec<(BigUint, &NodePath)> =
        paths.iter().map(|p| interval_of(p, tree.schedule()).map(|(c, _)| (c, p))).collect::<Result<_>>()?;
    debug_assert!(cells.windows(2).all(|w| w[0].0 < w[1].0));
    let find = |c: &BigUint| cells.binary_search_by(|probe| probe.0.cmp(c)).ok();
    let two = BigUint::from(2u8);
    let half_inverse = q.is_odd().then(|| (&q + BigUint::one()) / &two);

    let mut out: Vec<CellTriple> = (0..cells.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut found = Vec::new();
            for k in i..cells.len() {
                let sum = &cells[i].0 + &cells[k].0;
                for defect in [-1i8, 0, 1] {
                    // 2·c_b = sum − defect
                    let target = match defect {
                        1 if sum.is_zero() => {
                            if line {
                                continue;
                            }
                            &sum + &q - BigUint::one()
                        }
                        1 => &sum - BigUint::one(),
                        -1 => &sum + BigUint::one(),
                        _ => sum.clone(),
                    };
                    let mut middles: Vec<BigUint> = Vec::with_capacity(2);
                    if line {
                        if target.is_even() {
                            middles.push(&target / &two);
                        }
                    } else {
                        let v = &target % &q;
                        match &half_inverse {
                            Some(h) => middles.push((v * h) % &q),
                            None if v.is_even() => {
                                let b = &v / &two;
                                middles.push(&b + &q / &two);
                                middles.push(b);
                            }
                            None => {}
                        }
                    }
                    for b in middles {
                        if let Some(j) = find(&b) {
                            if i == j && j == k {
                                continue;
                            }
                            found.push(CellTriple {
                                cells: [cells[i].0.clone(), cells[j].0.clone(), cells[k].0.clone()],
                                defect,
                                paths: [cells[i].1.to_string(), cells[j].1.to_string(), cells[k].1.to_string()],
                            });
                        }
                    }
                }
            }
            found
        })
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

pub const ENDPOINT_NOTE: &str = "Cells are half-open, so no point is counted in two cells. \
Cell endpoints are almost surely absent from the limit support; this is an analytic fact \
and is not computed here.";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deferred {
    pub note: String,
    /// Level-`n` cells whose interior progressions need a deeper run.
    pub cells: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApCertificate {
    pub level: usize,
    pub line: bool,
    pub verdict: String,
    pub certified: bool,
    pub nodes: NodeCertificates,
    pub feasible_triples: Vec<CellTriple>,
    pub deferred: Deferred,
    pub endpoint_note: String,
}

/// Node certificates for levels below `n` together with the cross-cell scan at level `n`.
pub fn ap_report(tree: &MeasureTree, n: usize, line: bool) -> Result<ApCertificate> {
    let feasible_triples = cross_cell_scan(tree, n, line)?;
    let nodes = node_certificates_to(tree, n);
    let certified = nodes.all_pass && feasible_triples.is_empty();
    let deferred = Deferred {
        note: format!(
            "progressions inside a single level-{n} cell are not resolved at this depth; \
             rerun with a larger depth to refine them"
        ),
        cells: tree.level(n)?.iter().map(|p| p.to_string()).collect(),
    };
    Ok(ApCertificate {
        level: n,
        line,
        verdict: if certified { format!("certified-to-depth-{n}") } else { "not-certified".into() },
        certified,
        nodes,
        feasible_triples,
        deferred,
        endpoint_note: ENDPOINT_NOTE.into(),
    })
}

/// Integer form of the feasibility predicate for three cells of width `1/q`.
pub fn cells_feasible(a: &BigUint, b: &BigUint, c: &BigUint, q: &BigUint, line: bool) -> bool {
    if a == b && b == c {
        return false;
    }
    let lhs = a + c;
    let rhs = b * 2u8;
    if line {
        let d = if lhs >= rhs { &lhs - &rhs } else { &rhs - &lhs };
        return d <= BigUint::one();
    }
    let d = (&lhs + q * 2u8 - &rhs) % q;
    d.is_zero() || d.is_one() || d == q - BigUint::one()
}

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_from_translations, build_tree, MeasureTree, NodePath, Schedule, Variant};
use crate::discrete_ap::BaseSet;
use crate::error::{Error, Result};

pub const TREE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StoredBaseSet {
    m: u64,
    elements: Vec<u64>,
    method: crate::discrete_ap::Method,
}

/// On-disk form of a [`MeasureTree`]. Big integers (`Q_n`, offsets) are
/// never stored; they are recomputed from `M`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeFile {
    version: u32,
    variant: Variant,
    seed: u64,
    depth: usize,
    t: Option<f64>,
    #[serde(rename = "M")]
    bases: Vec<u64>,
    #[serde(rename = "L")]
    branchings: Vec<u64>,
    base_sets: Vec<StoredBaseSet>,
    #[serde(default)]
    materialized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    translations: Option<BTreeMap<String, u64>>,
}

impl TreeFile {
    pub fn from_tree(tree: &MeasureTree, materialize: bool) -> Self {
        let schedule = tree.schedule();
        TreeFile {
            version: TREE_FORMAT_VERSION,
            variant: schedule.variant(),
            seed: tree.seed(),
            depth: tree.depth(),
            t: schedule.t(),
            bases: schedule.bases(),
            branchings: schedule.branchings(),
            base_sets: schedule
                .base_sets()
                .iter()
                .map(|b| StoredBaseSet { m: b.set.modulus(), elements: b.set.elements().to_vec(), method: b.method })
                .collect(),
            materialized: materialize,
            translations: materialize.then(|| tree.translations().iter().map(|(p, &l)| (p.to_string(), l)).collect()),
        }
    }

    pub fn into_tree(self) -> Result<MeasureTree> {
        if self.version != TREE_FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported tree format version {} (expected {TREE_FORMAT_VERSION})",
                self.version
            )));
        }
        if self.bases.len() != self.base_sets.len() || self.branchings.len() != self.base_sets.len() {
            return Err(Error::Schema("M, L and base_sets must have equal length".into()));
        }
        let mut levels = Vec::with_capacity(self.base_sets.len());
        for (i, stored) in self.base_sets.into_iter().enumerate() {
            let set = crate::discrete_ap::ResidueSet::new(stored.m, stored.elements)
                .map_err(|e| Error::Schema(format!("base set {}: {e}", i + 1)))?;
            if set.modulus() != self.bases[i] || set.len() as u64 != self.branchings[i] {
                return Err(Error::Schema(format!(
                    "level {}: base set disagrees with M_n = {} / L_n = {}",
                    i + 1,
                    self.bases[i],
                    self.branchings[i]
                )));
            }
            levels.push(BaseSet { set, method: stored.method });
        }
        let schedule = Schedule::from_parts(self.variant, self.t, levels).map_err(|e| match e {
            Error::Schema(_) => e,
            other => Error::Schema(other.to_string()),
        })?;
        if self.depth > schedule.len() {
            return Err(Error::Schema(format!("depth {} exceeds schedule length {}", self.depth, schedule.len())));
        }
        match self.translations {
            None => build_tree(&schedule, self.seed, self.depth),
            Some(map) => {
                let parsed = map
                    .into_iter()
                    .map(|(k, v)| Ok((k.parse::<NodePath>()?, v)))
                    .collect::<Result<BTreeMap<_, _>>>()?;
                build_from_translations(&schedule, self.seed, self.depth, &parsed)
            }
        }
    }
}

/// Pretty JSON for a tree; translations are written only when `materialize` is set.
pub fn tree_to_json(tree: &MeasureTree, materialize: bool) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&TreeFile::from_tree(tree, materialize))?;
    s.push('\n');
    Ok(s)
}

pub fn tree_from_json(text: &str) -> Result<MeasureTree> {
    let file: TreeFile = serde_json::from_str(text).map_err(|e| Error::Schema(format!("tree json: {e}")))?;
    file.into_tree()
}

pub fn save_tree(tree: &MeasureTree, path: impl AsRef<Path>, materialize: bool) -> Result<()> {
    std::fs::write(path, tree_to_json(tree, materialize)?)?;
    Ok(())
}

pub fn load_tree(path: impl AsRef<Path>) -> Result<MeasureTree> {
    tree_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor_tree::{schedule_a, schedule_b};
    use crate::discrete_ap::ResidueSet;

    fn fixture() -> MeasureTree {
        let x = ResidueSet::new(25, [2, 4, 8, 10]).unwrap();
        build_tree(&schedule_a(25, &x, 0.4, 6).unwrap(), 42, 3).unwrap()
    }

    #[test]
    fn round_trip_both_forms() {
        let t = fixture();
        for materialize in [false, true] {
            let back = tree_from_json(&tree_to_json(&t, materialize).unwrap()).unwrap();
            assert_eq!(back, t);
        }
        let b = build_tree(&schedule_b(8).unwrap(), 9, 8).unwrap();
        assert_eq!(tree_from_json(&tree_to_json(&b, true).unwrap()).unwrap(), b);
    }

    #[test]
    fn tampered_translation_is_rejected() {
        let t = fixture();
        let mut v: serde_json::Value = serde_json::from_str(&tree_to_json(&t, true).unwrap()).unwrap();
        v["translations"][""] = serde_json::json!(25);
        let err = tree_from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
    }

    #[test]
    fn version_and_shape_checks() {
        let t = fixture();
        let mut v: serde_json::Value = serde_json::from_str(&tree_to_json(&t, false).unwrap()).unwrap();
        v["version"] = serde_json::json!(2);
        assert!(matches!(tree_from_json(&v.to_string()), Err(Error::Schema(_))));

        let mut v: serde_json::Value = serde_json::from_str(&tree_to_json(&t, false).unwrap()).unwrap();
        v["L"][0] = serde_json::json!(3);
        assert!(matches!(tree_from_json(&v.to_string()), Err(Error::Schema(_))));

        // variant A recurrence is re-checked
        let mut v: serde_json::Value = serde_json::from_str(&tree_to_json(&t, false).unwrap()).unwrap();
        v["t"] = serde_json::json!(0.2);
        assert!(matches!(tree_from_json(&v.to_string()), Err(Error::Schema(_))));
    }

    #[test]
    fn omitted_translations_rederive() {
        let t = fixture();
        let lazy = tree_to_json(&t, false).unwrap();
        assert!(!lazy.contains("\"translations\""));
        assert_eq!(tree_from_json(&lazy).unwrap().translations(), t.translations());
    }
}

//! Attribute combinations handed to an external attribute-editing model.
//!
//! The core grid is hair (4) x eyeglasses (2) x facial hair (3) = 24 combos.
//! Every other attribute is added at random: each extra is included with
//! probability 1/2 and, when included, takes one of its two values uniformly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngKey;

pub const ATTRIBUTE_PLAN_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hair {
    Bald,
    Blond,
    Black,
    Brown,
}

impl Hair {
    pub const ALL: [Hair; 4] = [Hair::Bald, Hair::Blond, Hair::Black, Hair::Brown];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FacialHair {
    Beard,
    Mustache,
    None,
}

impl FacialHair {
    pub const ALL: [FacialHair; 3] = [FacialHair::Beard, FacialHair::Mustache, FacialHair::None];
}

/// Optional attributes and their two values.
pub const EXTRAS: [(&str, [&str; 2]); 6] = [
    ("age", ["old", "young"]),
    ("bangs", ["yes", "no"]),
    ("eyebrows", ["usual", "bushy"]),
    ("gender", ["male", "female"]),
    ("mouth", ["open", "closed"]),
    ("skin", ["pale", "usual"]),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeCombo {
    /// Position `k` in the plan; the generated image is expected as `<id>_attr<k>`.
    pub index: usize,
    pub hair: Hair,
    pub eyeglasses: bool,
    pub facial_hair: FacialHair,
    pub extras: BTreeMap<String, String>,
}

impl AttributeCombo {
    pub fn core(&self) -> (Hair, bool, FacialHair) {
        (self.hair, self.eyeglasses, self.facial_hair)
    }
}

pub fn enumerate_attribute_combos(seed: u64) -> Vec<AttributeCombo> {
    let key = RngKey::root(seed).child_str("attributes");
    let mut combos = Vec::with_capacity(24);
    for hair in Hair::ALL {
        for eyeglasses in [false, true] {
            for facial_hair in FacialHair::ALL {
                let index = combos.len();
                let mut rng = key.child(index as u64).rng();
                let mut extras = BTreeMap::new();
                for (name, values) in EXTRAS {
                    let include = rng.random::<bool>();
                    let value = values[usize::from(rng.random::<bool>())];
                    if include {
                        extras.insert(name.to_string(), value.to_string());
                    }
                }
                combos.push(AttributeCombo { index, hair, eyeglasses, facial_hair, extras });
            }
        }
    }
    combos
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributePlan {
    pub version: u32,
    pub tool: String,
    pub seed: u64,
    pub combos: Vec<AttributeCombo>,
}

impl AttributePlan {
    pub fn new(seed: u64) -> Self {
        AttributePlan {
            version: ATTRIBUTE_PLAN_VERSION,
            tool: crate::TOOL_VERSION.to_string(),
            seed,
            combos: enumerate_attribute_combos(seed),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let plan: AttributePlan = serde_json::from_str(&text)?;
        if plan.version != ATTRIBUTE_PLAN_VERSION {
            return Err(Error::SchemaVersion {
                what: path.display().to_string(),
                found: u64::from(plan.version),
                expected: ATTRIBUTE_PLAN_VERSION,
            });
        }
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn grid_is_complete() {
        let combos = enumerate_attribute_combos(11);
        assert_eq!(combos.len(), 24);
        let cores: HashSet<_> = combos.iter().map(AttributeCombo::core).collect();
        assert_eq!(cores.len(), 24);
        for hair in Hair::ALL {
            assert_eq!(combos.iter().filter(|c| c.hair == hair).count(), 6);
        }
        for (k, c) in combos.iter().enumerate() {
            assert_eq!(c.index, k);
        }
    }

    #[test]
    fn extras_are_seeded() {
        assert_eq!(enumerate_attribute_combos(3), enumerate_attribute_combos(3));
        let differs = (0..10).any(|s| enumerate_attribute_combos(s) != enumerate_attribute_combos(s + 100));
        assert!(differs);
    }

    #[test]
    fn extras_use_known_values() {
        for c in enumerate_attribute_combos(9) {
            for (name, value) in &c.extras {
                let (_, values) = EXTRAS.iter().find(|(n, _)| n == name).unwrap();
                assert!(values.contains(&value.as_str()));
            }
        }
    }

    #[test]
    fn plan_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("attributes.json");
        let plan = AttributePlan::new(4);
        plan.save(&path).unwrap();
        assert_eq!(AttributePlan::load(&path).unwrap(), plan);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"hair\": \"bald\""));
        assert!(text.contains("\"facial_hair\": \"mustache\""));
    }
}

// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use indexmap::IndexMap;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// 0 untrusted, 1 trusted (tainted), 2 neutral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Untrusted,
    Trusted,
    Neutral,
}

impl Label {
    pub fn code(self) -> u8 {
        match self {
            Label::Untrusted => 0,
            Label::Trusted => 1,
            Label::Neutral => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Label> {
        match code {
            0 => Some(Label::Untrusted),
            1 => Some(Label::Trusted),
            2 => Some(Label::Neutral),
            _ => None,
        }
    }

    /// Position in the priority order 0 < 2 < 1.
    pub fn rank(self) -> u8 {
        match self {
            Label::Untrusted => 0,
            Label::Neutral => 1,
            Label::Trusted => 2,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let code = u8::deserialize(d)?;
        Label::from_code(code).ok_or_else(|| D::Error::custom(format!("bad taint label {code}")))
    }
}

/// Why a symbol is tainted: it holds data derived from a taint source
/// in the same body, or only data that arrived through parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Source,
    Parameter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaintEntry {
    pub label: Label,
    pub provenance: Option<Provenance>,
}

/// Symbol id -> label, in first-labeled order.
#[derive(Debug, Clone, Default)]
pub struct TaintMap {
    entries: IndexMap<String, TaintEntry>,
    history: Vec<(String, Label)>,
}

impl PartialEq for TaintMap {
    fn eq(&self, other: &Self) -> bool {
        self.labels().eq(other.labels())
    }
}

impl TaintMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<Label> {
        self.entries.get(id).map(|e| e.label)
    }

    pub fn entry(&self, id: &str) -> Option<TaintEntry> {
        self.entries.get(id).copied()
    }

    pub fn is_tainted(&self, id: &str) -> bool {
        self.get(id) == Some(Label::Trusted)
    }

    pub fn provenance(&self, id: &str) -> Option<Provenance> {
        self.entries.get(id).and_then(|e| e.provenance)
    }

    /// Marks a variable symbol tainted unless it already has a label.
    /// Returns whether the map changed.
    pub fn taint_symbol(&mut self, id: &str, provenance: Provenance) -> bool {
        if self.entries.contains_key(id) {
            return false;
        }
        self.insert(id, Label::Trusted, Some(provenance));
        true
    }

    /// Raises a label, never lowering it: 1 beats 2 beats 0.
    pub fn raise(&mut self, id: &str, label: Label) -> bool {
        match self.entries.get(id) {
            Some(e) if e.label.rank() >= label.rank() => false,
            _ => {
                let provenance = self.entries.get(id).and_then(|e| e.provenance);
                self.insert(id, label, provenance);
                true
            }
        }
    }

    fn insert(&mut self, id: &str, label: Label, provenance: Option<Provenance>) {
        self.entries
            .insert(id.to_string(), TaintEntry { label, provenance });
        self.history.push((id.to_string(), label));
    }

    pub fn labels(&self) -> impl Iterator<Item = (&str, Label)> {
        self.entries.iter().map(|(k, e)| (k.as_str(), e.label))
    }

    /// Every label assignment in the order it happened.
    pub fn history(&self) -> &[(String, Label)] {
        &self.history
    }
}

impl Serialize for TaintMap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.labels())
    }
}

impl<'de> Deserialize<'de> for TaintMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let pairs = Vec::<(String, Label)>::deserialize(d)?;
        let mut map = TaintMap::new();
        for (id, label) in pairs {
            map.insert(&id, label, None);
        }
        Ok(map)
    }
}

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;

/// Outcome of a verification run.
///
/// `worst_ratio` is always normalised so that the verdict reads
/// `pass <=> worst_ratio <= 1 + tolerance`; checkers that measure a defect against
/// a threshold store `defect / threshold` here and keep the raw numbers in
/// `constants`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub constants: BTreeMap<String, f64>,
    #[serde(serialize_with = "finite_or_null", deserialize_with = "null_as_infinity")]
    pub worst_ratio: f64,
    pub worst_location: BTreeMap<String, f64>,
    pub pass: bool,
    pub tolerance: f64,
    pub seed: Option<u64>,
    /// Set when every sampled denominator fell below the zero floor.
    #[serde(default)]
    pub vacuous: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Denominators below this are treated as zero.
pub const ZERO_FLOOR: f64 = 1e-14;

impl BoundReport {
    pub fn new(name: impl Into<String>, worst_ratio: f64, tolerance: f64) -> Self {
        let pass = worst_ratio.is_finite() && worst_ratio <= 1.0 + tolerance;
        Self {
            name: name.into(),
            constants: BTreeMap::new(),
            worst_ratio,
            worst_location: BTreeMap::new(),
            pass,
            tolerance,
            seed: None,
            vacuous: false,
            notes: Vec::new(),
        }
    }

    /// Report for a ratio where every denominator vanished.
    pub fn vacuous(name: impl Into<String>, tolerance: f64) -> Self {
        let mut report = Self::new(name, 0.0, tolerance);
        report.vacuous = true;
        report.notes.push("vacuous: all denominators below the zero floor".into());
        report
    }

    pub fn constant(mut self, key: impl Into<String>, value: f64) -> Self {
        self.constants.insert(key.into(), value);
        self
    }

    pub fn location(mut self, key: impl Into<String>, value: f64) -> Self {
        self.worst_location.insert(key.into(), value);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Forces a failing verdict regardless of the ratio.
    pub fn fail(mut self, reason: impl Into<String>) -> Self {
        self.pass = false;
        self.notes.push(reason.into());
        self
    }
}

fn finite_or_null<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    if value.is_finite() {
        serializer.serialize_f64(*value)
    } else {
        serializer.serialize_none()
    }
}

fn null_as_infinity<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(deserializer)?.unwrap_or(f64::INFINITY))
}

//! Categorical design spaces, design points and the policy output layout.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Cardinalities of the bundled 18-dimension SoC space.
pub const SOC_CARDINALITIES: [usize; 18] = [2, 12, 3, 2, 3, 3, 4, 7, 13, 10, 5, 10, 5, 6, 7, 5, 7, 2];

const SOC_SPACE_JSON: &str = include_str!("../data/soc_space.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub choices: Vec<String>,
}

impl Dimension {
    pub fn cardinality(&self) -> usize {
        self.choices.len()
    }
}

/// An ordered list of categorical dimensions.
///
/// Construction always validates, so every `DesignSpace` in circulation has
/// at least one dimension, unique dimension names, and unique non-empty
/// choice lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DesignSpace {
    name: String,
    dimensions: Vec<Dimension>,
}

#[derive(Deserialize)]
struct RawSpace {
    name: String,
    dimensions: Vec<Dimension>,
}

impl<'de> Deserialize<'de> for DesignSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let raw = RawSpace::deserialize(d)?;
        DesignSpace::new(raw.name, raw.dimensions).map_err(serde::de::Error::custom)
    }
}

/// Indices of one choice per dimension.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesignPoint(pub Vec<usize>);

impl DesignPoint {
    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `(offset, length)` of each dimension inside the flat policy output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputLayout {
    segments: Vec<(usize, usize)>,
}

impl OutputLayout {
    pub fn from_cardinalities(cards: &[usize]) -> Self {
        let mut offset = 0;
        let segments = cards
            .iter()
            .map(|&d| {
                let s = (offset, d);
                offset += d;
                s
            })
            .collect();
        Self { segments }
    }

    pub fn segments(&self) -> &[(usize, usize)] {
        &self.segments
    }

    pub fn total_width(&self) -> usize {
        self.segments.last().map(|(o, l)| o + l).unwrap_or(0)
    }

    pub fn dims(&self) -> usize {
        self.segments.len()
    }

    /// Flat output index of choice `choice` in dimension `dim`.
    pub fn flat_index(&self, dim: usize, choice: usize) -> usize {
        self.segments[dim].0 + choice
    }
}

impl DesignSpace {
    pub fn new(name: impl Into<String>, dimensions: Vec<Dimension>) -> Result<Self> {
        if dimensions.is_empty() {
            return Err(Error::Parse {
                dimension: None,
                message: "design space has no dimensions".into(),
            });
        }
        for (i, dim) in dimensions.iter().enumerate() {
            let bad = |message: String| Error::Parse {
                dimension: Some(dim.name.clone()),
                message,
            };
            if dim.name.is_empty() {
                return Err(bad(format!("dimension {i} has an empty name")));
            }
            if dimensions[..i].iter().any(|d| d.name == dim.name) {
                return Err(bad("duplicate dimension name".into()));
            }
            if dim.choices.is_empty() {
                return Err(bad("dimension has no choices".into()));
            }
            for (j, c) in dim.choices.iter().enumerate() {
                if dim.choices[..j].contains(c) {
                    return Err(bad(format!("duplicate choice '{c}'")));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            dimensions,
        })
    }

    /// A space of `dims` dimensions named `x0, x1, ...` with choices `c0, c1, ...`.
    pub fn uniform(name: impl Into<String>, dims: usize, choices: usize) -> Result<Self> {
        let cards = alloc::vec![choices; dims];
        Self::from_cardinalities(name, &cards)
    }

    /// A space with generated labels for the given per-dimension cardinalities.
    pub fn from_cardinalities(name: impl Into<String>, cards: &[usize]) -> Result<Self> {
        let dimensions = cards
            .iter()
            .enumerate()
            .map(|(i, &d)| Dimension {
                name: format!("x{i}"),
                choices: (0..d).map(|c| format!("c{c}")).collect(),
            })
            .collect();
        Self::new(name, dimensions)
    }

    /// Parses the JSON document form `{"name", "dimensions": [{"name", "choices"}]}`.
    pub fn parse_json(doc: &str) -> Result<Self> {
        let raw: RawSpace = serde_json::from_str(doc).map_err(|e| Error::Parse {
            dimension: None,
            message: e.to_string(),
        })?;
        Self::new(raw.name, raw.dimensions)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("design spaces always serialize")
    }

    /// The bundled 18-dimension SoC space (106 output choices).
    pub fn soc() -> Self {
        Self::parse_json(SOC_SPACE_JSON).expect("bundled SoC space is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimensions(&self) -> &[Dimension] {
        &self.dimensions
    }

    pub fn dims(&self) -> usize {
        self.dimensions.len()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.dimensions.iter().map(Dimension::cardinality).collect()
    }

    pub fn total_width(&self) -> usize {
        self.dimensions.iter().map(Dimension::cardinality).sum()
    }

    /// Number of distinct designs as a float.
    pub fn space_size(&self) -> f64 {
        self.dimensions.iter().map(|d| d.cardinality() as f64).product()
    }

    /// Exact number of designs, when it fits in a `u128`.
    pub fn space_size_exact(&self) -> Option<u128> {
        self.dimensions
            .iter()
            .try_fold(1u128, |acc, d| acc.checked_mul(d.cardinality() as u128))
    }

    pub fn output_layout(&self) -> OutputLayout {
        OutputLayout::from_cardinalities(&self.cardinalities())
    }

    /// Hex SHA-256 of the compact JSON form; identifies the space on the wire.
    pub fn hash_hex(&self) -> String {
        let doc = serde_json::to_string(self).expect("design spaces always serialize");
        hex::encode(Sha256::digest(doc.as_bytes()))
    }

    pub fn validate_point(&self, p: &DesignPoint) -> Result<()> {
        if p.len() != self.dims() {
            return Err(Error::usage(format!(
                "design has {} indices, space has {} dimensions",
                p.len(),
                self.dims()
            )));
        }
        for (i, (&x, dim)) in p.0.iter().zip(&self.dimensions).enumerate() {
            if x >= dim.cardinality() {
                return Err(Error::usage(format!(
                    "index {x} out of range for dimension {i} ('{}', {} choices)",
                    dim.name,
                    dim.cardinality()
                )));
            }
        }
        Ok(())
    }

    /// Wire form `{"<dim name>": "<choice label>", ...}`.
    pub fn point_to_labels(&self, p: &DesignPoint) -> Result<BTreeMap<String, String>> {
        self.validate_point(p)?;
        Ok(self
            .dimensions
            .iter()
            .zip(&p.0)
            .map(|(d, &x)| (d.name.clone(), d.choices[x].clone()))
            .collect())
    }

    pub fn point_from_labels(&self, labels: &BTreeMap<String, String>) -> Result<DesignPoint> {
        if labels.len() != self.dims() {
            return Err(Error::Parse {
                dimension: None,
                message: format!("expected {} dimensions, got {}", self.dims(), labels.len()),
            });
        }
        let mut out = Vec::with_capacity(self.dims());
        for d in &self.dimensions {
            let label = labels.get(&d.name).ok_or_else(|| Error::Parse {
                dimension: Some(d.name.clone()),
                message: "missing from design".into(),
            })?;
            let idx = d.choices.iter().position(|c| c == label).ok_or_else(|| Error::Parse {
                dimension: Some(d.name.clone()),
                message: format!("unknown choice '{label}'"),
            })?;
            out.push(idx);
        }
        Ok(DesignPoint(out))
    }

    /// Iterates all designs in lexicographic order (last dimension fastest).
    pub fn enumerate(&self) -> PointIter {
        PointIter {
            cards: self.cardinalities(),
            next: Some(alloc::vec![0; self.dims()]),
        }
    }
}

pub struct PointIter {
    cards: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for PointIter {
    type Item = DesignPoint;

    fn next(&mut self) -> Option<DesignPoint> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.cards[i] {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(DesignPoint(current))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn soc_space_reproduces_published_layout() {
        let s = DesignSpace::soc();
        assert_eq!(s.dims(), 18);
        assert_eq!(s.cardinalities(), SOC_CARDINALITIES.to_vec());
        assert_eq!(s.total_width(), 106);
        assert_eq!(s.space_size_exact(), Some(3_467_318_400_000));
        assert_eq!(s.space_size(), 3.4673184e12);
        assert_eq!(*s.output_layout().segments().last().unwrap(), (104, 2));
    }

    #[test]
    fn degenerate_single_choice_space() {
        let s = DesignSpace::parse_json(r#"{"name":"one","dimensions":[{"name":"a","choices":["only"]}]}"#).unwrap();
        assert_eq!((s.dims(), s.total_width(), s.space_size()), (1, 1, 1.0));
    }

    #[test]
    fn duplicate_dimension_name_rejected() {
        let doc = r#"{"name":"x","dimensions":[{"name":"a","choices":["p"]},{"name":"a","choices":["q"]}]}"#;
        match DesignSpace::parse_json(doc) {
            Err(Error::Parse { dimension, .. }) => assert_eq!(dimension.as_deref(), Some("a")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_and_duplicate_choices_rejected() {
        let empty = r#"{"name":"x","dimensions":[{"name":"mem","choices":[]}]}"#;
        assert!(matches!(DesignSpace::parse_json(empty), Err(Error::Parse { dimension: Some(d), .. }) if d == "mem"));
        let dup = r#"{"name":"x","dimensions":[{"name":"cpu","choices":["a","a"]}]}"#;
        assert!(DesignSpace::parse_json(dup).is_err());
        assert!(DesignSpace::parse_json(r#"{"name":"x","dimensions":[]}"#).is_err());
        assert!(DesignSpace::parse_json("{not json").is_err());
    }

    #[test]
    fn space_sizes() {
        let big = DesignSpace::uniform("b", 20, 64).unwrap();
        assert!((big.space_size() / 1.329228e36 - 1.0).abs() < 1e-6);
        assert_eq!(big.space_size_exact(), Some(1u128 << 120));
        assert_eq!(DesignSpace::uniform("s", 1, 5).unwrap().space_size(), 5.0);
    }

    #[test]
    fn layout_segments() {
        let l = OutputLayout::from_cardinalities(&[2, 12, 3]);
        assert_eq!(l.segments(), &[(0, 2), (2, 12), (14, 3)]);
        assert_eq!(OutputLayout::from_cardinalities(&[4]).segments(), &[(0, 4)]);
    }

    #[test]
    fn labels_round_trip() {
        let s = DesignSpace::soc();
        let p = DesignPoint(vec![1, 11, 2, 0, 0, 1, 3, 6, 12, 9, 4, 9, 4, 5, 6, 4, 6, 1]);
        let labels = s.point_to_labels(&p).unwrap();
        assert_eq!(s.point_from_labels(&labels).unwrap(), p);
        assert!(s.validate_point(&DesignPoint(vec![2; 18])).is_err());
    }

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        let s = DesignSpace::from_cardinalities("e", &[2, 3]).unwrap();
        let all: Vec<_> = s.enumerate().collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], DesignPoint(vec![0, 0]));
        assert_eq!(all[1], DesignPoint(vec![0, 1]));
        assert_eq!(all[5], DesignPoint(vec![1, 2]));
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }
}

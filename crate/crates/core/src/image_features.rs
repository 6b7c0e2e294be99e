//! Image modality features from pre-annotated labels.
//!
//! A label counts when its confidence is at least the threshold. Every
//! component is `min(1, Σ weight · confidence)` over the counted labels of its
//! category; neutral labels are recorded as evidence but feed no component.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{EvidenceRef, Modality};
use crate::profile::{Scope, SocialProfile};

const DEFAULT_TAXONOMY: &str = include_str!("../assets/taxonomy.toml");

pub const DEFAULT_CONF_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImageFeatureError {
    #[error("image `{item_id}` carries label `{label}` which is not in the taxonomy")]
    UnknownLabel { item_id: String, label: String },
    #[error("confidence threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("invalid taxonomy: {0}")]
    InvalidTaxonomy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageCategory {
    LifestyleWholesome,
    Asset,
    Alcohol,
    Gambling,
    Drugs,
    Party,
    Neutral,
}

impl ImageCategory {
    pub const ALL: [ImageCategory; 7] = [
        ImageCategory::LifestyleWholesome,
        ImageCategory::Asset,
        ImageCategory::Alcohol,
        ImageCategory::Gambling,
        ImageCategory::Drugs,
        ImageCategory::Party,
        ImageCategory::Neutral,
    ];

    /// Index into [`ImageFeatureVector::NAMES`], `None` for neutral.
    pub fn component_index(self) -> Option<usize> {
        match self {
            ImageCategory::LifestyleWholesome => Some(0),
            ImageCategory::Asset => Some(1),
            ImageCategory::Alcohol => Some(2),
            ImageCategory::Gambling => Some(3),
            ImageCategory::Drugs => Some(4),
            ImageCategory::Party => Some(5),
            ImageCategory::Neutral => None,
        }
    }

    /// Name used in evidence references for labels of this category.
    pub fn component_name(self) -> &'static str {
        self.component_index()
            .map_or("neutral", |i| ImageFeatureVector::NAMES[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyEntry {
    pub category: ImageCategory,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageTaxonomy {
    pub version: String,
    pub labels: BTreeMap<String, TaxonomyEntry>,
}

impl ImageTaxonomy {
    pub fn from_toml(src: &str) -> Result<Self, ImageFeatureError> {
        let tax: ImageTaxonomy =
            toml::from_str(src).map_err(|e| ImageFeatureError::InvalidTaxonomy(e.to_string()))?;
        tax.validate()?;
        Ok(tax)
    }

    pub fn validate(&self) -> Result<(), ImageFeatureError> {
        for (label, entry) in &self.labels {
            if !(0.0..=1.0).contains(&entry.weight) {
                return Err(ImageFeatureError::InvalidTaxonomy(format!(
                    "label `{label}` has weight {} outside [0, 1]",
                    entry.weight
                )));
            }
        }
        for cat in ImageCategory::ALL {
            if cat != ImageCategory::Neutral && !self.labels.values().any(|e| e.category == cat) {
                return Err(ImageFeatureError::InvalidTaxonomy(format!(
                    "no label for category {cat:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, label: &str) -> Option<&TaxonomyEntry> {
        self.labels.get(label)
    }
}

pub fn default_taxonomy() -> ImageTaxonomy {
    ImageTaxonomy::from_toml(DEFAULT_TAXONOMY).expect("built-in taxonomy is valid")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ImageFeatureVector {
    pub lifestyle_score: f64,
    pub asset_score: f64,
    pub alcohol_risk: f64,
    pub gambling_risk: f64,
    pub drugs_risk: f64,
    pub party_risk: f64,
}

impl ImageFeatureVector {
    pub const DIM: usize = 6;
    pub const NAMES: [&'static str; 6] = [
        "lifestyle_score",
        "asset_score",
        "alcohol_risk",
        "gambling_risk",
        "drugs_risk",
        "party_risk",
    ];

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.lifestyle_score,
            self.asset_score,
            self.alcohol_risk,
            self.gambling_risk,
            self.drugs_risk,
            self.party_risk,
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            lifestyle_score: a[0],
            asset_score: a[1],
            alcohol_risk: a[2],
            gambling_risk: a[3],
            drugs_risk: a[4],
            party_risk: a[5],
        }
    }
}

/// Extracts the image modality vector and one evidence reference per counted
/// label.
pub fn extract_image_features(
    profile: &SocialProfile,
    taxonomy: &ImageTaxonomy,
    conf_threshold: f64,
) -> Result<(ImageFeatureVector, Vec<EvidenceRef>), ImageFeatureError> {
    if !(0.0..=1.0).contains(&conf_threshold) {
        return Err(ImageFeatureError::InvalidThreshold(conf_threshold));
    }
    if !profile.consent.allows(Scope::Images) {
        return Ok((ImageFeatureVector::default(), Vec::new()));
    }

    let mut contributions: [Vec<f64>; 6] = Default::default();
    let mut evidence = Vec::new();
    for item in &profile.image_items {
        for l in &item.labels {
            let entry = taxonomy
                .get(&l.label)
                .ok_or_else(|| ImageFeatureError::UnknownLabel {
                    item_id: item.item_id.clone(),
                    label: l.label.clone(),
                })?;
            if l.confidence < conf_threshold {
                continue;
            }
            if let Some(i) = entry.category.component_index() {
                contributions[i].push(entry.weight * l.confidence);
            }
            evidence.push(EvidenceRef::new(
                &item.item_id,
                Modality::Image,
                entry.category.component_name(),
                &l.label,
            ));
        }
    }

    let mut out = [0.0; 6];
    for (slot, mut terms) in out.iter_mut().zip(contributions) {
        // sorted summation makes the total independent of item order
        terms.sort_by(f64::total_cmp);
        *slot = terms.iter().sum::<f64>().min(1.0);
    }
    Ok((ImageFeatureVector::from_array(out), evidence))
}

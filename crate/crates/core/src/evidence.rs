//! Evidence references tying feature values and flags back to profile content.

use serde::{Deserialize, Serialize};

use crate::profile::SocialProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Text,
    Image,
    Graph,
}

/// Points at the profile content that produced a feature value.
///
/// `component` names the feature (or lexicon category) the evidence supports,
/// `detail` holds the matched term, image label, or metric name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvidenceRef {
    pub item_id: String,
    pub modality: Modality,
    pub component: String,
    pub detail: String,
}

impl EvidenceRef {
    pub fn new(
        item_id: impl Into<String>,
        modality: Modality,
        component: impl Into<String>,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            item_id: item_id.into(),
            modality,
            component: component.into(),
            detail: detail.into(),
        }
    }

    /// True if the reference names a content item of `profile`, or the ego
    /// node for graph evidence and profile-level evidence.
    pub fn resolves_in(&self, profile: &SocialProfile) -> bool {
        let item = match self.modality {
            Modality::Text => profile.text_items.iter().any(|t| t.item_id == self.item_id),
            Modality::Image => profile.image_items.iter().any(|i| i.item_id == self.item_id),
            Modality::Graph => false,
        };
        item || self.item_id == profile.user_id
    }
}

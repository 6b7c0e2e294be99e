//! End-to-end evaluation: features, compliance, score and explanation.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::compliance::{default_ruleset, evaluate_compliance, parse_rules, ComplianceError, ComplianceRule, ComplianceVerdict};
use crate::config::{Config, ConfigError};
use crate::explanation::{build_query, generate_explanation, ExplanationError, ExplanationReport};
use crate::graph_features::{extract_graph_features, GnnParams, GraphFeatureError};
use crate::image_features::{default_taxonomy, extract_image_features, ImageFeatureError, ImageTaxonomy};
use crate::knowledge_base::{default_corpus, load_corpus, Hit, KbError, KnowledgeBase};
use crate::profile::SocialProfile;
use crate::scoring::{score, CreditDecision, DecisionMeta, FeatureBundle, ScoringError, ScoringModel};
use crate::text_features::{default_lexicon, extract_text_features, Lexicon, TextFeatureError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Text(#[from] TextFeatureError),
    #[error(transparent)]
    Image(#[from] ImageFeatureError),
    #[error(transparent)]
    Graph(#[from] GraphFeatureError),
    #[error(transparent)]
    Compliance(#[from] ComplianceError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    KnowledgeBase(#[from] KbError),
    #[error(transparent)]
    Explanation(#[from] ExplanationError),
}

/// Output of one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub bundle: FeatureBundle,
    pub verdict: ComplianceVerdict,
    pub decision: CreditDecision,
}

/// Loaded assets and parameters.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub lexicon: Lexicon,
    pub taxonomy: ImageTaxonomy,
    pub conf_threshold: f64,
    pub gnn: GnnParams,
    pub model: ScoringModel,
    pub rules: Vec<ComplianceRule>,
    pub kb: KnowledgeBase,
    pub kb_k: usize,
}

fn read(path: &std::path::Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl Pipeline {
    pub fn from_config(cfg: &Config) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let lexicon = match &cfg.paths.lexicon {
            Some(p) => Lexicon::from_toml(&read(p)?)?,
            None => default_lexicon(),
        };
        let taxonomy = match &cfg.paths.taxonomy {
            Some(p) => ImageTaxonomy::from_toml(&read(p)?)?,
            None => default_taxonomy(),
        };
        let rules = match &cfg.paths.rules {
            Some(p) => parse_rules(&read(p)?)?,
            None => default_ruleset(),
        };
        let docs = match &cfg.paths.corpus {
            Some(p) => load_corpus(p)?,
            None => default_corpus(),
        };
        Ok(Self {
            lexicon,
            taxonomy,
            conf_threshold: cfg.image.conf_threshold,
            gnn: cfg.gnn.params(),
            model: cfg.score.clone(),
            rules,
            kb: KnowledgeBase::build(docs, cfg.kb.dim)?,
            kb_k: cfg.kb.k,
        })
    }

    /// Extracts all three modalities.
    pub fn features(&self, profile: &SocialProfile) -> Result<FeatureBundle, PipelineError> {
        let (text, mut evidence) = extract_text_features(profile, &self.lexicon)?;
        let (image, ev) = extract_image_features(profile, &self.taxonomy, self.conf_threshold)?;
        evidence.extend(ev);
        let (graph, ev) = extract_graph_features(profile, &self.gnn)?;
        evidence.extend(ev);
        Ok(FeatureBundle {
            text,
            image,
            graph,
            evidence,
        })
    }

    pub fn evaluate(&self, profile: &SocialProfile, meta: DecisionMeta) -> Result<Evaluation, PipelineError> {
        let bundle = self.features(profile)?;
        let verdict = evaluate_compliance(profile, &bundle, &self.rules)?;
        let decision = score(&self.model, &bundle, &verdict, meta)?;
        Ok(Evaluation {
            bundle,
            verdict,
            decision,
        })
    }

    /// Evaluates the profile with the listed items removed.
    pub fn evaluate_without(
        &self,
        profile: &SocialProfile,
        exclude: &BTreeSet<String>,
        meta: DecisionMeta,
    ) -> Result<Evaluation, PipelineError> {
        self.evaluate(&profile.without_items(exclude), meta)
    }

    pub fn retrieve_for(&self, decision: &CreditDecision, bundle: &FeatureBundle) -> Result<Vec<Hit>, PipelineError> {
        let query = build_query(decision, bundle, &self.model);
        Ok(self.kb.retrieve(&query, self.kb_k)?)
    }

    pub fn explain(&self, decision: &CreditDecision, bundle: &FeatureBundle) -> Result<ExplanationReport, PipelineError> {
        let hits = self.retrieve_for(decision, bundle)?;
        Ok(generate_explanation(decision, &hits, &self.kb)?)
    }
}

impl Default for Pipeline {
    fn default() -> Self {
        Self::from_config(&Config::default()).expect("built-in assets are valid")
    }
}

//! Seeded synthetic profiles.
//!
//! Three archetypes cover the prudent professional, the sparse risky profile
//! and the otherwise strong profile with a single gambling signal.
//! [`random_profile`] draws arbitrary valid profiles for property tests. The
//! same seed always yields the same profile.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::image_features::default_taxonomy;
use crate::profile::{
    ConsentRecord, Edge, ImageItem, ImageLabel, NodeAttrs, Scope, Sector, SocialGraph,
    SocialProfile, Source, TextItem, TextKind,
};
use crate::text_features::default_lexicon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    ProfessionalPrudent,
    SparseRisky,
    ModerateAlert,
}

impl Archetype {
    pub const ALL: [Archetype; 3] = [
        Archetype::ProfessionalPrudent,
        Archetype::SparseRisky,
        Archetype::ModerateAlert,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Archetype::ProfessionalPrudent => "professional_prudent",
            Archetype::SparseRisky => "sparse_risky",
            Archetype::ModerateAlert => "moderate_alert",
        }
    }

    fn short(self) -> &'static str {
        match self {
            Archetype::ProfessionalPrudent => "a",
            Archetype::SparseRisky => "b",
            Archetype::ModerateAlert => "c",
        }
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Archetype {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Archetype::ALL
            .into_iter()
            .find(|a| a.as_str() == s || a.short() == s)
            .ok_or_else(|| format!("unknown archetype `{s}` (expected a, b, c or a full name)"))
    }
}

const PRUDENT_BIOS: [&str; 4] = [
    "Senior civil engineer and certified project manager. University graduate, volunteer at the local charity.",
    "Chartered accountant with a masters degree. Proud parent and community fundraiser organiser.",
    "Software architect, university graduate with a phd. Grateful for a great team and a frugal household budget.",
    "Certified electrical engineer. Volunteering with the community food drive and saving for a home.",
];
const PRUDENT_JOBS: [&str; 4] = [
    "Joined the design office as a junior engineer.",
    "Promoted to team lead after a successful delivery.",
    "Moved to a senior role managing regional projects.",
    "Appointed principal consultant for infrastructure work.",
];
const SPARSE_BIOS: [&str; 3] = [
    "Just here for the weekend.",
    "Living my best life.",
    "Recent grad, no plans.",
];
const SPARSE_POSTS: [&str; 3] = [
    "Another night out, drinks all round!",
    "Hangover again after the party.",
    "Cocktails with the crew tonight.",
];
const STRONG_BIOS: [&str; 3] = [
    "Successful operations manager, growing a profitable team. Proud of our results.",
    "Experienced sales director, university graduate and mentor.",
    "Logistics lead with a degree in engineering and a great track record.",
];
const FILLER: [&str; 12] = [
    "today", "project", "weekend", "team", "family", "coffee", "city", "work", "friends",
    "morning", "update", "news",
];

fn base_time(rng: &mut ChaCha8Rng) -> DateTime<Utc> {
    let start = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
    start + Duration::days(rng.random_range(0..1400))
}

fn text(item_id: String, source: Source, kind: TextKind, text: &str, ts: DateTime<Utc>) -> TextItem {
    TextItem {
        item_id,
        source,
        kind,
        text: text.to_string(),
        timestamp: ts,
    }
}

fn image(item_id: String, labels: &[(&str, f64)], ts: DateTime<Utc>) -> ImageItem {
    ImageItem {
        item_id,
        source: Source::Instagram,
        labels: labels
            .iter()
            .map(|(l, c)| ImageLabel {
                label: l.to_string(),
                confidence: *c,
            })
            .collect(),
        timestamp: ts,
    }
}

fn conf(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo..hi) * 100.0).round() / 100.0
}

/// Star around the ego plus a few random chords between neighbors.
fn graph(
    rng: &mut ChaCha8Rng,
    ego: &str,
    neighbors: &[(bool, Sector)],
    ego_verified: bool,
    chords: usize,
) -> SocialGraph {
    let mut nodes = BTreeMap::new();
    nodes.insert(
        ego.to_string(),
        NodeAttrs {
            verified: ego_verified,
            sector: Sector::Unknown,
        },
    );
    let ids: Vec<String> = (1..=neighbors.len()).map(|i| format!("{ego}-n{i}")).collect();
    let mut edges = Vec::new();
    for (id, (verified, sector)) in ids.iter().zip(neighbors) {
        nodes.insert(
            id.clone(),
            NodeAttrs {
                verified: *verified,
                sector: *sector,
            },
        );
        edges.push(Edge::new(ego, id.as_str(), conf(rng, 0.3, 1.0)));
    }
    if ids.len() >= 2 {
        for _ in 0..chords {
            let a = rng.random_range(0..ids.len());
            let b = rng.random_range(0..ids.len());
            let probe = Edge::new(ids[a].as_str(), ids[b].as_str(), 0.0);
            if a != b && !edges.iter().any(|e| e.u == probe.u && e.v == probe.v) {
                edges.push(Edge::new(&ids[a], &ids[b], conf(rng, 0.3, 1.0)));
            }
        }
    }
    SocialGraph { nodes, edges }
}

/// Generates a profile satisfying the archetype's contract.
pub fn synthesize_profile(archetype: Archetype, seed: u64) -> SocialProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (archetype as u64).wrapping_mul(0x9e37_79b9));
    let user_id = format!("synth-{}-{seed}", archetype.short());
    let now = base_time(&mut rng) + Duration::days(8 * 365);
    let consent = ConsentRecord::full(now);
    let id = |kind: &str, i: usize| format!("{user_id}-{kind}-{i}");

    let (text_items, image_items, graph) = match archetype {
        Archetype::ProfessionalPrudent => {
            let jobs = rng.random_range(2..=4);
            let mut texts = vec![text(
                id("bio", 1),
                Source::Linkedin,
                TextKind::Bio,
                PRUDENT_BIOS.choose(&mut rng).unwrap(),
                now,
            )];
            for (j, job) in PRUDENT_JOBS.iter().take(jobs).enumerate() {
                let ts = now - Duration::days(365 * (7 - 2 * j as i64));
                texts.push(text(
                    id("job", j + 1),
                    Source::Linkedin,
                    TextKind::JobEntry,
                    job,
                    ts,
                ));
            }
            let wholesome = ["family", "travel", "conference", "graduation", "community_event", "sports"];
            let assets = ["home", "car"];
            let mut images = Vec::new();
            for i in 0..rng.random_range(3..=5) {
                let label = if i == 0 {
                    *assets.choose(&mut rng).unwrap()
                } else {
                    *wholesome.choose(&mut rng).unwrap()
                };
                let c = conf(&mut rng, 0.7, 0.99);
                images.push(image(id("img", i + 1), &[(label, c)], now - Duration::days(30 * i as i64)));
            }
            let n = rng.random_range(5..=8);
            let safe = [Sector::Engineering, Sector::Finance, Sector::Education, Sector::Retail];
            let neighbors: Vec<(bool, Sector)> = (0..n)
                .map(|i| (i * 4 < n * 3, *safe.choose(&mut rng).unwrap()))
                .collect();
            let g = graph(&mut rng, &user_id, &neighbors, true, 3);
            (texts, images, g)
        }
        Archetype::SparseRisky => {
            let mut texts = vec![
                text(id("bio", 1), Source::Instagram, TextKind::Bio, SPARSE_BIOS.choose(&mut rng).unwrap(), now),
                text(
                    id("post", 1),
                    Source::Instagram,
                    TextKind::Post,
                    SPARSE_POSTS.choose(&mut rng).unwrap(),
                    now - Duration::days(3),
                ),
            ];
            if rng.random_bool(0.5) {
                texts.push(text(
                    id("job", 1),
                    Source::Linkedin,
                    TextKind::JobEntry,
                    "Part-time retail assistant.",
                    now - Duration::days(200),
                ));
            }
            let alcohol = ["alcohol", "beer", "liquor_bottle"];
            let mut images = vec![image(
                id("img", 1),
                &[
                    (alcohol.choose(&mut rng).unwrap(), conf(&mut rng, 0.8, 0.99)),
                    ("party", conf(&mut rng, 0.6, 0.95)),
                ],
                now - Duration::days(2),
            )];
            if rng.random_bool(0.5) {
                images.push(image(id("img", 2), &[("nightclub", conf(&mut rng, 0.6, 0.95))], now - Duration::days(9)));
            }
            let n = rng.random_range(1..=2);
            let neighbors: Vec<(bool, Sector)> = (0..n).map(|_| (false, Sector::Unknown)).collect();
            let g = graph(&mut rng, &user_id, &neighbors, false, 0);
            (texts, images, g)
        }
        Archetype::ModerateAlert => {
            let jobs = rng.random_range(2..=3);
            let mut texts = vec![text(
                id("bio", 1),
                Source::Linkedin,
                TextKind::Bio,
                STRONG_BIOS.choose(&mut rng).unwrap(),
                now,
            )];
            for (j, job) in PRUDENT_JOBS.iter().take(jobs).enumerate() {
                texts.push(text(
                    id("job", j + 1),
                    Source::Linkedin,
                    TextKind::JobEntry,
                    job,
                    now - Duration::days(365 * (8 - 2 * j as i64)),
                ));
            }
            let mut images = vec![
                image(id("img", 1), &[("conference", conf(&mut rng, 0.7, 0.95))], now - Duration::days(20)),
                image(id("img", 2), &[("car", conf(&mut rng, 0.7, 0.95))], now - Duration::days(40)),
                image(id("img", 3), &[("casino", conf(&mut rng, 0.6, 0.8))], now - Duration::days(60)),
            ];
            if rng.random_bool(0.5) {
                images.push(image(id("img", 4), &[("travel", conf(&mut rng, 0.7, 0.95))], now - Duration::days(90)));
            }
            let n = rng.random_range(4..=6);
            let others = [Sector::Engineering, Sector::Retail, Sector::Unknown, Sector::Education];
            let neighbors: Vec<(bool, Sector)> = (0..n)
                .map(|i| {
                    if i == 0 {
                        (true, Sector::Finance)
                    } else {
                        (rng.random_bool(0.6), *others.choose(&mut rng).unwrap())
                    }
                })
                .collect();
            let g = graph(&mut rng, &user_id, &neighbors, true, 2);
            (texts, images, g)
        }
    };

    let p = SocialProfile {
        user_id: user_id.clone(),
        display_name: format!("Synthetic {}", archetype.as_str()),
        consent,
        text_items,
        image_items,
        graph,
    };
    debug_assert!(p.validate().is_ok());
    p
}

/// Draws an arbitrary valid profile: random lexicon and filler text, random
/// taxonomy labels, a random graph and random consent scopes.
pub fn random_profile(seed: u64) -> SocialProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lexicon = default_lexicon();
    let vocab: Vec<String> = lexicon
        .categories
        .values()
        .flatten()
        .map(|t| t.term.clone())
        .chain(FILLER.iter().map(|s| s.to_string()))
        .collect();
    let labels: Vec<String> = default_taxonomy().labels.keys().cloned().collect();
    let user_id = format!("rand-{seed}");
    let t0 = base_time(&mut rng);

    let mut text_items = Vec::new();
    for i in 0..rng.random_range(0..6) {
        let kind = *[TextKind::Bio, TextKind::Post, TextKind::Comment, TextKind::JobEntry]
            .choose(&mut rng)
            .unwrap();
        let source = if kind == TextKind::JobEntry {
            Source::Linkedin
        } else {
            *[Source::Linkedin, Source::Instagram, Source::Other].choose(&mut rng).unwrap()
        };
        let words: Vec<&str> = (0..rng.random_range(0..12))
            .map(|_| vocab.choose(&mut rng).unwrap().as_str())
            .collect();
        text_items.push(text(
            format!("{user_id}-t{i}"),
            source,
            kind,
            &words.join(" "),
            t0 + Duration::days(rng.random_range(0..3000)),
        ));
    }

    let mut image_items = Vec::new();
    for i in 0..rng.random_range(0..5) {
        let n = rng.random_range(1..4);
        let ls: Vec<(&str, f64)> = (0..n)
            .map(|_| (labels.choose(&mut rng).unwrap().as_str(), conf(&mut rng, 0.0, 1.0)))
            .collect();
        image_items.push(image(
            format!("{user_id}-i{i}"),
            &ls,
            t0 + Duration::days(rng.random_range(0..3000)),
        ));
    }

    let n = rng.random_range(0..8);
    let neighbors: Vec<(bool, Sector)> = (0..n)
        .map(|_| (rng.random_bool(0.5), *Sector::ALL.choose(&mut rng).unwrap()))
        .collect();
    let ego_verified = rng.random_bool(0.5);
    let chords = rng.random_range(0..6);
    let graph = graph(&mut rng, &user_id, &neighbors, ego_verified, chords);

    let granted = rng.random_bool(0.9);
    let scopes = if granted {
        [Scope::Text, Scope::Images, Scope::Graph]
            .into_iter()
            .filter(|_| rng.random_bool(0.85))
            .collect()
    } else {
        Default::default()
    };

    SocialProfile {
        user_id,
        display_name: format!("Random {seed}"),
        consent: ConsentRecord {
            granted,
            scopes,
            timestamp: t0,
        },
        text_items,
        image_items,
        graph,
    }
}

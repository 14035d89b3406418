//! Seeded generator of labelled synthetic comments.
//!
//! Each comment mixes everyday filler with topic keywords drawn from the
//! class vocabularies below, with about 90% of comments off-topic and 10%
//! controversial, plus a little cross-class noise so the task is not
//! trivially separable. Used by the acceptance tests and the fixture corpus.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classify::LabeledExample;
use crate::taxonomy::{ControversyClass, InfoClass, Task};

/// Topic vocabulary for one class.
pub fn keywords(class: InfoClass) -> &'static [&'static str] {
    match class {
        InfoClass::MaladiesRavageurs => &[
            "limaces", "pucerons", "ravageurs", "maladies fongiques", "mildiou", "oïdium",
            "bouillie bordelaise", "purin d'ortie", "purin de prêle", "les poules", "canards coureurs",
            "porte-greffe", "variétés résistantes", "doryphores", "rats taupiers", "chenilles",
            "altises", "campagnols", "cochenilles", "traitement",
        ],
        InfoClass::Eau => &[
            "arrosage", "irrigation", "goutte-à-goutte", "puits", "la source", "sécheresse", "cuves",
            "eau de pluie", "arroser", "évaporation", "sols hydromorphes", "eau du réseau", "oyas",
            "la mare", "citerne", "récupérateur", "paillage",
        ],
        InfoClass::Sol => &[
            "compost", "fumier", "engrais", "biomasse", "brf", "broyat", "paille", "foin",
            "feuilles mortes", "vie du sol", "vers de terre", "grelinette", "décompacter", "fertilité",
            "carbone", "humus", "amendement", "paillage",
        ],
        InfoClass::Adventices => &[
            "désherbage", "mauvaises herbes", "adventices", "liseron", "bâche", "désherber", "binette",
            "chiendent", "herbes indésirables", "faux semis", "couvert végétal", "sarcler", "ronces",
            "arracher",
        ],
        InfoClass::Recolte => &[
            "récolte", "récolté", "fruits", "chayotte", "tomates", "courgettes", "kilos", "cueillette",
            "pommes de terre", "production", "haricots", "panier", "conserves", "rendement",
        ],
        InfoClass::NonPertinent => &[],
    }
}

const FILLER: &[&str] = &[
    "merci", "super", "vidéo", "bravo", "chaîne", "continue", "génial", "top", "bonne journée", "salut",
    "abonné", "belle", "famille", "question", "courage", "trop bien", "j'adore", "hâte", "prochaine",
    "passionnant", "bisous", "magnifique", "sympa", "musique", "montage", "bonjour", "coucou", "merci beaucoup",
];

const FUNCTION_WORDS: &[&str] = &[
    "je", "tu", "c'est", "de", "la", "le", "les", "un", "une", "et", "pour", "dans", "avec", "on", "nous",
    "vous", "très", "bien", "aussi", "mais", "chez", "moi", "ça", "en", "au", "il", "y", "a", "des", "pas",
    "plus", "toujours", "encore", "cette", "année",
];

const CONTROVERSY_MARKERS: &[&str] = &[
    "n'importe quoi", "c'est faux", "pas d'accord", "arnaque", "mensonge", "ridicule", "désolé mais",
    "absolument pas", "honteux", "aucune preuve", "bidon", "dangereux", "irresponsable", "?!", "!!",
];

const EMOJI: &[&str] = &["😀", "👍", "❤️", "🙏", "😂", "🌱", "👏", "😉"];

/// Class proportions and noise levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub comments: usize,
    /// Share of each topical class; the rest is `NonPertinent`.
    pub topic_shares: [(InfoClass, f64); 5],
    pub controversy_share: f64,
    /// Chance that an off-topic comment mentions one topic keyword anyway.
    pub stray_keyword_rate: f64,
    /// Chance that a topical comment also mentions another class's keyword.
    pub cross_topic_rate: f64,
    /// Chance that a non-controversial comment contains a controversy marker.
    pub stray_marker_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            comments: 1400,
            topic_shares: [
                (InfoClass::MaladiesRavageurs, 0.027),
                (InfoClass::Eau, 0.023),
                (InfoClass::Sol, 0.024),
                (InfoClass::Adventices, 0.016),
                (InfoClass::Recolte, 0.010),
            ],
            controversy_share: 0.10,
            stray_keyword_rate: 0.08,
            cross_topic_rate: 0.15,
            stray_marker_rate: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticComment {
    pub id: String,
    pub text: String,
    pub info: InfoClass,
    pub controversy: ControversyClass,
}

impl SyntheticComment {
    pub fn example(&self, task: Task) -> LabeledExample {
        let label = match task {
            Task::InfoType => self.info.id(),
            Task::Controversy => self.controversy.id(),
        };
        LabeledExample::new(self.id.clone(), self.text.clone(), task, label)
    }
}

const TOPICS: [InfoClass; 5] =
    [InfoClass::MaladiesRavageurs, InfoClass::Eau, InfoClass::Sol, InfoClass::Adventices, InfoClass::Recolte];

/// Generates `config.comments` comments. Class counts are fixed by the
/// shares (rounded); which comment gets which label and the wording depend
/// on `seed`.
pub fn generate(seed: u64, config: &SynthConfig) -> Vec<SyntheticComment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.comments;

    let mut infos = Vec::with_capacity(n);
    for (class, share) in config.topic_shares {
        let count = crate::math::round(share * n as f64) as usize;
        infos.extend(core::iter::repeat_n(class, count));
    }
    infos.truncate(n);
    infos.resize(n, InfoClass::NonPertinent);
    infos.shuffle(&mut rng);

    let n_contro = crate::math::round(config.controversy_share * n as f64) as usize;
    let mut contro = alloc::vec![ControversyClass::NonControverse; n];
    for c in contro.iter_mut().take(n_contro.min(n)) {
        *c = ControversyClass::Controverse;
    }
    contro.shuffle(&mut rng);

    infos
        .into_iter()
        .zip(contro)
        .enumerate()
        .map(|(i, (info, controversy))| SyntheticComment {
            id: alloc::format!("synth-{seed}-{i:05}"),
            text: compose(&mut rng, info, controversy, config),
            info,
            controversy,
        })
        .collect()
}

// Picks item `r` with probability proportional to 1 / (r + 1).
fn zipf_choice(rng: &mut ChaCha8Rng, items: &'static [&'static str]) -> &'static str {
    let total: f64 = (1..=items.len()).map(|r| 1.0 / r as f64).sum();
    let mut x = rng.random_range(0.0..total);
    for (r, item) in items.iter().enumerate() {
        x -= 1.0 / (r + 1) as f64;
        if x < 0.0 {
            return item;
        }
    }
    items[items.len() - 1]
}

fn compose(rng: &mut ChaCha8Rng, info: InfoClass, controversy: ControversyClass, config: &SynthConfig) -> String {
    let mut words: Vec<&str> = Vec::new();
    let len = rng.random_range(5..12);
    for _ in 0..len {
        let pool = if rng.random_bool(0.6) { FUNCTION_WORDS } else { FILLER };
        words.push(pool.choose(rng).expect("non-empty"));
    }

    let mut extra: Vec<&str> = Vec::new();
    if info == InfoClass::NonPertinent {
        if rng.random_bool(config.stray_keyword_rate) {
            let other = *TOPICS.choose(rng).expect("non-empty");
            extra.push(keywords(other).choose(rng).expect("non-empty"));
        }
    } else {
        for _ in 0..rng.random_range(2..=4) {
            extra.push(zipf_choice(rng, keywords(info)));
        }
        if rng.random_bool(config.cross_topic_rate) {
            let other = *TOPICS.choose(rng).expect("non-empty");
            extra.push(keywords(other).choose(rng).expect("non-empty"));
        }
    }
    let markers = match controversy {
        ControversyClass::Controverse => rng.random_range(1..=2),
        ControversyClass::NonControverse => usize::from(rng.random_bool(config.stray_marker_rate)),
    };
    for _ in 0..markers {
        extra.push(CONTROVERSY_MARKERS.choose(rng).expect("non-empty"));
    }
    for w in extra {
        let at = rng.random_range(0..=words.len());
        words.insert(at, w);
    }
    if rng.random_bool(0.3) {
        let e = EMOJI.choose(rng).expect("non-empty");
        words.push(e);
    }

    let mut text = words.join(" ");
    if let Some(first) = text.chars().next() {
        let upper: String = first.to_uppercase().collect();
        text.replace_range(..first.len_utf8(), &upper);
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn imbalance_and_size() {
        let corpus = generate(1, &SynthConfig::default());
        assert_eq!(corpus.len(), 1400);
        let np = corpus.iter().filter(|c| c.info == InfoClass::NonPertinent).count();
        // 1400 - (38 + 32 + 34 + 22 + 14)
        assert_eq!(np, 1260);
        let contro = corpus.iter().filter(|c| c.controversy == ControversyClass::Controverse).count();
        assert_eq!(contro, 140);
        for class in TOPICS {
            assert!(corpus.iter().any(|c| c.info == class));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SynthConfig { comments: 50, ..Default::default() };
        assert_eq!(generate(9, &cfg), generate(9, &cfg));
        assert_ne!(generate(9, &cfg), generate(10, &cfg));
    }

    #[test]
    fn topical_comments_carry_their_keywords() {
        let corpus = generate(2, &SynthConfig::default());
        for c in corpus.iter().filter(|c| c.info != InfoClass::NonPertinent) {
            let lower = c.text.to_lowercase();
            assert!(keywords(c.info).iter().any(|k| lower.contains(k)), "{c:?}");
        }
    }
}

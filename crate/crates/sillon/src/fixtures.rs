//! Deterministic generator of the offline fixture corpus.
//!
//! The generated tree is committed under `crates/sillon/fixtures/` and is
//! what `sillon fixtures generate` writes:
//!
//! ```text
//! corpus/<channel_id>/...   provider layout read by FixtureProvider
//! annotations.jsonl         gold labels of the synthetic comments, both tasks
//! lexicon.tsv               gazetteer categories
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{Duration, FixedOffset, TimeZone};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sillon_core::synth::{self, SynthConfig};
use sillon_core::taxonomy::{TargetKind, Task};
use sillon_core::text::TimedSegment;

use crate::domain::{format_timestamp, parse_timestamp, Annotation, Extra, TargetRef, Timestamp};
use crate::ingest::{FixtureChannel, FixtureComment, FixtureVideo};

pub const FIXTURE_SEED: u64 = 2024;
pub const SYNTH_SEED: u64 = 7;
pub const ANNOTATOR: &str = "expert-2";

#[derive(Clone, Copy, PartialEq, Eq)]
enum Topic {
    Ravageurs,
    Eau,
    Sol,
    Adventices,
}

const RAVAGEURS: &[&str] = &[
    "cette année les limaces ont mangé presque toutes les jeunes salades",
    "on a lâché les canards coureurs indiens dans le potager et ils font un travail incroyable",
    "pour le mildiou je passe un peu de bouillie bordelaise mais vraiment le minimum",
    "le purin d'ortie je le dilue à dix pour cent avant de pulvériser sur les feuilles",
    "les pucerons sont arrivés sur les fèves alors j'ai attendu que les coccinelles fassent leur boulot",
    "je mélange les cultures pour éviter d'avoir toute une planche de la même espèce",
    "les poules passent dans le verger en hiver et elles nettoient les larves au pied des arbres",
    "j'ai choisi des variétés résistantes parce que je n'ai pas envie de traiter tout le temps",
];

const EAU: &[&str] = &[
    "ici on n'a pas de réseau alors toute l'eau vient du puits et des cuves de récupération",
    "le paillage épais ça limite énormément l'évaporation en plein été",
    "j'ai installé un goutte-à-goutte sous la serre avec un petit programmateur",
    "cet été la sécheresse a été terrible on a arrosé seulement le soir",
    "la mare sert de réserve et elle attire aussi plein de biodiversité",
    "dans le bas du terrain le sol reste gorgé d'eau tout l'hiver donc on a creusé une baissière",
    "avec trois cuves de mille litres on tient à peu près trois semaines sans pluie",
];

const SOL: &[&str] = &[
    "on apporte du compost bien mûr à l'automne sur toutes les planches",
    "le bois raméal fragmenté nourrit la vie du sol et les champignons",
    "je ne retourne plus la terre je passe juste la grelinette pour aérer",
    "le fumier de cheval je le laisse composter au moins six mois",
    "on coupe la biomasse des arbres sacrificiels et on la laisse au sol",
    "la terre ici est très argileuse alors on rajoute beaucoup de matière organique",
    "les vers de terre sont revenus depuis qu'on paille avec de la paille et des feuilles mortes",
];

const ADVENTICES: &[&str] = &[
    "je ne désherbe presque plus je couche simplement les herbes sur place",
    "la bâche tissée sur les allées ça nous fait gagner des heures de désherbage",
    "on sème un couvert de phacélie et de seigle juste après la récolte",
    "en plantant plus serré les mauvaises herbes n'ont plus de place pour lever",
    "le liseron revient chaque printemps alors on l'arrache à la main avant qu'il grimpe",
    "la binette reste l'outil que j'utilise le plus au printemps",
];

const GENERAL: &[&str] = &[
    "aujourd'hui je vous emmène faire le tour du jardin en fin de journée",
    "le temps est un peu gris mais on va quand même filmer",
    "je vous mets le lien en description pour ceux que ça intéresse",
    "merci à tous pour vos messages sous la dernière vidéo",
    "on a eu pas mal de visites cet été et ça fait vraiment plaisir",
    "le chantier de la cabane avance doucement",
];

const INTRO: &[&str] = &[
    "bonjour à tous et bienvenue dans cette nouvelle vidéo",
    "salut tout le monde on se retrouve au jardin",
    "hello à tous j'espère que vous allez bien",
];

const OUTRO: &[&str] = &[
    "voilà c'est tout pour aujourd'hui à bientôt",
    "n'oubliez pas de vous abonner si ce n'est pas déjà fait",
    "on se retrouve très vite pour la suite du chantier",
];

const LEEKS: &[&str] = &[
    "il y aura tous les poireaux qui vont attirer tous les ravageurs qui raffolent des poireaux",
    "bah on va mettre un peu de poireaux là un peu de poireaux là un peu de poireaux là",
];

const EXTRA_COMMENTS: &[&str] = &[
    "Dans le Maine-et-Loire, superbe récolte cette année. Un pied de chayotte et une centaine de fruits.",
    "Super   vidéo!!😀 On a testé le paillage chez nous en Bretagne.",
    "M. Dupont du village utilise la bouillie bordelaise depuis 30 ans… et ça marche.",
    "Vous avez essayé les graines de chez Kokopelli ?",
    "Merci\u{0007} pour le partage 🙏🙏",
];

const LEXICON: &str = "\
# category\tterm
lieux\tMaine-et-Loire
lieux\tBretagne
lieux\tAnjou
lieux\tDrôme
lieux\tArdèche
lieux\tBrésil
lieux\tNormandie
organisations\tINRAE
organisations\tKokopelli
organisations\tTerre de Liens
organisations\tColibris
organisations\tChambre d'agriculture
techniques\tbouillie bordelaise
techniques\tpurin d'ortie
techniques\tgoutte-à-goutte
techniques\tbois raméal fragmenté
techniques\tgrelinette
techniques\tcanards coureurs indiens
";

const AUTHORS: &[&str] = &[
    "Camille", "Dominique", "Claude", "Sacha", "Alix", "Lou", "Charlie", "Maxime", "Morgan", "Noa", "Eden",
    "Andréa", "Jo", "Loïs", "Sasha",
];

struct ChannelPlan {
    id: &'static str,
    title: &'static str,
    handle: &'static str,
    videos: [(Topic, &'static str); 3],
}

const CHANNELS: [ChannelPlan; 4] = [
    ChannelPlan {
        id: "UC-potager-autonome",
        title: "Le Potager Autonome",
        handle: "potager-autonome",
        videos: [
            (Topic::Ravageurs, "Associer les légumes contre les ravageurs"),
            (Topic::Sol, "Nourrir le sol sans le travailler"),
            (Topic::Eau, "Un été sans arrosage ?"),
        ],
    },
    ChannelPlan {
        id: "UC-ferme-vivriere",
        title: "Ferme Vivrière des Collines",
        handle: "ferme-vivriere",
        videos: [
            (Topic::Adventices, "Fini le désherbage"),
            (Topic::Ravageurs, "Canards, poules et limaces"),
            (Topic::Sol, "Le compost en grand"),
        ],
    },
    ChannelPlan {
        id: "UC-jardin-foret-anjou",
        title: "Jardin-Forêt en Anjou",
        handle: "jardin-foret",
        videos: [
            (Topic::Sol, "Biomasse et arbres sacrificiels"),
            (Topic::Eau, "Une mare pour le jardin-forêt"),
            (Topic::Adventices, "Couverts végétaux d'automne"),
        ],
    },
    ChannelPlan {
        id: "UC-autonomie-eau-pluie",
        title: "Autonomie et Eau de Pluie",
        handle: "autonomie-eau",
        videos: [
            (Topic::Eau, "Installer ses cuves de récupération"),
            (Topic::Eau, "Goutte-à-goutte sous serre"),
            (Topic::Adventices, "Bâches ou paillage ?"),
        ],
    },
];

fn bank(topic: Topic) -> &'static [&'static str] {
    match topic {
        Topic::Ravageurs => RAVAGEURS,
        Topic::Eau => EAU,
        Topic::Sol => SOL,
        Topic::Adventices => ADVENTICES,
    }
}

/// Caption fragments for `sentences`: words grouped 3 to 7 per fragment,
/// short gaps inside a sentence and longer pauses between most sentences.
fn captions(rng: &mut ChaCha8Rng, sentences: &[&str]) -> Vec<TimedSegment> {
    let mut out = Vec::new();
    let mut t_cs: u64 = rng.random_range(0..200);
    for (i, sentence) in sentences.iter().enumerate() {
        if i > 0 {
            // about one boundary in eight is spoken without a clear pause
            t_cs += if rng.random_bool(0.125) { rng.random_range(10..60) } else { rng.random_range(150..260) };
        }
        let words: Vec<&str> = sentence.split_whitespace().collect();
        let mut k = 0;
        while k < words.len() {
            let n = rng.random_range(3..=7).min(words.len() - k);
            let dur_cs = 45 * n as u64 + rng.random_range(0..60);
            out.push(TimedSegment::new(t_cs as f64 / 100.0, dur_cs as f64 / 100.0, words[k..k + n].join(" ")));
            t_cs += dur_cs;
            k += n;
            if k < words.len() {
                t_cs += rng.random_range(5..40);
            }
        }
    }
    out
}

fn script(rng: &mut ChaCha8Rng, topic: Topic, with_leeks: bool) -> Vec<&'static str> {
    let mut main: Vec<&str> = bank(topic).to_vec();
    main.shuffle(rng);
    main.truncate(rng.random_range(4..=6));
    let mut others: Vec<&str> = GENERAL.to_vec();
    others.shuffle(rng);
    for s in others.into_iter().take(2) {
        let at = rng.random_range(0..=main.len());
        main.insert(at, s);
    }
    if with_leeks {
        for (i, s) in LEEKS.iter().enumerate() {
            main.insert(1 + i, s);
        }
    }
    let mut out = vec![*INTRO.choose(rng).expect("non-empty")];
    out.extend(main);
    out.push(OUTRO.choose(rng).expect("non-empty"));
    out
}

fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("fixture serializes");
    bytes.push(b'\n');
    bytes
}

/// Timestamps alternate between UTC and a +02:00 rendering of the same
/// instant, as platform exports do.
fn stamp(t: Timestamp, local: bool) -> String {
    if local {
        let tz = FixedOffset::east_opt(2 * 3600).expect("valid offset");
        tz.from_utc_datetime(&t.naive_utc()).to_rfc3339()
    } else {
        format_timestamp(&t)
    }
}

/// Every fixture file, keyed by path relative to the fixture root.
pub fn fixture_files() -> BTreeMap<PathBuf, Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(FIXTURE_SEED);
    let mut files = BTreeMap::new();
    let corpus = Path::new("corpus");

    struct Slot {
        published: Timestamp,
        comments: Vec<FixtureComment>,
        dir: PathBuf,
    }
    let mut slots: Vec<Slot> = Vec::new();
    let base = parse_timestamp("2023-01-15T17:00:00Z").expect("valid date");

    for (ci, plan) in CHANNELS.iter().enumerate() {
        let dir = corpus.join(plan.id);
        let channel = FixtureChannel {
            channel_id: plan.id.into(),
            title: plan.title.into(),
            url: format!("https://www.youtube.com/channel/{}", plan.id),
            handle: Some(plan.handle.into()),
        };
        files.insert(dir.join("channel.json"), pretty(&channel));

        let mut videos = Vec::new();
        for (vi, (topic, title)) in plan.videos.iter().enumerate() {
            let video_id = format!("{}-v{}", plan.handle, vi + 1);
            let published = base + Duration::days((vi * 97 + ci * 23) as i64) + Duration::minutes(rng.random_range(0..600));
            let lines = script(&mut rng, *topic, ci == 0 && vi == 0);
            let segments = captions(&mut rng, &lines);
            let end = segments.last().map_or(0.0, TimedSegment::end_s);
            let has_transcript = !(ci == 3 && vi == 2);
            videos.push(FixtureVideo {
                video_id: video_id.clone(),
                title: (*title).into(),
                published_at: stamp(published, vi == 1),
                url: format!("https://www.youtube.com/watch?v={video_id}"),
                duration_s: (end + 30.0).round(),
            });
            let video_dir = dir.join(&video_id);
            if has_transcript {
                files.insert(video_dir.join("transcript.json"), pretty(&segments));
            }
            slots.push(Slot { published, comments: Vec::new(), dir: video_dir });
        }
        files.insert(dir.join("videos.json"), pretty(&videos));
    }

    let synthetic = synth::generate(SYNTH_SEED, &SynthConfig::default());
    let mut annotations = Vec::new();
    let labelled_at = parse_timestamp("2024-03-01T09:00:00Z").expect("valid date");
    let mut placed: Vec<(usize, Timestamp, String, String)> = Vec::new();
    for (i, c) in synthetic.iter().enumerate() {
        let slot = rng.random_range(0..slots.len());
        let comment_id = format!("cm{:05}", i + 1);
        for task in Task::ALL {
            annotations.push(Annotation {
                target: TargetRef { kind: TargetKind::Comment, id: comment_id.clone() },
                annotator_id: ANNOTATOR.into(),
                task,
                label: c.example(task).label,
                created_at: labelled_at,
                extra: Extra::new(),
            });
        }
        placed.push((slot, slots[slot].published, comment_id, c.text.clone()));
    }
    for (i, text) in EXTRA_COMMENTS.iter().enumerate() {
        placed.push((6 + i % 3, slots[6 + i % 3].published, format!("cx{:02}", i + 1), (*text).into()));
    }

    for (slot, published, comment_id, text) in placed {
        let at = published + Duration::minutes(rng.random_range(30..60 * 24 * 60));
        let author = format!("{} {}", AUTHORS.choose(&mut rng).expect("non-empty"), rng.random_range(1..40));
        slots[slot].comments.push(FixtureComment { comment_id, author, published_at: format_timestamp(&at), text, reply_to: None });
    }

    for slot in &mut slots {
        slot.comments.sort_by(|a, b| a.published_at.cmp(&b.published_at).then_with(|| a.comment_id.cmp(&b.comment_id)));
        for i in 1..slot.comments.len() {
            if rng.random_bool(0.12) {
                let parent = slot.comments[rng.random_range(0..i)].comment_id.clone();
                slot.comments[i].reply_to = Some(parent);
            }
            if i % 2 == 1 {
                let t = parse_timestamp(&slot.comments[i].published_at).expect("generated timestamp");
                slot.comments[i].published_at = stamp(t, true);
            }
        }
        files.insert(slot.dir.join("comments.json"), pretty(&slot.comments));
    }

    let mut jsonl = Vec::new();
    for a in &annotations {
        serde_json::to_writer(&mut jsonl, a).expect("annotation serializes");
        jsonl.push(b'\n');
    }
    files.insert(PathBuf::from("annotations.jsonl"), jsonl);
    files.insert(PathBuf::from("lexicon.tsv"), LEXICON.as_bytes().to_vec());
    files
}

/// Writes the fixture tree under `root`. Returns the number of files.
pub fn write_fixtures(root: &Path) -> io::Result<usize> {
    let files = fixture_files();
    for (rel, bytes) in &files {
        let path = root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, bytes)?;
    }
    Ok(files.len())
}

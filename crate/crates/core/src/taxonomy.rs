//! Label taxonomy for the two annotation tasks.
//!
//! Class identifiers are stable strings (`"Eau"`, `"Controverse"`, ...) and are
//! what gets persisted in annotations, models and reports.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Classification task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "info", alias = "InfoType", alias = "info_type")]
    InfoType,
    #[serde(rename = "controversy", alias = "Controversy")]
    Controversy,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::InfoType, Task::Controversy];

    /// Class ids in declaration order. Argmax ties resolve to the earliest.
    pub fn classes(self) -> &'static [&'static str] {
        match self {
            Task::InfoType => &INFO_IDS,
            Task::Controversy => &CONTROVERSY_IDS,
        }
    }

    /// The "nothing of interest" class: dropped from transcript aggregates.
    pub fn negative_class(self) -> &'static str {
        match self {
            Task::InfoType => InfoClass::NonPertinent.id(),
            Task::Controversy => ControversyClass::NonControverse.id(),
        }
    }

    pub fn is_valid_label(self, label: &str) -> bool {
        self.classes().contains(&label)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::InfoType => "info",
            Task::Controversy => "controversy",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown task `{0}` (expected `info` or `controversy`)")]
pub struct UnknownTask(pub alloc::string::String);

impl FromStr for Task {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "info" | "info_type" | "InfoType" => Ok(Task::InfoType),
            "controversy" | "Controversy" => Ok(Task::Controversy),
            other => Err(UnknownTask(other.into())),
        }
    }
}

const INFO_IDS: [&str; 6] = ["MaladiesRavageurs", "Eau", "Sol", "Adventices", "Recolte", "NonPertinent"];
const CONTROVERSY_IDS: [&str; 2] = ["Controverse", "NonControverse"];

/// Agricultural practice topics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InfoClass {
    MaladiesRavageurs,
    Eau,
    Sol,
    Adventices,
    /// Harvest talk. Only comments may carry it.
    Recolte,
    NonPertinent,
}

impl InfoClass {
    pub const ALL: [InfoClass; 6] = [
        InfoClass::MaladiesRavageurs,
        InfoClass::Eau,
        InfoClass::Sol,
        InfoClass::Adventices,
        InfoClass::Recolte,
        InfoClass::NonPertinent,
    ];

    pub fn id(self) -> &'static str {
        INFO_IDS[self as usize]
    }

    pub fn from_id(id: &str) -> Option<Self> {
        INFO_IDS.iter().position(|c| *c == id).map(|i| Self::ALL[i])
    }

    pub fn short_name(self) -> &'static str {
        match self {
            InfoClass::MaladiesRavageurs => "Maladies/Ravageurs",
            InfoClass::Eau => "Eau",
            InfoClass::Sol => "Sol",
            InfoClass::Adventices => "Adventices",
            InfoClass::Recolte => "Récolte",
            InfoClass::NonPertinent => "Non-pertinent",
        }
    }

    /// Annotation guideline text shown to analysts.
    pub fn definition(self) -> &'static str {
        match self {
            InfoClass::MaladiesRavageurs => {
                "Actions taken to manage diseases and pests of cultivated plants (trees included): slugs, \
                 aphids, fungal diseases. Includes treatments (Bordeaux mixture, plant manures), releasing \
                 hens or runner ducks, resistant rootstocks or varieties, spatial arrangement of crops, \
                 planting protective species."
            }
            InfoClass::Eau => {
                "Actions taken to manage water in food production: access to water (well, spring, mains), \
                 lack of water (drought), excess water (waterlogged soils), saving water. For example \
                 mulching against summer evaporation or drip irrigation."
            }
            InfoClass::Sol => {
                "Actions taken to match soil structure, composition and fertility to the needs of the \
                 cultivated plants: organic or synthetic fertilizer, compost, biomass mulch (straw, hay, \
                 ramial chipped wood, dead leaves), fostering soil life, chop-and-drop of sacrificial plants."
            }
            InfoClass::Adventices => {
                "Actions taken to manage unwanted plants (weeds): reinforced fabric tarps, cover crops, \
                 denser planting, manual, mechanical or chemical weeding."
            }
            InfoClass::Recolte => {
                "Comments only. Anything about harvests that is not covered by another class."
            }
            InfoClass::NonPertinent => "Everything else.",
        }
    }

    /// Whether an annotation of this class may target `kind`.
    pub fn allowed_on(self, kind: TargetKind) -> bool {
        self != InfoClass::Recolte || kind == TargetKind::Comment
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ControversyClass {
    Controverse,
    NonControverse,
}

impl ControversyClass {
    pub const ALL: [ControversyClass; 2] = [ControversyClass::Controverse, ControversyClass::NonControverse];

    pub fn id(self) -> &'static str {
        CONTROVERSY_IDS[self as usize]
    }

    pub fn from_id(id: &str) -> Option<Self> {
        CONTROVERSY_IDS.iter().position(|c| *c == id).map(|i| Self::ALL[i])
    }

    pub fn definition(self) -> &'static str {
        match self {
            ControversyClass::Controverse => "The comment disputes, contradicts or challenges the video or another commenter.",
            ControversyClass::NonControverse => "No controversy.",
        }
    }
}

/// What an annotation or prediction is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Comment,
    Sentence,
    Transcript,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabelError {
    #[error("label `{label}` is not a {task} class")]
    UnknownLabel { task: Task, label: alloc::string::String },
    #[error("label `Recolte` is only allowed on comments, not on a {0:?}")]
    RecolteOnNonComment(TargetKind),
}

/// Checks a label against the task's class set and the comment-only rule.
pub fn validate_label(task: Task, label: &str, target: TargetKind) -> Result<(), LabelError> {
    if !task.is_valid_label(label) {
        return Err(LabelError::UnknownLabel { task, label: label.into() });
    }
    if task == Task::InfoType && !InfoClass::from_id(label).is_some_and(|c| c.allowed_on(target)) {
        return Err(LabelError::RecolteOnNonComment(target));
    }
    Ok(())
}

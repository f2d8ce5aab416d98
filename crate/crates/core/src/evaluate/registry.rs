//! Technique identifiers and the qualitative assessment matrix attached to
//! each of them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Technique {
    KAnonymity,
    LDiversity,
    TCloseness,
    NoiseAddition,
    RandomizedResponse,
    Condensation,
    RandomRotation,
    Geometric,
    RandomProjection,
    Nmf,
    Svd,
}

impl Technique {
    pub const ALL: [Technique; 11] = [
        Technique::KAnonymity,
        Technique::LDiversity,
        Technique::TCloseness,
        Technique::NoiseAddition,
        Technique::RandomizedResponse,
        Technique::Condensation,
        Technique::RandomRotation,
        Technique::Geometric,
        Technique::RandomProjection,
        Technique::Nmf,
        Technique::Svd,
    ];

    /// Identifier used on the command line and in reports.
    pub fn id(self) -> &'static str {
        match self {
            Technique::KAnonymity => "k-anonymity",
            Technique::LDiversity => "l-diversity",
            Technique::TCloseness => "t-closeness",
            Technique::NoiseAddition => "noise",
            Technique::RandomizedResponse => "randomized-response",
            Technique::Condensation => "condense",
            Technique::RandomRotation => "rotate",
            Technique::Geometric => "geometric",
            Technique::RandomProjection => "projection",
            Technique::Nmf => "nmf",
            Technique::Svd => "svd",
        }
    }

    pub fn is_anonymization(self) -> bool {
        matches!(self, Technique::KAnonymity | Technique::LDiversity | Technique::TCloseness)
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Technique::ALL
            .into_iter()
            .find(|t| t.id() == s)
            .ok_or_else(|| Error::UnknownTechnique(s.into()))
    }
}

impl Serialize for Technique {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

impl<'de> Deserialize<'de> for Technique {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmTask {
    Association,
    Classification,
    Clustering,
}

/// Text emitted for cells the assessment matrix leaves blank.
pub const UNSPECIFIED: &str = "unspecified";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TechniqueRegistryEntry {
    pub technique: Technique,
    /// Column heading in the assessment matrix.
    pub name: String,
    pub privacy_loss_label: String,
    pub information_loss_label: String,
    /// `yes`, `no` or `unspecified`.
    pub modifies_dm_algorithms: String,
    pub dm_tasks: Vec<DmTask>,
    /// `single`, `multi` or `unspecified`.
    pub data_dimension: String,
    pub preserved_property: String,
    /// `numerical`, `categorical` or `unspecified`.
    pub data_type: String,
    pub indistinguishability_level: String,
}

struct Row {
    name: &'static str,
    privacy: &'static str,
    information: &'static str,
    modifies: &'static str,
    tasks: &'static [DmTask],
    dimension: &'static str,
    preserved: &'static str,
    data_type: &'static str,
    level: &'static str,
}

fn row(t: Technique) -> Row {
    use DmTask::*;
    let blank = Row {
        name: "",
        privacy: "",
        information: "",
        modifies: "",
        tasks: &[],
        dimension: "",
        preserved: "",
        data_type: "",
        level: "",
    };
    // Cells are transcribed verbatim; "" marks a blank cell.
    match t {
        Technique::KAnonymity => Row {
            name: "k-an",
            privacy: "Average",
            information: "Low",
            modifies: "No",
            dimension: "Multi-Dimensional",
            preserved: "-",
            data_type: "-",
            level: "k",
            ..blank
        },
        Technique::LDiversity => Row { name: "L-div", ..blank },
        Technique::TCloseness => Row { name: "T-clo", ..blank },
        Technique::NoiseAddition => Row {
            name: "Noise Addition",
            privacy: "Average",
            information: "Low",
            modifies: "Yes",
            tasks: &[Association, Classification],
            dimension: "single-Dimensional",
            preserved: "Values distribution",
            data_type: "-",
            level: "-",
        },
        Technique::RandomizedResponse => Row {
            name: "Randomized Response",
            privacy: "Average",
            information: "Low",
            modifies: "Yes",
            tasks: &[Classification],
            dimension: "Single Dimensional",
            preserved: "Values distribution",
            data_type: "Categorical",
            level: "-",
        },
        Technique::Condensation => Row {
            name: "Condensation",
            privacy: "Low",
            information: "Very Low",
            modifies: "No",
            tasks: &[Classification],
            dimension: "Multi Dimensional",
            preserved: "Covariance structure",
            data_type: "numerical",
            level: "k",
        },
        Technique::RandomRotation => Row {
            name: "Random Rotation",
            privacy: "Low",
            information: "Very Low",
            modifies: "No",
            tasks: &[Classification],
            dimension: "Multi Dimensional",
            preserved: "Geometrical characteristic",
            data_type: "numerical",
            level: "-",
        },
        Technique::Geometric => Row {
            name: "Geometric",
            privacy: "Very Low",
            information: "Very Low",
            modifies: "No",
            tasks: &[Classification],
            dimension: "Multi Dimensional",
            preserved: "Geometrical characteristic",
            data_type: "numerical",
            level: "-",
        },
        Technique::RandomProjection => Row {
            name: "Random Projection",
            privacy: "Very Low",
            information: "Very Low",
            modifies: "No",
            tasks: &[Classification, Clustering],
            dimension: "Multi Dimensional",
            preserved: "Corelation between dimension",
            data_type: "numerical",
            level: "-",
        },
        Technique::Nmf => Row {
            name: "NMF",
            privacy: "Very Low",
            information: "Very Low",
            modifies: "No",
            tasks: &[Classification],
            dimension: "Multi Dimensional",
            preserved: "Corelation between dimension",
            data_type: "numerical",
            level: "-",
        },
        Technique::Svd => Row {
            name: "SVD",
            dimension: "Multi Dimensional",
            ..blank
        },
    }
}

fn or_unspecified(cell: &str) -> String {
    if cell.is_empty() {
        UNSPECIFIED.into()
    } else {
        cell.into()
    }
}

fn normalize_yes_no(cell: &str) -> String {
    match cell.to_ascii_lowercase().as_str() {
        "yes" => "yes".into(),
        "no" => "no".into(),
        _ => UNSPECIFIED.into(),
    }
}

fn normalize_dimension(cell: &str) -> String {
    let lower = cell.to_ascii_lowercase();
    if lower.starts_with("single") {
        "single".into()
    } else if lower.starts_with("multi") {
        "multi".into()
    } else {
        UNSPECIFIED.into()
    }
}

fn normalize_data_type(cell: &str) -> String {
    match cell.to_ascii_lowercase().as_str() {
        "numerical" => "numerical".into(),
        "categorical" => "categorical".into(),
        _ => UNSPECIFIED.into(),
    }
}

pub fn registry_entry(t: Technique) -> TechniqueRegistryEntry {
    let r = row(t);
    TechniqueRegistryEntry {
        technique: t,
        name: r.name.into(),
        privacy_loss_label: or_unspecified(r.privacy),
        information_loss_label: or_unspecified(r.information),
        modifies_dm_algorithms: normalize_yes_no(r.modifies),
        dm_tasks: r.tasks.to_vec(),
        data_dimension: normalize_dimension(r.dimension),
        preserved_property: or_unspecified(r.preserved),
        data_type: normalize_data_type(r.data_type),
        indistinguishability_level: or_unspecified(r.level),
    }
}

/// One entry per implemented technique, in [`Technique::ALL`] order.
pub fn technique_registry() -> Vec<TechniqueRegistryEntry> {
    Technique::ALL.into_iter().map(registry_entry).collect()
}

//! PLOVER label algebra.
//!
//! Rootcodes, Quadcodes, event modalities and the mappings between them,
//! plus the re-mapping of legacy CAMEO action codes onto PLOVER rootcodes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("malformed CAMEO code `{0}`: expected 2 to 4 decimal digits")]
    MalformedCode(String),
    #[error("unknown CAMEO root `{0}`: leading pair must be 01-20")]
    UnknownRoot(String),
}

/// The fifteen PLOVER action categories, in codebook order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Rootcode {
    Agree,
    Consult,
    Support,
    Cooperate,
    Aid,
    Yield,
    Accuse,
    Request,
    Reject,
    Threaten,
    Protest,
    Mobilize,
    Sanction,
    Coerce,
    Assault,
}

impl Rootcode {
    pub const ALL: [Rootcode; 15] = [
        Rootcode::Agree,
        Rootcode::Consult,
        Rootcode::Support,
        Rootcode::Cooperate,
        Rootcode::Aid,
        Rootcode::Yield,
        Rootcode::Accuse,
        Rootcode::Request,
        Rootcode::Reject,
        Rootcode::Threaten,
        Rootcode::Protest,
        Rootcode::Mobilize,
        Rootcode::Sanction,
        Rootcode::Coerce,
        Rootcode::Assault,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rootcode::Agree => "AGREE",
            Rootcode::Consult => "CONSULT",
            Rootcode::Support => "SUPPORT",
            Rootcode::Cooperate => "COOPERATE",
            Rootcode::Aid => "AID",
            Rootcode::Yield => "YIELD",
            Rootcode::Accuse => "ACCUSE",
            Rootcode::Request => "REQUEST",
            Rootcode::Reject => "REJECT",
            Rootcode::Threaten => "THREATEN",
            Rootcode::Protest => "PROTEST",
            Rootcode::Mobilize => "MOBILIZE",
            Rootcode::Sanction => "SANCTION",
            Rootcode::Coerce => "COERCE",
            Rootcode::Assault => "ASSAULT",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Quadcode of the root in the PLOVER rootcode table.
    pub fn base_quad(self) -> Quadcode {
        use Rootcode::*;
        match self {
            Agree | Consult | Support => Quadcode::VerbalCooperation,
            Cooperate | Aid | Yield => Quadcode::MaterialCooperation,
            Accuse | Request | Reject | Threaten => Quadcode::VerbalConflict,
            Protest | Mobilize | Sanction | Coerce | Assault => Quadcode::MaterialConflict,
        }
    }

    pub fn label(self) -> Label {
        Label::of(self)
    }
}

impl fmt::Display for Rootcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rootcode {
    type Err = OntologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize_alias(s)
    }
}

/// Legacy CAMEO-era names still used by hand-written tables.
const ALIASES: &[(&str, Rootcode)] = &[
    ("DEMAND", Rootcode::Request),
    ("INVESTIGATE", Rootcode::Accuse),
    ("DISAPPROVE", Rootcode::Accuse),
    ("FIGHT", Rootcode::Assault),
    ("THREAT", Rootcode::Threaten),
];

/// Resolves a canonical rootcode name or a registered alias, ignoring case
/// and surrounding whitespace.
pub fn normalize_alias(name: &str) -> Result<Rootcode, OntologyError> {
    let key = name.trim().to_ascii_uppercase();
    // "THREAT." appears as an abbreviation in score tables
    let key = key.trim_end_matches('.');
    if let Some(root) = Rootcode::ALL.iter().find(|r| r.name() == key) {
        return Ok(*root);
    }
    ALIASES
        .iter()
        .find(|(alias, _)| *alias == key)
        .map(|(_, root)| *root)
        .ok_or_else(|| OntologyError::UnknownLabel(name.trim().to_string()))
}

/// Verbal/Material x Cooperation/Conflict grouping, numbered 1-4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Quadcode {
    VerbalCooperation = 1,
    MaterialCooperation = 2,
    VerbalConflict = 3,
    MaterialConflict = 4,
}

impl Quadcode {
    pub const ALL: [Quadcode; 4] = [
        Quadcode::VerbalCooperation,
        Quadcode::MaterialCooperation,
        Quadcode::VerbalConflict,
        Quadcode::MaterialConflict,
    ];

    pub fn digit(self) -> u8 {
        self as u8
    }

    pub fn from_digit(digit: u8) -> Option<Quadcode> {
        match digit {
            1 => Some(Quadcode::VerbalCooperation),
            2 => Some(Quadcode::MaterialCooperation),
            3 => Some(Quadcode::VerbalConflict),
            4 => Some(Quadcode::MaterialConflict),
            _ => None,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Quadcode::VerbalCooperation => "V-Coop.",
            Quadcode::MaterialCooperation => "M-Coop.",
            Quadcode::VerbalConflict => "V-Conf.",
            Quadcode::MaterialConflict => "M-Conf.",
        }
    }

    pub fn is_verbal(self) -> bool {
        matches!(self, Quadcode::VerbalCooperation | Quadcode::VerbalConflict)
    }

    pub fn binary(self) -> BinaryClass {
        quad_to_binary(self)
    }
}

impl fmt::Display for Quadcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.digit())
    }
}

impl FromStr for Quadcode {
    type Err = OntologyError;

    /// Accepts `3`, `V-Conf.`, `v-conf`, `3. V-Conf.` and the long names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = s.trim();
        let mut key = raw.to_ascii_lowercase();
        if let Some(first) = key.chars().next().and_then(|c| c.to_digit(10)) {
            let rest = key[1..].trim_start_matches('.').trim();
            let quad = Quadcode::from_digit(first as u8)
                .ok_or_else(|| OntologyError::UnknownLabel(raw.to_string()))?;
            if rest.is_empty() || parse_quad_name(rest) == Some(quad) {
                return Ok(quad);
            }
            return Err(OntologyError::UnknownLabel(raw.to_string()));
        }
        key.retain(|c| c != '.');
        parse_quad_name(&key).ok_or_else(|| OntologyError::UnknownLabel(raw.to_string()))
    }
}

fn parse_quad_name(name: &str) -> Option<Quadcode> {
    let name: String = name
        .chars()
        .filter(|c| !matches!(c, '.' | ' ' | '_'))
        .collect();
    match name.as_str() {
        "v-coop" | "verbalcooperation" => Some(Quadcode::VerbalCooperation),
        "m-coop" | "materialcooperation" => Some(Quadcode::MaterialCooperation),
        "v-conf" | "verbalconflict" => Some(Quadcode::VerbalConflict),
        "m-conf" | "materialconflict" => Some(Quadcode::MaterialConflict),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BinaryClass {
    Cooperation,
    Conflict,
}

impl BinaryClass {
    pub const ALL: [BinaryClass; 2] = [BinaryClass::Cooperation, BinaryClass::Conflict];

    pub fn name(self) -> &'static str {
        match self {
            BinaryClass::Cooperation => "Cooperation",
            BinaryClass::Conflict => "Conflict",
        }
    }
}

impl fmt::Display for BinaryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BinaryClass {
    type Err = OntologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cooperation" | "coop" => Ok(BinaryClass::Cooperation),
            "conflict" | "conf" => Ok(BinaryClass::Conflict),
            _ => Err(OntologyError::UnknownLabel(s.trim().to_string())),
        }
    }
}

/// Event status: past, future, negated past, negated future.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Modality {
    Past,
    Future,
    NegatedPast,
    NegatedFuture,
}

impl Modality {
    pub const ALL: [Modality; 4] = [
        Modality::Past,
        Modality::Future,
        Modality::NegatedPast,
        Modality::NegatedFuture,
    ];

    pub fn abbrev(self) -> &'static str {
        match self {
            Modality::Past => "P",
            Modality::Future => "F",
            Modality::NegatedPast => "NP",
            Modality::NegatedFuture => "NF",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbrev())
    }
}

/// A full PLOVER label: rootcode plus its quadcode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Label {
    pub root: Rootcode,
    pub quad: Quadcode,
}

impl Label {
    pub fn of(root: Rootcode) -> Label {
        Label {
            root,
            quad: root.base_quad(),
        }
    }

    pub fn binary(self) -> BinaryClass {
        quad_to_binary(self.quad)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.root, self.quad)
    }
}

pub fn root_base_quad(root: Rootcode) -> Quadcode {
    root.base_quad()
}

/// Label an event receives when its modality changes.
///
/// Verbal roots stay verbal under every modality; material roots move to
/// verbal labels for future statements and to the opposite material class
/// when a past event is negated.
pub fn modality_map(root: Rootcode, modality: Modality) -> Label {
    use Modality::*;
    use Quadcode::*;
    let mapped = match (root.base_quad(), modality) {
        (_, Past) => root,
        (VerbalCooperation, Future) => Rootcode::Agree,
        (VerbalCooperation, NegatedPast | NegatedFuture) => Rootcode::Reject,
        (MaterialCooperation, Future) => Rootcode::Agree,
        (MaterialCooperation, NegatedPast) => Rootcode::Sanction,
        (MaterialCooperation, NegatedFuture) => Rootcode::Reject,
        (VerbalConflict, Future) => root,
        (VerbalConflict, NegatedPast | NegatedFuture) => Rootcode::Agree,
        (MaterialConflict, Future) => Rootcode::Threaten,
        (MaterialConflict, NegatedPast) => Rootcode::Yield,
        (MaterialConflict, NegatedFuture) => Rootcode::Agree,
    };
    Label::of(mapped)
}

pub fn quad_to_binary(quad: Quadcode) -> BinaryClass {
    match quad {
        Quadcode::VerbalCooperation | Quadcode::MaterialCooperation => BinaryClass::Cooperation,
        Quadcode::VerbalConflict | Quadcode::MaterialConflict => BinaryClass::Conflict,
    }
}

/// Maps a CAMEO action code onto PLOVER. Only the leading two digits matter;
/// `Ok(None)` marks the dropped categories 01 and 02.
pub fn cameo_to_plover(code: &str) -> Result<Option<Label>, OntologyError> {
    let code = code.trim();
    if !(2..=4).contains(&code.len()) || !code.bytes().all(|b| b.is_ascii_digit()) {
        return Err(OntologyError::MalformedCode(code.to_string()));
    }
    let root = match &code[..2] {
        "01" | "02" => return Ok(None),
        "03" => Rootcode::Agree,
        "04" => Rootcode::Consult,
        "05" => Rootcode::Support,
        "06" => Rootcode::Cooperate,
        "07" => Rootcode::Aid,
        "08" => Rootcode::Yield,
        "09" | "11" => Rootcode::Accuse,
        "10" => Rootcode::Request,
        "12" => Rootcode::Reject,
        "13" => Rootcode::Threaten,
        "14" => Rootcode::Protest,
        "15" => Rootcode::Mobilize,
        "16" => Rootcode::Sanction,
        "17" => Rootcode::Coerce,
        "18" | "19" | "20" => Rootcode::Assault,
        _ => return Err(OntologyError::UnknownRoot(code.to_string())),
    };
    Ok(Some(Label::of(root)))
}

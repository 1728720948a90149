//! Zero-shot PLOVER event coding.
//!
//! Classifies the political relation between a source and a target mention
//! by asking an entailment model which templated hypothesis the sentence
//! supports, then refining the answer through a three-level tree query:
//! context filtering, modality expansion and rule-based disambiguation.

pub mod engine;
pub mod eval;
pub mod hypotheses;
pub mod ontology;
pub mod scorer;

pub use engine::{classify, ClassifierConfig, EventInstance, Mode, Override, Prediction};
pub use hypotheses::{tiny_table, HypothesisTable};
pub use ontology::{BinaryClass, Label, Modality, Quadcode, Rootcode};

//! Alias tables for weighted sampling, built sequentially (Vose) or in
//! parallel by splitting the light/heavy sweep into independent sections.

pub mod bench;
pub mod error;
pub mod gen;
pub mod io;
pub mod model;
pub mod pack;
pub mod partition;
pub mod rng;
pub mod sample;
pub mod seqbuild;
pub mod split;
pub mod stats;
pub mod sum;

pub use error::{Error, Result};
pub use gen::Distribution;
pub use model::{make_weight_set, validate_table, AliasTable, Item, Row, ValidationReport, WeightSet};
pub use pack::{psa_construct, psa_plus_construct, PsaConfig, PsaPlusConfig};
pub use partition::{partition_items, LightHeavyPartition};
pub use rng::{RngState, RngStream};
pub use sample::{sample_batch, sample_one, sectioned_sample, sectioned_sample_parallel};
pub use seqbuild::vose_construct;
pub use split::{compute_split_plan, compute_split_plan_with, Boundary, SplitPlan, SplitSearch};
pub use stats::{chi_square_test, frequency_counts, ChiSquare};

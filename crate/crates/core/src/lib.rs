//! Geometric semantic genetic programming for symbolic regression, with
//! tournament selection that can draw parents from any earlier generation.
//!
//! The evolutionary history is kept in an [`archive::Archive`]: generation 0
//! holds syntax trees, later individuals are records referencing earlier ones,
//! and every individual's semantics are memoized when it is created. Selecting
//! from an old generation therefore costs the same as selecting from the
//! previous one.

pub mod archive;
pub mod data;
pub mod error;
pub mod evolve;
pub mod experiment;
pub mod exprtree;
pub mod selection;
pub mod semantics;
pub mod stats;

pub use archive::{Archive, Individual, IndividualRef, MutationMode, Origin, Perturbation, Record};
pub use data::{load_csv, split_70_30, synthetic_dataset, Dataset, Matrix, SplitDataset, SyntheticKind};
pub use error::{Error, Result};
pub use evolve::{evolve, evolve_with, next_generation, run_evolution, EvolutionConfig, RunResult};
pub use experiment::{run_campaign, Campaign, CampaignReport, DatasetSource};
pub use exprtree::{BinaryOp, ExprTree, GenMethod, TreeGenConfig};
pub use selection::{SelectionDistribution, Selector};
pub use semantics::{rmse, sigmoid, SemanticVector};
pub use stats::{median, rank_sum_test, RankSumResult};

//! The append-only, generation-indexed record of every individual ever created.
//!
//! Generation 0 holds plain trees. Every later individual is a small record
//! pointing at individuals of earlier generations plus the random trees its
//! operators used. Semantics on both data splits are computed once, when the
//! record is realized, by combining the stored semantics of its parents; no
//! tree is ever expanded. Storage is therefore one record per individual,
//! `p * (g + 1)` records for `g` generations of size `p`.
//!
//! [`Archive::naive_eval`] is the exception: it expands a record all the way
//! down to generation 0 without looking at stored semantics, and exists only
//! to check the memoized values.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Matrix, SplitDataset};
use crate::error::{Error, Result};
use crate::exprtree::ExprTree;
use crate::semantics::{rmse, semantics_of_tree, sigmoid, SemanticVector};

/// Refuse naive expansions larger than this many record visits.
pub const NAIVE_EXPANSION_LIMIT: u128 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndividualRef {
    pub generation: usize,
    pub index: usize,
}

impl IndividualRef {
    pub fn new(generation: usize, index: usize) -> Self {
        IndividualRef { generation, index }
    }
}

impl fmt::Display for IndividualRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}#{}", self.generation, self.index)
    }
}

/// How an individual's unmutated semantics arise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// A generation-0 syntax tree.
    Leaf(ExprTree),
    /// Reproduction (also used for the elite): same semantics as the parent.
    Copy(IndividualRef),
    /// `sigmoid(R(x)) * p1(x) + (1 - sigmoid(R(x))) * p2(x)` per row.
    Crossover { parents: [IndividualRef; 2], random_tree: ExprTree },
}

/// Semantic mutation applied on top of an [`Origin`].
///
/// With `tree_b` present the perturbation is `step * (sigmoid(A(x)) - sigmoid(B(x)))`,
/// bounded by `step`. Without it the literal single-tree form `step * A(x)` is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub tree_a: ExprTree,
    pub tree_b: Option<ExprTree>,
    pub step: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationMode {
    /// Two random trees through a sigmoid; every coordinate moves by at most `step`.
    #[default]
    Bounded,
    /// One raw random tree, no sigmoid.
    Raw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub origin: Origin,
    pub mutation: Option<Perturbation>,
}

impl Record {
    pub fn leaf(tree: ExprTree) -> Self {
        Record { origin: Origin::Leaf(tree), mutation: None }
    }

    pub fn parents(&self) -> impl Iterator<Item = IndividualRef> + '_ {
        let refs: &[IndividualRef] = match &self.origin {
            Origin::Leaf(_) => &[],
            Origin::Copy(p) => std::slice::from_ref(p),
            Origin::Crossover { parents, .. } => parents,
        };
        refs.iter().copied()
    }

    fn trees(&self) -> impl Iterator<Item = &ExprTree> {
        let origin = match &self.origin {
            Origin::Leaf(t) => Some(t),
            Origin::Crossover { random_tree, .. } => Some(random_tree),
            Origin::Copy(_) => None,
        };
        let (a, b) = match &self.mutation {
            Some(m) => (Some(&m.tree_a), m.tree_b.as_ref()),
            None => (None, None),
        };
        origin.into_iter().chain(a).chain(b)
    }
}

#[derive(Clone, Debug)]
pub struct Individual {
    pub record: Record,
    pub train_semantics: SemanticVector,
    pub test_semantics: SemanticVector,
    pub train_fitness: f64,
    pub test_fitness: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeCount {
    /// Stored individual records.
    pub records: usize,
    /// Nodes of every stored tree (generation-0 trees and operator random trees).
    pub tree_nodes: usize,
}

impl NodeCount {
    pub fn total(&self) -> usize {
        self.records + self.tree_nodes
    }
}

/// Crossover of one coordinate. Written as `b + s (a - b)` so equal parents
/// reproduce exactly, and clamped so rounding never leaves the segment.
#[inline]
pub fn crossover_value(raw_weight: f64, a: f64, b: f64) -> f64 {
    let s = sigmoid(raw_weight);
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    (b + s * (a - b)).clamp(lo, hi)
}

/// Bounded mutation of one coordinate. The result is pulled back by single
/// ulps if rounding of the addition overshoots the `step` radius.
#[inline]
pub fn bounded_mutation_value(parent: f64, raw_a: f64, raw_b: f64, step: f64) -> f64 {
    let mut child = parent + step * (sigmoid(raw_a) - sigmoid(raw_b));
    while (child - parent).abs() > step {
        child = if child > parent { child.next_down() } else { child.next_up() };
    }
    child
}

#[inline]
pub fn raw_mutation_value(parent: f64, raw: f64, step: f64) -> f64 {
    parent + step * raw
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug)]
pub struct Archive {
    generations: Vec<Vec<Individual>>,
    train: Dataset,
    test: Dataset,
}

impl Archive {
    /// Creates an archive whose only generation holds `trees`.
    pub fn seed(trees: Vec<ExprTree>, split: &SplitDataset) -> Result<Archive> {
        if trees.is_empty() {
            return Err(Error::Empty("initial population"));
        }
        let mut archive = Archive { generations: Vec::new(), train: split.train.clone(), test: split.test.clone() };
        let gen0 = trees.into_iter().map(|t| archive.realize(Record::leaf(t))).collect::<Result<Vec<_>>>()?;
        archive.generations.push(gen0);
        Ok(archive)
    }

    pub fn generation_count(&self) -> usize {
        self.generations.len()
    }

    pub fn population_size(&self) -> usize {
        self.generations.first().map_or(0, Vec::len)
    }

    pub fn generation(&self, g: usize) -> &[Individual] {
        &self.generations[g]
    }

    pub fn generations(&self) -> &[Vec<Individual>] {
        &self.generations
    }

    pub fn last_generation(&self) -> &[Individual] {
        self.generations.last().map_or(&[], Vec::as_slice)
    }

    pub fn train(&self) -> &Dataset {
        &self.train
    }

    pub fn test(&self) -> &Dataset {
        &self.test
    }

    pub fn get(&self, r: IndividualRef) -> Result<&Individual> {
        self.generations.get(r.generation).and_then(|g| g.get(r.index)).ok_or(Error::InvalidRef(r))
    }

    /// Best individual of generation `g` by training RMSE; ties go to the lowest index.
    pub fn best_in(&self, g: usize) -> IndividualRef {
        let (index, _) = self.generations[g].iter().enumerate().fold((0, f64::INFINITY), |best, (i, ind)| {
            if ind.train_fitness < best.1 {
                (i, ind.train_fitness)
            } else {
                best
            }
        });
        IndividualRef::new(g, index)
    }

    fn inputs(&self, split: Split) -> &Matrix {
        match split {
            Split::Train => &self.train.inputs,
            Split::Test => &self.test.inputs,
        }
    }

    fn semantics_in(&self, r: IndividualRef, split: Split) -> &SemanticVector {
        let ind = &self.generations[r.generation][r.index];
        match split {
            Split::Train => &ind.train_semantics,
            Split::Test => &ind.test_semantics,
        }
    }

    fn check_record(&self, record: &Record) -> Result<()> {
        let n = self.train.n_features();
        for p in record.parents() {
            self.get(p)?;
        }
        if matches!(record.origin, Origin::Leaf(_)) != self.generations.is_empty() {
            return Err(Error::Config("leaf records belong to generation 0 only".into()));
        }
        for t in record.trees() {
            t.check_features(n)?;
        }
        if let Some(m) = &record.mutation {
            if !(m.step.is_finite() && m.step >= 0.0) {
                return Err(Error::Config(format!("mutation step {} must be finite and non-negative", m.step)));
            }
        }
        Ok(())
    }

    fn semantics_for(&self, record: &Record, split: Split) -> Result<SemanticVector> {
        let inputs = self.inputs(split);
        let base = match &record.origin {
            Origin::Leaf(t) => semantics_of_tree(t, inputs)?,
            Origin::Copy(p) => self.semantics_in(*p, split).clone(),
            Origin::Crossover { parents: [p1, p2], random_tree } => {
                let weights = random_tree.eval_rows(inputs)?;
                let (a, b) = (self.semantics_in(*p1, split), self.semantics_in(*p2, split));
                let v = weights.iter().zip(a.iter().zip(b.iter())).map(|(&w, (&a, &b))| crossover_value(w, a, b));
                SemanticVector::new(v.collect())?
            }
        };
        let Some(m) = &record.mutation else {
            return Ok(base);
        };
        let ra = m.tree_a.eval_rows(inputs)?;
        let values = match &m.tree_b {
            Some(tree_b) => {
                let rb = tree_b.eval_rows(inputs)?;
                base.iter()
                    .zip(ra.iter().zip(&rb))
                    .map(|(&p, (&a, &b))| bounded_mutation_value(p, a, b, m.step))
                    .collect()
            }
            None => base.iter().zip(&ra).map(|(&p, &a)| raw_mutation_value(p, a, m.step)).collect(),
        };
        SemanticVector::new(values)
    }

    /// Builds an individual for `record` from the stored semantics of its
    /// parents. The archive is not modified; see [`push_generation`](Self::push_generation).
    pub fn realize(&self, record: Record) -> Result<Individual> {
        self.check_record(&record)?;
        let train_semantics = self.semantics_for(&record, Split::Train)?;
        let test_semantics = self.semantics_for(&record, Split::Test)?;
        let train_fitness = rmse(&train_semantics, &self.train.targets)?;
        let test_fitness = rmse(&test_semantics, &self.test.targets)?;
        Ok(Individual { record, train_semantics, test_semantics, train_fitness, test_fitness })
    }

    pub fn apply_crossover(&self, p1: IndividualRef, p2: IndividualRef, random_tree: ExprTree) -> Result<Individual> {
        self.realize(Record { origin: Origin::Crossover { parents: [p1, p2], random_tree }, mutation: None })
    }

    /// Bounded two-tree mutation of a stored individual.
    pub fn apply_mutation(
        &self,
        parent: IndividualRef,
        tree_a: ExprTree,
        tree_b: ExprTree,
        step: f64,
    ) -> Result<Individual> {
        self.realize(Record {
            origin: Origin::Copy(parent),
            mutation: Some(Perturbation { tree_a, tree_b: Some(tree_b), step }),
        })
    }

    /// Literal single-tree mutation `parent + step * R`.
    pub fn apply_raw_mutation(&self, parent: IndividualRef, tree: ExprTree, step: f64) -> Result<Individual> {
        self.realize(Record {
            origin: Origin::Copy(parent),
            mutation: Some(Perturbation { tree_a: tree, tree_b: None, step }),
        })
    }

    /// Appends a completed generation. All generations have the same size.
    pub fn push_generation(&mut self, individuals: Vec<Individual>) -> Result<()> {
        if individuals.len() != self.population_size() {
            return Err(Error::LengthMismatch { left: individuals.len(), right: self.population_size() });
        }
        let current = self.generations.len();
        for ind in &individuals {
            if let Some(bad) = ind.record.parents().find(|p| p.generation >= current) {
                return Err(Error::InvalidRef(bad));
            }
        }
        self.generations.push(individuals);
        Ok(())
    }

    pub fn count_nodes(&self) -> NodeCount {
        let records = self.generations.iter().map(Vec::len).sum();
        let tree_nodes =
            self.generations.iter().flatten().flat_map(|ind| ind.record.trees()).map(ExprTree::node_count).sum();
        NodeCount { records, tree_nodes }
    }

    /// Number of record visits a full expansion of `r` would take.
    pub fn expansion_size(&self, r: IndividualRef) -> Result<u128> {
        self.get(r)?;
        let mut sizes: Vec<Vec<u128>> = Vec::with_capacity(r.generation + 1);
        for g in 0..=r.generation {
            let row = self.generations[g]
                .iter()
                .map(|ind| ind.record.parents().fold(1u128, |acc, p| acc.saturating_add(sizes[p.generation][p.index])))
                .collect();
            sizes.push(row);
        }
        Ok(sizes[r.generation][r.index])
    }

    /// Evaluates `r` on one input row by recursively expanding every crossover
    /// and mutation down to generation-0 trees. Ignores memoized semantics.
    /// Cost is exponential in depth; large expansions are refused.
    pub fn naive_eval(&self, r: IndividualRef, x: &[f64]) -> Result<f64> {
        if x.len() != self.train.n_features() {
            return Err(Error::LengthMismatch { left: x.len(), right: self.train.n_features() });
        }
        let expansion = self.expansion_size(r)?;
        if expansion > NAIVE_EXPANSION_LIMIT {
            return Err(Error::ExpansionLimit { expansion, limit: NAIVE_EXPANSION_LIMIT });
        }
        Ok(self.expand(r, x))
    }

    fn expand(&self, r: IndividualRef, x: &[f64]) -> f64 {
        let record = &self.generations[r.generation][r.index].record;
        let base = match &record.origin {
            Origin::Leaf(t) => t.eval_unchecked(x),
            Origin::Copy(p) => self.expand(*p, x),
            Origin::Crossover { parents: [p1, p2], random_tree } => {
                crossover_value(random_tree.eval_unchecked(x), self.expand(*p1, x), self.expand(*p2, x))
            }
        };
        match &record.mutation {
            None => base,
            Some(Perturbation { tree_a, tree_b: Some(tree_b), step }) => {
                bounded_mutation_value(base, tree_a.eval_unchecked(x), tree_b.eval_unchecked(x), *step)
            }
            Some(Perturbation { tree_a, tree_b: None, step }) => {
                raw_mutation_value(base, tree_a.eval_unchecked(x), *step)
            }
        }
    }

    /// Serializes the records of every generation. Semantics are not written;
    /// [`from_json`](Self::from_json) recomputes them.
    pub fn to_json(&self) -> Result<String> {
        let doc = ArchiveDoc {
            format: ARCHIVE_FORMAT.to_string(),
            version: ARCHIVE_VERSION,
            generations: self.generations.iter().map(|g| g.iter().map(|i| i.record.clone()).collect()).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(json: &str, split: &SplitDataset) -> Result<Archive> {
        let doc: ArchiveDoc = serde_json::from_str(json)?;
        if doc.format != ARCHIVE_FORMAT || doc.version != ARCHIVE_VERSION {
            return Err(Error::Config(format!("unsupported archive document {} v{}", doc.format, doc.version)));
        }
        let mut generations = doc.generations.into_iter();
        let first = generations.next().ok_or(Error::Empty("archive document has no generations"))?;
        let trees = first
            .into_iter()
            .map(|r| match r {
                Record { origin: Origin::Leaf(t), mutation: None } => Ok(t),
                _ => Err(Error::Config("generation 0 must contain plain trees only".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut archive = Archive::seed(trees, split)?;
        for records in generations {
            let individuals = records.into_iter().map(|r| archive.realize(r)).collect::<Result<Vec<_>>>()?;
            archive.push_generation(individuals)?;
        }
        Ok(archive)
    }
}

const ARCHIVE_FORMAT: &str = "gsgp-archive";
const ARCHIVE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ArchiveDoc {
    format: String,
    version: u32,
    generations: Vec<Vec<Record>>,
}

//! Plain syntax trees for generation-0 individuals and for the random trees
//! consumed by the semantic operators.
//!
//! Trees are never modified after construction. Depth is counted in edges, so
//! a lone terminal has depth 0.

use std::fmt;
use std::ops::RangeInclusive;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};

/// Denominators with magnitude at or below this make protected division return 1.
pub const PROTECTED_DIV_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    ProtectedDiv,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 4] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::ProtectedDiv];

    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::ProtectedDiv => {
                if b.abs() <= PROTECTED_DIV_EPS {
                    1.0
                } else {
                    a / b
                }
            }
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::ProtectedDiv => "/",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExprTree {
    Constant(f64),
    Variable(usize),
    Binary { op: BinaryOp, left: Box<ExprTree>, right: Box<ExprTree> },
}

impl ExprTree {
    pub fn binary(op: BinaryOp, left: ExprTree, right: ExprTree) -> Self {
        ExprTree::Binary { op, left: Box::new(left), right: Box::new(right) }
    }

    pub fn depth(&self) -> usize {
        match self {
            ExprTree::Constant(_) | ExprTree::Variable(_) => 0,
            ExprTree::Binary { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            ExprTree::Constant(_) | ExprTree::Variable(_) => 1,
            ExprTree::Binary { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_variable(&self) -> Option<usize> {
        match self {
            ExprTree::Constant(_) => None,
            ExprTree::Variable(i) => Some(*i),
            ExprTree::Binary { left, right, .. } => match (left.max_variable(), right.max_variable()) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
        }
    }

    /// Depths of every leaf, in left-to-right order.
    pub fn leaf_depths(&self) -> Vec<usize> {
        fn walk(t: &ExprTree, d: usize, out: &mut Vec<usize>) {
            match t {
                ExprTree::Binary { left, right, .. } => {
                    walk(left, d + 1, out);
                    walk(right, d + 1, out);
                }
                _ => out.push(d),
            }
        }
        let mut out = Vec::new();
        walk(self, 0, &mut out);
        out
    }

    pub fn check_features(&self, n_features: usize) -> Result<()> {
        match self.max_variable() {
            Some(index) if index >= n_features => Err(Error::VariableOutOfRange { index, n_features }),
            _ => Ok(()),
        }
    }

    /// Evaluates the tree on a single input row.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_features(x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            ExprTree::Constant(c) => *c,
            ExprTree::Variable(i) => x[*i],
            ExprTree::Binary { op, left, right } => op.apply(left.eval_unchecked(x), right.eval_unchecked(x)),
        }
    }

    /// Evaluates the tree on every row of `inputs` at once, one column buffer
    /// per subtree. Performs the same floating-point operations as [`eval`](Self::eval)
    /// row by row, so results are bit-identical.
    pub fn eval_rows(&self, inputs: &Matrix) -> Result<Vec<f64>> {
        self.check_features(inputs.cols())?;
        Ok(self.eval_rows_unchecked(inputs))
    }

    fn eval_rows_unchecked(&self, inputs: &Matrix) -> Vec<f64> {
        match self {
            ExprTree::Constant(c) => vec![*c; inputs.rows()],
            ExprTree::Variable(i) => inputs.column(*i).collect(),
            ExprTree::Binary { op, left, right } => {
                let mut acc = left.eval_rows_unchecked(inputs);
                let rhs = right.eval_rows_unchecked(inputs);
                for (a, b) in acc.iter_mut().zip(rhs) {
                    *a = op.apply(*a, b);
                }
                acc
            }
        }
    }
}

impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprTree::Constant(c) => write!(f, "{c}"),
            ExprTree::Variable(i) => write!(f, "x{i}"),
            ExprTree::Binary { op, left, right } => write!(f, "({left} {} {right})", op.symbol()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GenMethod {
    Grow,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeGenConfig {
    pub max_depth: usize,
    pub n_features: usize,
    pub constant_range: RangeInclusive<f64>,
    /// Probability that a terminal is an ephemeral constant rather than a variable.
    pub p_constant: f64,
}

impl TreeGenConfig {
    pub fn new(max_depth: usize, n_features: usize) -> Self {
        TreeGenConfig { max_depth, n_features, constant_range: -1.0..=1.0, p_constant: 0.3 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 {
            return Err(Error::Config("tree generation needs at least one feature".into()));
        }
        if !(0.0..=1.0).contains(&self.p_constant) {
            return Err(Error::Config(format!("p_constant {} outside [0, 1]", self.p_constant)));
        }
        let (lo, hi) = (*self.constant_range.start(), *self.constant_range.end());
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("constant range [{lo}, {hi}] is empty or non-finite")));
        }
        Ok(())
    }

    /// Probability that Grow picks a terminal at an interior position: terminals
    /// (every variable plus the constant symbol) against the four operators.
    fn grow_terminal_probability(&self) -> f64 {
        let terminals = (self.n_features + 1) as f64;
        terminals / (terminals + BinaryOp::ALL.len() as f64)
    }

    fn terminal<R: Rng + ?Sized>(&self, rng: &mut R) -> ExprTree {
        if rng.random_bool(self.p_constant) {
            ExprTree::Constant(rng.random_range(self.constant_range.clone()))
        } else {
            ExprTree::Variable(rng.random_range(0..self.n_features))
        }
    }
}

/// Generates one random tree. `Full` puts every leaf at exactly `cfg.max_depth`;
/// `Grow` may stop at any node, including the root.
pub fn gen_tree<R: Rng + ?Sized>(cfg: &TreeGenConfig, method: GenMethod, rng: &mut R) -> ExprTree {
    fn go<R: Rng + ?Sized>(cfg: &TreeGenConfig, method: GenMethod, remaining: usize, rng: &mut R) -> ExprTree {
        let stop = remaining == 0 || (method == GenMethod::Grow && rng.random_bool(cfg.grow_terminal_probability()));
        if stop {
            return cfg.terminal(rng);
        }
        let op = BinaryOp::ALL[rng.random_range(0..BinaryOp::ALL.len())];
        let left = go(cfg, method, remaining - 1, rng);
        let right = go(cfg, method, remaining - 1, rng);
        ExprTree::binary(op, left, right)
    }
    go(cfg, method, cfg.max_depth, rng)
}

/// The (method, depth) assignment used by ramped half-and-half for `count` trees.
///
/// Half the slots are Grow and half Full (an odd slot goes to Grow); within each
/// half, depths cycle through `2..=max_depth`. With `max_depth < 2` every slot
/// is Grow at `max_depth`.
pub fn ramp_plan(max_depth: usize, count: usize) -> Vec<(GenMethod, usize)> {
    if max_depth < 2 {
        return vec![(GenMethod::Grow, max_depth); count];
    }
    let depths: Vec<usize> = (2..=max_depth).collect();
    let n_grow = count.div_ceil(2);
    let grow = (0..n_grow).map(|i| (GenMethod::Grow, depths[i % depths.len()]));
    let full = (0..count - n_grow).map(|i| (GenMethod::Full, depths[i % depths.len()]));
    grow.chain(full).collect()
}

pub fn ramped_half_and_half<R: Rng + ?Sized>(cfg: &TreeGenConfig, count: usize, rng: &mut R) -> Vec<ExprTree> {
    ramp_plan(cfg.max_depth, count)
        .into_iter()
        .map(|(method, depth)| gen_tree(&TreeGenConfig { max_depth: depth, ..cfg.clone() }, method, rng))
        .collect()
}

//! Multi-generational tournament selection.
//!
//! Each tournament entrant first picks a source generation from a
//! generation-offset law, then an individual uniformly inside it. Offset 0 is
//! the generation immediately before the one being built.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::archive::{Archive, IndividualRef};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SelectionDistribution {
    /// Uniform over the last `k` generations (all of them when fewer exist).
    UniformLastK(usize),
    /// Offset `o` with probability `p (1-p)^o`; offsets past generation 0 land on generation 0.
    Geometric(f64),
}

impl SelectionDistribution {
    /// Standard GSGP: parents come from the previous generation only.
    pub const STANDARD: SelectionDistribution = SelectionDistribution::UniformLastK(1);

    pub fn validate(&self) -> Result<()> {
        match *self {
            SelectionDistribution::UniformLastK(0) => Err(Error::Config("u:k needs k >= 1".into())),
            SelectionDistribution::Geometric(p) if !(p > 0.0 && p < 1.0) => {
                Err(Error::Config(format!("g:p needs 0 < p < 1, got {p}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SelectionDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionDistribution::UniformLastK(k) => write!(f, "u:{k}"),
            SelectionDistribution::Geometric(p) => write!(f, "g:{p}"),
        }
    }
}

impl FromStr for SelectionDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse distribution {s:?}; expected u:<k> or g:<p>"));
        let (kind, arg) = s.trim().split_once(':').ok_or_else(bad)?;
        let d = match kind.to_ascii_lowercase().as_str() {
            "u" => SelectionDistribution::UniformLastK(arg.parse().map_err(|_| bad())?),
            "g" => SelectionDistribution::Geometric(arg.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        d.validate()?;
        Ok(d)
    }
}

impl TryFrom<String> for SelectionDistribution {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SelectionDistribution> for String {
    fn from(d: SelectionDistribution) -> String {
        d.to_string()
    }
}

/// Unclamped geometric offset: number of failures before the first success.
pub fn sample_geometric_offset<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<u64> {
    let law = Geometric::new(p).map_err(|e| Error::Config(format!("geometric p={p}: {e}")))?;
    Ok(law.sample(rng))
}

/// Picks the generation an entrant is drawn from while building generation
/// `current`. The result is always in `0..current`.
///
/// A one-generation window consumes no randomness, so `u:1` draws exactly
/// what a previous-generation-only tournament draws.
pub fn sample_source_generation<R: Rng + ?Sized>(
    d: SelectionDistribution,
    current: usize,
    rng: &mut R,
) -> Result<usize> {
    if current == 0 {
        return Err(Error::NothingToSelect);
    }
    d.validate()?;
    match d {
        SelectionDistribution::UniformLastK(k) => {
            let lo = current.saturating_sub(k);
            Ok(if current - lo == 1 { lo } else { rng.random_range(lo..current) })
        }
        SelectionDistribution::Geometric(p) => {
            let offset = sample_geometric_offset(p, rng)?;
            Ok(usize::try_from(offset).ok().and_then(|o| (current - 1).checked_sub(o)).unwrap_or(0))
        }
    }
}

/// Winner among explicit entrants: lowest training RMSE, earliest entrant on ties.
pub fn tournament_among(archive: &Archive, entrants: &[IndividualRef]) -> Result<IndividualRef> {
    let mut best: Option<(IndividualRef, f64)> = None;
    for &e in entrants {
        let f = archive.get(e)?.train_fitness;
        if best.is_none_or(|(_, bf)| f < bf) {
            best = Some((e, f));
        }
    }
    best.map(|(r, _)| r).ok_or(Error::Empty("tournament entrants"))
}

/// Draws `size` entrants with replacement from the archive's history and
/// returns the one with the lowest training RMSE.
pub fn tournament_select<R: Rng + ?Sized>(
    archive: &Archive,
    d: SelectionDistribution,
    size: usize,
    rng: &mut R,
) -> Result<IndividualRef> {
    let current = archive.generation_count();
    if current == 0 {
        return Err(Error::NothingToSelect);
    }
    if size == 0 {
        return Err(Error::Config("tournament size must be at least 1".into()));
    }
    let mut entrants = Vec::with_capacity(size);
    for _ in 0..size {
        let generation = sample_source_generation(d, current, rng)?;
        let index = rng.random_range(0..archive.generation(generation).len());
        entrants.push(IndividualRef::new(generation, index));
    }
    tournament_among(archive, &entrants)
}

/// Plain tournament over the newest generation, written without any offset law.
pub fn previous_generation_tournament<R: Rng + ?Sized>(
    archive: &Archive,
    size: usize,
    rng: &mut R,
) -> Result<IndividualRef> {
    let generation = archive.generation_count().checked_sub(1).ok_or(Error::NothingToSelect)?;
    if size == 0 {
        return Err(Error::Config("tournament size must be at least 1".into()));
    }
    let pool = archive.generation(generation).len();
    let entrants: Vec<_> = (0..size).map(|_| IndividualRef::new(generation, rng.random_range(0..pool))).collect();
    tournament_among(archive, &entrants)
}

/// Parent selection policy used by the generational loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Selector {
    MultiGenerational {
        distribution: SelectionDistribution,
        tournament_size: usize,
    },
    /// Reference implementation of standard GSGP selection.
    PreviousGeneration {
        tournament_size: usize,
    },
}

impl Selector {
    pub fn select<R: Rng + ?Sized>(&self, archive: &Archive, rng: &mut R) -> Result<IndividualRef> {
        match *self {
            Selector::MultiGenerational { distribution, tournament_size } => {
                tournament_select(archive, distribution, tournament_size, rng)
            }
            Selector::PreviousGeneration { tournament_size } => {
                previous_generation_tournament(archive, tournament_size, rng)
            }
        }
    }
}

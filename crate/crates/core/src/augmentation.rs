//! Augmented action spaces and the expert similarity matrices that describe them.
//!
//! Every augmentation keeps the original actions at indices `0..|A|` and
//! appends extra actions after them:
//!
//! | kind             | table length  | extra actions                               |
//! |------------------|---------------|---------------------------------------------|
//! | `none`           | `|A|`         | -                                           |
//! | `duplicate`      | `N * |A|`     | `N - 1` exact copies of the base set        |
//! | `semi_duplicate` | `5 * |A|`     | 4 copies of the base set at magnitude `h`   |
//! | `random`         | `5 * |A|`     | `4 * |A|` uniformly random base actions     |
//! | `noop`           | `(N + 1)|A|`  | `N * |A|` zero-magnitude actions            |

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::envs::{ActionRealization, EnvError, EnvSpec, Environment, Observation, StepResult};
use crate::seeding::{stream_rng, Stream};

/// Number of extra action sets added by the semi-duplicate and random augmentations.
pub const EXTRA_SETS: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum AugmentationError {
    #[error("multiplier n must be at least 1")]
    ZeroMultiplier,
    #[error("similarity score h = {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("base action count must be at least 1")]
    NoBaseActions,
    #[error("similarity matrix: {0}")]
    InvalidMatrix(String),
    #[error("unknown {what} `{value}`")]
    UnknownName { what: &'static str, value: String },
    #[error("augmented action {index} out of range for table of {len}")]
    ActionOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Symmetric matrix of pairwise action similarity scores in `[0, 1]` with a unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl SimilarityMatrix {
    /// Builds a matrix from row-major entries, checking symmetry, range and the diagonal.
    pub fn new(size: usize, entries: Vec<f64>) -> Result<Self, AugmentationError> {
        if size == 0 {
            return Err(AugmentationError::InvalidMatrix("size must be positive".into()));
        }
        if entries.len() != size * size {
            return Err(AugmentationError::InvalidMatrix(format!(
                "expected {} entries, got {}",
                size * size,
                entries.len()
            )));
        }
        let m = Self { size, entries };
        for i in 0..size {
            if m.get(i, i) != 1.0 {
                return Err(AugmentationError::InvalidMatrix(format!("K({i},{i}) = {} is not 1", m.get(i, i))));
            }
            for j in 0..size {
                let v = m.get(i, j);
                if !(0.0..=1.0).contains(&v) {
                    return Err(AugmentationError::InvalidMatrix(format!("K({i},{j}) = {v} outside [0, 1]")));
                }
                if v != m.get(j, i) {
                    return Err(AugmentationError::InvalidMatrix(format!("K({i},{j}) != K({j},{i})")));
                }
            }
        }
        Ok(m)
    }

    fn from_fn(size: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                entries.push(if i == j { 1.0 } else { f(i, j) });
            }
        }
        Self { size, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    pub fn is_identity(&self) -> bool {
        (0..self.size).all(|i| (0..self.size).all(|j| self.get(i, j) == if i == j { 1.0 } else { 0.0 }))
    }

    /// Plain-text dump: one row per line, space-separated decimals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.size {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// The identity similarity: no action generalizes to any other.
pub fn identity_similarity(size: usize) -> SimilarityMatrix {
    assert!(size >= 1, "similarity matrix size must be positive");
    SimilarityMatrix::from_fn(size, |_, _| 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AugmentationKind {
    None,
    Duplicate,
    SemiDuplicate,
    Random,
    Noop,
}

impl AugmentationKind {
    pub fn name(self) -> &'static str {
        match self {
            AugmentationKind::None => "none",
            AugmentationKind::Duplicate => "duplicate",
            AugmentationKind::SemiDuplicate => "semi_duplicate",
            AugmentationKind::Random => "random",
            AugmentationKind::Noop => "noop",
        }
    }
}

impl fmt::Display for AugmentationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AugmentationKind {
    type Err = AugmentationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "duplicate" => Ok(Self::Duplicate),
            "semi_duplicate" => Ok(Self::SemiDuplicate),
            "random" => Ok(Self::Random),
            "noop" => Ok(Self::Noop),
            _ => Err(AugmentationError::UnknownName { what: "augmentation", value: s.to_string() }),
        }
    }
}

/// How the oracle scores pairs of random actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RandomK {
    /// All random actions are fully similar to each other.
    #[default]
    Clique,
    /// Random actions are only similar to themselves.
    Identity,
}

impl RandomK {
    pub fn name(self) -> &'static str {
        match self {
            RandomK::Clique => "clique",
            RandomK::Identity => "identity",
        }
    }
}

impl fmt::Display for RandomK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RandomK {
    type Err = AugmentationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clique" => Ok(Self::Clique),
            "identity" => Ok(Self::Identity),
            _ => Err(AugmentationError::UnknownName { what: "random_k", value: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentationSpec {
    pub kind: AugmentationKind,
    /// Multiplier for `duplicate` and `noop`.
    pub n: usize,
    /// Similarity score and magnitude of the reduced copies for `semi_duplicate`.
    pub h: f64,
    pub random_k: RandomK,
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        Self { kind: AugmentationKind::None, n: 5, h: 0.5, random_k: RandomK::Clique }
    }
}

impl AugmentationSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn duplicate(n: usize) -> Self {
        Self { kind: AugmentationKind::Duplicate, n, ..Self::default() }
    }

    pub fn semi_duplicate(h: f64) -> Self {
        Self { kind: AugmentationKind::SemiDuplicate, h, ..Self::default() }
    }

    pub fn random(random_k: RandomK) -> Self {
        Self { kind: AugmentationKind::Random, random_k, ..Self::default() }
    }

    pub fn noop(n: usize) -> Self {
        Self { kind: AugmentationKind::Noop, n, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), AugmentationError> {
        if self.n == 0 {
            return Err(AugmentationError::ZeroMultiplier);
        }
        if !(0.0..=1.0).contains(&self.h) {
            return Err(AugmentationError::ScoreOutOfRange(self.h));
        }
        Ok(())
    }

    /// Number of augmented actions produced for `base` original actions.
    pub fn action_count(&self, base: usize) -> usize {
        match self.kind {
            AugmentationKind::None => base,
            AugmentationKind::Duplicate => self.n * base,
            AugmentationKind::SemiDuplicate | AugmentationKind::Random => (1 + EXTRA_SETS) * base,
            AugmentationKind::Noop => (self.n + 1) * base,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionEntry {
    Deterministic(ActionRealization),
    /// Draws a base action uniformly at execution time.
    RandomUniform,
    Noop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedActionTable {
    entries: Vec<ActionEntry>,
    base_action_count: usize,
}

impl AugmentedActionTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn base_action_count(&self) -> usize {
        self.base_action_count
    }

    pub fn entries(&self) -> &[ActionEntry] {
        &self.entries
    }

    pub fn entry(&self, j: usize) -> Option<&ActionEntry> {
        self.entries.get(j)
    }
}

/// Builds the action table and matching oracle similarity matrix for `spec`.
pub fn build_augmentation(
    spec: &AugmentationSpec,
    base_action_count: usize,
) -> Result<(AugmentedActionTable, SimilarityMatrix), AugmentationError> {
    if base_action_count == 0 {
        return Err(AugmentationError::NoBaseActions);
    }
    spec.validate()?;
    let a = base_action_count;
    let size = spec.action_count(a);
    let is_original = |i: usize| i < a;

    let entries: Vec<ActionEntry> = (0..size)
        .map(|j| {
            if is_original(j) {
                return ActionEntry::Deterministic(ActionRealization::full(j));
            }
            match spec.kind {
                AugmentationKind::None => unreachable!("no extra actions"),
                AugmentationKind::Duplicate => ActionEntry::Deterministic(ActionRealization::full(j % a)),
                AugmentationKind::SemiDuplicate => {
                    ActionEntry::Deterministic(ActionRealization { base_action: j % a, magnitude: spec.h })
                }
                AugmentationKind::Random => ActionEntry::RandomUniform,
                AugmentationKind::Noop => ActionEntry::Noop,
            }
        })
        .collect();

    let k = match spec.kind {
        AugmentationKind::None => identity_similarity(size),
        AugmentationKind::Duplicate => SimilarityMatrix::from_fn(size, |i, j| if i % a == j % a { 1.0 } else { 0.0 }),
        AugmentationKind::SemiDuplicate => SimilarityMatrix::from_fn(size, |i, j| {
            if i % a != j % a {
                0.0
            } else {
                match (is_original(i), is_original(j)) {
                    (true, true) => 0.0,
                    (false, false) => 1.0,
                    _ => spec.h,
                }
            }
        }),
        AugmentationKind::Random => match spec.random_k {
            RandomK::Clique => {
                SimilarityMatrix::from_fn(size, |i, j| if !is_original(i) && !is_original(j) { 1.0 } else { 0.0 })
            }
            RandomK::Identity => identity_similarity(size),
        },
        AugmentationKind::Noop => {
            SimilarityMatrix::from_fn(size, |i, j| if !is_original(i) && !is_original(j) { 1.0 } else { 0.0 })
        }
    };

    Ok((AugmentedActionTable { entries, base_action_count: a }, k))
}

/// Turns augmented action `j` into a concrete base-action realization.
pub fn resolve(
    table: &AugmentedActionTable,
    j: usize,
    rng: &mut impl Rng,
) -> Result<ActionRealization, AugmentationError> {
    match table.entry(j) {
        Some(ActionEntry::Deterministic(r)) => Ok(*r),
        Some(ActionEntry::RandomUniform) => Ok(ActionRealization::full(rng.gen_range(0..table.base_action_count))),
        Some(ActionEntry::Noop) => Ok(ActionRealization { base_action: 0, magnitude: 0.0 }),
        None => Err(AugmentationError::ActionOutOfRange { index: j, len: table.len() }),
    }
}

/// A base environment stepped through an augmented action table.
pub struct AugmentedEnv {
    base: Box<dyn Environment>,
    table: AugmentedActionTable,
    rng: ChaCha8Rng,
}

impl AugmentedEnv {
    /// The sampler behind `RandomUniform` entries uses the action-noise stream of `run_seed`.
    pub fn new(
        base: Box<dyn Environment>,
        table: AugmentedActionTable,
        run_seed: u64,
    ) -> Result<Self, AugmentationError> {
        if table.base_action_count() != base.spec().base_action_count {
            return Err(AugmentationError::InvalidMatrix(format!(
                "table built for {} base actions, environment has {}",
                table.base_action_count(),
                base.spec().base_action_count
            )));
        }
        Ok(Self { base, table, rng: stream_rng(run_seed, Stream::ActionNoise) })
    }

    /// Restarts the stochastic-action sampler from the stream of `run_seed`.
    pub fn reseed_actions(&mut self, run_seed: u64) {
        self.rng = stream_rng(run_seed, Stream::ActionNoise);
    }

    pub fn action_count(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> &AugmentedActionTable {
        &self.table
    }

    pub fn spec(&self) -> &EnvSpec {
        self.base.spec()
    }

    pub fn base(&self) -> &dyn Environment {
        self.base.as_ref()
    }

    pub fn reset(&mut self, seed: u64) -> Observation {
        self.base.reset(seed)
    }

    pub fn step(&mut self, j: usize) -> Result<StepResult, AugmentationError> {
        let realization = resolve(&self.table, j, &mut self.rng)?;
        Ok(self.base.step(realization)?)
    }
}

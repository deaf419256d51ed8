//! Sample sources the pipelines draw from.

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::{DataError, Dataset};

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("source exhausted: requested {requested} samples, {available} left")]
    Exhausted { requested: usize, available: usize },
    #[error("source is unlabeled but labeled samples were requested")]
    Unlabeled,
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Something that yields i.i.d. samples on demand.
pub trait DataSource {
    fn dim(&self) -> usize;

    fn is_labeled(&self) -> bool;

    /// Draws `n` samples. Labeled sources return labeled datasets.
    fn draw(&mut self, n: usize, rng: &mut ChaCha8Rng) -> Result<Dataset, SourceError>;

    /// Draws `n` samples and drops any labels.
    fn draw_unlabeled(&mut self, n: usize, rng: &mut ChaCha8Rng) -> Result<Dataset, SourceError> {
        Ok(self.draw(n, rng)?.to_unlabeled())
    }

    /// Draws `n` labeled samples, failing on unlabeled sources.
    fn draw_labeled(&mut self, n: usize, rng: &mut ChaCha8Rng) -> Result<Dataset, SourceError> {
        if !self.is_labeled() {
            return Err(SourceError::Unlabeled);
        }
        self.draw(n, rng)
    }
}

/// Serves a fixed dataset in order, without replacement. Successive draws
/// are disjoint, which keeps reference and verification samples fresh.
#[derive(Debug, Clone)]
pub struct FiniteSource {
    data: Dataset,
    cursor: usize,
}

impl FiniteSource {
    pub fn new(data: Dataset) -> Self {
        Self { data, cursor: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.cursor
    }
}

impl DataSource for FiniteSource {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn is_labeled(&self) -> bool {
        self.data.is_labeled()
    }

    fn draw(&mut self, n: usize, _rng: &mut ChaCha8Rng) -> Result<Dataset, SourceError> {
        if n > self.remaining() {
            return Err(SourceError::Exhausted { requested: n, available: self.remaining() });
        }
        let samples = self.data.samples()[self.cursor..self.cursor + n].to_vec();
        self.cursor += n;
        Ok(Dataset::new(self.data.dim(), self.data.is_labeled(), samples)?)
    }
}

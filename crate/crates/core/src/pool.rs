//! The pooled, permuted set of real and synthetic observations and the
//! masking barrier around their identities.
//!
//! A [`PooledSet`] knows which entries are real. A [`MaskView`] is what a
//! learner gets: the pooled vectors plus labels of the unmasked entries only.
//! The view borrows the pool's revealed-label array, which holds `None` for
//! every masked index, so a masked label cannot be reached through it.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{BonusError, Result};
use crate::points::Points;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    Real(usize),
    Synthetic(usize),
}

#[derive(Debug, Clone)]
pub struct PooledSet {
    points: Points,
    origin: Vec<Origin>,
    revealed: Vec<Option<bool>>,
    n: usize,
    n_tilde: usize,
    revealed_real: usize,
    revealed_synthetic: usize,
}

/// Pools `real` and `synthetic` under a uniformly random permutation; all
/// identities start masked.
pub fn pool_and_mask<R: Rng + ?Sized>(
    real: &Points,
    synthetic: &Points,
    rng: &mut R,
) -> Result<PooledSet> {
    if synthetic.is_empty() {
        return Err(BonusError::invalid(
            "synthetic",
            "at least one synthetic null is required",
        ));
    }
    if !real.is_empty() && real.dim() != synthetic.dim() {
        return Err(BonusError::DimensionMismatch {
            expected: real.dim(),
            got: synthetic.dim(),
        });
    }
    let mut origin: Vec<Origin> = (0..real.len())
        .map(Origin::Real)
        .chain((0..synthetic.len()).map(Origin::Synthetic))
        .collect();
    origin.shuffle(rng);
    let mut points = Points::with_capacity(synthetic.dim(), origin.len());
    for o in &origin {
        let row = match *o {
            Origin::Real(i) => real.row(i),
            Origin::Synthetic(i) => synthetic.row(i),
        };
        points.push(row)?;
    }
    Ok(PooledSet::assemble(points, origin, real.len(), synthetic.len()))
}

impl PooledSet {
    fn assemble(points: Points, origin: Vec<Origin>, n: usize, n_tilde: usize) -> Self {
        let len = origin.len();
        PooledSet {
            points,
            origin,
            revealed: vec![None; len],
            n,
            n_tilde,
            revealed_real: 0,
            revealed_synthetic: 0,
        }
    }

    /// Builds a pool in a given arrangement: `is_real[j]` is the identity of
    /// `points.row(j)`. Real entries are numbered in pooled order. Used to
    /// replay runs under alternative hidden labelings.
    pub fn from_labeled(points: Points, is_real: &[bool]) -> Result<Self> {
        if points.len() != is_real.len() {
            return Err(BonusError::invalid(
                "is_real",
                format!("{} labels for {} points", is_real.len(), points.len()),
            ));
        }
        let (mut n, mut n_tilde) = (0, 0);
        let origin = is_real
            .iter()
            .map(|&r| {
                if r {
                    n += 1;
                    Origin::Real(n - 1)
                } else {
                    n_tilde += 1;
                    Origin::Synthetic(n_tilde - 1)
                }
            })
            .collect();
        if n_tilde == 0 {
            return Err(BonusError::invalid(
                "is_real",
                "at least one synthetic null is required",
            ));
        }
        Ok(PooledSet::assemble(points, origin, n, n_tilde))
    }

    pub fn len(&self) -> usize {
        self.origin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origin.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_tilde(&self) -> usize {
        self.n_tilde
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn is_masked(&self, j: usize) -> bool {
        self.revealed[j].is_none()
    }

    pub fn masked_count(&self) -> usize {
        self.len() - self.revealed_real - self.revealed_synthetic
    }

    pub fn view(&self) -> MaskView<'_> {
        MaskView {
            points: &self.points,
            revealed: &self.revealed,
            n: self.n,
            n_tilde: self.n_tilde,
        }
    }

    /// Unmasks `indices` and returns their identities (`true` = real).
    /// Fails without side effects if any index is out of range, already
    /// unmasked, or repeated.
    pub fn reveal(&mut self, indices: &[usize]) -> Result<Vec<(usize, bool)>> {
        let mut seen = std::collections::HashSet::with_capacity(indices.len());
        for &j in indices {
            if j >= self.len() {
                return Err(BonusError::IndexOutOfRange {
                    index: j,
                    len: self.len(),
                });
            }
            if self.revealed[j].is_some() || !seen.insert(j) {
                return Err(BonusError::AlreadyUnmasked { index: j });
            }
        }
        let mut out = Vec::with_capacity(indices.len());
        for &j in indices {
            let is_real = matches!(self.origin[j], Origin::Real(_));
            self.revealed[j] = Some(is_real);
            if is_real {
                self.revealed_real += 1;
            } else {
                self.revealed_synthetic += 1;
            }
            out.push((j, is_real));
        }
        Ok(out)
    }

    /// `(N(R), Ñ(R))` for an index region whose complement is fully unmasked,
    /// computed from the revealed labels outside the region.
    pub fn region_counts(&self, region: &[usize]) -> Result<(usize, usize)> {
        let mut inside = vec![false; self.len()];
        for &j in region {
            if j >= self.len() {
                return Err(BonusError::IndexOutOfRange {
                    index: j,
                    len: self.len(),
                });
            }
            inside[j] = true;
        }
        let (mut real_out, mut synth_out) = (0, 0);
        for (j, label) in self.revealed.iter().enumerate() {
            if inside[j] {
                continue;
            }
            match label {
                None => return Err(BonusError::MaskedOutsideRegion { index: j }),
                Some(true) => real_out += 1,
                Some(false) => synth_out += 1,
            }
        }
        Ok((self.n - real_out, self.n_tilde - synth_out))
    }

    /// Counts for the region made of exactly the still-masked indices.
    pub fn masked_counts(&self) -> (usize, usize) {
        (
            self.n - self.revealed_real,
            self.n_tilde - self.revealed_synthetic,
        )
    }

    /// Index of pooled entry `j` among the real observations, if it is real.
    /// Engine-side only; learners never see a `PooledSet`.
    pub(crate) fn real_index(&self, j: usize) -> Option<usize> {
        match self.origin[j] {
            Origin::Real(i) => Some(i),
            Origin::Synthetic(_) => None,
        }
    }
}

/// Learner-facing snapshot: pooled vectors plus labels of unmasked entries.
#[derive(Debug, Clone, Copy)]
pub struct MaskView<'a> {
    points: &'a Points,
    revealed: &'a [Option<bool>],
    n: usize,
    n_tilde: usize,
}

impl<'a> MaskView<'a> {
    pub fn points(&self) -> &'a Points {
        self.points
    }

    pub fn len(&self) -> usize {
        self.revealed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.revealed.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_tilde(&self) -> usize {
        self.n_tilde
    }

    /// `Some(is_real)` for unmasked indices, `None` while masked.
    pub fn label(&self, j: usize) -> Option<bool> {
        self.revealed[j]
    }

    pub fn revealed(&self) -> impl Iterator<Item = (usize, bool)> + 'a {
        self.revealed
            .iter()
            .enumerate()
            .filter_map(|(j, l)| l.map(|b| (j, b)))
    }

    pub fn masked_indices(&self) -> impl Iterator<Item = usize> + 'a {
        self.revealed
            .iter()
            .enumerate()
            .filter_map(|(j, l)| l.is_none().then_some(j))
    }
}

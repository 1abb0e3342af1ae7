//! The FH-DES selection engine: per-classifier hyperbox models fitted on
//! the dynamic selection set, plus the query-time pipeline
//! competence -> threshold selection -> weighted vote.

use rayon::prelude::*;

use crate::error::{FhError, Result};
use crate::hyperbox::{HyperboxSet, MembershipKind};
use crate::pool::Pool;

/// What the per-member hyperboxes describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesMode {
    /// Boxes cover correctly classified selection samples (FH-DES-C):
    /// high membership means high competence.
    CompetenceBoxes,
    /// Boxes cover misclassified selection samples (FH-DES-M): high
    /// membership means low competence, so delta is flipped to 1 - delta.
    IncompetenceBoxes,
}

/// A deployable selector: the bagged pool plus one hyperbox set per member.
#[derive(Debug, Clone, PartialEq)]
pub struct DesModel {
    pool: Pool,
    hsets: Vec<HyperboxSet>,
    mode: DesMode,
    mu: f64,
    kind: MembershipKind,
    theta: f64,
}

/// Per-member competence estimates for one query, each in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct CompetenceVector {
    pub delta: Vec<f64>,
}

impl DesModel {
    /// Reassembles a model from already-fitted pieces (model loading,
    /// oracle tests). Enforces the alignment invariants.
    pub fn from_parts(
        pool: Pool,
        hsets: Vec<HyperboxSet>,
        mode: DesMode,
        mu: f64,
        kind: MembershipKind,
        theta: f64,
    ) -> Result<Self> {
        if hsets.len() != pool.len() {
            return Err(FhError::InvalidParameter(format!(
                "{} hyperbox sets for {} pool members",
                hsets.len(),
                pool.len()
            )));
        }
        if !(0.0..=1.0).contains(&mu) {
            return Err(FhError::InvalidParameter(format!("mu must be in [0,1], got {mu}")));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(FhError::InvalidParameter(format!(
                "theta must be in (0,1], got {theta}"
            )));
        }
        for (i, h) in hsets.iter().enumerate() {
            if h.dim() != pool.n_features() || h.kind() != kind || h.theta() != theta {
                return Err(FhError::InvalidParameter(format!(
                    "hyperbox set {i} disagrees with the model's dimension, kind or theta"
                )));
            }
        }
        Ok(Self {
            pool,
            hsets,
            mode,
            mu,
            kind,
            theta,
        })
    }

    pub fn pool(&self) -> &Pool {
        &self.pool
    }

    pub fn hsets(&self) -> &[HyperboxSet] {
        &self.hsets
    }

    pub fn mode(&self) -> DesMode {
        self.mode
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn kind(&self) -> MembershipKind {
        self.kind
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n_features(&self) -> usize {
        self.pool.n_features()
    }

    /// Number of hyperboxes per member, in member order.
    pub fn box_counts(&self) -> Vec<usize> {
        self.hsets.iter().map(|h| h.len()).collect()
    }

    /// Per-member competence for one query. Each member's two largest box
    /// memberships are averaged; in incompetence mode the average is
    /// flipped (`1 - avg`). A member with no boxes therefore gets 0 in
    /// competence mode and 1 in incompetence mode.
    pub fn competence(&self, x: &[f64]) -> CompetenceVector {
        assert_eq!(x.len(), self.n_features(), "query dimension mismatch");
        let delta = self
            .hsets
            .iter()
            .map(|h| {
                let (b1, b2) = h.top2_membership(x);
                let avg = (b1 + b2) / 2.0;
                match self.mode {
                    DesMode::CompetenceBoxes => avg,
                    DesMode::IncompetenceBoxes => 1.0 - avg,
                }
            })
            .collect();
        CompetenceVector { delta }
    }

    /// Full labeling pipeline for one query.
    pub fn predict(&self, x: &[f64]) -> usize {
        let delta = self.competence(x);
        let phi = select(&delta, self.mu);
        self.aggregate(&phi, &delta, x)
    }

    /// Competence-weighted majority vote over the selected members.
    /// Ties (including the all-zero-weight case) resolve to the lowest
    /// class id.
    pub fn aggregate(&self, phi: &[usize], delta: &CompetenceVector, x: &[f64]) -> usize {
        assert!(!phi.is_empty(), "selection must not be empty");
        let classes = self.pool.classes();
        let mut scores = vec![0.0f64; classes.len()];
        for &i in phi {
            let label = self.pool.members()[i].predict(x);
            let slot = classes
                .iter()
                .position(|&c| c == label)
                .expect("member predicted outside the pool's label universe");
            scores[slot] += delta.delta[i];
        }
        let mut best = 0usize;
        for (s, &score) in scores.iter().enumerate() {
            if score > scores[best] {
                best = s;
            }
        }
        classes[best]
    }
}

/// Members whose competence reaches `mu * max(delta)`. The maximizer always
/// qualifies, so the result is never empty; `mu = 0` keeps everyone and
/// `mu = 1` keeps exactly the argmax ties.
pub fn select(delta: &CompetenceVector, mu: f64) -> Vec<usize> {
    assert!((0.0..=1.0).contains(&mu), "mu must be in [0,1]");
    assert!(!delta.delta.is_empty(), "competence vector must not be empty");
    let max = delta.delta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tau = mu * max;
    delta
        .delta
        .iter()
        .enumerate()
        .filter(|(_, &d)| d >= tau)
        .map(|(i, _)| i)
        .collect()
}

/// Builds the per-member hyperbox models from the dynamic selection set.
/// Each member's selection samples are split by correctness of its own
/// predictions; the misses (incompetence mode) or hits (competence mode)
/// are then covered by single-pass expansion in row order. Members fit
/// independently and in parallel.
pub fn fit(
    pool: Pool,
    dsel_x: &[f64],
    dsel_y: &[usize],
    mode: DesMode,
    theta: f64,
    kind: MembershipKind,
    mu: f64,
) -> Result<DesModel> {
    if dsel_y.is_empty() {
        return Err(FhError::EmptyDataset);
    }
    let n = pool.n_features();
    assert_eq!(
        dsel_x.len(),
        dsel_y.len() * n,
        "selection matrix shape mismatch"
    );
    if !(0.0..=1.0).contains(&mu) {
        return Err(FhError::InvalidParameter(format!("mu must be in [0,1], got {mu}")));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(FhError::InvalidParameter(format!(
            "theta must be in (0,1], got {theta}"
        )));
    }
    if let MembershipKind::Gabrys { gamma } = kind {
        if gamma <= 0.0 || gamma.is_nan() {
            return Err(FhError::InvalidParameter(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
    }

    let hsets: Vec<HyperboxSet> = pool
        .members()
        .par_iter()
        .map(|member| {
            let keep_misses = mode == DesMode::IncompetenceBoxes;
            let rows = dsel_y.iter().enumerate().filter_map(|(r, &label)| {
                let xr = &dsel_x[r * n..(r + 1) * n];
                let miss = member.predict(xr) != label;
                (miss == keep_misses).then_some(xr)
            });
            HyperboxSet::fit(n, theta, kind, rows)
        })
        .collect();

    DesModel::from_parts(pool, hsets, mode, mu, kind, theta)
}

//! KNN-based dynamic selection baselines (OLA and KNORA-U) built on the
//! same pool. The KNN search is a deliberate brute-force linear scan over
//! the stored selection set: the latency comparison against hyperbox
//! inference depends on the O(|DSEL|) per-query cost being real.

use crate::error::{FhError, Result};
use crate::pool::Pool;

/// Which local rule turns the k-neighborhood into a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsRule {
    /// Overall Local Accuracy: the single member most accurate on the
    /// neighborhood answers alone (ties -> lower member index).
    Ola,
    /// KNORA-Union: every member votes, weighted by how many neighborhood
    /// points it classifies correctly (ties -> lowest class id).
    KnoraU,
}

/// A fitted KNN selector: the selection set, per-member correctness
/// bitmaps over it (precomputed so queries only pay for the scan), and
/// the rule. Immutable after fit.
#[derive(Debug, Clone)]
pub struct KnnModel {
    dsel_x: Vec<f64>,
    dsel_y: Vec<usize>,
    correct: Vec<Vec<bool>>, // member-major: correct[m][row]
    k: usize,
    pool: Pool,
    rule: DsRule,
}

impl KnnModel {
    pub fn fit(
        pool: Pool,
        dsel_x: &[f64],
        dsel_y: &[usize],
        k: usize,
        rule: DsRule,
    ) -> Result<Self> {
        if dsel_y.is_empty() {
            return Err(FhError::EmptyDataset);
        }
        let n = pool.n_features();
        assert_eq!(
            dsel_x.len(),
            dsel_y.len() * n,
            "selection matrix shape mismatch"
        );
        if k == 0 || k > dsel_y.len() {
            return Err(FhError::InvalidParameter(format!(
                "k must be in 1..={}, got {k}",
                dsel_y.len()
            )));
        }
        let correct = pool
            .members()
            .iter()
            .map(|member| {
                dsel_y
                    .iter()
                    .enumerate()
                    .map(|(r, &label)| member.predict(&dsel_x[r * n..(r + 1) * n]) == label)
                    .collect()
            })
            .collect();
        Ok(Self {
            dsel_x: dsel_x.to_vec(),
            dsel_y: dsel_y.to_vec(),
            correct,
            k,
            pool,
            rule,
        })
    }

    pub fn pool(&self) -> &Pool {
        &self.pool
    }

    pub fn rule(&self) -> DsRule {
        self.rule
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dsel_len(&self) -> usize {
        self.dsel_y.len()
    }

    /// Indices of the k selection points closest to `x` (Euclidean),
    /// distance ties broken toward the lower index. Scans every stored
    /// point once, keeping a bounded worst-first heap of size k.
    pub fn knn_region(&self, x: &[f64]) -> Vec<usize> {
        let n = self.pool.n_features();
        assert_eq!(x.len(), n, "query dimension mismatch");
        use std::collections::BinaryHeap;

        // max-heap on (distance, index): the root is the current worst
        // neighbor, so a closer candidate replaces it in O(log k)
        #[derive(PartialEq)]
        struct Worst(f64, usize);
        impl Eq for Worst {}
        impl PartialOrd for Worst {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Worst {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                self.0
                    .total_cmp(&other.0)
                    .then(self.1.cmp(&other.1))
            }
        }

        let mut heap: BinaryHeap<Worst> = BinaryHeap::with_capacity(self.k + 1);
        for r in 0..self.dsel_y.len() {
            let row = &self.dsel_x[r * n..(r + 1) * n];
            let d2: f64 = row
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            heap.push(Worst(d2, r));
            if heap.len() > self.k {
                heap.pop();
            }
        }
        let mut region: Vec<(f64, usize)> = heap.into_iter().map(|w| (w.0, w.1)).collect();
        region.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        region.into_iter().map(|(_, r)| r).collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        match self.rule {
            DsRule::Ola => self.ola_predict(x),
            DsRule::KnoraU => self.knora_u_predict(x),
        }
    }

    /// The member with the most correct answers on the neighborhood wins
    /// outright and answers the query itself.
    pub fn ola_predict(&self, x: &[f64]) -> usize {
        let region = self.knn_region(x);
        let mut best_member = 0usize;
        let mut best_hits = 0usize;
        for (m, bitmap) in self.correct.iter().enumerate() {
            let hits = region.iter().filter(|&&r| bitmap[r]).count();
            if hits > best_hits {
                best_hits = hits;
                best_member = m;
            }
        }
        self.pool.members()[best_member].predict(x)
    }

    /// Weighted vote: each member contributes its neighborhood hit count
    /// to its predicted class; ties resolve to the lowest class id.
    pub fn knora_u_predict(&self, x: &[f64]) -> usize {
        let region = self.knn_region(x);
        let classes = self.pool.classes();
        let mut scores = vec![0usize; classes.len()];
        for (m, member) in self.pool.members().iter().enumerate() {
            let hits = region.iter().filter(|&&r| self.correct[m][r]).count();
            let label = member.predict(x);
            let slot = classes.iter().position(|&c| c == label).unwrap();
            scores[slot] += hits;
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

//! Base learners: one-vs-rest multiclass perceptrons and the bagged pool.
//!
//! The pool is deliberately self-contained — no external ML dependency —
//! because the selection engine only ever needs `predict` on normalized
//! inputs. Samples are flat row-major `&[f64]` with an explicit feature
//! count, matching the dataset layout used across the crate.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{FhError, Result};
use crate::seeding::derive_seed;

/// Training hyperparameters for a single perceptron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerceptronParams {
    /// Upper bound on training epochs.
    pub max_iter: usize,
    /// Stop once an epoch improves the error rate by less than this.
    pub tol: f64,
    /// L2 shrinkage applied to the weights on every mistake update.
    pub alpha: f64,
}

impl Default for PerceptronParams {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-3,
            alpha: 0.001,
        }
    }
}

/// One-vs-rest linear classifier: one weight row and bias per class.
/// Prediction is the argmax of the per-class scores, ties resolved toward
/// the lowest class id (classes are kept sorted).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    weights: Vec<f64>, // L x n, row-major
    biases: Vec<f64>,  // L
    classes: Vec<usize>,
    n: usize,
}

impl LinearClassifier {
    /// Rebuilds a classifier from raw parts (model loading, tests).
    pub fn from_parts(
        weights: Vec<f64>,
        biases: Vec<f64>,
        classes: Vec<usize>,
        n: usize,
    ) -> Result<Self> {
        let l = classes.len();
        if l < 2 || n == 0 || weights.len() != l * n || biases.len() != l {
            return Err(FhError::InvalidParameter(format!(
                "classifier shape mismatch: {l} classes, {n} features, {} weights, {} biases",
                weights.len(),
                biases.len()
            )));
        }
        if classes.windows(2).any(|p| p[0] >= p[1]) {
            return Err(FhError::InvalidParameter(
                "class ids must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            weights,
            biases,
            classes,
            n,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// Predicted label for one point.
    pub fn predict(&self, x: &[f64]) -> usize {
        assert_eq!(x.len(), self.n, "query dimension mismatch");
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for (c, &bias) in self.biases.iter().enumerate() {
            let row = &self.weights[c * self.n..(c + 1) * self.n];
            let score: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias;
            if score > best_score {
                best_score = score;
                best = c;
            }
        }
        self.classes[best]
    }
}

fn sorted_classes(y: &[usize]) -> Vec<usize> {
    let mut classes: Vec<usize> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    classes
}

/// Trains a one-vs-rest perceptron. Each binary subproblem runs classic
/// mistake-driven updates, `w <- (1-alpha)w + t*x`, visiting samples in a
/// freshly shuffled order every epoch; it stops after `max_iter` epochs or
/// as soon as an epoch lowers the training error rate by less than `tol`.
pub fn train_perceptron(
    x: &[f64],
    n_features: usize,
    y: &[usize],
    params: &PerceptronParams,
    seed: u64,
) -> Result<LinearClassifier> {
    if y.is_empty() {
        return Err(FhError::EmptyDataset);
    }
    assert_eq!(x.len(), y.len() * n_features, "sample matrix shape mismatch");
    let classes = sorted_classes(y);
    if classes.len() < 2 {
        return Err(FhError::SingleClass);
    }

    let rows = y.len();
    let l = classes.len();
    let mut weights = vec![0.0f64; l * n_features];
    let mut biases = vec![0.0f64; l];

    for (ci, &class) in classes.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, ci as u64));
        let w = &mut weights[ci * n_features..(ci + 1) * n_features];
        let b = &mut biases[ci];
        let mut order: Vec<usize> = (0..rows).collect();
        let mut prev_error = f64::INFINITY;
        for _ in 0..params.max_iter {
            order.shuffle(&mut rng);
            let mut mistakes = 0usize;
            for &i in &order {
                let xi = &x[i * n_features..(i + 1) * n_features];
                let t = if y[i] == class { 1.0 } else { -1.0 };
                let score: f64 = w.iter().zip(xi).map(|(wj, v)| wj * v).sum::<f64>() + *b;
                if t * score <= 0.0 {
                    mistakes += 1;
                    for (wj, &v) in w.iter_mut().zip(xi) {
                        *wj = (1.0 - params.alpha) * *wj + t * v;
                    }
                    *b += t;
                }
            }
            let error = mistakes as f64 / rows as f64;
            if mistakes == 0 || prev_error - error < params.tol {
                break;
            }
            prev_error = error;
        }
    }

    LinearClassifier::from_parts(weights, biases, classes, n_features)
}

/// A bagged ensemble of perceptrons sharing the feature space and label
/// universe. Immutable once trained; safe to query from many threads.
#[derive(Debug, Clone)]
pub struct Pool {
    members: Vec<LinearClassifier>,
    seed: u64,
}

/// Pools are equal when their members are: the seed is training
/// provenance, not behavior, and is not part of the model file.
impl PartialEq for Pool {
    fn eq(&self, other: &Self) -> bool {
        self.members == other.members
    }
}

impl Pool {
    pub fn from_members(members: Vec<LinearClassifier>, seed: u64) -> Result<Self> {
        if members.is_empty() {
            return Err(FhError::InvalidParameter("pool needs at least one member".into()));
        }
        let n = members[0].n_features();
        let classes = members[0].classes().to_vec();
        for (i, m) in members.iter().enumerate() {
            if m.n_features() != n || m.classes() != classes.as_slice() {
                return Err(FhError::InvalidParameter(format!(
                    "member {i} disagrees on feature count or label universe"
                )));
            }
        }
        Ok(Self { members, seed })
    }

    pub fn members(&self) -> &[LinearClassifier] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_features(&self) -> usize {
        self.members[0].n_features()
    }

    pub fn classes(&self) -> &[usize] {
        self.members[0].classes()
    }

    /// Every member's prediction for one point, in member order.
    pub fn predict_all(&self, x: &[f64]) -> Vec<usize> {
        self.members.iter().map(|m| m.predict(x)).collect()
    }
}

/// Pool training configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolParams {
    /// Number of bagged members.
    pub members: usize,
    pub perceptron: PerceptronParams,
    /// When false each member trains on the full data set unchanged —
    /// a test hook for comparing against a lone perceptron.
    pub bootstrap: bool,
}

impl Default for PoolParams {
    fn default() -> Self {
        Self {
            members: 100,
            perceptron: PerceptronParams::default(),
            bootstrap: true,
        }
    }
}

const BOOTSTRAP_RETRIES: usize = 100;
// Stream id for a member's perceptron seed; bootstrap attempts use 0..=100.
const PERCEPTRON_STREAM: u64 = 1000;

/// One bootstrap resample: `rows` indices drawn uniformly with replacement.
pub(crate) fn draw_bootstrap(seed: u64, rows: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows).map(|_| rng.random_range(0..rows)).collect()
}

fn covers_all(indices: &[usize], y: &[usize], classes: &[usize]) -> bool {
    classes
        .iter()
        .all(|c| indices.iter().any(|&i| y[i] == *c))
}

/// Trains `params.members` perceptrons on bootstrap resamples of `(x, y)`,
/// each resample the same size as the input. A resample that misses any
/// class is redrawn from the next stream value (bounded retries) so every
/// member sees the full label universe. Members are independent and train
/// in parallel; the result depends only on the inputs and `seed`.
pub fn train_pool(
    x: &[f64],
    n_features: usize,
    y: &[usize],
    params: &PoolParams,
    seed: u64,
) -> Result<Pool> {
    if y.is_empty() {
        return Err(FhError::EmptyDataset);
    }
    assert_eq!(x.len(), y.len() * n_features, "sample matrix shape mismatch");
    if params.members == 0 {
        return Err(FhError::InvalidParameter("pool needs at least one member".into()));
    }
    let classes = sorted_classes(y);
    if classes.len() < 2 {
        return Err(FhError::SingleClass);
    }

    let rows = y.len();
    let members: Result<Vec<LinearClassifier>> = (0..params.members)
        .into_par_iter()
        .map(|i| {
            let member_seed = derive_seed(seed, i as u64);
            let p_seed = derive_seed(member_seed, PERCEPTRON_STREAM);
            if !params.bootstrap {
                return train_perceptron(x, n_features, y, &params.perceptron, p_seed);
            }
            let mut chosen: Option<Vec<usize>> = None;
            for attempt in 0..=BOOTSTRAP_RETRIES {
                let idx = draw_bootstrap(derive_seed(member_seed, attempt as u64), rows);
                if covers_all(&idx, y, &classes) {
                    chosen = Some(idx);
                    break;
                }
            }
            let idx = chosen.ok_or(FhError::DegenerateBootstrap {
                member: i,
                retries: BOOTSTRAP_RETRIES,
            })?;
            let mut bx = Vec::with_capacity(rows * n_features);
            let mut by = Vec::with_capacity(rows);
            for &j in &idx {
                bx.extend_from_slice(&x[j * n_features..(j + 1) * n_features]);
                by.push(y[j]);
            }
            train_perceptron(&bx, n_features, &by, &params.perceptron, p_seed)
        })
        .collect();

    Pool::from_members(members?, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two well-separated blobs on a deterministic grid; margin ~0.28
    /// along the x1 + x2 = 1 separator.
    fn separable_blobs() -> (Vec<f64>, Vec<usize>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                let (a, b) = (0.05 + 0.03 * i as f64, 0.05 + 0.03 * j as f64);
                x.extend_from_slice(&[a, b]);
                y.push(0);
                x.extend_from_slice(&[a + 0.6, b + 0.6]);
                y.push(1);
            }
        }
        (x, y)
    }

    /// Interleaved stripes: not linearly separable.
    fn stripes() -> (Vec<f64>, Vec<usize>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..120 {
            let a = (i as f64) / 120.0;
            let b = ((i * 7) % 120) as f64 / 120.0;
            x.extend_from_slice(&[a, b]);
            y.push((i / 10) % 2);
        }
        (x, y)
    }

    fn training_accuracy(c: &LinearClassifier, x: &[f64], y: &[usize]) -> f64 {
        let n = c.n_features();
        let hits = y
            .iter()
            .enumerate()
            .filter(|(i, &label)| c.predict(&x[i * n..(i + 1) * n]) == label)
            .count();
        hits as f64 / y.len() as f64
    }

    #[test]
    fn separable_data_is_fully_learned() {
        let (x, y) = separable_blobs();
        let c = train_perceptron(&x, 2, &y, &PerceptronParams::default(), 7).unwrap();
        assert_eq!(training_accuracy(&c, &x, &y), 1.0);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![0.1, 0.2, 0.3, 0.4];
        let y = vec![3, 3];
        assert!(matches!(
            train_perceptron(&x, 2, &y, &PerceptronParams::default(), 0),
            Err(FhError::SingleClass)
        ));
        assert!(matches!(
            train_pool(&x, 2, &y, &PoolParams::default(), 0),
            Err(FhError::SingleClass)
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = stripes();
        let p = PerceptronParams::default();
        let a = train_perceptron(&x, 2, &y, &p, 42).unwrap();
        let b = train_perceptron(&x, 2, &y, &p, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn multiclass_predictions_stay_in_universe() {
        // three classes with ids 2, 5, 9 in separated corners
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            let t = i as f64 / 20.0 * 0.15;
            x.extend_from_slice(&[0.1 + t, 0.1]);
            y.push(2);
            x.extend_from_slice(&[0.9 - t, 0.1]);
            y.push(5);
            x.extend_from_slice(&[0.5, 0.9 - t]);
            y.push(9);
        }
        let c = train_perceptron(&x, 2, &y, &PerceptronParams::default(), 3).unwrap();
        assert_eq!(c.classes(), &[2, 5, 9]);
        for i in 0..y.len() {
            let p = c.predict(&x[i * 2..(i + 1) * 2]);
            assert!([2, 5, 9].contains(&p));
        }
        assert!(training_accuracy(&c, &x, &y) > 0.9);
    }

    #[test]
    fn bootstrap_draws_full_size_in_range() {
        let idx = draw_bootstrap(99, 1000);
        assert_eq!(idx.len(), 1000);
        assert!(idx.iter().all(|&i| i < 1000));
        assert_eq!(idx, draw_bootstrap(99, 1000));
        // with replacement: roughly 63% distinct
        let mut uniq = idx.clone();
        uniq.sort_unstable();
        uniq.dedup();
        assert!(uniq.len() > 500 && uniq.len() < 760, "got {}", uniq.len());
    }

    #[test]
    fn pool_has_m_members_and_is_deterministic() {
        let (x, y) = stripes();
        let params = PoolParams {
            members: 10,
            ..PoolParams::default()
        };
        let a = train_pool(&x, 2, &y, &params, 42).unwrap();
        assert_eq!(a.len(), 10);
        let b = train_pool(&x, 2, &y, &params, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identity_pool_equals_single_perceptron() {
        let (x, y) = separable_blobs();
        let params = PoolParams {
            members: 1,
            bootstrap: false,
            ..PoolParams::default()
        };
        let pool = train_pool(&x, 2, &y, &params, 42).unwrap();
        let p_seed = derive_seed(derive_seed(42, 0), PERCEPTRON_STREAM);
        let solo = train_perceptron(&x, 2, &y, &PerceptronParams::default(), p_seed).unwrap();
        assert_eq!(pool.members()[0], solo);
    }

    #[test]
    fn pool_members_disagree_somewhere() {
        let (x, y) = stripes();
        let params = PoolParams {
            members: 20,
            ..PoolParams::default()
        };
        let pool = train_pool(&x, 2, &y, &params, 5).unwrap();
        let probes: Vec<[f64; 2]> = (0..100)
            .map(|i| [(i % 10) as f64 / 10.0 + 0.05, (i / 10) as f64 / 10.0 + 0.05])
            .collect();
        let disagreement = probes.iter().any(|p| {
            let votes = pool.predict_all(p);
            votes.iter().any(|&v| v != votes[0])
        });
        assert!(disagreement, "bagged members should not be identical");
    }

    #[test]
    fn bootstrap_redraw_keeps_all_classes() {
        // tiny data with a rare class: naive draws often miss it
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..30 {
            x.extend_from_slice(&[i as f64 / 30.0, 0.2]);
            y.push(0);
        }
        x.extend_from_slice(&[0.9, 0.9]);
        y.push(1);
        let params = PoolParams {
            members: 50,
            ..PoolParams::default()
        };
        let pool = train_pool(&x, 2, &y, &params, 11).unwrap();
        assert_eq!(pool.len(), 50);
        assert_eq!(pool.classes(), &[0, 1]);
    }
}

//! Synthetic dataset generators for the benchmark harness: a 2-D
//! banana-style pair of interleaved crescents and an n-feature Gaussian
//! blob generator. Both produce a deterministic sample stream, so a
//! longer draw from the same seed extends a shorter one — the scalability
//! bench relies on that to grow the selection set incrementally.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::Dataset;
use crate::error::{FhError, Result};

const BANANA_SPAN: f64 = 1.2 * std::f64::consts::PI;
const BANANA_OFFSET: f64 = 0.7;

/// Blob deviates are truncated at this many sigmas. Bounded support keeps
/// the misclassification regions tileable by a finite set of hyperboxes;
/// with unbounded tails every stray outlier would mint a fresh box forever.
const BLOB_TRUNC: f64 = 2.5;

/// Which synthetic distribution to draw from. `flip` is the probability
/// that a sample's label is replaced by the next class id (mod classes),
/// which creates genuine class overlap without disturbing the geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorSpec {
    /// Two interleaved crescents in 2-D with Gaussian jitter `noise`.
    Banana { noise: f64, flip: f64 },
    /// `classes` Gaussian clusters in `features` dimensions, centers
    /// spaced along the main diagonal, isotropic deviation `spread`.
    Blobs {
        features: usize,
        classes: usize,
        spread: f64,
        flip: f64,
    },
}

impl GeneratorSpec {
    pub fn n_features(&self) -> usize {
        match *self {
            GeneratorSpec::Banana { .. } => 2,
            GeneratorSpec::Blobs { features, .. } => features,
        }
    }

    pub fn n_classes(&self) -> usize {
        match *self {
            GeneratorSpec::Banana { .. } => 2,
            GeneratorSpec::Blobs { classes, .. } => classes,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::Banana { .. } => "banana",
            GeneratorSpec::Blobs { .. } => "blobs",
        }
    }

    fn validate(&self) -> Result<()> {
        let flip = match *self {
            GeneratorSpec::Banana { noise, flip } => {
                if !(noise >= 0.0 && noise.is_finite()) {
                    return Err(FhError::InvalidParameter(format!(
                        "banana noise must be a nonnegative number, got {noise}"
                    )));
                }
                flip
            }
            GeneratorSpec::Blobs {
                features,
                classes,
                spread,
                flip,
            } => {
                if features == 0 {
                    return Err(FhError::InvalidParameter(
                        "blobs need at least one feature".into(),
                    ));
                }
                if classes < 2 {
                    return Err(FhError::InvalidParameter(
                        "blobs need at least two classes".into(),
                    ));
                }
                if !(spread >= 0.0 && spread.is_finite()) {
                    return Err(FhError::InvalidParameter(format!(
                        "blobs spread must be a nonnegative number, got {spread}"
                    )));
                }
                flip
            }
        };
        if !(0.0..1.0).contains(&flip) {
            return Err(FhError::InvalidParameter(format!(
                "label flip rate must be in [0, 1), got {flip}"
            )));
        }
        Ok(())
    }

    /// Opens the deterministic sample stream for this spec.
    pub fn stream(&self, seed: u64) -> Result<SampleStream> {
        self.validate()?;
        Ok(SampleStream {
            spec: *self,
            rng: ChaCha8Rng::seed_from_u64(seed),
            drawn: 0,
        })
    }

    /// Materializes the first `count` stream samples as a dataset.
    pub fn generate(&self, count: usize, seed: u64) -> Result<Dataset> {
        let mut stream = self.stream(seed)?;
        let mut x = Vec::with_capacity(count * self.n_features());
        let mut y = Vec::with_capacity(count);
        for _ in 0..count {
            let label = stream.next_into(&mut x);
            y.push(label);
        }
        Ok(Dataset::new(self.name().into(), x, self.n_features(), y))
    }
}

/// Infinite deterministic sample source. Underlying labels alternate
/// round-robin over the classes, so before flipping every prefix is
/// class-balanced to within one. The flip draw is consumed for every
/// sample regardless of the rate, so changing `flip` relabels points
/// without moving them.
pub struct SampleStream {
    spec: GeneratorSpec,
    rng: ChaCha8Rng,
    drawn: usize,
}

impl SampleStream {
    pub fn n_features(&self) -> usize {
        self.spec.n_features()
    }

    /// Appends the next sample's features to `out` and returns its label.
    pub fn next_into(&mut self, out: &mut Vec<f64>) -> usize {
        let i = self.drawn;
        self.drawn += 1;
        let (label, classes, flip) = match self.spec {
            GeneratorSpec::Banana { noise, flip } => {
                // Arcs sweep 1.2π and sit 0.7 apart vertically, so each
                // crescent hooks well into the other's belly: no single
                // hyperplane separates them even at zero noise.
                let label = i % 2;
                let t = self.rng.random_range(0.0..BANANA_SPAN);
                let (nx, ny): (f64, f64) =
                    (self.rng.sample(StandardNormal), self.rng.sample(StandardNormal));
                let (cx, cy) = if label == 0 {
                    (t.cos(), t.sin())
                } else {
                    (1.0 - t.cos(), BANANA_OFFSET - t.sin())
                };
                out.push(cx + noise * nx);
                out.push(cy + noise * ny);
                (label, 2, flip)
            }
            GeneratorSpec::Blobs {
                features,
                classes,
                spread,
                flip,
            } => {
                let label = i % classes;
                let center = (label + 1) as f64 / (classes + 1) as f64;
                for _ in 0..features {
                    let n: f64 = self.rng.sample(StandardNormal);
                    out.push(center + spread * n.clamp(-BLOB_TRUNC, BLOB_TRUNC));
                }
                (label, classes, flip)
            }
        };
        let u: f64 = self.rng.random();
        if u < flip {
            (label + 1) % classes
        } else {
            label
        }
    }

    /// Draws `count` samples into fresh buffers.
    pub fn take(&mut self, count: usize) -> (Vec<f64>, Vec<usize>) {
        let mut x = Vec::with_capacity(count * self.n_features());
        let mut y = Vec::with_capacity(count);
        for _ in 0..count {
            let label = self.next_into(&mut x);
            y.push(label);
        }
        (x, y)
    }
}

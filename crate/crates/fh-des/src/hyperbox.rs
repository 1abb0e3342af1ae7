//! Fuzzy hyperboxes: axis-aligned boxes in the unit hypercube with a
//! graded membership function, learned by single-pass expansion.
//!
//! A box is stored as its min corner `v` and max corner `w`. Membership is
//! 1 anywhere inside the (closed) box and decays outside it, either with
//! the classic Gabrys-Bargiela ramp or with the smooth-border function
//! built from squared face distances.

use crate::error::{FhError, Result};

/// Which membership function a hyperbox set evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MembershipKind {
    /// Gabrys-Bargiela min-over-dimensions ramp. `gamma` controls how fast
    /// membership falls off outside the box; must be positive.
    Gabrys { gamma: f64 },
    /// Smooth-border membership: 1 minus the squared Euclidean distance to
    /// the box surface, clamped to [0, 1]. Unlike the ramp it penalizes a
    /// diagonal corner offset more than the same offset through one face.
    Sbm,
}

impl MembershipKind {
    pub fn gamma(&self) -> f64 {
        match *self {
            MembershipKind::Gabrys { gamma } => gamma,
            MembershipKind::Sbm => 1.0,
        }
    }
}

/// Axis-aligned box in `[0,1]^n`, closed on all faces.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperbox {
    v: Vec<f64>,
    w: Vec<f64>,
}

impl Hyperbox {
    /// Builds a box from explicit corners, checking `v <= w` per dimension
    /// and that both corners lie in the unit hypercube.
    pub fn new(v: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if v.is_empty() || v.len() != w.len() {
            return Err(FhError::InvalidParameter(format!(
                "box corners must share a dimensionality >= 1, got {} and {}",
                v.len(),
                w.len()
            )));
        }
        for d in 0..v.len() {
            if !(v[d].is_finite() && w[d].is_finite()) || v[d] > w[d] || v[d] < 0.0 || w[d] > 1.0 {
                return Err(FhError::InvalidParameter(format!(
                    "corner values out of order or outside [0,1] in dimension {d}"
                )));
            }
        }
        Ok(Self { v, w })
    }

    /// Degenerate box covering exactly one point.
    pub fn point(x: &[f64]) -> Self {
        Self {
            v: x.to_vec(),
            w: x.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn min_corner(&self) -> &[f64] {
        &self.v
    }

    pub fn max_corner(&self) -> &[f64] {
        &self.w
    }

    fn check_dim(&self, x: &[f64]) {
        assert_eq!(
            self.v.len(),
            x.len(),
            "point dimension {} does not match box dimension {}",
            x.len(),
            self.v.len()
        );
    }

    /// True iff `x` lies inside the closed box.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.check_dim(x);
        x.iter()
            .zip(self.v.iter().zip(self.w.iter()))
            .all(|(&xi, (&vi, &wi))| vi <= xi && xi <= wi)
    }

    /// True iff growing the box to cover `x` keeps every per-dimension
    /// extent within `theta`.
    pub fn can_expand(&self, x: &[f64], theta: f64) -> bool {
        self.check_dim(x);
        x.iter()
            .zip(self.v.iter().zip(self.w.iter()))
            .all(|(&xi, (&vi, &wi))| wi.max(xi) - vi.min(xi) <= theta)
    }

    /// Grows the box to cover `x` (component-wise min/max). The caller is
    /// responsible for checking `can_expand` first.
    pub fn expand(&mut self, x: &[f64]) {
        self.check_dim(x);
        for (d, &xi) in x.iter().enumerate() {
            self.v[d] = self.v[d].min(xi);
            self.w[d] = self.w[d].max(xi);
        }
    }

    /// Membership grade of `x` in [0, 1]; exactly 1 inside the box.
    pub fn membership(&self, x: &[f64], kind: MembershipKind) -> f64 {
        self.check_dim(x);
        match kind {
            MembershipKind::Gabrys { gamma } => self.membership_gabrys(x, gamma),
            MembershipKind::Sbm => (1.0 - self.sbm_raw(x)).max(0.0),
        }
    }

    fn membership_gabrys(&self, x: &[f64], gamma: f64) -> f64 {
        let ramp = |r: f64| (r * gamma).clamp(0.0, 1.0);
        let mut m = 1.0f64;
        for (&xd, (&vd, &wd)) in x.iter().zip(self.v.iter().zip(self.w.iter())) {
            let above = 1.0 - ramp(xd - wd);
            let below = 1.0 - ramp(vd - xd);
            m = m.min(above.min(below));
        }
        m
    }

    /// Squared Euclidean distance from `x` to the box surface, zero inside.
    /// This is the raw smooth-border value before clamping to a membership.
    pub fn sbm_raw(&self, x: &[f64]) -> f64 {
        self.check_dim(x);
        let mut total = 0.0;
        for (&xd, (&vd, &wd)) in x.iter().zip(self.v.iter().zip(self.w.iter())) {
            let center = (vd + wd) / 2.0;
            let half = (wd - vd) / 2.0;
            let outside = ((center - xd).abs() - half).max(0.0);
            total += outside * outside;
        }
        total
    }
}

/// A learned collection of hyperboxes sharing dimensionality, expansion
/// bound and membership function. One of these models the competence (or
/// incompetence) region of a single classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperboxSet {
    boxes: Vec<Hyperbox>,
    theta: f64,
    kind: MembershipKind,
    n: usize,
}

impl HyperboxSet {
    /// Single-pass expansion learning. Each sample is first tested against
    /// existing boxes in creation order: a containing box absorbs it, else
    /// the first box that can expand within `theta` does, else a new point
    /// box is appended. No overlap resolution is attempted. An empty sample
    /// list yields an empty (valid) set.
    pub fn fit<'a, I>(n: usize, theta: f64, kind: MembershipKind, samples: I) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        assert!(
            theta > 0.0 && theta <= 1.0,
            "theta must be in (0,1], got {theta}"
        );
        assert!(n >= 1, "dimensionality must be at least 1");
        let mut set = Self {
            boxes: Vec::new(),
            theta,
            kind,
            n,
        };
        for x in samples {
            set.insert(x);
        }
        set
    }

    fn insert(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.n, "sample dimension mismatch");
        if self.boxes.iter().any(|b| b.contains(x)) {
            return;
        }
        if let Some(b) = self.boxes.iter_mut().find(|b| b.can_expand(x, self.theta)) {
            b.expand(x);
            return;
        }
        self.boxes.push(Hyperbox::point(x));
    }

    /// Rebuilds a set from already-learned boxes, e.g. when loading a model
    /// file. Every box must match `n` and honor the `theta` extent bound.
    pub fn from_boxes(
        n: usize,
        theta: f64,
        kind: MembershipKind,
        boxes: Vec<Hyperbox>,
    ) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(FhError::InvalidParameter(format!(
                "theta must be in (0,1], got {theta}"
            )));
        }
        if n == 0 {
            return Err(FhError::InvalidParameter(
                "dimensionality must be at least 1".into(),
            ));
        }
        for (i, b) in boxes.iter().enumerate() {
            if b.dim() != n {
                return Err(FhError::InvalidParameter(format!(
                    "box {i} has dimension {}, set expects {n}",
                    b.dim()
                )));
            }
            for d in 0..n {
                if b.max_corner()[d] - b.min_corner()[d] > theta {
                    return Err(FhError::InvalidParameter(format!(
                        "box {i} exceeds the extent bound {theta} in dimension {d}"
                    )));
                }
            }
        }
        Ok(Self {
            boxes,
            theta,
            kind,
            n,
        })
    }

    pub fn boxes(&self) -> &[Hyperbox] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn kind(&self) -> MembershipKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// True iff some box of the set contains `x`.
    pub fn covers(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }

    /// The two largest membership values over the set. A singleton set
    /// reports its value twice; an empty set reports (0, 0).
    pub fn top2_membership(&self, x: &[f64]) -> (f64, f64) {
        let mut best = 0.0f64;
        let mut second = 0.0f64;
        let mut count = 0usize;
        for b in &self.boxes {
            let m = b.membership(x, self.kind);
            if m > best {
                second = best;
                best = m;
            } else if m > second {
                second = m;
            }
            count += 1;
        }
        match count {
            0 => (0.0, 0.0),
            1 => (best, best),
            _ => (best, second),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn boxed(v: &[f64], w: &[f64]) -> Hyperbox {
        Hyperbox::new(v.to_vec(), w.to_vec()).unwrap()
    }

    #[test]
    fn contains_interior_boundary_outside() {
        let b = boxed(&[0.2, 0.2], &[0.5, 0.5]);
        assert!(b.contains(&[0.3, 0.4]));
        assert!(b.contains(&[0.5, 0.2]));
        assert!(!b.contains(&[0.6, 0.3]));
    }

    #[test]
    fn can_expand_respects_theta() {
        let b = boxed(&[0.1, 0.1], &[0.3, 0.3]);
        assert!(b.can_expand(&[0.35, 0.2], 0.27));
        assert!(!b.can_expand(&[0.40, 0.2], 0.27));
    }

    #[test]
    fn can_expand_for_contained_points_needs_only_current_extent() {
        let b = boxed(&[0.125, 0.25], &[0.375, 0.5]);
        // max current extent is 0.25 (exactly representable corners)
        for x in [[0.125, 0.25], [0.375, 0.5], [0.25, 0.375]] {
            assert!(b.can_expand(&x, 0.25));
            assert!(b.can_expand(&x, 0.9));
        }
    }

    #[test]
    fn expand_takes_componentwise_min_max() {
        let mut b = boxed(&[0.1, 0.1], &[0.3, 0.3]);
        b.expand(&[0.35, 0.05]);
        assert_eq!(b.min_corner(), &[0.1, 0.05]);
        assert_eq!(b.max_corner(), &[0.35, 0.3]);
        assert!(b.contains(&[0.35, 0.05]));

        let before = b.clone();
        b.expand(&[0.2, 0.2]);
        assert_eq!(b, before);

        let mut p = boxed(&[0.5], &[0.5]);
        p.expand(&[0.6]);
        assert_eq!(p.min_corner(), &[0.5]);
        assert_eq!(p.max_corner(), &[0.6]);
    }

    #[test]
    fn gabrys_membership_matches_hand_values() {
        let b = boxed(&[0.2, 0.2], &[0.5, 0.5]);
        let kind = MembershipKind::Gabrys { gamma: 1.0 };
        assert_eq!(b.membership(&[0.3, 0.4], kind), 1.0);
        // only dimension 0 exceeds the max corner, by 0.1
        let m = b.membership(&[0.6, 0.3], kind);
        assert!((m - 0.9).abs() < 1e-12, "got {m}");
    }

    #[test]
    fn sbm_membership_matches_hand_values() {
        let b = boxed(&[0.2, 0.2], &[0.5, 0.5]);
        let raw = b.sbm_raw(&[0.6, 0.3]);
        assert!((raw - 0.01).abs() < 1e-12, "got {raw}");
        let m = b.membership(&[0.6, 0.3], MembershipKind::Sbm);
        assert!((m - 0.99).abs() < 1e-12, "got {m}");

        let raw2 = b.sbm_raw(&[0.6, 0.6]);
        assert!((raw2 - 0.02).abs() < 1e-12, "got {raw2}");
        let m2 = b.membership(&[0.6, 0.6], MembershipKind::Sbm);
        assert!((m2 - 0.98).abs() < 1e-12, "got {m2}");
    }

    #[test]
    fn fit_single_pass_trace_1d() {
        let samples: Vec<Vec<f64>> = vec![vec![0.1], vec![0.2], vec![0.5]];
        let set = HyperboxSet::fit(
            1,
            0.3,
            MembershipKind::Sbm,
            samples.iter().map(|s| s.as_slice()),
        );
        assert_eq!(set.len(), 2);
        assert_eq!(set.boxes()[0].min_corner(), &[0.1]);
        assert_eq!(set.boxes()[0].max_corner(), &[0.2]);
        assert_eq!(set.boxes()[1].min_corner(), &[0.5]);
        assert_eq!(set.boxes()[1].max_corner(), &[0.5]);
    }

    #[test]
    fn fit_degenerate_inputs() {
        let one = [vec![0.4, 0.4]];
        let set = HyperboxSet::fit(
            2,
            0.27,
            MembershipKind::Sbm,
            one.iter().map(|s| s.as_slice()),
        );
        assert_eq!(set.len(), 1);
        assert_eq!(set.boxes()[0].min_corner(), &[0.4, 0.4]);
        assert_eq!(set.boxes()[0].max_corner(), &[0.4, 0.4]);

        let same = [vec![0.7], vec![0.7], vec![0.7], vec![0.7]];
        let set = HyperboxSet::fit(
            1,
            0.05,
            MembershipKind::Sbm,
            same.iter().map(|s| s.as_slice()),
        );
        assert_eq!(set.len(), 1);

        let empty: Vec<Vec<f64>> = Vec::new();
        let set = HyperboxSet::fit(
            3,
            0.27,
            MembershipKind::Sbm,
            empty.iter().map(|s| s.as_slice()),
        );
        assert!(set.is_empty());
        assert_eq!(set.top2_membership(&[0.1, 0.2, 0.3]), (0.0, 0.0));
    }

    #[test]
    fn top2_orders_memberships() {
        // gamma=1 memberships at x=0.9: excesses 0.1, 0.3, 0.8
        let kind = MembershipKind::Gabrys { gamma: 1.0 };
        let boxes = vec![
            boxed(&[0.75], &[0.8]),
            boxed(&[0.5], &[0.6]),
            boxed(&[0.05], &[0.1]),
        ];
        let set = HyperboxSet::from_boxes(1, 0.27, kind, boxes).unwrap();
        let (b1, b2) = set.top2_membership(&[0.9]);
        assert!((b1 - 0.9).abs() < 1e-12);
        assert!((b2 - 0.7).abs() < 1e-12);

        let single =
            HyperboxSet::from_boxes(1, 0.27, kind, vec![boxed(&[0.5], &[0.6])]).unwrap();
        let (b1, b2) = single.top2_membership(&[0.9]);
        assert_eq!(b1, b2);
        assert!((b1 - 0.7).abs() < 1e-12);
    }

    #[test]
    fn from_boxes_rejects_extent_violations() {
        let b = boxed(&[0.1], &[0.6]);
        assert!(HyperboxSet::from_boxes(1, 0.3, MembershipKind::Sbm, vec![b]).is_err());
    }

    proptest! {
        #[test]
        fn membership_is_in_range_and_one_inside(
            corners in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..6),
            x in proptest::collection::vec(0.0f64..=1.0, 6),
            gamma in 0.1f64..4.0,
        ) {
            let n = corners.len();
            let v: Vec<f64> = corners.iter().map(|&(a, b)| a.min(b)).collect();
            let w: Vec<f64> = corners.iter().map(|&(a, b)| a.max(b)).collect();
            let b = Hyperbox::new(v, w).unwrap();
            let x = &x[..n];
            for kind in [MembershipKind::Gabrys { gamma }, MembershipKind::Sbm] {
                let m = b.membership(x, kind);
                prop_assert!((0.0..=1.0).contains(&m));
                if b.contains(x) {
                    prop_assert_eq!(m, 1.0);
                }
                // smooth-border membership hits 1 only inside the box
                if kind == MembershipKind::Sbm && m == 1.0 {
                    prop_assert!(b.contains(x));
                }
            }
        }

        #[test]
        fn membership_never_increases_moving_away(
            seed_box in proptest::collection::vec((0.25f64..=0.7, 0.0f64..=0.25), 1..5),
            frac in proptest::collection::vec(0.0f64..=1.0, 5),
            dim_pick in 0usize..5,
            t1 in 0.0f64..=0.5,
            t2 in 0.0f64..=0.5,
            gamma in 0.2f64..3.0,
        ) {
            let n = seed_box.len();
            let v: Vec<f64> = seed_box.iter().map(|&(a, _)| a).collect();
            let w: Vec<f64> = seed_box.iter().map(|&(a, e)| (a + e).min(1.0)).collect();
            let b = Hyperbox::new(v.clone(), w.clone()).unwrap();
            let d = dim_pick % n;
            // start from a point in the cube, then step outward along dimension d
            let mut x: Vec<f64> = (0..n).map(|i| v[i] + frac[i] * (w[i] - v[i])).collect();
            let (lo, hi) = (t1.min(t2), t1.max(t2));
            let away_up = frac[d] >= 0.5;
            let room = if away_up { 1.0 - w[d] } else { v[d] };
            let (s1, s2) = (lo * room, hi * room);
            let base = if away_up { w[d] } else { v[d] };
            for kind in [MembershipKind::Gabrys { gamma }, MembershipKind::Sbm] {
                x[d] = if away_up { base + s1 } else { base - s1 };
                let near = b.membership(&x, kind);
                x[d] = if away_up { base + s2 } else { base - s2 };
                let far = b.membership(&x, kind);
                prop_assert!(far <= near, "kind {:?}: {} > {}", kind, far, near);
            }
        }

        #[test]
        fn fit_covers_every_sample_within_theta(
            raw in proptest::collection::vec(proptest::collection::vec(0.0f64..=1.0, 2), 1..40),
            theta in 0.05f64..=1.0,
        ) {
            let samples: Vec<&[f64]> = raw.iter().map(|r| r.as_slice()).collect();
            let set = HyperboxSet::fit(2, theta, MembershipKind::Sbm, samples.iter().copied());
            prop_assert!(set.len() <= raw.len());
            for s in &samples {
                prop_assert!(set.covers(s));
            }
            for b in set.boxes() {
                for d in 0..2 {
                    prop_assert!(b.max_corner()[d] - b.min_corner()[d] <= theta);
                }
            }
        }

        #[test]
        fn fit_on_permuted_samples_stays_sound(
            raw in proptest::collection::vec(proptest::collection::vec(0.0f64..=1.0, 2), 2..25),
            rot in 0usize..25,
        ) {
            let mut permuted = raw.clone();
            permuted.rotate_left(rot % raw.len());
            let set = HyperboxSet::fit(
                2,
                0.27,
                MembershipKind::Sbm,
                permuted.iter().map(|r| r.as_slice()),
            );
            for s in &raw {
                prop_assert!(set.covers(s));
            }
        }
    }
}

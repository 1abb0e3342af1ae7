//! Binary model persistence. Layout (version 1, all integers and floats
//! little-endian, floats 64-bit):
//!
//! ```text
//! magic "FHDS" | version u8
//! mode u8 | kind u8 | mu f64 | theta f64 | gamma f64 | n u32 | M u32
//! pool:   M u32, then per member: L u32, n u32, classes L*u32,
//!         weights (L*n)*f64, biases L*f64
//! hsets:  per member: count u32, then per box: v n*f64, w n*f64
//! norm:   flag u8 (0 absent, 1 present), then mins n*f64, maxs n*f64
//! ```
//!
//! Shared hyperbox parameters (theta, kind, gamma, n) live in the header
//! only — every set is required to agree with them, so they are not
//! repeated per set.

use std::fs;
use std::path::Path;

use crate::data::Normalization;
use crate::des::{DesMode, DesModel};
use crate::error::{FhError, Result};
use crate::hyperbox::{Hyperbox, HyperboxSet, MembershipKind};
use crate::pool::{LinearClassifier, Pool};

const MAGIC: &[u8; 4] = b"FHDS";
const VERSION: u8 = 1;

/// A model plus the normalization its training pipeline used. Prediction
/// on raw CSV rows applies `norm` first when present.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub model: DesModel,
    pub norm: Option<Normalization>,
}

fn mode_byte(mode: DesMode) -> u8 {
    match mode {
        DesMode::CompetenceBoxes => 0,
        DesMode::IncompetenceBoxes => 1,
    }
}

fn kind_byte(kind: MembershipKind) -> u8 {
    match kind {
        MembershipKind::Gabrys { .. } => 0,
        MembershipKind::Sbm => 1,
    }
}

fn push_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v: u32 = v
        .try_into()
        .map_err(|_| FhError::ModelFormat(format!("value {v} exceeds the u32 range")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn push_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

/// Serializes a model (and optional normalization) to bytes.
pub fn encode_model(model: &DesModel, norm: Option<&Normalization>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(mode_byte(model.mode()));
    out.push(kind_byte(model.kind()));
    push_f64(&mut out, model.mu());
    push_f64(&mut out, model.theta());
    push_f64(&mut out, model.kind().gamma());
    push_u32(&mut out, model.n_features())?;
    push_u32(&mut out, model.pool().len())?;

    let pool = model.pool();
    push_u32(&mut out, pool.len())?;
    for member in pool.members() {
        push_u32(&mut out, member.classes().len())?;
        push_u32(&mut out, member.n_features())?;
        for &c in member.classes() {
            push_u32(&mut out, c)?;
        }
        for &w in member.weights() {
            push_f64(&mut out, w);
        }
        for &b in member.biases() {
            push_f64(&mut out, b);
        }
    }

    for hset in model.hsets() {
        push_u32(&mut out, hset.len())?;
        for b in hset.boxes() {
            for &v in b.min_corner() {
                push_f64(&mut out, v);
            }
            for &w in b.max_corner() {
                push_f64(&mut out, w);
            }
        }
    }

    match norm {
        None => out.push(0),
        Some(n) => {
            if n.mins.len() != model.n_features() {
                return Err(FhError::ModelFormat(format!(
                    "normalization has {} columns, model expects {}",
                    n.mins.len(),
                    model.n_features()
                )));
            }
            out.push(1);
            for &v in &n.mins {
                push_f64(&mut out, v);
            }
            for &v in &n.maxs {
                push_f64(&mut out, v);
            }
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn bytes(&mut self, count: usize) -> Result<&'a [u8]> {
        if self.pos + count > self.buf.len() {
            return Err(FhError::ModelFormat(
                "unexpected end of model file".into(),
            ));
        }
        let s = &self.buf[self.pos..self.pos + count];
        self.pos += count;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.bytes(4)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.bytes(8)?;
        Ok(f64::from_le_bytes(b.try_into().unwrap()))
    }

    fn f64_vec(&mut self, count: usize) -> Result<Vec<f64>> {
        (0..count).map(|_| self.f64()).collect()
    }
}

/// Deserializes a model written by `encode_model`, validating structure
/// via the same constructors the training path uses.
pub fn decode_model(bytes: &[u8]) -> Result<SavedModel> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.bytes(4)? != MAGIC {
        return Err(FhError::ModelFormat("bad magic bytes".into()));
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(FhError::ModelFormat(format!(
            "unsupported model version {version}, expected {VERSION}"
        )));
    }
    let mode = match r.u8()? {
        0 => DesMode::CompetenceBoxes,
        1 => DesMode::IncompetenceBoxes,
        b => return Err(FhError::ModelFormat(format!("unknown mode byte {b}"))),
    };
    let kind_b = r.u8()?;
    let mu = r.f64()?;
    let theta = r.f64()?;
    let gamma = r.f64()?;
    let kind = match kind_b {
        0 => MembershipKind::Gabrys { gamma },
        1 => MembershipKind::Sbm,
        b => return Err(FhError::ModelFormat(format!("unknown kind byte {b}"))),
    };
    let n = r.u32()?;
    let m = r.u32()?;

    let pool_m = r.u32()?;
    if pool_m != m {
        return Err(FhError::ModelFormat(format!(
            "header says {m} members, pool block says {pool_m}"
        )));
    }
    let mut members = Vec::with_capacity(m);
    for _ in 0..m {
        let l = r.u32()?;
        let member_n = r.u32()?;
        if member_n != n {
            return Err(FhError::ModelFormat(format!(
                "member dimension {member_n} disagrees with header {n}"
            )));
        }
        let classes: Vec<usize> = (0..l).map(|_| r.u32()).collect::<Result<_>>()?;
        let weights = r.f64_vec(l * n)?;
        let biases = r.f64_vec(l)?;
        members.push(
            LinearClassifier::from_parts(weights, biases, classes, n)
                .map_err(|e| FhError::ModelFormat(e.to_string()))?,
        );
    }
    let pool = Pool::from_members(members, 0).map_err(|e| FhError::ModelFormat(e.to_string()))?;

    let mut hsets = Vec::with_capacity(m);
    for _ in 0..m {
        let count = r.u32()?;
        let mut boxes = Vec::with_capacity(count);
        for _ in 0..count {
            let v = r.f64_vec(n)?;
            let w = r.f64_vec(n)?;
            boxes.push(Hyperbox::new(v, w).map_err(|e| FhError::ModelFormat(e.to_string()))?);
        }
        hsets.push(
            HyperboxSet::from_boxes(n, theta, kind, boxes)
                .map_err(|e| FhError::ModelFormat(e.to_string()))?,
        );
    }

    let norm = match r.u8()? {
        0 => None,
        1 => {
            let mins = r.f64_vec(n)?;
            let maxs = r.f64_vec(n)?;
            Some(Normalization { mins, maxs })
        }
        b => return Err(FhError::ModelFormat(format!("unknown normalization flag {b}"))),
    };
    if r.pos != bytes.len() {
        return Err(FhError::ModelFormat(format!(
            "{} trailing bytes after model payload",
            bytes.len() - r.pos
        )));
    }

    let model = DesModel::from_parts(pool, hsets, mode, mu, kind, theta)
        .map_err(|e| FhError::ModelFormat(e.to_string()))?;
    Ok(SavedModel { model, norm })
}

pub fn save_model(path: &Path, model: &DesModel, norm: Option<&Normalization>) -> Result<()> {
    fs::write(path, encode_model(model, norm)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    decode_model(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::des;
    use crate::pool::{train_pool, PoolParams};

    fn fitted_model(kind: MembershipKind) -> (DesModel, Vec<f64>, Vec<usize>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..60 {
            let a = (i % 10) as f64 / 10.0;
            let b = ((i * 3) % 10) as f64 / 10.0;
            x.extend_from_slice(&[a, b]);
            y.push(if a + b > 0.9 { 1 } else { 0 });
        }
        let params = PoolParams {
            members: 5,
            ..PoolParams::default()
        };
        let pool = train_pool(&x, 2, &y, &params, 42).unwrap();
        let model = des::fit(
            pool,
            &x,
            &y,
            DesMode::IncompetenceBoxes,
            0.27,
            kind,
            0.99,
        )
        .unwrap();
        (model, x, y)
    }

    #[test]
    fn round_trip_preserves_model_and_predictions() {
        for kind in [MembershipKind::Sbm, MembershipKind::Gabrys { gamma: 2.0 }] {
            let (model, x, _) = fitted_model(kind);
            let norm = Normalization {
                mins: vec![0.0, -1.0],
                maxs: vec![10.0, 1.0],
            };
            let bytes = encode_model(&model, Some(&norm)).unwrap();
            let loaded = decode_model(&bytes).unwrap();
            assert_eq!(loaded.model, model);
            assert_eq!(loaded.norm.as_ref(), Some(&norm));
            for q in x.chunks(2) {
                assert_eq!(loaded.model.predict(q), model.predict(q));
            }
        }
    }

    #[test]
    fn round_trip_without_normalization() {
        let (model, _, _) = fitted_model(MembershipKind::Sbm);
        let bytes = encode_model(&model, None).unwrap();
        let loaded = decode_model(&bytes).unwrap();
        assert_eq!(loaded.model, model);
        assert!(loaded.norm.is_none());
    }

    #[test]
    fn corrupted_inputs_are_rejected() {
        let (model, _, _) = fitted_model(MembershipKind::Sbm);
        let good = encode_model(&model, None).unwrap();

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            decode_model(&bad_magic),
            Err(FhError::ModelFormat(_))
        ));

        let mut bad_version = good.clone();
        bad_version[4] = 99;
        assert!(matches!(
            decode_model(&bad_version),
            Err(FhError::ModelFormat(_))
        ));

        let mut bad_kind = good.clone();
        bad_kind[6] = 7;
        assert!(matches!(
            decode_model(&bad_kind),
            Err(FhError::ModelFormat(_))
        ));

        let truncated = &good[..good.len() - 3];
        assert!(matches!(
            decode_model(truncated),
            Err(FhError::ModelFormat(_))
        ));

        let mut trailing = good.clone();
        trailing.push(0);
        assert!(matches!(
            decode_model(&trailing),
            Err(FhError::ModelFormat(_))
        ));
    }

    #[test]
    fn save_and_load_files() {
        let (model, x, _) = fitted_model(MembershipKind::Sbm);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        save_model(&path, &model, None).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded.model, model);
        for q in x.chunks(2) {
            assert_eq!(loaded.model.predict(q), model.predict(q));
        }
    }
}

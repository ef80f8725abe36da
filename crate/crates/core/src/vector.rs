//! Embedding store keyed by typed text identifiers, and the vector
//! arithmetic used by the offset scorers.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::corpus::Corpus;
use crate::retrieval::FieldView;
use crate::{Error, Result};

/// Which text an embedding row encodes.
///
/// String forms: `statute:<sid>`, `case:<cid>:h`, `case:<cid>:ch`,
/// `case:<cid>:sch`, `pair:<sid>:<cid>:concat`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EmbeddingKey {
    Statute(String),
    Case(String, FieldView),
    PairConcat { statute_id: String, case_id: String },
}

impl EmbeddingKey {
    pub fn case(case_id: impl Into<String>, view: FieldView) -> Self {
        EmbeddingKey::Case(case_id.into(), view)
    }

    pub fn pair(statute_id: impl Into<String>, case_id: impl Into<String>) -> Self {
        EmbeddingKey::PairConcat {
            statute_id: statute_id.into(),
            case_id: case_id.into(),
        }
    }

    pub fn scheme(&self) -> &'static str {
        match self {
            EmbeddingKey::Statute(_) => "statute",
            EmbeddingKey::Case(_, FieldView::Hypothesis) => "case:h",
            EmbeddingKey::Case(_, FieldView::ContextHypothesis) => "case:ch",
            EmbeddingKey::Case(_, FieldView::StatuteContextHypothesis) => "case:sch",
            EmbeddingKey::PairConcat { .. } => "pair:concat",
        }
    }
}

impl fmt::Display for EmbeddingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingKey::Statute(sid) => write!(f, "statute:{sid}"),
            EmbeddingKey::Case(cid, view) => write!(f, "case:{cid}:{}", view.as_str()),
            EmbeddingKey::PairConcat {
                statute_id,
                case_id,
            } => write!(f, "pair:{statute_id}:{case_id}:concat"),
        }
    }
}

impl FromStr for EmbeddingKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadKey(s.into());
        let parts: Vec<&str> = s.split(':').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(bad());
        }
        match parts.as_slice() {
            ["statute", sid] => Ok(EmbeddingKey::Statute((*sid).into())),
            ["case", cid, view] => {
                let view = view.parse().map_err(|_| bad())?;
                Ok(EmbeddingKey::Case((*cid).into(), view))
            }
            ["pair", sid, cid, "concat"] => Ok(EmbeddingKey::pair(*sid, *cid)),
            _ => Err(bad()),
        }
    }
}

fn check_dims(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::DimMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    Ok(())
}

/// Componentwise `s - c`.
pub fn offset(s: &[f64], c: &[f64]) -> Result<Vec<f64>> {
    check_dims(s, c)?;
    Ok(s.iter().zip(c).map(|(a, b)| a - b).collect())
}

pub fn dot(u: &[f64], v: &[f64]) -> Result<f64> {
    check_dims(u, v)?;
    Ok(u.iter().zip(v).map(|(a, b)| a * b).sum())
}

pub fn norm(u: &[f64]) -> f64 {
    libm::sqrt(u.iter().map(|x| x * x).sum())
}

/// Cosine similarity, clamped to `[-1, 1]`. Zero-norm operands are an error.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    let d = dot(u, v)?;
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((d / (nu * nv)).clamp(-1.0, 1.0))
}

/// Fixed-dimension vectors keyed by [`EmbeddingKey`], in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    encoder_name: String,
    rows: Vec<(EmbeddingKey, Vec<f64>)>,
    index: BTreeMap<EmbeddingKey, usize>,
}

impl EmbeddingStore {
    pub fn new(dim: usize, encoder_name: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDim);
        }
        Ok(EmbeddingStore {
            dim,
            encoder_name: encoder_name.into(),
            rows: Vec::new(),
            index: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn encoder_name(&self) -> &str {
        &self.encoder_name
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert(&mut self, key: EmbeddingKey, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::RowDimMismatch {
                key: format!("{key}"),
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                key: format!("{key}"),
            });
        }
        if self.index.contains_key(&key) {
            return Err(Error::DuplicateKey(format!("{key}")));
        }
        self.index.insert(key.clone(), self.rows.len());
        self.rows.push((key, vector));
        Ok(())
    }

    pub fn get(&self, key: &EmbeddingKey) -> Result<&[f64]> {
        self.index
            .get(key)
            .map(|&i| self.rows[i].1.as_slice())
            .ok_or_else(|| Error::MissingKey {
                key: format!("{key}"),
                scheme: key.scheme(),
            })
    }

    /// Looks up a key given in its string form.
    pub fn get_str(&self, key: &str) -> Result<&[f64]> {
        self.get(&key.parse()?)
    }

    pub fn contains(&self, key: &EmbeddingKey) -> bool {
        self.index.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EmbeddingKey, &[f64])> + '_ {
        self.rows.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// Keys whose statute or case ids do not resolve in `corpus`.
    pub fn unresolved_keys(&self, corpus: &Corpus) -> Vec<&EmbeddingKey> {
        self.rows
            .iter()
            .map(|(k, _)| k)
            .filter(|k| match k {
                EmbeddingKey::Statute(sid) => corpus.statute(sid).is_none(),
                EmbeddingKey::Case(cid, _) => corpus.case(cid).is_none(),
                EmbeddingKey::PairConcat {
                    statute_id,
                    case_id,
                } => corpus
                    .case(case_id)
                    .is_none_or(|c| &c.statute_id != statute_id),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn offsets() {
        assert_eq!(offset(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let v = [0.3, -2.0, 7.5];
        assert_eq!(offset(&v, &v).unwrap(), vec![0.0; 3]);
        assert_eq!(
            offset(&[3.0, -1.0, 2.0], &[1.0, 1.0, 1.0]).unwrap(),
            vec![2.0, -2.0, 1.0]
        );
        assert!(matches!(
            offset(&[1.0], &[1.0, 2.0]),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn cosine_cases() {
        assert_eq!(cosine(&[1.0, 0.0], &[2.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), -1.0);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroNorm));
    }

    #[test]
    fn key_forms() {
        for s in [
            "statute:s151_b",
            "case:c1:h",
            "case:c1:ch",
            "case:c1:sch",
            "pair:s151_b:c1:concat",
        ] {
            let k: EmbeddingKey = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        for s in ["statute:", "case:c1:x", "pair:s:c", "doc:1", "case:c1", ""] {
            assert_eq!(s.parse::<EmbeddingKey>(), Err(Error::BadKey(s.into())));
        }
    }

    #[test]
    fn store_rules() {
        let mut st = EmbeddingStore::new(2, "toy").unwrap();
        st.insert(EmbeddingKey::Statute("s1".into()), vec![1.0, 2.0])
            .unwrap();
        assert!(matches!(
            st.insert(EmbeddingKey::Statute("s2".into()), vec![1.0]),
            Err(Error::RowDimMismatch { ref key, .. }) if key == "statute:s2"
        ));
        assert!(matches!(
            st.insert(EmbeddingKey::Statute("s3".into()), vec![f64::NAN, 0.0]),
            Err(Error::NonFinite { ref key }) if key == "statute:s3"
        ));
        assert_eq!(
            st.insert(EmbeddingKey::Statute("s1".into()), vec![0.0, 0.0]),
            Err(Error::DuplicateKey("statute:s1".into()))
        );
        assert_eq!(st.get_str("statute:s1").unwrap(), &[1.0, 2.0]);
        assert_eq!(
            st.get_str("case:c9:h"),
            Err(Error::MissingKey {
                key: "case:c9:h".into(),
                scheme: "case:h"
            })
        );
        assert_eq!(st.get_str("bogus"), Err(Error::BadKey("bogus".into())));
        assert_eq!(EmbeddingStore::new(0, "x"), Err(Error::ZeroDim));
    }

    fn nonzero_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 1..12).prop_filter("nonzero", |v| norm(v) > 1e-3)
    }

    proptest! {
        #[test]
        fn cosine_self_is_one(u in nonzero_vec()) {
            prop_assert!((cosine(&u, &u).unwrap() - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn cosine_symmetric_and_scale_invariant(
            (u, v) in (1usize..10).prop_flat_map(|n| (
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(-10.0f64..10.0, n),
            )).prop_filter("nonzero", |(u, v)| norm(u) > 1e-3 && norm(v) > 1e-3),
            alpha in 0.01f64..100.0,
        ) {
            let c = cosine(&u, &v).unwrap();
            prop_assert_eq!(c, cosine(&v, &u).unwrap());
            let scaled: Vec<f64> = u.iter().map(|x| x * alpha).collect();
            prop_assert!((cosine(&scaled, &v).unwrap() - c).abs() <= 1e-9);
            let flipped: Vec<f64> = u.iter().map(|x| -x * alpha).collect();
            prop_assert!((cosine(&flipped, &v).unwrap() + c).abs() <= 1e-9);
        }

        #[test]
        fn offset_antisymmetric(
            (s, c) in (1usize..10).prop_flat_map(|n| (
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(-10.0f64..10.0, n),
            ))
        ) {
            let a = offset(&s, &c).unwrap();
            let b: Vec<f64> = offset(&c, &s).unwrap().iter().map(|x| -x).collect();
            prop_assert_eq!(a, b);
        }
    }
}

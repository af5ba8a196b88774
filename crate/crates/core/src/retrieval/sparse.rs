use crate::error::{Error, Result};

/// A TF-IDF term-weight vector in sorted sparse form.
///
/// Entries are `(term id, weight)` with strictly ascending ids, and every
/// weight is finite and strictly positive (TF-IDF weights are nonnegative by
/// construction; zeros are simply not stored).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn empty() -> SparseVector {
        SparseVector::default()
    }

    /// Validates and wraps pre-sorted entries.
    pub fn new(entries: Vec<(u32, f64)>) -> Result<SparseVector> {
        let mut prev: Option<u32> = None;
        for &(id, w) in &entries {
            if let Some(p) = prev {
                if id <= p {
                    return Err(Error::InvalidInput(format!(
                        "sparse vector ids must be strictly ascending: {} after {}",
                        id, p
                    )));
                }
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "sparse vector weights must be finite and positive, got {} for term {}",
                    w, id
                )));
            }
            prev = Some(id);
        }
        Ok(SparseVector { entries })
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Weight of `term`, or `None` when absent.
    pub fn get(&self, term: u32) -> Option<f64> {
        self.entries
            .binary_search_by_key(&term, |&(id, _)| id)
            .ok()
            .map(|i| self.entries[i].1)
    }

    /// Dot product by merging the two sorted entry lists.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < self.entries.len() && j < other.entries.len() {
            let (ia, wa) = self.entries[i];
            let (ib, wb) = other.entries[j];
            match ia.cmp(&ib) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += wa * wb;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, w)| w * w)
            .sum::<f64>()
            .sqrt()
    }

    /// Scales every weight by a positive factor.
    pub fn scaled(&self, factor: f64) -> Result<SparseVector> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidInput(format!(
                "scale factor must be finite and positive, got {}",
                factor
            )));
        }
        Ok(SparseVector {
            entries: self.entries.iter().map(|&(id, w)| (id, w * factor)).collect(),
        })
    }
}

/// Cosine similarity over sparse vectors: 0 when either vector is empty or
/// their supports are disjoint; otherwise in [0, 1] for nonnegative weights.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    a.dot(b) / (a.norm() * b.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(entries: &[(u32, f64)]) -> SparseVector {
        SparseVector::new(entries.to_vec()).unwrap()
    }

    #[test]
    fn new_validates_order_and_weights() {
        assert!(SparseVector::new(vec![(2, 1.0), (1, 1.0)]).is_err());
        assert!(SparseVector::new(vec![(1, 1.0), (1, 2.0)]).is_err());
        assert!(SparseVector::new(vec![(1, 0.0)]).is_err());
        assert!(SparseVector::new(vec![(1, -2.0)]).is_err());
        assert!(SparseVector::new(vec![(1, f64::NAN)]).is_err());
        assert!(SparseVector::new(vec![]).is_ok());
    }

    #[test]
    fn cosine_identity_and_disjoint() {
        let a = sv(&[(1, 1.0), (5, 2.0)]);
        assert!((cosine(&a, &a) - 1.0).abs() < 1e-12);
        let b = sv(&[(2, 3.0), (7, 1.0)]);
        assert_eq!(cosine(&a, &b), 0.0);
        assert_eq!(cosine(&a, &SparseVector::empty()), 0.0);
        assert_eq!(cosine(&SparseVector::empty(), &SparseVector::empty()), 0.0);
    }

    #[test]
    fn cosine_hand_computed() {
        // a={1:1, 2:2}, b={1:2, 3:1}: dot=2, |a|=|b|=sqrt(5), cos=2/5.
        let a = sv(&[(1, 1.0), (2, 2.0)]);
        let b = sv(&[(1, 2.0), (3, 1.0)]);
        assert!((cosine(&a, &b) - 0.4).abs() < 1e-12);
    }
}

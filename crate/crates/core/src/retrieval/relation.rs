use std::collections::BTreeMap;

use crate::corpus::Vocabulary;
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::retrieval::sparse::SparseVector;

/// How an embedding cosine becomes a relation value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationTransform {
    /// `m = max(0, cos)^2` — the default.
    ClampedSquaredCosine,
    /// `m = max(0, cos)`.
    ClampedCosine,
}

impl std::str::FromStr for RelationTransform {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<RelationTransform, String> {
        match s {
            "clamped-squared-cosine" | "squared" => Ok(RelationTransform::ClampedSquaredCosine),
            "clamped-cosine" | "clamped" => Ok(RelationTransform::ClampedCosine),
            _ => Err(format!(
                "unknown relation transform {:?} (expected `clamped-squared-cosine` or `clamped-cosine`)",
                s
            )),
        }
    }
}

impl RelationTransform {
    fn apply(self, cos: f64) -> f64 {
        let c = cos.max(0.0);
        match self {
            RelationTransform::ClampedSquaredCosine => c * c,
            RelationTransform::ClampedCosine => c,
        }
    }
}

/// Parameters for [`build_relation_matrix`].
#[derive(Debug, Clone)]
pub struct RelationConfig {
    /// Minimum relation value for an edge to be kept; in `[0, 1)`.
    pub tau: f64,
    /// Keep at most this many neighbors per term before symmetrization.
    pub top_r: usize,
    pub transform: RelationTransform,
}

impl Default for RelationConfig {
    fn default() -> Self {
        RelationConfig {
            tau: 0.4,
            top_r: 20,
            transform: RelationTransform::ClampedSquaredCosine,
        }
    }
}

/// Sparse symmetric word-relation matrix with an implicit unit diagonal.
///
/// Stored values are in `(0, 1]`; the diagonal is never stored explicitly,
/// and neighbor lists are sorted by term id. Symmetry is structural: an edge
/// i→j exists iff j→i exists, with the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationMatrix {
    neighbors: Vec<Vec<(u32, f64)>>,
}

impl RelationMatrix {
    /// The identity relation: no stored neighbors, diagonal only.
    pub fn diagonal(n_terms: usize) -> RelationMatrix {
        RelationMatrix {
            neighbors: vec![Vec::new(); n_terms],
        }
    }

    pub fn n_terms(&self) -> usize {
        self.neighbors.len()
    }

    /// Stored neighbors of `term`, sorted by id. Out-of-range terms have none.
    pub fn neighbors(&self, term: u32) -> &[(u32, f64)] {
        self.neighbors
            .get(term as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Number of stored (directed) edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    /// m(i, j): 1 on the diagonal, the stored value off it, else 0.
    pub fn value(&self, i: u32, j: u32) -> f64 {
        if i == j {
            return 1.0;
        }
        match self.neighbors(i).binary_search_by_key(&j, |&(id, _)| id) {
            Ok(pos) => self.neighbors[i as usize][pos].1,
            Err(_) => 0.0,
        }
    }

    /// Validates and wraps raw neighbor lists (used by the index decoder).
    pub(crate) fn from_parts(neighbors: Vec<Vec<(u32, f64)>>) -> Result<RelationMatrix> {
        let n = neighbors.len();
        for (i, list) in neighbors.iter().enumerate() {
            let mut prev: Option<u32> = None;
            for &(j, m) in list {
                if j as usize >= n {
                    return Err(Error::Format(format!(
                        "relation edge {}->{} points outside the {}-term vocabulary",
                        i, j, n
                    )));
                }
                if j as usize == i {
                    return Err(Error::Format(format!(
                        "relation matrix stores the diagonal explicitly at term {}",
                        i
                    )));
                }
                if let Some(p) = prev {
                    if j <= p {
                        return Err(Error::Format(format!(
                            "relation neighbors of term {} are not strictly ascending",
                            i
                        )));
                    }
                }
                prev = Some(j);
                if !(m.is_finite() && m > 0.0 && m <= 1.0) {
                    return Err(Error::Format(format!(
                        "relation value m({}, {}) = {} outside (0, 1]",
                        i, j, m
                    )));
                }
            }
        }
        let matrix = RelationMatrix { neighbors };
        // Symmetry: every stored edge must exist in both directions with the
        // same bits.
        for i in 0..n as u32 {
            for &(j, m) in matrix.neighbors(i) {
                if matrix.value(j, i).to_bits() != m.to_bits() {
                    return Err(Error::Format(format!(
                        "relation matrix is not symmetric at ({}, {})",
                        i, j
                    )));
                }
            }
        }
        Ok(matrix)
    }

    /// Text triple dump `term_i<TAB>term_j<TAB>m`, one line per undirected
    /// edge (i < j), for inspection.
    pub fn to_triples(&self, vocab: &Vocabulary) -> String {
        let mut out = String::new();
        for i in 0..self.neighbors.len() as u32 {
            for &(j, m) in self.neighbors(i) {
                if i < j {
                    out.push_str(vocab.token(i).as_str());
                    out.push('\t');
                    out.push_str(vocab.token(j).as_str());
                    out.push('\t');
                    out.push_str(&m.to_string());
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Derives the relation matrix from embedding cosines over the vocabulary.
///
/// For each term, neighbor candidates are the `top_r` other terms with the
/// highest transformed cosine at or above `tau`; the kept edge set is then
/// symmetrized by union. Every vocabulary term resolves through the table's
/// lookup, so OOV terms participate with their sampled vectors.
pub fn build_relation_matrix(
    table: &EmbeddingTable,
    vocab: &Vocabulary,
    config: &RelationConfig,
) -> RelationMatrix {
    assert!(
        (0.0..1.0).contains(&config.tau),
        "tau must be in [0, 1), got {}",
        config.tau
    );
    assert!(config.top_r >= 1, "top_r must be >= 1");

    let n = vocab.len();
    let dim = table.dim();
    let mut vectors = vec![0.0f64; n * dim];
    let mut norms = vec![0.0f64; n];
    for i in 0..n {
        let v = table.lookup(vocab.token(i as u32).as_str());
        norms[i] = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        vectors[i * dim..(i + 1) * dim].copy_from_slice(&v);
    }

    let mut kept: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); n];
    let mut candidates: Vec<(u32, f64)> = Vec::new();
    for i in 0..n {
        if norms[i] == 0.0 {
            continue;
        }
        candidates.clear();
        let vi = &vectors[i * dim..(i + 1) * dim];
        for j in 0..n {
            if j == i || norms[j] == 0.0 {
                continue;
            }
            let vj = &vectors[j * dim..(j + 1) * dim];
            let dot: f64 = vi.iter().zip(vj).map(|(a, b)| a * b).sum();
            let m = config.transform.apply(dot / (norms[i] * norms[j]));
            if m > 0.0 && m >= config.tau {
                candidates.push((j as u32, m));
            }
        }
        candidates.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for &(j, m) in candidates.iter().take(config.top_r) {
            let m = m.min(1.0);
            kept[i].insert(j, m);
            kept[j as usize].insert(i as u32, m);
        }
    }

    RelationMatrix {
        neighbors: kept
            .into_iter()
            .map(|map| map.into_iter().collect())
            .collect(),
    }
}

/// Bilinear form `a^t M b` with implicit unit diagonal: the plain dot product
/// plus every stored cross-term touching both vectors.
pub(crate) fn bilinear(a: &SparseVector, b: &SparseVector, m: &RelationMatrix) -> f64 {
    let mut total = a.dot(b);
    for &(i, wa) in a.entries() {
        for &(j, mij) in m.neighbors(i) {
            if let Some(wb) = b.get(j) {
                total += wa * mij * wb;
            }
        }
    }
    total
}

/// Soft cosine: cosine generalized by the word-relation matrix so related but
/// distinct terms contribute to similarity.
///
/// Zero when either vector is empty. For nonempty nonnegative vectors the
/// denominators satisfy `a^t M a >= |a|^2 > 0` (all stored values positive,
/// unit diagonal), so no singularity handling is needed; this is asserted.
pub fn soft_cosine(a: &SparseVector, b: &SparseVector, m: &RelationMatrix) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let num = bilinear(a, b, m);
    let na = bilinear(a, a, m);
    let nb = bilinear(b, b, m);
    assert!(
        na > 0.0 && nb > 0.0,
        "soft-cosine denominator must be positive for nonempty vectors"
    );
    num / (na.sqrt() * nb.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::sparse::cosine;

    fn sv(entries: &[(u32, f64)]) -> SparseVector {
        SparseVector::new(entries.to_vec()).unwrap()
    }

    /// Test oracle: dense evaluation of `a^t M b` over explicit dense vectors
    /// and a dense matrix, independent of the sparse path.
    #[allow(clippy::needless_range_loop)]
    fn dense_soft_cosine(a: &[f64], b: &[f64], m: &[Vec<f64>]) -> f64 {
        let form = |x: &[f64], y: &[f64]| {
            let mut acc = 0.0;
            for i in 0..x.len() {
                for j in 0..y.len() {
                    acc += x[i] * m[i][j] * y[j];
                }
            }
            acc
        };
        form(a, b) / (form(a, a).sqrt() * form(b, b).sqrt())
    }

    fn pair_matrix(n: usize, i: u32, j: u32, m: f64) -> RelationMatrix {
        let mut neighbors = vec![Vec::new(); n];
        neighbors[i as usize].push((j, m));
        neighbors[j as usize].push((i, m));
        RelationMatrix::from_parts(neighbors).unwrap()
    }

    #[test]
    fn diagonal_matrix_reduces_to_cosine() {
        let m = RelationMatrix::diagonal(6);
        let a = sv(&[(0, 1.5), (3, 2.0)]);
        let b = sv(&[(0, 0.5), (2, 1.0), (3, 4.0)]);
        assert!((soft_cosine(&a, &b, &m) - cosine(&a, &b)).abs() < 1e-12);
        assert_eq!(soft_cosine(&SparseVector::empty(), &b, &m), 0.0);
    }

    #[test]
    fn soft_cosine_single_link_hand_value() {
        // a={1:1}, b={2:1}, m_12=0.5 -> 0.5 / (1*1); dense oracle agrees.
        let m = pair_matrix(3, 1, 2, 0.5);
        let a = sv(&[(1, 1.0)]);
        let b = sv(&[(2, 1.0)]);
        let got = soft_cosine(&a, &b, &m);
        assert!((got - 0.5).abs() < 1e-12);
        let dense_m = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.5],
            vec![0.0, 0.5, 1.0],
        ];
        let want = dense_soft_cosine(&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &dense_m);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn soft_cosine_full_overlap_hand_value() {
        // a=b={1:1, 2:1}, m_12=1: num = 4, norms = 2 each -> 1.0.
        let m = pair_matrix(3, 1, 2, 1.0);
        let a = sv(&[(1, 1.0), (2, 1.0)]);
        let got = soft_cosine(&a, &a, &m);
        assert!((got - 1.0).abs() < 1e-12);
    }

    #[test]
    fn soft_cosine_matches_dense_oracle_on_random_data() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let n = 8;
        for _ in 0..200 {
            // Random symmetric matrix with values in (0,1], ~30% density.
            let mut neighbors = vec![Vec::new(); n];
            let mut dense = vec![vec![0.0; n]; n];
            for (i, row) in dense.iter_mut().enumerate() {
                row[i] = 1.0;
            }
            for i in 0..n as u32 {
                for j in (i + 1)..n as u32 {
                    if rng.random_range(0..10) < 3 {
                        let m: f64 = rng.random_range(0.05..=1.0);
                        neighbors[i as usize].push((j, m));
                        neighbors[j as usize].push((i, m));
                        dense[i as usize][j as usize] = m;
                        dense[j as usize][i as usize] = m;
                    }
                }
            }
            let matrix = RelationMatrix::from_parts(neighbors).unwrap();

            let rand_vec = |rng: &mut rand_chacha::ChaCha8Rng| {
                let mut entries = Vec::new();
                let mut dense_v = vec![0.0; n];
                for t in 0..n as u32 {
                    if rng.random_range(0..10) < 5 {
                        let w: f64 = rng.random_range(0.1..5.0);
                        entries.push((t, w));
                        dense_v[t as usize] = w;
                    }
                }
                (SparseVector::new(entries).unwrap(), dense_v)
            };
            let (a, da) = rand_vec(&mut rng);
            let (b, db) = rand_vec(&mut rng);
            if a.is_empty() || b.is_empty() {
                continue;
            }
            let got = soft_cosine(&a, &b, &matrix);
            let want = dense_soft_cosine(&da, &db, &dense);
            assert!(
                (got - want).abs() < 1e-10,
                "sparse {} vs dense {}",
                got,
                want
            );
            // Symmetry (up to summation order) and self-similarity.
            assert!((got - soft_cosine(&b, &a, &matrix)).abs() < 1e-12);
            assert!((soft_cosine(&a, &a, &matrix) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_either_vector_leaves_similarities_unchanged() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let m = pair_matrix(6, 1, 4, 0.6);
        for _ in 0..50 {
            let a = sv(&[(0, rng.random_range(0.1..3.0)), (1, rng.random_range(0.1..3.0))]);
            let b = sv(&[(1, rng.random_range(0.1..3.0)), (4, rng.random_range(0.1..3.0))]);
            let c: f64 = rng.random_range(0.01..100.0);
            let scaled = a.scaled(c).unwrap();
            assert!((cosine(&scaled, &b) - cosine(&a, &b)).abs() < 1e-9);
            assert!((soft_cosine(&scaled, &b, &m) - soft_cosine(&a, &b, &m)).abs() < 1e-9);
            let scaled_b = b.scaled(c).unwrap();
            assert!((soft_cosine(&a, &scaled_b, &m) - soft_cosine(&a, &b, &m)).abs() < 1e-9);
        }
    }

    #[test]
    fn adding_a_cross_link_never_decreases_the_numerator() {
        let a = sv(&[(0, 2.0), (1, 1.0)]);
        let b = sv(&[(2, 3.0)]);
        let without = bilinear(&a, &b, &RelationMatrix::diagonal(3));
        let with = bilinear(&a, &b, &pair_matrix(3, 1, 2, 0.7));
        assert!(with >= without);
        assert!((with - (without + 1.0 * 0.7 * 3.0)).abs() < 1e-12);
    }

    #[test]
    fn from_parts_validates() {
        // Asymmetric.
        assert!(RelationMatrix::from_parts(vec![vec![(1, 0.5)], vec![]]).is_err());
        // Self edge.
        assert!(RelationMatrix::from_parts(vec![vec![(0, 0.5)]]).is_err());
        // Out of range.
        assert!(RelationMatrix::from_parts(vec![vec![(3, 0.5)], vec![]]).is_err());
        // Bad value.
        assert!(RelationMatrix::from_parts(vec![vec![(1, 1.5)], vec![(0, 1.5)]]).is_err());
        assert!(RelationMatrix::from_parts(vec![vec![(1, 0.0)], vec![(0, 0.0)]]).is_err());
        // Unsorted.
        assert!(RelationMatrix::from_parts(vec![
            vec![(2, 0.5), (1, 0.5)],
            vec![(0, 0.5)],
            vec![(0, 0.5)]
        ])
        .is_err());
        // Valid.
        assert!(RelationMatrix::from_parts(vec![vec![(1, 0.5)], vec![(0, 0.5)]]).is_ok());
    }

    #[test]
    fn build_relation_matrix_from_embeddings() {
        use crate::corpus::{Token, Vocabulary};
        use crate::embeddings::EmbeddingTable;

        let words: Vec<Vec<Token>> = vec![
            ["alpha", "beta", "gamma", "delta"]
                .iter()
                .map(|w| Token::new(*w).unwrap())
                .collect(),
        ];
        let vocab = Vocabulary::from_documents(words.iter().map(Vec::as_slice), 1);
        // alpha == beta exactly; gamma related at cos 0.8; delta opposite.
        let table = EmbeddingTable::from_entries(
            2,
            vec![
                ("alpha".into(), vec![1.0, 0.0]),
                ("beta".into(), vec![1.0, 0.0]),
                ("gamma".into(), vec![0.8, 0.6]),
                ("delta".into(), vec![-1.0, 0.0]),
            ],
            0,
        )
        .unwrap();
        let config = RelationConfig {
            tau: 0.5,
            top_r: 20,
            transform: RelationTransform::ClampedSquaredCosine,
        };
        let m = build_relation_matrix(&table, &vocab, &config);
        let alpha = vocab.id("alpha").unwrap();
        let beta = vocab.id("beta").unwrap();
        let gamma = vocab.id("gamma").unwrap();
        let delta = vocab.id("delta").unwrap();
        // Identical embeddings -> m = 1, both directions.
        assert!((m.value(alpha, beta) - 1.0).abs() < 1e-12);
        assert!((m.value(beta, alpha) - 1.0).abs() < 1e-12);
        // cos 0.8 -> m = 0.64 >= tau, stored symmetrically.
        assert!((m.value(alpha, gamma) - 0.64).abs() < 1e-12);
        assert!((m.value(gamma, alpha) - 0.64).abs() < 1e-12);
        // Negative cosine clamps to zero: edge absent.
        assert_eq!(m.value(alpha, delta), 0.0);
        assert_eq!(m.value(delta, alpha), 0.0);
    }

    #[test]
    fn build_relation_matrix_top_r_symmetrizes_by_union() {
        use crate::corpus::{Token, Vocabulary};
        use crate::embeddings::EmbeddingTable;

        // hub is closest to sat0/sat1 than they are to each other; with
        // top_r=1 each satellite picks the hub, and union keeps both edges on
        // the hub even though the hub alone would keep one.
        let words: Vec<Vec<Token>> = vec![["hub", "sat0", "sat1"]
            .iter()
            .map(|w| Token::new(*w).unwrap())
            .collect()];
        let vocab = Vocabulary::from_documents(words.iter().map(Vec::as_slice), 1);
        let table = EmbeddingTable::from_entries(
            2,
            vec![
                ("hub".into(), vec![1.0, 0.0]),
                ("sat0".into(), vec![0.95, 0.312_25]),
                ("sat1".into(), vec![0.95, -0.312_25]),
            ],
            0,
        )
        .unwrap();
        let config = RelationConfig {
            tau: 0.3,
            top_r: 1,
            transform: RelationTransform::ClampedSquaredCosine,
        };
        let m = build_relation_matrix(&table, &vocab, &config);
        let hub = vocab.id("hub").unwrap();
        let s0 = vocab.id("sat0").unwrap();
        let s1 = vocab.id("sat1").unwrap();
        assert!(m.value(hub, s0) > 0.0);
        assert!(m.value(hub, s1) > 0.0);
        assert_eq!(m.value(s0, s1), 0.0, "satellites only kept the hub");
        // Union symmetry invariant.
        RelationMatrix::from_parts(
            (0..m.n_terms() as u32)
                .map(|i| m.neighbors(i).to_vec())
                .collect(),
        )
        .expect("built matrix passes its own validation");
    }

    #[test]
    fn triples_export_lists_each_edge_once() {
        use crate::corpus::{Token, Vocabulary};
        let words: Vec<Vec<Token>> =
            vec![["x", "y"].iter().map(|w| Token::new(*w).unwrap()).collect()];
        let vocab = Vocabulary::from_documents(words.iter().map(Vec::as_slice), 1);
        let m = pair_matrix(2, 0, 1, 0.25);
        assert_eq!(m.to_triples(&vocab), "x\ty\t0.25\n");
    }
}

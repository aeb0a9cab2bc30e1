//! Monomial input augmentation: the ordered basis of all monomials of total
//! degree up to r over an input vector, plus the even-degree restriction used
//! by knowledge-edited value networks.
//!
//! Generation order is fixed: the constant term first, then the degree-1
//! block, then degree blocks in increasing order; within a degree block,
//! variable multisets in lexicographic order. A monomial is stored as its
//! sorted variable-index multiset, so evaluation order never affects meaning.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MonomialError {
    #[error("invalid augmentation order: {0}")]
    InvalidOrder(String),
    #[error("dimension mismatch: expected input of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// One monomial as a sorted multiset of variable indices; the empty multiset
/// is the constant term.
pub type Monomial = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBasis {
    pub input_dim: usize,
    pub order: usize,
    pub index_list: Vec<Monomial>,
}

fn degree_block(input_dim: usize, degree: usize) -> Vec<Monomial> {
    if degree == 0 {
        return vec![vec![]];
    }
    // depth-first in lexicographic order over non-decreasing index tuples
    fn rec(start: usize, prefix: &mut Monomial, remaining: usize, n: usize, out: &mut Vec<Monomial>) {
        if remaining == 0 {
            out.push(prefix.clone());
            return;
        }
        for v in start..n {
            prefix.push(v);
            rec(v, prefix, remaining - 1, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(degree);
    rec(0, &mut prefix, degree, input_dim, &mut out);
    out
}

impl MonomialBasis {
    /// Full basis: [1; degree-1 block; …; degree-r block].
    pub fn full(input_dim: usize, order: usize) -> Result<Self, MonomialError> {
        if order < 1 {
            return Err(MonomialError::InvalidOrder(format!(
                "order must be at least 1, got {order}"
            )));
        }
        if input_dim == 0 {
            return Err(MonomialError::InvalidOrder("input must be nonempty".into()));
        }
        let mut index_list = vec![vec![]];
        for d in 1..=order {
            index_list.extend(degree_block(input_dim, d));
        }
        Ok(Self {
            input_dim,
            order,
            index_list,
        })
    }

    /// Even-degree restriction: exactly the monomials of total degree
    /// 2, 4, …, r — no constant, no odd terms.
    pub fn even(input_dim: usize, order: usize) -> Result<Self, MonomialError> {
        if order < 2 || order % 2 != 0 {
            return Err(MonomialError::InvalidOrder(format!(
                "even basis requires an even order of at least 2, got {order}"
            )));
        }
        if input_dim == 0 {
            return Err(MonomialError::InvalidOrder("input must be nonempty".into()));
        }
        let mut index_list = Vec::new();
        let mut d = 2;
        while d <= order {
            index_list.extend(degree_block(input_dim, d));
            d += 2;
        }
        Ok(Self {
            input_dim,
            order,
            index_list,
        })
    }

    /// Even basis with the constant prepended, so the bias stays a link weight.
    pub fn even_with_constant(input_dim: usize, order: usize) -> Result<Self, MonomialError> {
        let mut basis = Self::even(input_dim, order)?;
        basis.index_list.insert(0, vec![]);
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.index_list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_list.is_empty()
    }

    /// Index of the constant term, when the basis has one.
    pub fn constant_index(&self) -> Option<usize> {
        self.index_list.iter().position(|m| m.is_empty())
    }

    pub fn evaluate(&self, y: &[f64]) -> Result<Vec<f64>, MonomialError> {
        if y.len() != self.input_dim {
            return Err(MonomialError::DimensionMismatch {
                expected: self.input_dim,
                got: y.len(),
            });
        }
        let mut out = Vec::with_capacity(self.len());
        for mono in &self.index_list {
            let mut v = 1.0;
            for &idx in mono {
                v *= y[idx];
            }
            out.push(v);
        }
        Ok(out)
    }

    pub fn evaluate_into(&self, y: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for mono in &self.index_list {
            let mut v = 1.0;
            for &idx in mono {
                v *= y[idx];
            }
            out.push(v);
        }
    }

    /// Accumulates dL/dy given dL/dm, using the product rule per monomial.
    pub fn backward_into(&self, y: &[f64], dm: &[f64], dy: &mut [f64]) {
        for (q, mono) in self.index_list.iter().enumerate() {
            let g = dm[q];
            if g == 0.0 || mono.is_empty() {
                continue;
            }
            for k in 0..mono.len() {
                let c = mono[k];
                let mut prod = 1.0;
                for (j, &idx) in mono.iter().enumerate() {
                    if j != k {
                        prod *= y[idx];
                    }
                }
                dy[c] += g * prod;
            }
        }
    }

    /// True when the monomial at `index` involves any of the marked coordinates.
    pub fn touches(&self, index: usize, marked: &[bool]) -> bool {
        self.index_list[index].iter().any(|&c| marked[c])
    }
}

/// Algorithm-style augmentation: [1; y; all monomials of degree 2..r].
pub fn augment(y: &[f64], r: usize) -> Result<Vec<f64>, MonomialError> {
    let basis = MonomialBasis::full(y.len(), r)?;
    basis.evaluate(y)
}

/// The even-degree basis generator used by reward-symmetric value networks.
pub fn even_monomial_basis(n: usize, r: usize) -> Result<MonomialBasis, MonomialError> {
    MonomialBasis::even(n, r)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut num = 1usize;
    for i in 0..k {
        num = num * (n - i) / (i + 1);
    }
    num
}

/// C(n + r, r): the full-basis length.
pub fn full_basis_len(n: usize, r: usize) -> usize {
    binomial(n + r, r)
}

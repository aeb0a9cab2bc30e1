//! Polytopic safety sets, their normalized half-space form, and the
//! ellipsoidal safety envelope used for containment certificates.
//!
//! A safety set is the slab intersection {s : v_lo ≤ D·s − v ≤ v_hi}. The
//! normalized form rewrites every row so membership reads D_hi·s ≤ 1 and
//! D_lo·s ≥ d with d ∈ {+1, −1}ʰ. The envelope is the ellipsoid
//! {s : sᵀPs ≤ 1}; a per-row quadratic-form test certifies that the
//! envelope sits inside the set.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg;

/// Condition-number threshold above which P is treated as numerically singular.
pub const SINGULAR_CONDITION_LIMIT: f64 = 1e12;

/// Containment values up to 1 + this slack count as a pass; analytic-centering
/// solutions land on the boundary.
pub const CONTAINMENT_SLACK: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("row {0} has a zero scaling factor (degenerate slab)")]
    EmptyRow(usize),
    #[error("safety set invariant violated: {0}")]
    InvalidSet(String),
    #[error("envelope matrix invariant violated: {0}")]
    InvalidEnvelope(String),
    #[error("P is numerically singular (condition number {0:.3e})")]
    SingularP(f64),
}

/// Polytopic safe set {s : v_lo ≤ D·s − v ≤ v_hi}.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetySet {
    pub d: DMatrix<f64>,
    pub v: DVector<f64>,
    pub v_hi: DVector<f64>,
    pub v_lo: DVector<f64>,
}

impl SafetySet {
    pub fn new(
        d: DMatrix<f64>,
        v: DVector<f64>,
        v_hi: DVector<f64>,
        v_lo: DVector<f64>,
    ) -> Result<Self, GeometryError> {
        let h = d.nrows();
        if v.len() != h || v_hi.len() != h || v_lo.len() != h {
            return Err(GeometryError::DimensionMismatch(format!(
                "D has {h} rows but offsets have lengths {}/{}/{}",
                v.len(),
                v_hi.len(),
                v_lo.len()
            )));
        }
        for i in 0..h {
            if v_lo[i] >= v_hi[i] {
                return Err(GeometryError::InvalidSet(format!(
                    "row {i}: v_lo {} must be below v_hi {}",
                    v_lo[i], v_hi[i]
                )));
            }
            if d.row(i).iter().all(|x| *x == 0.0) {
                return Err(GeometryError::InvalidSet(format!("row {i} of D is all zero")));
            }
        }
        Ok(Self { d, v, v_hi, v_lo })
    }

    pub fn rows(&self) -> usize {
        self.d.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.d.ncols()
    }

    /// The cart-pole set: |x| ≤ 0.9, |θ| ≤ 0.8 over s = [x, v, θ, ω].
    pub fn cartpole() -> Self {
        let d = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let v = DVector::zeros(2);
        let v_hi = DVector::from_row_slice(&[0.9, 0.8]);
        let v_lo = DVector::from_row_slice(&[-0.9, -0.8]);
        Self::new(d, v, v_hi, v_lo).expect("cart-pole set is well formed")
    }
}

/// Normalized half-space description: D_hi·s ≤ 1 and D_lo·s ≥ d, d ∈ {±1}ʰ.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSafetySet {
    pub d_hi: DMatrix<f64>,
    pub d_lo: DMatrix<f64>,
    pub d: DVector<f64>,
}

impl NormalizedSafetySet {
    pub fn rows(&self) -> usize {
        self.d_hi.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.d_hi.ncols()
    }

    /// Membership in the normalized description.
    pub fn contains(&self, s: &DVector<f64>) -> Result<bool, GeometryError> {
        if s.len() != self.state_dim() {
            return Err(GeometryError::DimensionMismatch(format!(
                "state has length {} but set is over R^{}",
                s.len(),
                self.state_dim()
            )));
        }
        let hi = &self.d_hi * s;
        let lo = &self.d_lo * s;
        Ok((0..self.rows()).all(|i| hi[i] <= 1.0 && lo[i] >= self.d[i]))
    }
}

/// Ellipsoidal safety envelope {s : sᵀPs ≤ 1} with P symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyEnvelope {
    p: DMatrix<f64>,
}

impl SafetyEnvelope {
    pub fn new(p: DMatrix<f64>) -> Result<Self, GeometryError> {
        if p.nrows() != p.ncols() {
            return Err(GeometryError::DimensionMismatch(format!(
                "P must be square, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        if linalg::symmetry_defect(&p) > 1e-10 {
            return Err(GeometryError::InvalidEnvelope(format!(
                "P is asymmetric (defect {:.3e})",
                linalg::symmetry_defect(&p)
            )));
        }
        let p = linalg::symmetrize(&p);
        let min_eig = linalg::min_eigenvalue_sym(&p);
        if min_eig <= 0.0 {
            return Err(GeometryError::InvalidEnvelope(format!(
                "P has non-positive eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    /// P⁻¹ via Cholesky, rejecting numerically singular matrices.
    pub fn p_inverse(&self) -> Result<DMatrix<f64>, GeometryError> {
        let cond = linalg::spd_condition(&self.p);
        if !cond.is_finite() || cond > SINGULAR_CONDITION_LIMIT {
            return Err(GeometryError::SingularP(cond));
        }
        linalg::spd_inverse(&self.p).ok_or(GeometryError::SingularP(cond))
    }
}

/// Per-row containment diagnostics. `value_*` are the quadratic forms
/// D·P⁻¹·Dᵀ for the upper and lower row families; the published design this
/// laboratory reproduces marginally violates one row, so the numbers stay
/// visible rather than collapsing to booleans.
#[derive(Debug, Clone)]
pub struct ContainmentReport {
    pub rows: Vec<ContainmentRow>,
    pub contained: bool,
}

#[derive(Debug, Clone)]
pub struct ContainmentRow {
    pub value_hi: f64,
    pub value_lo: f64,
    pub d: f64,
    pub pass: bool,
}

/// Rewrites a safety set in the normalized half-space form.
///
/// Row scaling follows a three-way case split on the shifted offsets
/// v_hi + v and v_lo + v; boundary rows (either shifted offset exactly zero)
/// take the third branch.
pub fn normalize_safety_set(set: &SafetySet) -> Result<NormalizedSafetySet, GeometryError> {
    let h = set.rows();
    let n = set.state_dim();
    let mut d_hi = DMatrix::zeros(h, n);
    let mut d_lo = DMatrix::zeros(h, n);
    let mut d = DVector::zeros(h);
    for i in 0..h {
        let hi = set.v_hi[i] + set.v[i];
        let lo = set.v_lo[i] + set.v[i];
        let (lam_hi, lam_lo, di) = if lo > 0.0 {
            (hi, lo, 1.0)
        } else if hi < 0.0 {
            (lo, hi, 1.0)
        } else {
            (hi, -lo, -1.0)
        };
        if lam_hi == 0.0 || lam_lo == 0.0 {
            return Err(GeometryError::EmptyRow(i));
        }
        for j in 0..n {
            d_hi[(i, j)] = set.d[(i, j)] / lam_hi;
            d_lo[(i, j)] = set.d[(i, j)] / lam_lo;
        }
        d[i] = di;
    }
    Ok(NormalizedSafetySet { d_hi, d_lo, d })
}

/// Support function of the envelope: max of direction·s over sᵀPs ≤ 1,
/// which is sqrt(directionᵀ P⁻¹ direction).
pub fn ellipsoid_support(
    direction: &DVector<f64>,
    envelope: &SafetyEnvelope,
) -> Result<f64, GeometryError> {
    if direction.len() != envelope.dim() {
        return Err(GeometryError::DimensionMismatch(format!(
            "direction has length {} but P is {n}x{n}",
            direction.len(),
            n = envelope.dim()
        )));
    }
    let p_inv = envelope.p_inverse()?;
    Ok(linalg::quad_form(direction, &p_inv).max(0.0).sqrt())
}

/// Checks the envelope against every normalized row: value_hi = D_hi·P⁻¹·D_hiᵀ
/// must stay ≤ 1, and value_lo = D_lo·P⁻¹·D_loᵀ must be ≥ 1 when d = +1 and
/// ≤ 1 when d = −1.
pub fn check_envelope_containment(
    nset: &NormalizedSafetySet,
    envelope: &SafetyEnvelope,
) -> Result<ContainmentReport, GeometryError> {
    if nset.state_dim() != envelope.dim() {
        return Err(GeometryError::DimensionMismatch(format!(
            "set over R^{} but P is {}x{}",
            nset.state_dim(),
            envelope.dim(),
            envelope.dim()
        )));
    }
    let p_inv = envelope.p_inverse()?;
    let mut rows = Vec::with_capacity(nset.rows());
    let mut contained = true;
    for i in 0..nset.rows() {
        let rhi = DVector::from_iterator(nset.state_dim(), nset.d_hi.row(i).iter().cloned());
        let rlo = DVector::from_iterator(nset.state_dim(), nset.d_lo.row(i).iter().cloned());
        let value_hi = linalg::quad_form(&rhi, &p_inv);
        let value_lo = linalg::quad_form(&rlo, &p_inv);
        let lo_ok = if nset.d[i] > 0.0 {
            value_lo >= 1.0 - CONTAINMENT_SLACK
        } else {
            value_lo <= 1.0 + CONTAINMENT_SLACK
        };
        let pass = value_hi <= 1.0 + CONTAINMENT_SLACK && lo_ok;
        contained &= pass;
        rows.push(ContainmentRow {
            value_hi,
            value_lo,
            d: nset.d[i],
            pass,
        });
    }
    Ok(ContainmentReport { rows, contained })
}

/// Evaluates sᵀPs and whether the state lies in the envelope.
pub fn envelope_membership(
    s: &DVector<f64>,
    envelope: &SafetyEnvelope,
) -> Result<(f64, bool), GeometryError> {
    if s.len() != envelope.dim() {
        return Err(GeometryError::DimensionMismatch(format!(
            "state has length {} but P is {}x{}",
            s.len(),
            envelope.dim(),
            envelope.dim()
        )));
    }
    let value = linalg::quad_form(s, envelope.p());
    Ok((value, value <= 1.0))
}

/// Membership in the raw slab description.
pub fn set_membership(s: &DVector<f64>, set: &SafetySet) -> Result<bool, GeometryError> {
    if s.len() != set.state_dim() {
        return Err(GeometryError::DimensionMismatch(format!(
            "state has length {} but D has {} columns",
            s.len(),
            set.state_dim()
        )));
    }
    let y = &set.d * s - &set.v;
    Ok((0..set.rows()).all(|i| set.v_lo[i] <= y[i] && y[i] <= set.v_hi[i]))
}

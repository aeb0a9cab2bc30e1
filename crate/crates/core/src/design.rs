//! Invariant-ellipsoid controller design by analytic centering.
//!
//! The solver maximizes log det(Q) over symmetric Q and a gain factor R,
//! subject to the closed-loop contraction LMI
//!
//!   [ α·Q              Q·Aᵀ + Rᵀ·Bᵀ ]
//!   [ A·Q + B·R        Q            ]  ≻ 0
//!
//! and, per normalized safety-set row, the linear-in-Q containment
//! constraints D̄ᵢ·Q·D̄ᵢᵀ ≤ 1 (with the d-dependent variants for the lower
//! rows). The derived controller is F = R·Q⁻¹ with envelope matrix P = Q⁻¹
//! and closed loop Ā = A + B·F.
//!
//! Problem sizes here are tiny (n ≤ 12), so the solver is a self-contained
//! log-barrier interior-point method with exact gradients and Hessians of
//! the affine log-det barriers, Newton centering, and a geometric barrier
//! schedule.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::NormalizedSafetySet;
use crate::linalg;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("plant matrices must be finite")]
    NonFinitePlant,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("no strictly feasible point found: {0}")]
    Infeasible(String),
    #[error("iteration cap reached with duality-gap proxy {gap:.3e} above tolerance")]
    NotConverged { gap: f64 },
    #[error("lower-row condition with d = +1 requires a constraint that is not convex in Q; unsupported")]
    UnsupportedLowerRow,
    #[error("solution invariant violated: {0}")]
    InvalidSolution(String),
}

/// Known linear model {A, B} of the plant.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl PlantModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self, DesignError> {
        if a.nrows() != a.ncols() {
            return Err(DesignError::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != a.nrows() {
            return Err(DesignError::DimensionMismatch(format!(
                "B has {} rows but A is {n}x{n}",
                b.nrows(),
                n = a.nrows()
            )));
        }
        if !linalg::is_finite_matrix(&a) || !linalg::is_finite_matrix(&b) {
            return Err(DesignError::NonFinitePlant);
        }
        Ok(Self { a, b })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn action_dim(&self) -> usize {
        self.b.ncols()
    }

    /// Discrete cart-pole model as used throughout: dt = 1/30 s.
    pub fn cartpole_reference() -> Self {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0333, 0.0, 0.0, //
                0.0, 1.0, -0.0565, 0.0, //
                0.0, 0.0, 1.0, 0.0333, //
                0.0, 0.0, 0.8980, 1.0,
            ],
        );
        let b = DMatrix::from_row_slice(4, 1, &[0.0, 0.0334, 0.0, -0.0783]);
        Self::new(a, b).expect("reference model is well formed")
    }
}

/// Geometric barrier schedule: the barrier weight starts at `mu0` and is
/// multiplied by `decay` after each centered stage, stopping at `min_mu`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BarrierSchedule {
    pub mu0: f64,
    pub decay: f64,
    pub min_mu: f64,
}

impl Default for BarrierSchedule {
    fn default() -> Self {
        Self {
            mu0: 1.0,
            decay: 0.1,
            min_mu: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DesignConfig {
    pub alpha: f64,
    pub feasibility_tol: f64,
    pub max_iterations: usize,
    pub barrier: BarrierSchedule,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            alpha: 0.98,
            feasibility_tol: 1e-7,
            max_iterations: 500,
            barrier: BarrierSchedule::default(),
        }
    }
}

impl DesignConfig {
    fn validate(&self) -> Result<(), DesignError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(DesignError::InvalidConfig(format!(
                "alpha must be in (0,1), got {}",
                self.alpha
            )));
        }
        if self.feasibility_tol <= 0.0 {
            return Err(DesignError::InvalidConfig("feasibility_tol must be positive".into()));
        }
        if self.barrier.mu0 <= 0.0 || self.barrier.decay <= 0.0 || self.barrier.decay >= 1.0 {
            return Err(DesignError::InvalidConfig(
                "barrier schedule must have mu0 > 0 and decay in (0,1)".into(),
            ));
        }
        Ok(())
    }
}

/// Support-function cap on a scalar control channel: max over the envelope of
/// |row·F·s| ≤ limit, encoded as the convex block [[limit², row·R],[Rᵀ·rowᵀ, Q]] ⪰ 0.
#[derive(Debug, Clone)]
pub struct ControlSupportBound {
    pub row: DVector<f64>,
    pub limit: f64,
}

/// {Q, R, P, F, Ā} produced by the solve.
#[derive(Debug, Clone)]
pub struct DesignSolution {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub a_bar: DMatrix<f64>,
}

impl DesignSolution {
    /// Derives P, F, Ā from (Q, R) and the plant.
    pub fn from_qr(
        plant: &PlantModel,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
    ) -> Result<Self, DesignError> {
        let n = plant.state_dim();
        let m = plant.action_dim();
        if q.nrows() != n || q.ncols() != n || r.nrows() != m || r.ncols() != n {
            return Err(DesignError::DimensionMismatch(format!(
                "expected Q {n}x{n} and R {m}x{n}, got Q {}x{} R {}x{}",
                q.nrows(),
                q.ncols(),
                r.nrows(),
                r.ncols()
            )));
        }
        let q = linalg::symmetrize(&q);
        let p = linalg::spd_inverse(&q)
            .ok_or_else(|| DesignError::InvalidSolution("Q is not positive definite".into()))?;
        let f = &r * &p;
        let a_bar = compute_closed_loop(plant, &f)?;
        let sol = Self { q, r, p, f, a_bar };
        sol.validate(plant)?;
        Ok(sol)
    }

    /// Checks the stored matrices against their defining identities.
    pub fn validate(&self, plant: &PlantModel) -> Result<(), DesignError> {
        let n = self.q.nrows();
        let id = DMatrix::identity(n, n);
        let pq = &self.p * &self.q;
        let rel = (pq - &id).amax() / id.amax().max(1.0);
        if rel > 1e-8 {
            return Err(DesignError::InvalidSolution(format!(
                "P*Q differs from identity by {rel:.3e}"
            )));
        }
        let f_rel = (&self.f - &self.r * &self.p).amax() / self.f.amax().max(1.0);
        if f_rel > 1e-8 {
            return Err(DesignError::InvalidSolution(format!(
                "F differs from R*Q^-1 by {f_rel:.3e}"
            )));
        }
        let ab = compute_closed_loop(plant, &self.f)?;
        if (&ab - &self.a_bar).amax() > 0.0 {
            return Err(DesignError::InvalidSolution(
                "A_bar is not A + B*F of the given plant".into(),
            ));
        }
        Ok(())
    }

    pub fn log_det_q(&self) -> f64 {
        linalg::spd_log_det(&self.q).unwrap_or(f64::NEG_INFINITY)
    }
}

/// Eigenvalue report for the contraction conditions.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    /// Smallest eigenvalue of the 2n×2n block LMI evaluated at (Q, R).
    pub block_min_eig: f64,
    /// Smallest eigenvalue of αP − ĀᵀPĀ (the Schur-reduced condition).
    pub reduced_min_eig: f64,
    pub q_min_eig: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Evaluates both the block-LMI and the reduced contraction condition.
pub fn verify_lmi(
    sol: &DesignSolution,
    plant: &PlantModel,
    alpha: f64,
    tol: f64,
) -> VerificationReport {
    let block = lmi_block(plant, alpha, &sol.q, &sol.r);
    let block_min_eig = linalg::min_eigenvalue_sym(&block);
    let reduced = &sol.p * alpha - sol.a_bar.transpose() * &sol.p * &sol.a_bar;
    let reduced_min_eig = linalg::min_eigenvalue_sym(&reduced);
    let q_min_eig = linalg::min_eigenvalue_sym(&sol.q);
    let pass = block_min_eig > tol && reduced_min_eig > tol && q_min_eig > tol;
    VerificationReport {
        block_min_eig,
        reduced_min_eig,
        q_min_eig,
        tol,
        pass,
    }
}

/// Ā = A + B·F.
pub fn compute_closed_loop(
    plant: &PlantModel,
    f: &DMatrix<f64>,
) -> Result<DMatrix<f64>, DesignError> {
    if f.nrows() != plant.action_dim() || f.ncols() != plant.state_dim() {
        return Err(DesignError::DimensionMismatch(format!(
            "F must be {}x{}, got {}x{}",
            plant.action_dim(),
            plant.state_dim(),
            f.nrows(),
            f.ncols()
        )));
    }
    Ok(&plant.a + &plant.b * f)
}

/// Largest eigenvalue magnitude.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|c| (c.re * c.re + c.im * c.im).sqrt())
        .fold(0.0, f64::max)
}

fn lmi_block(plant: &PlantModel, alpha: f64, q: &DMatrix<f64>, r: &DMatrix<f64>) -> DMatrix<f64> {
    let n = plant.state_dim();
    let mut blk = DMatrix::zeros(2 * n, 2 * n);
    let aq_br = &plant.a * q + &plant.b * r;
    for i in 0..n {
        for j in 0..n {
            blk[(i, j)] = alpha * q[(i, j)];
            blk[(i, n + j)] = aq_br[(j, i)];
            blk[(n + i, j)] = aq_br[(i, j)];
            blk[(n + i, n + j)] = q[(i, j)];
        }
    }
    blk
}

/// Solver diagnostics: log det(Q) at each completed barrier stage (used by
/// the monotonicity check), Newton-step count, and the final gap proxy.
#[derive(Debug, Clone)]
pub struct SolveDiagnostics {
    pub log_det_history: Vec<f64>,
    pub newton_steps: usize,
    pub gap_proxy: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub solution: DesignSolution,
    pub diagnostics: SolveDiagnostics,
}

/// Analytic-centering solve without control bounds (the bare contract).
pub fn solve_design(
    plant: &PlantModel,
    nset: &NormalizedSafetySet,
    cfg: &DesignConfig,
) -> Result<SolveOutput, DesignError> {
    solve_design_bounded(plant, nset, cfg, &[])
}

/// Analytic-centering solve with optional control-channel support bounds.
///
/// The block LMI constraint is enforced with an internal margin that starts
/// at `feasibility_tol` and widens geometrically until the Schur-reduced
/// condition also verifies above the tolerance, so every returned solution
/// passes `verify_lmi` at `feasibility_tol`.
pub fn solve_design_bounded(
    plant: &PlantModel,
    nset: &NormalizedSafetySet,
    cfg: &DesignConfig,
    bounds: &[ControlSupportBound],
) -> Result<SolveOutput, DesignError> {
    let mut shift = cfg.feasibility_tol;
    let mut last_err = None;
    for _ in 0..8 {
        let mut attempt_cfg = cfg.clone();
        attempt_cfg.feasibility_tol = shift;
        match solve_design_at_shift(plant, nset, &attempt_cfg, bounds) {
            Ok(out) => {
                let report = verify_lmi(&out.solution, plant, cfg.alpha, cfg.feasibility_tol);
                if report.pass {
                    return Ok(out);
                }
                // widen the enforced margin in proportion to the shortfall
                let worst = report.reduced_min_eig.min(report.q_min_eig);
                let factor = if worst > 0.0 {
                    (cfg.feasibility_tol / worst * 2.0).max(4.0)
                } else {
                    32.0
                };
                shift *= factor;
                last_err = Some(DesignError::InvalidSolution(format!(
                    "reduced-condition margin {:.3e} below tolerance {:.3e}",
                    report.reduced_min_eig, cfg.feasibility_tol
                )));
                continue;
            }
            Err(e) => {
                last_err = Some(e);
                shift *= 4.0;
            }
        }
    }
    Err(last_err.unwrap_or(DesignError::Infeasible("no attempt ran".into())))
}

fn solve_design_at_shift(
    plant: &PlantModel,
    nset: &NormalizedSafetySet,
    cfg: &DesignConfig,
    bounds: &[ControlSupportBound],
) -> Result<SolveOutput, DesignError> {
    cfg.validate()?;
    let n = plant.state_dim();
    let m = plant.action_dim();
    if nset.state_dim() != n {
        return Err(DesignError::DimensionMismatch(format!(
            "safety set over R^{} but plant has state dimension {n}",
            nset.state_dim()
        )));
    }
    if nset.d.iter().any(|&di| di > 0.0) {
        return Err(DesignError::UnsupportedLowerRow);
    }
    for b in bounds {
        if b.row.len() != m {
            return Err(DesignError::DimensionMismatch(format!(
                "support-bound row has length {} but action dimension is {m}",
                b.row.len()
            )));
        }
        if b.limit <= 0.0 {
            return Err(DesignError::InvalidConfig("support bound limit must be positive".into()));
        }
    }

    let prob = Problem::build(plant, nset, cfg, bounds);
    let mut x = initial_point(plant, nset, cfg, bounds, &prob)?;

    let mut t = 1.0 / cfg.barrier.mu0;
    let nu = prob.barrier_dimension() as f64;
    let gap_tol = 1e-8;
    let mut newton_steps = 0usize;
    let mut history = Vec::new();
    let mut gap = nu / t;
    loop {
        let budget = cfg.max_iterations.saturating_sub(newton_steps);
        if budget == 0 {
            return Err(DesignError::NotConverged { gap });
        }
        newton_steps += prob.center(&mut x, t, budget);
        history.push(prob.log_det_q(&x));
        gap = nu / t;
        if gap <= gap_tol || 1.0 / t <= cfg.barrier.min_mu {
            break;
        }
        if newton_steps >= cfg.max_iterations {
            return Err(DesignError::NotConverged { gap });
        }
        t /= cfg.barrier.decay;
    }

    let (q, r) = prob.unpack(&x);
    let solution = DesignSolution::from_qr(plant, q, r)?;
    Ok(SolveOutput {
        solution,
        diagnostics: SolveDiagnostics {
            log_det_history: history,
            newton_steps,
            gap_proxy: gap,
        },
    })
}

// ---------------------------------------------------------------------------
// barrier problem assembly
// ---------------------------------------------------------------------------

struct Problem {
    n: usize,
    nvars: usize,
    /// Symmetric basis of Q followed by the entry basis of R, mapped through
    /// the LMI block: lmi(x) = Σ xₖ·Gₖ − tol·I.
    lmi_basis: Vec<DMatrix<f64>>,
    lmi_shift: DMatrix<f64>,
    /// Q(x) = Σ xₖ·Sₖ over the first n(n+1)/2 variables.
    q_basis: Vec<DMatrix<f64>>,
    /// Linear containment rows: coefficient vectors a with a·x ≤ 1.
    lin_rows: Vec<DVector<f64>>,
    /// Support-bound blocks: bnd_j(x) = Cⱼ + Σ xₖ·Hⱼₖ.
    bound_const: Vec<DMatrix<f64>>,
    bound_basis: Vec<Vec<DMatrix<f64>>>,
}

impl Problem {
    fn build(
        plant: &PlantModel,
        nset: &NormalizedSafetySet,
        cfg: &DesignConfig,
        bounds: &[ControlSupportBound],
    ) -> Self {
        let n = plant.state_dim();
        let m = plant.action_dim();
        let nq = n * (n + 1) / 2;
        let nvars = nq + m * n;
        let alpha = cfg.alpha;

        let mut q_basis = Vec::with_capacity(nq);
        for i in 0..n {
            for j in i..n {
                let mut s = DMatrix::zeros(n, n);
                s[(i, j)] = 1.0;
                s[(j, i)] = 1.0;
                q_basis.push(s);
            }
        }
        let mut r_basis = Vec::with_capacity(m * n);
        for p in 0..m {
            for q in 0..n {
                let mut tmat = DMatrix::zeros(m, n);
                tmat[(p, q)] = 1.0;
                r_basis.push(tmat);
            }
        }

        let mut lmi_basis = Vec::with_capacity(nvars);
        for s in &q_basis {
            let mut g = DMatrix::zeros(2 * n, 2 * n);
            let asmat = &plant.a * s;
            for i in 0..n {
                for j in 0..n {
                    g[(i, j)] = alpha * s[(i, j)];
                    g[(i, n + j)] = asmat[(j, i)];
                    g[(n + i, j)] = asmat[(i, j)];
                    g[(n + i, n + j)] = s[(i, j)];
                }
            }
            lmi_basis.push(g);
        }
        for tmat in &r_basis {
            let mut g = DMatrix::zeros(2 * n, 2 * n);
            let bt = &plant.b * tmat;
            for i in 0..n {
                for j in 0..n {
                    g[(i, n + j)] = bt[(j, i)];
                    g[(n + i, j)] = bt[(i, j)];
                }
            }
            lmi_basis.push(g);
        }
        let lmi_shift = DMatrix::identity(2 * n, 2 * n) * (-cfg.feasibility_tol);

        let mut lin_rows = Vec::new();
        for i in 0..nset.rows() {
            for mat in [&nset.d_hi, &nset.d_lo] {
                let row = DVector::from_iterator(n, mat.row(i).iter().cloned());
                let mut coeffs = DVector::zeros(nvars);
                for (k, s) in q_basis.iter().enumerate() {
                    coeffs[k] = linalg::quad_form(&row, s);
                }
                lin_rows.push(coeffs);
            }
        }

        let mut bound_const = Vec::new();
        let mut bound_basis = Vec::new();
        for b in bounds {
            let mut c0 = DMatrix::zeros(n + 1, n + 1);
            c0[(0, 0)] = b.limit * b.limit;
            let mut basis_k = Vec::with_capacity(nvars);
            for s in &q_basis {
                let mut h = DMatrix::zeros(n + 1, n + 1);
                for i in 0..n {
                    for j in 0..n {
                        h[(1 + i, 1 + j)] = s[(i, j)];
                    }
                }
                basis_k.push(h);
            }
            for tmat in &r_basis {
                let mut h = DMatrix::zeros(n + 1, n + 1);
                let ur = b.row.transpose() * tmat;
                for j in 0..n {
                    h[(0, 1 + j)] = ur[(0, j)];
                    h[(1 + j, 0)] = ur[(0, j)];
                }
                basis_k.push(h);
            }
            bound_const.push(c0);
            bound_basis.push(basis_k);
        }

        Self {
            n,
            nvars,
            lmi_basis,
            lmi_shift,
            q_basis,
            lin_rows,
            bound_const,
            bound_basis,
        }
    }

    fn barrier_dimension(&self) -> usize {
        2 * self.n + self.lin_rows.len() + self.bound_const.len() * (self.n + 1)
    }

    fn q_of(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.n, self.n);
        for (k, s) in self.q_basis.iter().enumerate() {
            q += s * x[k];
        }
        q
    }

    fn unpack(&self, x: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let q = self.q_of(x);
        let nq = self.q_basis.len();
        let m = (self.nvars - nq) / self.n;
        let mut r = DMatrix::zeros(m, self.n);
        let mut k = nq;
        for p in 0..m {
            for c in 0..self.n {
                r[(p, c)] = x[k];
                k += 1;
            }
        }
        (q, r)
    }

    fn pack(&self, q: &DMatrix<f64>, r: &DMatrix<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.nvars);
        let mut k = 0;
        for i in 0..self.n {
            for j in i..self.n {
                x[k] = q[(i, j)];
                k += 1;
            }
        }
        for p in 0..r.nrows() {
            for c in 0..self.n {
                x[k] = r[(p, c)];
                k += 1;
            }
        }
        x
    }

    fn lmi_of(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = self.lmi_shift.clone();
        for (k, g) in self.lmi_basis.iter().enumerate() {
            m += g * x[k];
        }
        m
    }

    fn bound_of(&self, j: usize, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = self.bound_const[j].clone();
        for (k, h) in self.bound_basis[j].iter().enumerate() {
            m += h * x[k];
        }
        m
    }

    fn log_det_q(&self, x: &DVector<f64>) -> f64 {
        linalg::spd_log_det(&self.q_of(x)).unwrap_or(f64::NEG_INFINITY)
    }

    /// Strict feasibility check; returns the barrier value at x when feasible.
    fn barrier_value(&self, x: &DVector<f64>, t: f64) -> Option<f64> {
        let q = self.q_of(x);
        let ld_q = linalg::spd_log_det(&q)?;
        let ld_lmi = linalg::spd_log_det(&self.lmi_of(x))?;
        let mut val = -t * ld_q - ld_lmi;
        for j in 0..self.bound_const.len() {
            val -= linalg::spd_log_det(&self.bound_of(j, x))?;
        }
        for a in &self.lin_rows {
            let slack = 1.0 - a.dot(x);
            if slack <= 0.0 {
                return None;
            }
            val -= slack.ln();
        }
        Some(val)
    }

    /// Gradient and Hessian of the barrier at a strictly feasible x.
    fn derivatives(&self, x: &DVector<f64>, t: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let mut grad = DVector::zeros(self.nvars);
        let mut hess = DMatrix::zeros(self.nvars, self.nvars);

        let add_logdet_term = |value: &DMatrix<f64>,
                                   basis: &dyn Fn(usize) -> DMatrix<f64>,
                                   weight: f64,
                                   grad: &mut DVector<f64>,
                                   hess: &mut DMatrix<f64>|
         -> bool {
            let inv = match linalg::spd_inverse(value) {
                Some(i) => i,
                None => return false,
            };
            let w: Vec<DMatrix<f64>> = (0..self.nvars).map(|k| &inv * basis(k)).collect();
            for k in 0..self.nvars {
                grad[k] -= weight * w[k].trace();
                for l in k..self.nvars {
                    let mut tr = 0.0;
                    for i in 0..w[k].nrows() {
                        for j in 0..w[k].ncols() {
                            tr += w[k][(i, j)] * w[l][(j, i)];
                        }
                    }
                    hess[(k, l)] += weight * tr;
                    if l != k {
                        hess[(l, k)] += weight * tr;
                    }
                }
            }
            true
        };

        let q = self.q_of(x);
        let nq = self.q_basis.len();
        let q_basis_fn = |k: usize| {
            if k < nq {
                self.q_basis[k].clone()
            } else {
                DMatrix::zeros(self.n, self.n)
            }
        };
        if !add_logdet_term(&q, &q_basis_fn, t, &mut grad, &mut hess) {
            return None;
        }
        let lmi = self.lmi_of(x);
        let lmi_basis_fn = |k: usize| self.lmi_basis[k].clone();
        if !add_logdet_term(&lmi, &lmi_basis_fn, 1.0, &mut grad, &mut hess) {
            return None;
        }
        for j in 0..self.bound_const.len() {
            let b = self.bound_of(j, x);
            let basis_fn = |k: usize| self.bound_basis[j][k].clone();
            if !add_logdet_term(&b, &basis_fn, 1.0, &mut grad, &mut hess) {
                return None;
            }
        }
        for a in &self.lin_rows {
            let slack = 1.0 - a.dot(x);
            if slack <= 0.0 {
                return None;
            }
            for k in 0..self.nvars {
                grad[k] += a[k] / slack;
                for l in k..self.nvars {
                    let v = a[k] * a[l] / (slack * slack);
                    hess[(k, l)] += v;
                    if l != k {
                        hess[(l, k)] += v;
                    }
                }
            }
        }
        Some((grad, hess))
    }

    /// Newton centering for fixed t. Returns the number of Newton steps taken.
    fn center(&self, x: &mut DVector<f64>, t: f64, step_budget: usize) -> usize {
        let mut steps = 0;
        while steps < step_budget.max(1) {
            let (grad, hess) = match self.derivatives(x, t) {
                Some(gh) => gh,
                None => break,
            };
            // Levenberg damping keeps the step well posed near the boundary.
            let mut delta = None;
            let mut damping = 0.0;
            for _ in 0..8 {
                let mut h = hess.clone();
                if damping > 0.0 {
                    for i in 0..self.nvars {
                        h[(i, i)] += damping;
                    }
                }
                if let Some(chol) = h.cholesky() {
                    delta = Some(chol.solve(&(-&grad)));
                    break;
                }
                damping = if damping == 0.0 { 1e-10 } else { damping * 100.0 };
            }
            let delta = match delta {
                Some(d) => d,
                None => break,
            };
            let decrement = -grad.dot(&delta);
            if decrement <= 0.0 {
                break;
            }
            steps += 1;
            let f0 = match self.barrier_value(x, t) {
                Some(v) => v,
                None => break,
            };
            let mut step = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand = &*x + &delta * step;
                if let Some(fv) = self.barrier_value(&cand, t) {
                    if fv <= f0 - 1e-4 * step * decrement {
                        *x = cand;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
            if decrement * 0.5 < 1e-12 * (1.0 + f0.abs()) {
                break;
            }
        }
        steps
    }
}

// ---------------------------------------------------------------------------
// strictly feasible initialization
// ---------------------------------------------------------------------------

/// Riccati iterations on the α-scaled plant over a range of control weights,
/// keeping the gain with the smallest closed-loop spectral radius. A gain
/// with ρ(A + B·F) < √α exists iff the problem is feasible at this rate.
fn stabilizing_gain(plant: &PlantModel, alpha: f64) -> Result<DMatrix<f64>, DesignError> {
    let n = plant.state_dim();
    let m = plant.action_dim();
    let sqrt_alpha = alpha.sqrt();
    let a_s = &plant.a / sqrt_alpha;
    let b_s = &plant.b / sqrt_alpha;
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for weight in [1.0, 0.1, 0.01, 1e-3, 1e-4] {
        let r_w = DMatrix::identity(m, m) * weight;
        let mut p = DMatrix::identity(n, n);
        let mut diverged = false;
        for _ in 0..20_000 {
            let btp = b_s.transpose() * &p;
            let gram = &r_w + &btp * &b_s;
            let gram_inv = match gram.try_inverse() {
                Some(g) => g,
                None => {
                    diverged = true;
                    break;
                }
            };
            let next = a_s.transpose() * &p * &a_s
                - a_s.transpose() * &p * &b_s * &gram_inv * &btp * &a_s
                + DMatrix::identity(n, n);
            let diff = (&next - &p).amax();
            p = linalg::symmetrize(&next);
            if p.amax() > 1e14 {
                diverged = true;
                break;
            }
            if diff < 1e-12 * p.amax().max(1.0) {
                break;
            }
        }
        if diverged {
            continue;
        }
        let btp = b_s.transpose() * &p;
        let gram = &r_w + &btp * &b_s;
        let gram_inv = match gram.try_inverse() {
            Some(g) => g,
            None => continue,
        };
        let f = -(&gram_inv * &btp * &a_s);
        let rho = spectral_radius(&(&plant.a + &plant.b * &f));
        if best.as_ref().map_or(true, |(r, _)| rho < *r) {
            best = Some((rho, f));
        }
    }
    match best {
        Some((rho, f)) if rho < sqrt_alpha * (1.0 - 1e-9) => Ok(f),
        Some((rho, _)) => Err(DesignError::Infeasible(format!(
            "no gain achieves the contraction rate: best closed-loop spectral radius {rho:.6} vs required < {sqrt_alpha:.6}"
        ))),
        None => Err(DesignError::Infeasible(
            "Riccati iteration diverged; plant is not stabilizable at the required rate".into(),
        )),
    }
}

/// Solves α′·X − Āᵀ·X·Ā = I by fixed-point iteration with α′ pushed toward
/// the minimum contraction rate ρ(Ā)², which fattens the margin of
/// α·X − Āᵀ·X·Ā at the original α.
fn contraction_certificate(a_bar: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>, DesignError> {
    let n = a_bar.nrows();
    let rho2 = spectral_radius(a_bar).powi(2);
    let alpha_tight = (rho2 * 1.05).clamp(alpha * 0.05, alpha);
    let mut x = DMatrix::identity(n, n);
    for _ in 0..100_000 {
        let next = (a_bar.transpose() * &x * a_bar + DMatrix::identity(n, n)) / alpha_tight;
        let diff = (&next - &x).amax();
        x = linalg::symmetrize(&next);
        if !linalg::is_finite_matrix(&x) || x.amax() > 1e14 {
            return Err(DesignError::Infeasible("contraction certificate diverged".into()));
        }
        if diff < 1e-13 * x.amax().max(1.0) {
            break;
        }
    }
    Ok(x)
}

fn initial_point(
    plant: &PlantModel,
    nset: &NormalizedSafetySet,
    cfg: &DesignConfig,
    bounds: &[ControlSupportBound],
    prob: &Problem,
) -> Result<DVector<f64>, DesignError> {
    let f = stabilizing_gain(plant, cfg.alpha)?;
    let a_bar = compute_closed_loop(plant, &f)?;
    let p_hat = contraction_certificate(&a_bar, cfg.alpha)?;
    let q_dir = linalg::spd_inverse(&p_hat)
        .ok_or_else(|| DesignError::Infeasible("certificate inverse failed".into()))?;

    // The LMI is homogeneous in (Q, R), so scaling the certificate direction
    // trades containment slack against LMI margin. Pick the scale inside the
    // explicit feasible window.
    let r_dir = &f * &q_dir;
    let lmi_unit = lmi_block(plant, cfg.alpha, &q_dir, &r_dir);
    let margin_per_tau = linalg::min_eigenvalue_sym(&lmi_unit);
    if margin_per_tau <= 0.0 {
        return Err(DesignError::Infeasible(
            "stabilizing certificate does not satisfy the contraction condition".into(),
        ));
    }
    let mut g_max = 0.0f64;
    for i in 0..nset.rows() {
        for mat in [&nset.d_hi, &nset.d_lo] {
            let row = DVector::from_iterator(plant.state_dim(), mat.row(i).iter().cloned());
            g_max = g_max.max(linalg::quad_form(&row, &q_dir));
        }
    }
    let mut tau_hi = if g_max > 0.0 { 0.9 / g_max } else { 1e6 };
    for b in bounds {
        let fq = b.row.transpose() * &f * &q_dir * f.transpose() * &b.row;
        let v = fq[(0, 0)];
        if v > 0.0 {
            tau_hi = tau_hi.min(0.9 * b.limit * b.limit / v);
        }
    }
    let tau_lo = 1.05 * cfg.feasibility_tol / margin_per_tau;
    if tau_lo > tau_hi {
        return Err(DesignError::Infeasible(format!(
            "feasibility_tol {:.3e} exceeds the reachable margin {:.3e} of the stabilizing certificate",
            cfg.feasibility_tol,
            tau_hi * margin_per_tau
        )));
    }
    let mut tau = (tau_lo * tau_hi).sqrt().min(0.25 / g_max.max(1e-300)).max(tau_lo);
    for _ in 0..40 {
        let q0 = &q_dir * tau;
        let r0 = &f * &q0;
        let x0 = prob.pack(&q0, &r0);
        if prob.barrier_value(&x0, 1.0).is_some() {
            return Ok(x0);
        }
        tau = (tau * 1.7).min(tau_hi);
    }
    Err(DesignError::Infeasible(
        "could not scale the stabilizing certificate into the strictly feasible region; feasibility_tol may be too large".into(),
    ))
}

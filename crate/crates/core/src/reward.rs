//! Safety-embedded reward, the Lyapunov-difference baseline reward, and the
//! per-transition runtime certificate monitor.
//!
//! The safety sub-reward is r = sᵀ(ĀᵀPĀ)s − s₊ᵀPs₊. On the mismatch-free
//! linear closed loop s₊ = Ā·s it vanishes identically; any shortfall below
//! zero measures how much the real transition expanded the envelope function
//! relative to the designed contraction.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid context: {0}")]
    InvalidContext(String),
}

/// Matrices and the contraction rate entering the reward and the monitor.
#[derive(Debug, Clone)]
pub struct RewardContext {
    pub p: DMatrix<f64>,
    pub a_bar: DMatrix<f64>,
    pub alpha: f64,
    /// Cached ĀᵀPĀ.
    atpa: DMatrix<f64>,
}

impl RewardContext {
    pub fn new(p: DMatrix<f64>, a_bar: DMatrix<f64>, alpha: f64) -> Result<Self, RewardError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(RewardError::InvalidContext(format!(
                "alpha must be in (0,1), got {alpha}"
            )));
        }
        if p.nrows() != p.ncols() || a_bar.nrows() != p.nrows() || a_bar.ncols() != p.ncols() {
            return Err(RewardError::DimensionMismatch(format!(
                "P is {}x{} and A_bar is {}x{}",
                p.nrows(),
                p.ncols(),
                a_bar.nrows(),
                a_bar.ncols()
            )));
        }
        if linalg::min_eigenvalue_sym(&p) <= 0.0 {
            return Err(RewardError::InvalidContext("P must be positive definite".into()));
        }
        let atpa = a_bar.transpose() * &p * &a_bar;
        Ok(Self { p, a_bar, alpha, atpa })
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    fn check_dims(&self, s: &DVector<f64>, s_next: &DVector<f64>) -> Result<(), RewardError> {
        if s.len() != self.dim() || s_next.len() != self.dim() {
            return Err(RewardError::DimensionMismatch(format!(
                "states have lengths {}/{} but P is {n}x{n}",
                s.len(),
                s_next.len(),
                n = self.dim()
            )));
        }
        Ok(())
    }

    /// V(s) = sᵀPs.
    pub fn lyapunov(&self, s: &DVector<f64>) -> f64 {
        linalg::quad_form(s, &self.p)
    }
}

/// r = sᵀ(ĀᵀPĀ)s − s₊ᵀPs₊.
pub fn safety_subreward(
    s: &DVector<f64>,
    s_next: &DVector<f64>,
    ctx: &RewardContext,
) -> Result<f64, RewardError> {
    ctx.check_dims(s, s_next)?;
    Ok(linalg::quad_form(s, &ctx.atpa) - linalg::quad_form(s_next, &ctx.p))
}

/// w = −‖a_drl‖².
pub fn performance_subreward(a_drl: &DVector<f64>) -> f64 {
    -a_drl.norm_squared()
}

pub fn total_reward(
    s: &DVector<f64>,
    s_next: &DVector<f64>,
    a_drl: &DVector<f64>,
    ctx: &RewardContext,
) -> Result<f64, RewardError> {
    Ok(safety_subreward(s, s_next, ctx)? + performance_subreward(a_drl))
}

/// Baseline reward sᵀPs − s₊ᵀPs₊ + w, used only by the baseline trainer.
pub fn clf_reward(
    s: &DVector<f64>,
    s_next: &DVector<f64>,
    a_drl: &DVector<f64>,
    p: &DMatrix<f64>,
) -> Result<f64, RewardError> {
    if s.len() != p.nrows() || s_next.len() != p.nrows() {
        return Err(RewardError::DimensionMismatch(format!(
            "states have lengths {}/{} but P is {n}x{n}",
            s.len(),
            s_next.len(),
            n = p.nrows()
        )));
    }
    Ok(linalg::quad_form(s, p) - linalg::quad_form(s_next, p) + performance_subreward(a_drl))
}

/// Runtime certificate classes, strongest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    /// r > (α−1)·sᵀPs: envelope function strictly decreasing.
    SafetyAndStability,
    /// r ≥ α−1: envelope invariance holds from inside the envelope.
    SafetyInvariant,
    NoCertificate,
}

impl Certificate {
    pub fn at_least_invariant(self) -> bool {
        matches!(self, Certificate::SafetyAndStability | Certificate::SafetyInvariant)
    }

    pub fn short_code(self) -> &'static str {
        match self {
            Certificate::SafetyAndStability => "SS",
            Certificate::SafetyInvariant => "SI",
            Certificate::NoCertificate => "NC",
        }
    }
}

/// Classifies one transition against both runtime conditions.
pub fn theorem1_monitor(
    s: &DVector<f64>,
    s_next: &DVector<f64>,
    ctx: &RewardContext,
) -> Result<Certificate, RewardError> {
    let r = safety_subreward(s, s_next, ctx)?;
    let v = ctx.lyapunov(s);
    if r > (ctx.alpha - 1.0) * v {
        Ok(Certificate::SafetyAndStability)
    } else if r >= ctx.alpha - 1.0 {
        Ok(Certificate::SafetyInvariant)
    } else {
        Ok(Certificate::NoCertificate)
    }
}

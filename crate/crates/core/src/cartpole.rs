//! Nonlinear cart-pole simulator with viscous friction and a continuous
//! force input.
//!
//! The dynamics follow the pole-on-cart equations with the pole modeled as a
//! uniform rod of half-length l (pivot inertia factor 4/3), integrated by
//! semi-implicit Euler at dt. Friction is viscous at the cart and at the
//! pivot; both coefficients live in the committed parameter set. The default
//! physical parameters are fitted so that the friction-free linearization at
//! the upright equilibrium, discretized explicitly at dt = 1/30 s, reproduces
//! the committed reference model entrywise (see `fit_params`).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::PlantModel;
use crate::geometry::SafetyEnvelope;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("state diverged to non-finite values")]
    NonFinite,
    #[error("rejection sampling exhausted {0} attempts without hitting the region")]
    RegionEmpty(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Where an external disturbance enters the mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceEntry {
    #[default]
    Force,
    PivotTorque,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartPoleParams {
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub pole_half_length: f64,
    pub gravity: f64,
    pub cart_friction: f64,
    pub pivot_friction: f64,
    pub dt: f64,
    pub force_limit: f64,
    pub disturbance_entry: DisturbanceEntry,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        // Masses and length fitted against the committed discrete model;
        // friction chosen so the gain-only loop fails while remaining
        // recoverable with bounded residual force.
        Self {
            cart_mass: 0.940205,
            pole_mass: 0.230075,
            pole_half_length: 0.320014,
            gravity: 9.8,
            cart_friction: 5.5,
            pivot_friction: 0.002,
            dt: 1.0 / 30.0,
            force_limit: 16.0,
            disturbance_entry: DisturbanceEntry::Force,
        }
    }
}

impl CartPoleParams {
    pub fn frictionless(mut self) -> Self {
        self.cart_friction = 0.0;
        self.pivot_friction = 0.0;
        self
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        for (name, v) in [
            ("cart_mass", self.cart_mass),
            ("pole_mass", self.pole_mass),
            ("pole_half_length", self.pole_half_length),
            ("gravity", self.gravity),
            ("dt", self.dt),
            ("force_limit", self.force_limit),
        ] {
            if !(v > 0.0) {
                return Err(EnvError::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if self.cart_friction < 0.0 || self.pivot_friction < 0.0 {
            return Err(EnvError::InvalidParams("friction must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.cart_mass + self.pole_mass
    }

    pub fn pole_full_length(&self) -> f64 {
        2.0 * self.pole_half_length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartPoleState {
    pub x: f64,
    pub v: f64,
    pub theta: f64,
    pub omega: f64,
}

impl CartPoleState {
    pub const EQUILIBRIUM: CartPoleState = CartPoleState {
        x: 0.0,
        v: 0.0,
        theta: 0.0,
        omega: 0.0,
    };

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_row_slice(&[self.x, self.v, self.theta, self.omega])
    }

    pub fn from_vector(s: &DVector<f64>) -> Self {
        Self {
            x: s[0],
            v: s[1],
            theta: s[2],
            omega: s[3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite() && self.theta.is_finite() && self.omega.is_finite()
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.v * self.v + self.theta * self.theta + self.omega * self.omega)
            .sqrt()
    }
}

/// One semi-implicit Euler step. The control force is clamped to the actuator
/// limit; the disturbance is environmental and enters unclamped.
pub fn step(
    state: &CartPoleState,
    force: f64,
    disturbance: f64,
    params: &CartPoleParams,
) -> Result<CartPoleState, EnvError> {
    let force = force.clamp(-params.force_limit, params.force_limit);
    let (sin_t, cos_t) = state.theta.sin_cos();
    let m_total = params.total_mass();
    let ml = params.pole_mass * params.pole_half_length;

    let mut applied = force - params.cart_friction * state.v;
    let mut pivot_torque = -params.pivot_friction * state.omega;
    match params.disturbance_entry {
        DisturbanceEntry::Force => applied += disturbance,
        DisturbanceEntry::PivotTorque => pivot_torque += disturbance,
    }

    let temp = (applied + ml * state.omega * state.omega * sin_t) / m_total;
    let denom = params.pole_half_length
        * (4.0 / 3.0 - params.pole_mass * cos_t * cos_t / m_total);
    let theta_acc = (params.gravity * sin_t - cos_t * temp + pivot_torque / ml) / denom;
    let x_acc = temp - ml * theta_acc * cos_t / m_total;

    let v = state.v + params.dt * x_acc;
    let x = state.x + params.dt * v;
    let omega = state.omega + params.dt * theta_acc;
    let theta = state.theta + params.dt * omega;
    let next = CartPoleState { x, v, theta, omega };
    if !next.is_finite() {
        return Err(EnvError::NonFinite);
    }
    Ok(next)
}

/// Observation [x, v, sin θ, cos θ, ω].
pub fn observe(state: &CartPoleState) -> [f64; 5] {
    [
        state.x,
        state.v,
        state.theta.sin(),
        state.theta.cos(),
        state.omega,
    ]
}

pub const OBSERVATION_DIM: usize = 5;

/// Episode termination: |x| ≥ 0.9 or |θ| ≥ 0.8.
pub fn terminated(state: &CartPoleState) -> bool {
    state.x.abs() >= 0.9 || state.theta.abs() >= 0.8
}

/// Initial-state region for episode resets.
#[derive(Debug, Clone)]
pub enum InitRegion {
    /// Uniform over an axis-aligned box.
    Box { lo: [f64; 4], hi: [f64; 4] },
    /// Uniform over the box, rejection-filtered to the envelope sᵀPs ≤ 1.
    Envelope {
        lo: [f64; 4],
        hi: [f64; 4],
        envelope: SafetyEnvelope,
    },
}

const REJECTION_LIMIT: usize = 10_000;

pub fn reset(rng: &mut impl Rng, region: &InitRegion) -> Result<CartPoleState, EnvError> {
    let draw = |rng: &mut dyn rand::RngCore, lo: &[f64; 4], hi: &[f64; 4]| -> CartPoleState {
        let mut s = [0.0; 4];
        for i in 0..4 {
            s[i] = if lo[i] == hi[i] {
                lo[i]
            } else {
                rng.gen_range(lo[i]..hi[i])
            };
        }
        CartPoleState {
            x: s[0],
            v: s[1],
            theta: s[2],
            omega: s[3],
        }
    };
    match region {
        InitRegion::Box { lo, hi } => Ok(draw(rng, lo, hi)),
        InitRegion::Envelope { lo, hi, envelope } => {
            for _ in 0..REJECTION_LIMIT {
                let s = draw(rng, lo, hi);
                let (value, inside) =
                    crate::geometry::envelope_membership(&s.to_vector(), envelope)
                        .map_err(|_| EnvError::InvalidParams("envelope dimension".into()))?;
                let _ = value;
                if inside {
                    return Ok(s);
                }
            }
            Err(EnvError::RegionEmpty(REJECTION_LIMIT))
        }
    }
}

/// Continuous-time linearization coefficients at the upright equilibrium,
/// friction-free: (c_vt, c_vf, c_ot, c_of) with v̇ = c_vt·θ + c_vf·F and
/// ω̇ = c_ot·θ + c_of·F.
fn linearization_coefficients(params: &CartPoleParams) -> (f64, f64, f64, f64) {
    let m_total = params.total_mass();
    let ml = params.pole_mass * params.pole_half_length;
    let k = 1.0 / (params.pole_half_length * (4.0 / 3.0 - params.pole_mass / m_total));
    let c_ot = k * params.gravity;
    let c_of = -k / m_total;
    let c_vt = -ml * k * params.gravity / m_total;
    let c_vf = (1.0 + ml * k / m_total) / m_total;
    (c_vt, c_vf, c_ot, c_of)
}

/// Semi-implicit-Euler discretization of the friction-free linearization,
/// matching the simulator's own update rule (positions advance with the new
/// velocities). Differs from `linearized_model` in O(dt²) entries.
pub fn semi_implicit_linearization(params: &CartPoleParams) -> PlantModel {
    let (c_vt, c_vf, c_ot, c_of) = linearization_coefficients(params);
    let dt = params.dt;
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0,
            dt,
            dt * dt * c_vt,
            0.0,
            0.0,
            1.0,
            dt * c_vt,
            0.0,
            0.0,
            0.0,
            1.0 + dt * dt * c_ot,
            dt,
            0.0,
            0.0,
            dt * c_ot,
            1.0,
        ],
    );
    let b = DMatrix::from_row_slice(
        4,
        1,
        &[dt * dt * c_vf, dt * c_vf, dt * dt * c_of, dt * c_of],
    );
    PlantModel::new(a, b).expect("linearization is well formed")
}

/// Friction-free linearization at the upright equilibrium, discretized by the
/// explicit Euler rule: A = I + dt·A_c, B = dt·B_c.
pub fn linearized_model(params: &CartPoleParams) -> PlantModel {
    let (c_vt, c_vf, c_ot, c_of) = linearization_coefficients(params);
    let dt = params.dt;
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0,
            dt,
            0.0,
            0.0,
            0.0,
            1.0,
            dt * c_vt,
            0.0,
            0.0,
            0.0,
            1.0,
            dt,
            0.0,
            0.0,
            dt * c_ot,
            1.0,
        ],
    );
    let b = DMatrix::from_row_slice(4, 1, &[0.0, dt * c_vf, 0.0, dt * c_of]);
    PlantModel::new(a, b).expect("linearization is well formed")
}

/// Total mechanical energy relative to the pivot plane (uniform-rod pole).
pub fn mechanical_energy(state: &CartPoleState, params: &CartPoleParams) -> f64 {
    let ml = params.pole_mass * params.pole_half_length;
    let kinetic_cart = 0.5 * params.cart_mass * state.v * state.v;
    let kinetic_pole = 0.5 * params.pole_mass * state.v * state.v
        + ml * state.v * state.omega * state.theta.cos()
        + 0.5 * (4.0 / 3.0) * ml * params.pole_half_length * state.omega * state.omega;
    let potential = params.pole_mass * params.gravity * params.pole_half_length * state.theta.cos();
    kinetic_cart + kinetic_pole + potential
}

/// Recovers physical parameters from a committed discrete model: given the
/// nonzero entries of A and B (explicit Euler at dt), inverts the
/// linearization formulas for the total mass, pole mass and half-length at
/// fixed gravity.
pub fn fit_params(a: &DMatrix<f64>, b: &DMatrix<f64>, dt: f64, gravity: f64) -> CartPoleParams {
    let c_ot = a[(3, 2)] / dt;
    let c_of = b[(3, 0)] / dt;
    let c_vt = a[(1, 2)] / dt;
    let k = c_ot / gravity;
    let m_total = -k / c_of;
    let ml = -c_vt * m_total / c_ot;
    // k = 1/(l(4/3 - m_p/M)) and m_p = ml/l:
    // l*4/3 - ml/M = 1/k  =>  l = (1/k + ml/M) * 3/4
    let l = (1.0 / k + ml / m_total) * 3.0 / 4.0;
    let m_p = ml / l;
    CartPoleParams {
        cart_mass: m_total - m_p,
        pole_mass: m_p,
        pole_half_length: l,
        gravity,
        dt,
        ..CartPoleParams::default()
    }
}

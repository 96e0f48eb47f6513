//! Closed-form predictions: retarded source-field activation and the
//! leading-order excitation-probability terms.
//!
//! The cross term carries one power of each dipole and switches on only at
//! the light cone,
//!
//! ```text
//! p_cross(t) = (2π d_A d_B N Ω / c) · (t − r/c) · θ(t − r/c)
//! p_self(t)  = (2π d_i²    N Ω / c) · t
//! ```
//!
//! with θ(0) = 0. The homogeneous-field contribution has no closed form here
//! and is expected to be removed by differencing paired runs; both it and
//! the self term are independent of the other atom.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Atom;
use crate::observables::InitialState;
use crate::scalar::Real;

/// Parameters the leading-order formulas depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams<T> {
    pub d_a: T,
    pub d_b: T,
    pub normalization: T,
    pub omega: T,
    pub speed: T,
    /// Atom separation r = x_B − x_A; only |r| enters retardation.
    pub separation: T,
}

impl<T: Real> TheoryParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.normalization > T::zero() && self.omega > T::zero() && self.speed > T::zero()) {
            return Err(Error::invalid("normalization, omega, and speed must be > 0"));
        }
        Ok(())
    }

    /// Light-cone time |r|/c.
    pub fn cone_time(&self) -> T {
        self.separation.abs() / self.speed
    }
}

/// Whether a source atom's field has reached the evaluation atom, and the
/// retarded argument its history is sampled at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetardedActivation<T> {
    pub active: bool,
    pub retarded_time: Option<T>,
}

/// Activation of the source-atom field at the evaluation atom.
///
/// Cross terms switch on strictly after the light-cone time (θ(0) = 0);
/// the self term is active for any t ≥ 0 with no retardation.
pub fn retarded_field_coefficient<T: Real>(
    source_atom: Atom,
    eval_atom: Atom,
    params: &TheoryParams<T>,
    t: T,
) -> Result<RetardedActivation<T>> {
    params.validate()?;
    if !(t >= T::zero()) {
        return Err(Error::invalid(format!("time must be >= 0, got {t}")));
    }
    if source_atom == eval_atom {
        return Ok(RetardedActivation { active: true, retarded_time: Some(t) });
    }
    let cone = params.cone_time();
    if t > cone {
        Ok(RetardedActivation { active: true, retarded_time: Some(t - cone) })
    } else {
        Ok(RetardedActivation { active: false, retarded_time: None })
    }
}

/// Leading-order contributions to atom A's excitation probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadingOrder<T> {
    pub p_e_a_a: T,
    pub p_e_a_b: T,
}

/// Evaluate the leading-order self and cross terms at time t.
pub fn leading_order_probabilities<T: Real>(
    params: &TheoryParams<T>,
    t: T,
) -> Result<LeadingOrder<T>> {
    params.validate()?;
    if !(t >= T::zero()) {
        return Err(Error::invalid(format!("time must be >= 0, got {t}")));
    }
    let two_pi = T::two_pi();
    let common = two_pi * params.normalization * params.omega / params.speed;
    let cone = params.cone_time();
    let p_e_a_b = if t > cone {
        common * params.d_a * params.d_b * (t - cone)
    } else {
        T::zero()
    };
    let p_e_a_a = common * params.d_a * params.d_a * t;
    Ok(LeadingOrder { p_e_a_a, p_e_a_b })
}

/// ⟨σ_A^y σ_B^y⟩ on the named initial state; the cross term is proportional
/// to it, so it survives only for the superposition.
pub fn cross_term_root_state_factor<T: Real>(initial_state: InitialState) -> T {
    match initial_state {
        InitialState::Switch => T::one(),
        InitialState::ExcitedA | InitialState::ExcitedB => T::zero(),
    }
}

/// Prediction curves for one atom, bundling the formulas with the initial
/// state's correlator factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbativePrediction<T> {
    pub params: TheoryParams<T>,
    pub initial_state: InitialState,
    pub target: Atom,
}

impl<T: Real> PerturbativePrediction<T> {
    pub fn new(params: TheoryParams<T>, initial_state: InitialState, target: Atom) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, initial_state, target })
    }

    fn swapped(&self) -> TheoryParams<T> {
        match self.target {
            Atom::A => self.params,
            Atom::B => TheoryParams { d_a: self.params.d_b, d_b: self.params.d_a, ..self.params },
        }
    }

    /// Self term p_eAA (or p_eBB when targeting atom B).
    pub fn p_self(&self, t: T) -> Result<T> {
        Ok(leading_order_probabilities(&self.swapped(), t)?.p_e_a_a)
    }

    /// Cross term p_eAB (or p_eBA), including the initial-state factor.
    pub fn p_cross(&self, t: T) -> Result<T> {
        let raw = leading_order_probabilities(&self.swapped(), t)?.p_e_a_b;
        Ok(raw * cross_term_root_state_factor::<T>(self.initial_state))
    }

    /// Initial probability of the target atom for the configured state.
    pub fn baseline(&self) -> T {
        match (self.initial_state, self.target) {
            (InitialState::Switch, _) => T::of(0.5),
            (InitialState::ExcitedA, Atom::A) | (InitialState::ExcitedB, Atom::B) => T::one(),
            _ => T::zero(),
        }
    }

    /// baseline + self + cross; the homogeneous-field term is not modeled
    /// and cancels under paired-run differencing.
    pub fn p_total_leading(&self, t: T) -> Result<T> {
        Ok(self.baseline() + self.p_self(t)? + self.p_cross(t)?)
    }
}

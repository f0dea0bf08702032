//! Public-goods feedback on the moral attitude of selfish agents.
//!
//! Provision of public goods is proportional to the compliant fraction
//! `p_cp`. After every step each selfish agent compares the change in
//! provision with its own change in behavior and shifts its field by its
//! adaptation step according to the rule table in [`field_delta`].

use crate::dynamics::check_len;
use crate::error::Result;
use crate::lattice::{Spin, SpinGrid};
use crate::population::{AgentType, Society};

/// Fraction of compliant sites over the whole society.
pub fn compliance_fraction(grid: &SpinGrid) -> f64 {
    if grid.is_empty() {
        return 0.0;
    }
    grid.count(Spin::Compliant) as f64 / grid.len() as f64
}

/// Change in provision between two consecutive observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProvisionSignal {
    pub p_cp_prev: f64,
    pub p_cp_now: f64,
    pub delta: f64,
}

impl ProvisionSignal {
    pub fn new(p_cp_prev: f64, p_cp_now: f64) -> Self {
        ProvisionSignal {
            p_cp_prev,
            p_cp_now,
            delta: p_cp_now - p_cp_prev,
        }
    }

    pub fn perceived(&self, threshold: f64) -> bool {
        self.delta.abs() > threshold
    }
}

/// `S(t_n) - S(t_{n-1})` for one agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BehaviorDelta {
    /// -2: compliant → evading
    BecameEvading,
    /// 0
    Unchanged,
    /// +2: evading → compliant
    BecameCompliant,
}

impl BehaviorDelta {
    pub fn between(prev: Spin, now: Spin) -> Self {
        match (prev, now) {
            (Spin::Compliant, Spin::Evading) => BehaviorDelta::BecameEvading,
            (Spin::Evading, Spin::Compliant) => BehaviorDelta::BecameCompliant,
            _ => BehaviorDelta::Unchanged,
        }
    }

    pub fn value(self) -> i32 {
        match self {
            BehaviorDelta::BecameEvading => -2,
            BehaviorDelta::Unchanged => 0,
            BehaviorDelta::BecameCompliant => 2,
        }
    }
}

/// Field change of one selfish agent.
///
/// | provision change       | behavior change | field change |
/// |------------------------|-----------------|--------------|
/// | `|Δp| <= threshold`    | any             | 0            |
/// | `|Δp| > threshold`     | 0               | 0            |
/// | `Δp > threshold`       | +2              | +step        |
/// | `Δp < -threshold`      | +2              | -step        |
/// | `Δp > threshold`       | -2              | -step        |
/// | `Δp < -threshold`      | -2              | +step        |
///
/// `|Δp|` exactly equal to the threshold counts as not perceived.
pub fn field_delta(delta_p_cp: f64, threshold: f64, behavior: BehaviorDelta, step: f64) -> f64 {
    if delta_p_cp.abs() <= threshold {
        return 0.0;
    }
    let rising = delta_p_cp > 0.0;
    match behavior {
        BehaviorDelta::Unchanged => 0.0,
        BehaviorDelta::BecameCompliant if rising => step,
        BehaviorDelta::BecameCompliant => -step,
        BehaviorDelta::BecameEvading if rising => -step,
        BehaviorDelta::BecameEvading => step,
    }
}

/// Applies [`field_delta`] to every selfish agent. Returns the number of
/// agents whose field received a non-zero change.
pub fn apply_feedback(
    society: &mut Society,
    spins_prev: &SpinGrid,
    spins_now: &SpinGrid,
    signal: &ProvisionSignal,
    threshold: f64,
) -> Result<usize> {
    check_len(society.len(), spins_prev.len())?;
    check_len(society.len(), spins_now.len())?;
    if !signal.perceived(threshold) {
        return Ok(0);
    }
    let mut updated = 0;
    let sites = spins_prev.spins().iter().zip(spins_now.spins());
    for (agent, (&prev, &now)) in society.agents_mut().iter_mut().zip(sites) {
        if agent.kind != AgentType::Selfish {
            continue;
        }
        let change = field_delta(
            signal.delta,
            threshold,
            BehaviorDelta::between(prev, now),
            agent.adaptation_step,
        );
        if change != 0.0 {
            agent.field += change;
            updated += 1;
        }
    }
    Ok(updated)
}

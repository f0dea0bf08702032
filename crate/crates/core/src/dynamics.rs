//! Heat-bath dynamics for the Hamiltonian
//! `H = -J Σ_<ij> S_i S_j - Σ_i B_i S_i` with site-dependent temperatures.

use rand::Rng;

use crate::enforcement::PenaltyLedger;
use crate::error::{Error, Result};
use crate::lattice::{Spin, SpinGrid};
use crate::population::Society;

/// Exchange coupling; all energies are measured in units of it.
pub const COUPLING: f64 = 1.0;

/// `E(-S) - E(S)` for the spin at a site with the given neighbor sum and field.
#[inline]
pub fn flip_energy_delta(spin: Spin, neighbor_sum: i32, field: f64) -> f64 {
    2.0 * spin.value() as f64 * (COUPLING * neighbor_sum as f64 + field)
}

/// `1 / (1 + exp(-x))` without overflow for large `|x|`.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Heat-bath probability that the site takes value `target`.
pub fn heatbath_prob(target: Spin, neighbor_sum: i32, field: f64, temperature: f64) -> Result<f64> {
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(Error::invalid(
            "temperature",
            format!("must be positive, got {temperature}"),
        ));
    }
    Ok(logistic(flip_energy_delta(target, neighbor_sum, field) / temperature))
}

#[inline]
fn prob_compliant(neighbor_sum: i32, field: f64, temperature: f64) -> f64 {
    logistic(flip_energy_delta(Spin::Compliant, neighbor_sum, field) / temperature)
}

/// Heat-bath decision for a uniform draw `r` against `P(+1) = p`.
#[inline]
pub fn heatbath_choice(r: f64, p_compliant: f64) -> Spin {
    if r < p_compliant {
        Spin::Compliant
    } else {
        Spin::Evading
    }
}

/// Redraws the spin at `site` from its conditional distribution given the
/// current neighbors. Consumes exactly one uniform draw. The caller is
/// responsible for skipping penalized sites.
pub fn update_site<R: Rng + ?Sized>(
    grid: &mut SpinGrid,
    society: &Society,
    site: usize,
    rng: &mut R,
) -> Spin {
    let agent = &society.agents()[site];
    let p = prob_compliant(grid.neighbor_sum_unchecked(site), agent.field, agent.temperature);
    let spin = heatbath_choice(rng.gen::<f64>(), p);
    grid.set(site, spin);
    spin
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepOutcome {
    /// Sites whose spin changed during the sweep.
    pub flips: usize,
}

/// One time step of the dynamics: every non-penalized site is updated once,
/// in row-major order.
pub fn sweep<R: Rng + ?Sized>(
    grid: &mut SpinGrid,
    society: &Society,
    ledger: &PenaltyLedger,
    rng: &mut R,
) -> Result<SweepOutcome> {
    check_len(grid.len(), society.len())?;
    check_len(grid.len(), ledger.len())?;
    let mut flips = 0;
    for site in 0..grid.len() {
        if ledger.is_penalized(site) {
            continue;
        }
        let before = grid.get(site);
        if update_site(grid, society, site, rng) != before {
            flips += 1;
        }
    }
    Ok(SweepOutcome { flips })
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Total energy of a configuration, computed over the bond list.
pub fn hamiltonian(grid: &SpinGrid, society: &Society) -> Result<f64> {
    check_len(grid.len(), society.len())?;
    let field_term: f64 = grid
        .spins()
        .iter()
        .zip(society.agents())
        .map(|(s, a)| a.field * s.value() as f64)
        .sum();
    Ok(-COUPLING * grid.bond_sum() as f64 - field_term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Dims;
    use crate::population::{Agent, AgentType};
    use crate::seeded_rng;
    use proptest::prelude::{prop, prop_assert, proptest};

    fn uniform_society(dims: Dims, field: f64, temperature: f64) -> Society {
        let agent = Agent {
            kind: AgentType::Copying,
            temperature,
            field,
            adaptation_step: 0.0,
        };
        Society::from_agents(dims, vec![agent; dims.sites()]).unwrap()
    }

    #[test]
    fn energy_delta_examples() {
        assert_eq!(flip_energy_delta(Spin::Compliant, 0, 0.0), 0.0);
        assert_eq!(flip_energy_delta(Spin::Evading, 4, 15.0), -38.0);
        assert_eq!(flip_energy_delta(Spin::Compliant, -2, -12.0), -28.0);
    }

    #[test]
    fn probability_examples() {
        assert_eq!(heatbath_prob(Spin::Compliant, 0, 0.0, 3.0).unwrap(), 0.5);
        assert_eq!(heatbath_prob(Spin::Evading, 0, 0.0, 3.0).unwrap(), 0.5);
        let hot = heatbath_prob(Spin::Compliant, 4, 20.0, 1e6).unwrap();
        assert!((hot - 0.5).abs() < 1e-4);
        let p = heatbath_prob(Spin::Compliant, 4, -15.0, 5.0).unwrap();
        let expected = 1.0 / (1.0 + 4.4f64.exp());
        assert!((p - expected).abs() < 1e-15);
        assert!((p - 0.012128).abs() < 5e-7);
    }

    #[test]
    fn nonpositive_temperature_rejected() {
        assert!(heatbath_prob(Spin::Compliant, 0, 1.0, 0.0).is_err());
        assert!(heatbath_prob(Spin::Compliant, 0, 1.0, -2.0).is_err());
    }

    #[test]
    fn extreme_arguments_stay_finite() {
        for &x in &[-1e4, -750.0, -700.0, 700.0, 750.0, 1e4] {
            let p = logistic(x);
            assert!(p.is_finite() && (0.0..=1.0).contains(&p));
        }
        assert!(logistic(-750.0) >= 0.0);
        assert_eq!(logistic(750.0), 1.0);
    }

    #[test]
    fn ethical_site_threshold() {
        let p = heatbath_prob(Spin::Compliant, 0, 15.0, 5.0).unwrap();
        assert!((p - 1.0 / (1.0 + (-6.0f64).exp())).abs() < 1e-15);
        assert!((p - 0.99752).abs() < 1e-5);
        assert_eq!(heatbath_choice(0.9975, p), Spin::Compliant);
        assert_eq!(heatbath_choice(0.9976, p), Spin::Evading);
    }

    #[test]
    fn forced_draws() {
        for &p in &[1e-300, 0.3, 0.999, 1.0] {
            assert_eq!(heatbath_choice(0.0, p), Spin::Compliant);
            assert_eq!(heatbath_choice(1.0, p), Spin::Evading);
        }
    }

    #[test]
    fn fully_penalized_sweep_is_a_no_op() {
        let dims = Dims::square(4).unwrap();
        let society = uniform_society(dims, 0.0, 2.0);
        let mut grid = SpinGrid::filled(dims, Spin::Compliant);
        let mut ledger = PenaltyLedger::new(dims.sites());
        for i in 0..dims.sites() {
            ledger.penalize(i, 3);
        }
        let before = grid.clone();
        let out = sweep(&mut grid, &society, &ledger, &mut seeded_rng(1)).unwrap();
        assert_eq!(out.flips, 0);
        assert_eq!(grid, before);
    }

    #[test]
    fn sweep_is_reproducible() {
        let dims = Dims::square(2).unwrap();
        let society = uniform_society(dims, 0.5, 3.0);
        let ledger = PenaltyLedger::new(dims.sites());
        let run = |seed| {
            let mut rng = seeded_rng(seed);
            let mut grid = SpinGrid::filled(dims, Spin::Evading);
            (0..50)
                .map(|_| {
                    sweep(&mut grid, &society, &ledger, &mut rng).unwrap();
                    grid.to_text_matrix()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let society = uniform_society(Dims::square(3).unwrap(), 0.0, 1.0);
        let mut grid = SpinGrid::filled(Dims::square(2).unwrap(), Spin::Compliant);
        let ledger = PenaltyLedger::new(4);
        assert!(sweep(&mut grid, &society, &ledger, &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn energy_delta_matches_hamiltonian_difference() {
        let dims = Dims::new(3, 4).unwrap();
        let mut rng = seeded_rng(21);
        let agents: Vec<Agent> = (0..dims.sites())
            .map(|_| Agent {
                kind: AgentType::Copying,
                temperature: 1.0,
                field: rng.gen_range(-5.0..5.0),
                adaptation_step: 0.0,
            })
            .collect();
        let society = Society::from_agents(dims, agents).unwrap();
        let mut grid = SpinGrid::checkerboard(dims);
        grid.set(5, Spin::Compliant);
        for site in 0..dims.sites() {
            let e0 = hamiltonian(&grid, &society).unwrap();
            let s = grid.get(site);
            let delta = flip_energy_delta(s, grid.neighbor_spin_sum(site).unwrap(), society.agents()[site].field);
            let mut flipped = grid.clone();
            flipped.set(site, s.flipped());
            let e1 = hamiltonian(&flipped, &society).unwrap();
            assert!((e1 - e0 - delta).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(ns in prop::sample::select(vec![-4, -2, 0, 2, 4]), b in -50.0f64..50.0, t in 0.01f64..100.0) {
            let up = heatbath_prob(Spin::Compliant, ns, b, t).unwrap();
            let down = heatbath_prob(Spin::Evading, ns, b, t).unwrap();
            prop_assert!((up + down - 1.0).abs() < 1e-12);
        }

        #[test]
        fn single_spin_detailed_balance(ns in prop::sample::select(vec![-4, -2, 0, 2, 4]), b in -10.0f64..10.0, t in 0.5f64..50.0) {
            let up = heatbath_prob(Spin::Compliant, ns, b, t).unwrap();
            let down = heatbath_prob(Spin::Evading, ns, b, t).unwrap();
            // local energy of the site: E(S) = -S (J ns + B)
            let e_up = -(ns as f64 + b);
            let e_down = ns as f64 + b;
            let ratio = (-(e_up - e_down) / t).exp();
            prop_assert!(((up / down) / ratio - 1.0).abs() < 1e-9);
        }
    }
}

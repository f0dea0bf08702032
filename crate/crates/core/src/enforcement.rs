//! Random audits and fixed-length forced-compliance penalties.

use rand::Rng;

use crate::dynamics::check_len;
use crate::error::{Error, Result};
use crate::lattice::{Spin, SpinGrid};

/// Remaining forced-compliance steps per site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PenaltyLedger {
    remaining: Vec<u32>,
}

impl PenaltyLedger {
    pub fn new(sites: usize) -> Self {
        PenaltyLedger {
            remaining: vec![0; sites],
        }
    }

    pub fn len(&self) -> usize {
        self.remaining.len()
    }

    pub fn is_empty(&self) -> bool {
        self.remaining.is_empty()
    }

    #[inline]
    pub fn remaining(&self, site: usize) -> u32 {
        self.remaining[site]
    }

    #[inline]
    pub fn is_penalized(&self, site: usize) -> bool {
        self.remaining[site] > 0
    }

    pub fn penalize(&mut self, site: usize, steps: u32) {
        self.remaining[site] = steps;
    }

    pub fn penalized_count(&self) -> usize {
        self.remaining.iter().filter(|&&r| r > 0).count()
    }

    /// True when every penalized site is compliant in `grid`.
    pub fn holds_for(&self, grid: &SpinGrid) -> bool {
        self.remaining
            .iter()
            .zip(grid.spins())
            .all(|(&r, &s)| r == 0 || s == Spin::Compliant)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AuditReport {
    pub audited: usize,
    pub caught: usize,
}

/// Audits every non-penalized site independently with probability
/// `audit_probability` (one uniform draw per such site, row-major). Audited
/// evaders are set compliant and locked for `penalty_steps` steps.
pub fn run_audits<R: Rng + ?Sized>(
    grid: &mut SpinGrid,
    ledger: &mut PenaltyLedger,
    audit_probability: f64,
    penalty_steps: u32,
    rng: &mut R,
) -> Result<AuditReport> {
    check_len(grid.len(), ledger.len())?;
    if !(0.0..=1.0).contains(&audit_probability) {
        return Err(Error::invalid(
            "p_audit",
            format!("must lie in [0, 1], got {audit_probability}"),
        ));
    }
    if penalty_steps == 0 {
        return Err(Error::invalid("penalty_h", "must be at least 1"));
    }
    let mut report = AuditReport::default();
    for site in 0..grid.len() {
        if ledger.is_penalized(site) {
            continue;
        }
        if rng.gen::<f64>() < audit_probability {
            report.audited += 1;
            if grid.get(site) == Spin::Evading {
                grid.set(site, Spin::Compliant);
                ledger.penalize(site, penalty_steps);
                report.caught += 1;
            }
        }
    }
    Ok(report)
}

/// Counts every active penalty down by one; returns how many reached zero.
pub fn tick_penalties(ledger: &mut PenaltyLedger) -> usize {
    let mut released = 0;
    for r in ledger.remaining.iter_mut().filter(|r| **r > 0) {
        *r -= 1;
        if *r == 0 {
            released += 1;
        }
    }
    released
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Dims;
    use crate::seeded_rng;

    #[test]
    fn no_audits_at_zero_probability() {
        let dims = Dims::square(10).unwrap();
        let mut grid = SpinGrid::filled(dims, Spin::Evading);
        let mut ledger = PenaltyLedger::new(100);
        let r = run_audits(&mut grid, &mut ledger, 0.0, 5, &mut seeded_rng(1)).unwrap();
        assert_eq!(r, AuditReport { audited: 0, caught: 0 });
        assert_eq!(grid.count(Spin::Evading), 100);
    }

    #[test]
    fn certain_audit_catches_everyone() {
        let dims = Dims::square(10).unwrap();
        let mut grid = SpinGrid::filled(dims, Spin::Evading);
        let mut ledger = PenaltyLedger::new(100);
        let r = run_audits(&mut grid, &mut ledger, 1.0, 5, &mut seeded_rng(1)).unwrap();
        assert_eq!(r.caught, 100);
        assert_eq!(grid.count(Spin::Compliant), 100);
        assert!((0..100).all(|i| ledger.remaining(i) == 5));
    }

    #[test]
    fn compliant_sites_are_unaffected() {
        let dims = Dims::square(4).unwrap();
        let mut grid = SpinGrid::filled(dims, Spin::Compliant);
        let mut ledger = PenaltyLedger::new(16);
        let r = run_audits(&mut grid, &mut ledger, 1.0, 3, &mut seeded_rng(2)).unwrap();
        assert_eq!(r, AuditReport { audited: 16, caught: 0 });
        assert_eq!(ledger.penalized_count(), 0);
    }

    #[test]
    fn penalized_sites_are_exempt() {
        let dims = Dims::square(2).unwrap();
        let mut grid = SpinGrid::filled(dims, Spin::Evading);
        grid.set(0, Spin::Compliant);
        let mut ledger = PenaltyLedger::new(4);
        ledger.penalize(0, 2);
        let r = run_audits(&mut grid, &mut ledger, 1.0, 7, &mut seeded_rng(3)).unwrap();
        assert_eq!(r.audited, 3);
        assert_eq!(ledger.remaining(0), 2);
    }

    #[test]
    fn caught_count_is_binomial() {
        let dims = Dims::square(1000).unwrap();
        let mut grid = SpinGrid::filled(dims, Spin::Evading);
        let mut ledger = PenaltyLedger::new(dims.sites());
        let r = run_audits(&mut grid, &mut ledger, 0.1, 5, &mut seeded_rng(4)).unwrap();
        let n = 1e6f64;
        let sigma = (n * 0.1 * 0.9).sqrt();
        assert!((r.caught as f64 - 1e5).abs() < 3.0 * sigma, "caught {}", r.caught);
        assert_eq!(r.caught, r.audited);
    }

    #[test]
    fn invalid_arguments() {
        let mut grid = SpinGrid::filled(Dims::square(2).unwrap(), Spin::Evading);
        let mut ledger = PenaltyLedger::new(4);
        assert!(run_audits(&mut grid, &mut ledger, 1.5, 5, &mut seeded_rng(0)).is_err());
        assert!(run_audits(&mut grid, &mut ledger, 0.1, 0, &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn tick_releases() {
        let mut ledger = PenaltyLedger::new(4);
        assert_eq!(tick_penalties(&mut ledger), 0);
        ledger.penalize(1, 1);
        ledger.penalize(2, 3);
        assert_eq!(tick_penalties(&mut ledger), 1);
        assert!(!ledger.is_penalized(1));
        assert_eq!(ledger.remaining(2), 2);
    }

    #[test]
    fn lock_lasts_h_steps() {
        let mut ledger = PenaltyLedger::new(1);
        ledger.penalize(0, 5);
        let mut locked_steps = 1; // the step of the audit itself
        tick_penalties(&mut ledger);
        while ledger.is_penalized(0) {
            locked_steps += 1;
            tick_penalties(&mut ledger);
        }
        assert_eq!(locked_steps, 5);
    }
}

//! Time-step orchestration, observables and field histograms.
//!
//! One time step runs, in order:
//!
//! 1. audits of all non-penalized sites (detected evaders are locked),
//! 2. a heat-bath sweep over the free sites,
//! 3. observation of `p_cp` / `p_noncp`,
//! 4. public-goods feedback against the previous observation,
//! 5. the penalty countdown.
//!
//! Audits therefore act on the behavior chosen in the previous sweep, and an
//! evader is observed as evading in the step it chose to evade. A detected
//! agent is observed compliant for exactly `penalty_steps` steps.

use serde::Serialize;

use crate::dynamics::sweep;
use crate::enforcement::{run_audits, tick_penalties, PenaltyLedger};
use crate::error::{Error, Result};
use crate::feedback::{apply_feedback, ProvisionSignal};
use crate::lattice::{Dims, Spin, SpinGrid};
use crate::population::{build_society, init_spins, AgentType, Composition, InitPolicy, Society};
use crate::{seeded_rng, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputOptions {
    pub histogram: bool,
    pub society: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions {
            histogram: true,
            society: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub dims: Dims,
    pub composition: Composition,
    pub init: InitPolicy,
    /// Per-step, per-agent audit probability `p_a`.
    pub audit_probability: f64,
    /// Penalty period `h`.
    pub penalty_steps: u32,
    /// Upper bound of the per-agent adaptation step.
    pub delta_b_max: f64,
    /// Threshold of perception, as a fraction of the population.
    pub delta_p_min: f64,
    /// Switches the public-goods feedback on or off entirely.
    pub feedback: bool,
    pub steps: usize,
    pub seed: u64,
    pub bin_width: f64,
    pub output: OutputOptions,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            dims: Dims {
                width: 1000,
                height: 1000,
            },
            composition: Composition::pure(AgentType::Selfish),
            init: InitPolicy::SELFISH_EVADE,
            audit_probability: 0.1,
            penalty_steps: 5,
            delta_b_max: 0.0,
            delta_p_min: 0.01,
            feedback: true,
            steps: 200,
            seed: 0,
            bin_width: 0.5,
            output: OutputOptions::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dims.width == 0 || self.dims.height == 0 {
            return Err(Error::invalid("dims", "lattice dimensions must be positive"));
        }
        if !(0.0..=1.0).contains(&self.audit_probability) {
            return Err(Error::invalid(
                "p_audit",
                format!("must lie in [0, 1], got {}", self.audit_probability),
            ));
        }
        if self.penalty_steps == 0 {
            return Err(Error::invalid("penalty_h", "must be at least 1"));
        }
        if !self.delta_b_max.is_finite() || self.delta_b_max < 0.0 {
            return Err(Error::invalid(
                "delta_b_max",
                format!("must be finite and non-negative, got {}", self.delta_b_max),
            ));
        }
        if !(0.0..=1.0).contains(&self.delta_p_min) {
            return Err(Error::invalid(
                "delta_p_min",
                format!("must lie in [0, 1] (or 0%..100%), got {}", self.delta_p_min),
            ));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps", "must be at least 1"));
        }
        if !self.bin_width.is_finite() || self.bin_width <= 0.0 {
            return Err(Error::invalid(
                "bin_width",
                format!("must be positive, got {}", self.bin_width),
            ));
        }
        Ok(())
    }
}

/// Observables of one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: usize,
    pub p_noncp: f64,
    pub p_cp: f64,
    pub audits: usize,
    pub caught: usize,
    /// Mean selfish field after this step's feedback; `None` without selfish agents.
    pub mean_a_field: Option<f64>,
    pub flips: usize,
}

/// Mean `p_noncp` over the second half of a run (steps `⌈T/2⌉..=T`).
pub fn stationary_noncompliance(records: &[StepRecord]) -> f64 {
    let last = match records.last() {
        Some(r) => r.t,
        None => return f64::NAN,
    };
    let from = last.div_ceil(2);
    mean_noncompliance(records, from, last)
}

/// Mean `p_noncp` over steps `from..=to`.
pub fn mean_noncompliance(records: &[StepRecord], from: usize, to: usize) -> f64 {
    let (sum, n) = records
        .iter()
        .filter(|r| r.t >= from && r.t <= to)
        .fold((0.0, 0usize), |(s, n), r| (s + r.p_noncp, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// `(p_noncp, p_cp)`; the pair sums to exactly 1.
fn observe(grid: &SpinGrid) -> (f64, f64) {
    let p_noncp = grid.count(Spin::Evading) as f64 / grid.len() as f64;
    (p_noncp, 1.0 - p_noncp)
}

/// Complete simulator state. `Send`, so whole runs can move across threads.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimulationConfig,
    society: Society,
    grid: SpinGrid,
    prev_grid: SpinGrid,
    prev_p_cp: f64,
    ledger: PenaltyLedger,
    rng: SimRng,
    t: usize,
}

impl Simulation {
    /// Builds the society and initial state. The single random stream is
    /// consumed by the type shuffle, then per-agent parameters, then the
    /// per-step audit and sweep draws.
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded_rng(config.seed);
        let society = build_society(&config.composition, config.dims, config.delta_b_max, &mut rng)?;
        let grid = init_spins(config.init, &society);
        let (_, prev_p_cp) = observe(&grid);
        Ok(Simulation {
            ledger: PenaltyLedger::new(grid.len()),
            prev_grid: grid.clone(),
            prev_p_cp,
            grid,
            society,
            rng,
            config,
            t: 0,
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn society(&self) -> &Society {
        &self.society
    }

    pub fn grid(&self) -> &SpinGrid {
        &self.grid
    }

    pub fn ledger(&self) -> &PenaltyLedger {
        &self.ledger
    }

    /// Steps completed so far.
    pub fn time(&self) -> usize {
        self.t
    }

    pub fn step(&mut self) -> StepRecord {
        let cfg = &self.config;
        // Dimensions are consistent by construction; these cannot fail.
        let audit = run_audits(
            &mut self.grid,
            &mut self.ledger,
            cfg.audit_probability,
            cfg.penalty_steps,
            &mut self.rng,
        )
        .expect("validated audit parameters");
        let outcome = sweep(&mut self.grid, &self.society, &self.ledger, &mut self.rng)
            .expect("consistent dims");
        debug_assert!(self.ledger.holds_for(&self.grid));

        let (p_noncp, p_cp) = observe(&self.grid);

        if cfg.feedback {
            let signal = ProvisionSignal::new(self.prev_p_cp, p_cp);
            apply_feedback(
                &mut self.society,
                &self.prev_grid,
                &self.grid,
                &signal,
                cfg.delta_p_min,
            )
            .expect("consistent dims");
        }
        self.prev_grid.clone_from(&self.grid);
        self.prev_p_cp = p_cp;
        tick_penalties(&mut self.ledger);
        self.t += 1;

        StepRecord {
            t: self.t,
            p_noncp,
            p_cp,
            audits: audit.audited,
            caught: audit.caught,
            mean_a_field: self.society.mean_selfish_field(),
            flips: outcome.flips,
        }
    }

    pub fn field_histogram(&self) -> FieldHistogram {
        field_histogram(&self.society, self.config.bin_width).expect("validated bin width")
    }

    pub fn into_society(self) -> Society {
        self.society
    }
}

/// Everything a complete run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<StepRecord>,
    pub histogram: FieldHistogram,
    pub society: Society,
}

impl RunOutput {
    pub fn stationary_noncompliance(&self) -> f64 {
        stationary_noncompliance(&self.records)
    }

    pub fn final_mean_a_field(&self) -> Option<f64> {
        self.society.mean_selfish_field()
    }
}

pub fn run(config: &SimulationConfig) -> Result<RunOutput> {
    let mut sim = Simulation::new(config.clone())?;
    let records = (0..config.steps).map(|_| sim.step()).collect();
    let histogram = sim.field_histogram();
    Ok(RunOutput {
        records,
        histogram,
        society: sim.into_society(),
    })
}

/// Histogram of selfish-agent fields on the grid `k * width`, `k ∈ ℤ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldHistogram {
    width: f64,
    /// Index `k` of the first bin `[k*width, (k+1)*width)`.
    first_bin: i64,
    counts: Vec<u64>,
}

impl FieldHistogram {
    pub fn from_values(values: impl IntoIterator<Item = f64>, width: f64) -> Result<Self> {
        if !width.is_finite() || width <= 0.0 {
            return Err(Error::invalid("bin_width", format!("must be positive, got {width}")));
        }
        let bins: Vec<i64> = values
            .into_iter()
            .map(|v| (v / width).floor() as i64)
            .collect();
        let (Some(&lo), Some(&hi)) = (bins.iter().min(), bins.iter().max()) else {
            return Ok(FieldHistogram {
                width,
                first_bin: 0,
                counts: Vec::new(),
            });
        };
        let mut counts = vec![0u64; (hi - lo + 1) as usize];
        for b in bins {
            counts[(b - lo) as usize] += 1;
        }
        Ok(FieldHistogram {
            width,
            first_bin: lo,
            counts,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `(left, right, count)` for every bin, in increasing order.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.counts.iter().enumerate().map(move |(i, &c)| {
            let k = self.first_bin + i as i64;
            (k as f64 * self.width, (k + 1) as f64 * self.width, c)
        })
    }

    /// Merges groups of `factor` adjacent bins into bins of width `factor * width`.
    fn coarsened(&self, factor: i64) -> FieldHistogram {
        if self.is_empty() || factor == 1 {
            return FieldHistogram {
                width: self.width * factor as f64,
                ..self.clone()
            };
        }
        let lo = self.first_bin.div_euclid(factor);
        let hi = (self.first_bin + self.counts.len() as i64 - 1).div_euclid(factor);
        let mut counts = vec![0u64; (hi - lo + 1) as usize];
        for (i, &c) in self.counts.iter().enumerate() {
            let k = (self.first_bin + i as i64).div_euclid(factor);
            counts[(k - lo) as usize] += c;
        }
        FieldHistogram {
            width: self.width * factor as f64,
            first_bin: lo,
            counts,
        }
    }

    fn probability(&self, bin: i64) -> f64 {
        let i = bin - self.first_bin;
        if i < 0 || i as usize >= self.counts.len() {
            0.0
        } else {
            self.counts[i as usize] as f64 / self.total() as f64
        }
    }
}

pub fn field_histogram(society: &Society, bin_width: f64) -> Result<FieldHistogram> {
    FieldHistogram::from_values(
        society
            .agents()
            .iter()
            .filter(|a| a.kind == AgentType::Selfish)
            .map(|a| a.field),
        bin_width,
    )
}

/// Integer `m` with `coarse == m * fine`, if any.
fn width_ratio(coarse: f64, fine: f64) -> Option<i64> {
    let m = (coarse / fine).round();
    (m >= 1.0 && ((m * fine - coarse).abs() <= 1e-9 * coarse)).then_some(m as i64)
}

/// Total-variation distance between two normalized histograms, in `[0, 1]`.
/// Histograms of different width are compared on the coarser grid when one
/// width is an integer multiple of the other. An empty histogram has no mass,
/// so its distance to any non-empty one is 1.
pub fn stationarity_distance(a: &FieldHistogram, b: &FieldHistogram) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Err(Error::EmptyHistograms);
    }
    if a.is_empty() || b.is_empty() {
        return Ok(1.0);
    }
    let (a, b) = if a.width == b.width {
        (a.clone(), b.clone())
    } else if let Some(m) = width_ratio(a.width, b.width) {
        (a.clone(), b.coarsened(m))
    } else if let Some(m) = width_ratio(b.width, a.width) {
        (a.coarsened(m), b.clone())
    } else {
        return Err(Error::IncompatibleBins(a.width, b.width));
    };
    let lo = a.first_bin.min(b.first_bin);
    let hi = (a.first_bin + a.counts.len() as i64).max(b.first_bin + b.counts.len() as i64);
    let l1: f64 = (lo..hi)
        .map(|k| (a.probability(k) - b.probability(k)).abs())
        .sum();
    Ok((0.5 * l1).min(1.0))
}

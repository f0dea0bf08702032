//! Preset experiments and the parameter-sweep harness.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Dims;
use crate::population::{AgentType, Composition, InitPolicy};
use crate::simulation::{run, RunOutput, SimulationConfig};

/// Lattice used by presets unless overridden.
pub const DESK_DIMS: Dims = Dims {
    width: 256,
    height: 256,
};

pub const PRESET_NAMES: &[&str] = &[
    "fig1a",
    "fig1b",
    "fig1c",
    "fig1d",
    "fig2-top",
    "fig2-bottom",
    "fig3a",
    "fig3b",
];

/// One configuration of a preset.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub label: String,
    pub config: SimulationConfig,
}

/// Expected outcome of a preset, evaluated on its run results.
#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    /// Stationary `p_noncp` of a variant lies in `[min, max]`.
    StationaryRange { variant: String, min: f64, max: f64 },
    /// Sign of the final mean selfish field.
    FieldSign { variant: String, positive: bool },
    /// `stationary(with) <= max_ratio * stationary(without)`.
    Reduction {
        with: String,
        without: String,
        max_ratio: f64,
    },
    /// `|stationary(a) - stationary(b)| < max`.
    Close { a: String, b: String, max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub description: String,
    pub passed: bool,
}

impl Check {
    pub fn evaluate(&self, results: &[VariantResult]) -> Result<CheckOutcome> {
        let find = |label: &str| {
            results
                .iter()
                .find(|r| r.label == label)
                .ok_or_else(|| Error::invalid("check", format!("no variant labelled `{label}`")))
        };
        let outcome = match self {
            Check::StationaryRange { variant, min, max } => {
                let v = find(variant)?.stationary_noncompliance;
                CheckOutcome {
                    description: format!("{variant}: stationary p_noncp {v:.4} in [{min}, {max}]"),
                    passed: v >= *min && v <= *max,
                }
            }
            Check::FieldSign { variant, positive } => {
                let m = find(variant)?.mean_a_field;
                let passed = match m {
                    Some(m) => (m > 0.0) == *positive,
                    None => false,
                };
                CheckOutcome {
                    description: format!(
                        "{variant}: final mean a-field {} (expected {})",
                        m.map_or("n/a".to_string(), |m| format!("{m:.3}")),
                        if *positive { "> 0" } else { "<= 0" }
                    ),
                    passed,
                }
            }
            Check::Reduction {
                with,
                without,
                max_ratio,
            } => {
                let (w, wo) = (
                    find(with)?.stationary_noncompliance,
                    find(without)?.stationary_noncompliance,
                );
                CheckOutcome {
                    description: format!("{with} ({w:.4}) <= {max_ratio} x {without} ({wo:.4})"),
                    passed: w <= max_ratio * wo,
                }
            }
            Check::Close { a, b, max } => {
                let (x, y) = (find(a)?.stationary_noncompliance, find(b)?.stationary_noncompliance);
                CheckOutcome {
                    description: format!("|{a} ({x:.4}) - {b} ({y:.4})| < {max}"),
                    passed: (x - y).abs() < *max,
                }
            }
        };
        Ok(outcome)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPreset {
    pub name: String,
    pub variants: Vec<Variant>,
    pub checks: Vec<Check>,
}

impl ScenarioPreset {
    /// Applies command-line overrides to every variant.
    pub fn with_overrides(mut self, seed: Option<u64>, steps: Option<usize>, dims: Option<Dims>) -> Self {
        for v in &mut self.variants {
            if let Some(s) = seed {
                v.config.seed = s;
            }
            if let Some(s) = steps {
                v.config.steps = s;
            }
            if let Some(d) = dims {
                v.config.dims = d;
            }
        }
        self
    }

    pub fn variant(&self, label: &str) -> Option<&Variant> {
        self.variants.iter().find(|v| v.label == label)
    }
}

fn base(composition: Composition, init: InitPolicy) -> SimulationConfig {
    SimulationConfig {
        dims: DESK_DIMS,
        composition,
        init,
        audit_probability: 0.1,
        penalty_steps: 5,
        delta_b_max: 0.0,
        delta_p_min: 0.01,
        feedback: true,
        steps: 200,
        seed: 1,
        ..SimulationConfig::default()
    }
}

/// Mixed society: 35% copying, 15% random, selfish share `a`, ethical rest.
pub fn mixed_composition(selfish: f64) -> Result<Composition> {
    let ethical = 1.0 - 0.35 - 0.15 - selfish;
    if ethical < -1e-12 {
        return Err(Error::invalid("share_a", format!("selfish share {selfish} exceeds 0.5")));
    }
    Composition::new(selfish, 0.35, ethical.max(0.0), 0.15)
}

fn pure_society(kind: AgentType, init: InitPolicy, ranges: [(f64, f64); 2]) -> (Vec<Variant>, Vec<Check>) {
    let mut variants = Vec::new();
    let mut checks = Vec::new();
    for (h, (min, max)) in [5u32, 10].into_iter().zip(ranges) {
        let label = format!("h{h}");
        variants.push(Variant {
            label: label.clone(),
            config: SimulationConfig {
                penalty_steps: h,
                ..base(Composition::pure(kind), init)
            },
        });
        checks.push(Check::StationaryRange {
            variant: label,
            min,
            max,
        });
    }
    (variants, checks)
}

fn field_scan(delta_p_min: f64, critical_between: (u32, u32)) -> (Vec<Variant>, Vec<Check>) {
    let variants = (0..=5u32)
        .map(|db| Variant {
            label: format!("dBmax{db}"),
            config: SimulationConfig {
                delta_b_max: db as f64,
                delta_p_min,
                ..base(Composition::pure(AgentType::Selfish), InitPolicy::AllNonCompliant)
            },
        })
        .collect();
    let checks = (1..=5u32)
        .map(|db| Check::FieldSign {
            variant: format!("dBmax{db}"),
            positive: db >= critical_between.1,
        })
        .collect();
    (variants, checks)
}

fn mixed_scan(delta_p_min: f64, halving_expected: bool) -> Result<(Vec<Variant>, Vec<Check>)> {
    let mut variants = Vec::new();
    for pct in [0u32, 10, 20, 30, 40, 50] {
        let composition = mixed_composition(pct as f64 / 100.0)?;
        for (suffix, db) in [("fb", 4.0), ("nofb", 0.0)] {
            variants.push(Variant {
                label: format!("a{pct}-{suffix}"),
                config: SimulationConfig {
                    delta_b_max: db,
                    delta_p_min,
                    ..base(composition, InitPolicy::SELFISH_EVADE)
                },
            });
        }
    }
    let mut checks = vec![Check::Close {
        a: "a0-fb".into(),
        b: "a0-nofb".into(),
        max: 0.02,
    }];
    if halving_expected {
        checks.push(Check::Reduction {
            with: "a50-fb".into(),
            without: "a50-nofb".into(),
            max_ratio: 0.5,
        });
    }
    Ok((variants, checks))
}

/// Builds a named preset at desk scale (256x256, 200 steps, seed 1).
pub fn preset(name: &str) -> Result<ScenarioPreset> {
    let (variants, checks) = match name {
        "fig1a" => pure_society(
            AgentType::Selfish,
            InitPolicy::AllNonCompliant,
            [(0.637, 0.697), (0.47, 0.53)],
        ),
        "fig1b" => pure_society(AgentType::Copying, InitPolicy::AllCompliant, [(0.03, 0.06); 2]),
        "fig1c" => pure_society(AgentType::Ethical, InitPolicy::AllCompliant, [(0.0, 0.005); 2]),
        "fig1d" => pure_society(
            AgentType::Random,
            InitPolicy::AllCompliant,
            [(0.37, 0.43), (0.303, 0.363)],
        ),
        "fig2-top" => field_scan(0.01, (2, 3)),
        "fig2-bottom" => field_scan(0.05, (4, 5)),
        "fig3a" => mixed_scan(0.01, true)?,
        "fig3b" => mixed_scan(0.05, false)?,
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(ScenarioPreset {
        name: name.to_string(),
        variants,
        checks,
    })
}

/// Condensed result of one variant run.
#[derive(Debug, Clone)]
pub struct VariantResult {
    pub label: String,
    pub stationary_noncompliance: f64,
    pub mean_a_field: Option<f64>,
    pub output: RunOutput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

fn map_ordered<T, U, F>(items: Vec<T>, exec: Execution, f: F) -> Result<Vec<U>>
where
    T: Send,
    U: Send,
    F: Fn(T) -> Result<U> + Sync + Send,
{
    match exec {
        Execution::Sequential => items.into_iter().map(f).collect(),
        Execution::Parallel => items.into_par_iter().map(f).collect(),
    }
}

pub fn run_preset(preset: &ScenarioPreset, exec: Execution) -> Result<Vec<VariantResult>> {
    map_ordered(preset.variants.clone(), exec, |v| {
        let output = run(&v.config)?;
        Ok(VariantResult {
            label: v.label,
            stationary_noncompliance: output.stationary_noncompliance(),
            mean_a_field: output.final_mean_a_field(),
            output,
        })
    })
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    DeltaBMax,
    DeltaPMin,
    /// Selfish share of the mixed society; ethical agents absorb the rest.
    SelfishShare,
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dB_max" | "delta_b_max" => Ok(SweepParameter::DeltaBMax),
            "dp_min" | "delta_p_min" => Ok(SweepParameter::DeltaPMin),
            "share_a" => Ok(SweepParameter::SelfishShare),
            other => Err(Error::invalid(
                "param",
                format!("unknown sweep parameter `{other}` (dB_max, dp_min, share_a)"),
            )),
        }
    }
}

impl SweepParameter {
    fn apply(self, base: &SimulationConfig, value: f64) -> Result<SimulationConfig> {
        let mut cfg = base.clone();
        match self {
            SweepParameter::DeltaBMax => cfg.delta_b_max = value,
            SweepParameter::DeltaPMin => cfg.delta_p_min = value,
            SweepParameter::SelfishShare => {
                let c = &base.composition;
                let ethical = 1.0 - value - c.share(AgentType::Copying) - c.share(AgentType::Random);
                if ethical < -1e-12 {
                    return Err(Error::invalid(
                        "share_a",
                        format!("share {value} leaves no room for the other types"),
                    ));
                }
                cfg.composition = Composition::new(
                    value,
                    c.share(AgentType::Copying),
                    ethical.max(0.0),
                    c.share(AgentType::Random),
                )?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Grid of values: `lo:hi` (unit step), `lo:hi:step`, or `v1,v2,...`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::invalid("grid", format!("expected lo:hi[:step] or a comma list, got `{text}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let (lo, hi, step) = match parts.as_slice() {
            [lo, hi] => (num(lo)?, num(hi)?, 1.0),
            [lo, hi, step] => (num(lo)?, num(hi)?, num(step)?),
            _ => return Err(bad()),
        };
        if !step.is_finite() || step <= 0.0 || hi < lo {
            return Err(bad());
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub base: SimulationConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::invalid("grid", "must contain at least one value"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("replicas", "need at least one seed"));
        }
        self.base.validate()
    }
}

/// Regime of a run, read off the sign of the final mean selfish field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Compliant,
    NonCompliant,
    /// No selfish agents in the society.
    Undefined,
}

impl Regime {
    pub fn classify(mean_a_field: Option<f64>) -> Regime {
        match mean_a_field {
            Some(m) if m > 0.0 => Regime::Compliant,
            Some(_) => Regime::NonCompliant,
            None => Regime::Undefined,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Compliant => "compliant",
            Regime::NonCompliant => "non_compliant",
            Regime::Undefined => "undefined",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub seed: u64,
    pub mean_a_field: Option<f64>,
    pub p_noncp_stationary: f64,
    pub regime: Regime,
}

/// Location of the regime change along the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalEstimate {
    /// Majority flips to compliant between these adjacent grid values.
    Between { below: f64, above: f64 },
    /// Already compliant at the smallest grid value.
    BelowGrid,
    /// No grid value reaches a compliant majority.
    NotReached,
}

impl CriticalEstimate {
    pub fn midpoint(&self) -> Option<f64> {
        match self {
            CriticalEstimate::Between { below, above } => Some(0.5 * (below + above)),
            _ => None,
        }
    }
}

impl fmt::Display for CriticalEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriticalEstimate::Between { below, above } => {
                write!(f, "{} (between {below} and {above})", 0.5 * (below + above))
            }
            CriticalEstimate::BelowGrid => write!(f, "below the smallest grid value"),
            CriticalEstimate::NotReached => write!(f, "not reached on this grid"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub critical: CriticalEstimate,
}

impl SweepTable {
    /// Majority regime per grid value, in ascending grid order. Ties count
    /// as non-compliant.
    pub fn majority(&self) -> Vec<(f64, bool)> {
        let mut values: Vec<f64> = self.rows.iter().map(|r| r.param).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        values
            .into_iter()
            .map(|v| {
                let (c, n) = self
                    .rows
                    .iter()
                    .filter(|r| r.param == v)
                    .fold((0, 0), |(c, n), r| (c + (r.regime == Regime::Compliant) as usize, n + 1));
                (v, 2 * c > n)
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.into_inner().map_err(|e| Error::Io {
            path: "<buffer>".into(),
            source: e.into_error(),
        })
    }
}

fn critical_estimate(majority: &[(f64, bool)]) -> CriticalEstimate {
    match majority.iter().position(|&(_, compliant)| compliant) {
        None => CriticalEstimate::NotReached,
        Some(0) => CriticalEstimate::BelowGrid,
        Some(j) => CriticalEstimate::Between {
            below: majority[j - 1].0,
            above: majority[j].0,
        },
    }
}

/// Runs every grid value for every seed. The table is ordered by grid value,
/// then seed, and is identical for both execution modes.
pub fn run_sweep(spec: &SweepSpec, exec: Execution) -> Result<SweepTable> {
    spec.validate()?;
    let jobs: Vec<(f64, u64)> = spec
        .grid
        .iter()
        .flat_map(|&v| spec.seeds.iter().map(move |&s| (v, s)))
        .collect();
    let rows = map_ordered(jobs, exec, |(value, seed)| {
        let mut cfg = spec.parameter.apply(&spec.base, value)?;
        cfg.seed = seed;
        let out = run(&cfg)?;
        let mean = out.final_mean_a_field();
        Ok(SweepRow {
            param: value,
            seed,
            mean_a_field: mean,
            p_noncp_stationary: out.stationary_noncompliance(),
            regime: Regime::classify(mean),
        })
    })?;
    let mut table = SweepTable {
        rows,
        critical: CriticalEstimate::NotReached,
    };
    table.critical = critical_estimate(&table.majority());
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate_with_unique_labels() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            assert_eq!(p.name, *name);
            let mut labels: Vec<_> = p.variants.iter().map(|v| v.label.clone()).collect();
            for v in &p.variants {
                v.config.validate().unwrap();
            }
            labels.sort();
            labels.dedup();
            assert_eq!(labels.len(), p.variants.len(), "{name}");
        }
        assert!(matches!(preset("fig9"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn fig1a_preset() {
        let p = preset("fig1a").unwrap();
        let hs: Vec<u32> = p.variants.iter().map(|v| v.config.penalty_steps).collect();
        assert_eq!(hs, vec![5, 10]);
        for v in &p.variants {
            assert_eq!(v.config.composition, Composition::pure(AgentType::Selfish));
            assert_eq!(v.config.init, InitPolicy::AllNonCompliant);
            assert_eq!(v.config.audit_probability, 0.1);
        }
    }

    #[test]
    fn fig2_presets() {
        let p = preset("fig2-top").unwrap();
        assert!(p.variants.iter().all(|v| v.config.delta_p_min == 0.01));
        let dbs: Vec<f64> = p.variants.iter().map(|v| v.config.delta_b_max).collect();
        assert_eq!(dbs, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let p = preset("fig2-bottom").unwrap();
        assert!(p.variants.iter().all(|v| v.config.delta_p_min == 0.05));
    }

    #[test]
    fn fig3a_composition() {
        let p = preset("fig3a").unwrap();
        let v = p.variant("a30-fb").unwrap();
        let c = v.config.composition;
        assert_eq!(c.share(AgentType::Selfish), 0.30);
        assert_eq!(c.share(AgentType::Copying), 0.35);
        assert!((c.share(AgentType::Ethical) - 0.20).abs() < 1e-12);
        assert_eq!(c.share(AgentType::Random), 0.15);
        assert_eq!(v.config.delta_b_max, 4.0);
        assert_eq!(p.variant("a30-nofb").unwrap().config.delta_b_max, 0.0);
        assert_eq!(p.variants.len(), 12);
        assert_eq!(preset("fig3b").unwrap().variants[0].config.delta_p_min, 0.05);
    }

    #[test]
    fn overrides() {
        let d = Dims::square(16).unwrap();
        let p = preset("fig1b").unwrap().with_overrides(Some(7), Some(30), Some(d));
        assert!(p.variants.iter().all(|v| v.config.seed == 7 && v.config.steps == 30 && v.config.dims == d));
    }

    #[test]
    fn grid_syntax() {
        assert_eq!(parse_grid("1:5").unwrap(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0.01, 0.05").unwrap(), vec![0.01, 0.05]);
        assert!(parse_grid("5:1").is_err());
        assert!(parse_grid("a:b").is_err());
        assert!(parse_grid("1:2:0").is_err());
    }

    #[test]
    fn critical_from_majority() {
        let m = [(1.0, false), (2.0, false), (3.0, true), (4.0, true)];
        assert_eq!(critical_estimate(&m).midpoint(), Some(2.5));
        assert_eq!(critical_estimate(&[(1.0, true)]), CriticalEstimate::BelowGrid);
        assert_eq!(critical_estimate(&[(0.0, false)]), CriticalEstimate::NotReached);
    }

    #[test]
    fn regime_labels() {
        assert_eq!(Regime::classify(Some(0.5)), Regime::Compliant);
        assert_eq!(Regime::classify(Some(-3.0)), Regime::NonCompliant);
        assert_eq!(Regime::classify(Some(0.0)), Regime::NonCompliant);
        assert_eq!(Regime::classify(None), Regime::Undefined);
    }

    fn small_spec(grid: Vec<f64>) -> SweepSpec {
        SweepSpec {
            parameter: SweepParameter::DeltaBMax,
            grid,
            seeds: vec![1, 2, 3],
            base: SimulationConfig {
                dims: Dims::square(24).unwrap(),
                steps: 30,
                ..SimulationConfig::default()
            },
        }
    }

    #[test]
    fn no_feedback_grid_is_non_compliant() {
        let t = run_sweep(&small_spec(vec![0.0]), Execution::Parallel).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.rows.iter().all(|r| r.regime == Regime::NonCompliant));
        assert_eq!(t.critical, CriticalEstimate::NotReached);
    }

    #[test]
    fn parallel_matches_sequential() {
        let spec = small_spec(vec![0.0, 2.0, 5.0]);
        let a = run_sweep(&spec, Execution::Parallel).unwrap();
        let b = run_sweep(&spec, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        let header = String::from_utf8(a.to_csv().unwrap()).unwrap();
        assert!(header.starts_with("param,seed,mean_a_field,p_noncp_stationary,regime\n"));
    }

    #[test]
    fn share_sweep_adjusts_ethical_share() {
        let base = SimulationConfig {
            composition: mixed_composition(0.1).unwrap(),
            ..SimulationConfig::default()
        };
        let cfg = SweepParameter::SelfishShare.apply(&base, 0.4).unwrap();
        assert!((cfg.composition.share(AgentType::Ethical) - 0.1).abs() < 1e-12);
        assert!(SweepParameter::SelfishShare.apply(&base, 0.6).is_err());
    }

    #[test]
    fn invalid_specs() {
        let mut spec = small_spec(vec![]);
        assert!(run_sweep(&spec, Execution::Sequential).is_err());
        spec.grid = vec![1.0];
        spec.seeds.clear();
        assert!(run_sweep(&spec, Execution::Sequential).is_err());
        assert!("foo".parse::<SweepParameter>().is_err());
    }
}

//! Agent types, per-agent parameter sampling and society construction.

use std::fmt;
use std::str::FromStr;

use rand::distributions::Open01;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{Dims, Spin, SpinGrid};

/// Temperature of selfish and ethical agents.
pub const FIXED_TEMPERATURE: f64 = 5.0;
/// Initial field range of selfish agents.
pub const SELFISH_FIELD: (f64, f64) = (-20.0, -10.0);
/// Field range of ethical agents.
pub const ETHICAL_FIELD: (f64, f64) = (10.0, 20.0);
/// Temperature range of copying agents.
pub const COPYING_TEMPERATURE: (f64, f64) = (1.0, 3.0);
/// Temperature range of random agents.
pub const RANDOM_TEMPERATURE: (f64, f64) = (10.0, 30.0);

/// Behavioral type of an agent. Fixed for the lifetime of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentType {
    /// a-type: gains from evasion; only type whose field adapts.
    Selfish,
    /// b-type: copies the behavior of its neighborhood.
    Copying,
    /// c-type: practically always compliant.
    Ethical,
    /// d-type: acts mostly at random.
    Random,
}

impl AgentType {
    pub const ALL: [AgentType; 4] = [
        AgentType::Selfish,
        AgentType::Copying,
        AgentType::Ethical,
        AgentType::Random,
    ];

    pub fn tag(self) -> char {
        match self {
            AgentType::Selfish => 'a',
            AgentType::Copying => 'b',
            AgentType::Ethical => 'c',
            AgentType::Random => 'd',
        }
    }

    pub(crate) fn ordinal(self) -> usize {
        self as usize
    }
}

impl fmt::Display for AgentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())
    }
}

impl FromStr for AgentType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "a" | "selfish" => Ok(AgentType::Selfish),
            "b" | "copying" => Ok(AgentType::Copying),
            "c" | "ethical" => Ok(AgentType::Ethical),
            "d" | "random" => Ok(AgentType::Random),
            other => Err(Error::invalid("agent type", format!("unknown type `{other}`"))),
        }
    }
}

/// Behavioral parameters of one taxpayer, in units of the coupling `J = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agent {
    pub kind: AgentType,
    pub temperature: f64,
    /// Moral attitude. Mutated by the feedback rule for selfish agents only.
    pub field: f64,
    /// Field increment per perceived feedback event; zero except for selfish agents.
    pub adaptation_step: f64,
}

/// Uniform draw from the open interval `(lo, hi)`.
fn open_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    loop {
        let u: f64 = rng.sample(Open01);
        let v = lo + (hi - lo) * u;
        if v > lo && v < hi {
            return v;
        }
    }
}

/// Draws the parameters of a single agent.
///
/// Selfish agents always consume two draws (field, then adaptation step) so
/// the random stream does not depend on `delta_b_max`; with
/// `delta_b_max == 0` the adaptation step is exactly zero.
pub fn sample_agent<R: Rng + ?Sized>(
    kind: AgentType,
    delta_b_max: f64,
    rng: &mut R,
) -> Result<Agent> {
    if !delta_b_max.is_finite() || delta_b_max < 0.0 {
        return Err(Error::invalid(
            "delta_b_max",
            format!("must be finite and non-negative, got {delta_b_max}"),
        ));
    }
    let agent = match kind {
        AgentType::Selfish => {
            let field = open_uniform(rng, SELFISH_FIELD.0, SELFISH_FIELD.1);
            let u: f64 = rng.sample(Open01);
            Agent {
                kind,
                temperature: FIXED_TEMPERATURE,
                field,
                adaptation_step: u * delta_b_max,
            }
        }
        AgentType::Copying => Agent {
            kind,
            temperature: open_uniform(rng, COPYING_TEMPERATURE.0, COPYING_TEMPERATURE.1),
            field: 0.0,
            adaptation_step: 0.0,
        },
        AgentType::Ethical => Agent {
            kind,
            temperature: FIXED_TEMPERATURE,
            field: open_uniform(rng, ETHICAL_FIELD.0, ETHICAL_FIELD.1),
            adaptation_step: 0.0,
        },
        AgentType::Random => Agent {
            kind,
            temperature: open_uniform(rng, RANDOM_TEMPERATURE.0, RANDOM_TEMPERATURE.1),
            field: 0.0,
            adaptation_step: 0.0,
        },
    };
    Ok(agent)
}

/// Population shares per agent type, indexed in [`AgentType::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Composition {
    shares: [f64; 4],
}

const SHARE_TOLERANCE: f64 = 1e-9;

impl Composition {
    pub fn new(selfish: f64, copying: f64, ethical: f64, random: f64) -> Result<Self> {
        let shares = [selfish, copying, ethical, random];
        for (kind, &s) in AgentType::ALL.iter().zip(&shares) {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::invalid(
                    format!("share_{}", kind.tag()),
                    format!("share must lie in [0, 1], got {s}"),
                ));
            }
        }
        let total: f64 = shares.iter().sum();
        if (total - 1.0).abs() > SHARE_TOLERANCE {
            return Err(Error::invalid(
                "composition",
                format!("shares must sum to 1, got {total}"),
            ));
        }
        Ok(Composition { shares })
    }

    pub fn pure(kind: AgentType) -> Self {
        let mut shares = [0.0; 4];
        shares[kind.ordinal()] = 1.0;
        Composition { shares }
    }

    pub fn share(&self, kind: AgentType) -> f64 {
        self.shares[kind.ordinal()]
    }

    /// Integer type counts for `n` agents: `floor(share * n)` plus the
    /// leftover agents handed out by largest fractional remainder (ties go to
    /// the earlier type). Counts always sum to `n`.
    pub fn counts(&self, n: usize) -> [usize; 4] {
        let exact: Vec<f64> = self.shares.iter().map(|s| s * n as f64).collect();
        let mut counts = [0usize; 4];
        for (c, e) in counts.iter_mut().zip(&exact) {
            *c = e.floor() as usize;
        }
        let assigned: usize = counts.iter().sum();
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&i, &j| {
            let (ri, rj) = (exact[i] - exact[i].floor(), exact[j] - exact[j].floor());
            rj.partial_cmp(&ri).unwrap().then(i.cmp(&j))
        });
        if assigned <= n {
            for &i in order.iter().cycle().take(n - assigned) {
                counts[i] += 1;
            }
        } else {
            // float overshoot; only possible by rounding noise
            for &i in order.iter().rev().cycle().take(assigned - n) {
                counts[i] = counts[i].saturating_sub(1);
            }
        }
        counts
    }
}

/// Agents placed on the lattice, one per site.
#[derive(Debug, Clone, PartialEq)]
pub struct Society {
    dims: Dims,
    agents: Vec<Agent>,
}

impl Society {
    pub fn from_agents(dims: Dims, agents: Vec<Agent>) -> Result<Self> {
        if agents.len() != dims.sites() {
            return Err(Error::DimensionMismatch {
                expected: dims.sites(),
                found: agents.len(),
            });
        }
        Ok(Society { dims, agents })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub(crate) fn agents_mut(&mut self) -> &mut [Agent] {
        &mut self.agents
    }

    pub fn count(&self, kind: AgentType) -> usize {
        self.agents.iter().filter(|a| a.kind == kind).count()
    }

    /// Mean field of selfish agents, `None` if there are none.
    pub fn mean_selfish_field(&self) -> Option<f64> {
        let (sum, n) = self
            .agents
            .iter()
            .filter(|a| a.kind == AgentType::Selfish)
            .fold((0.0, 0usize), |(s, n), a| (s + a.field, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

/// Builds a society: exact type counts from [`Composition::counts`], a
/// uniformly shuffled type-to-site assignment, then per-site parameter draws
/// in raster order.
pub fn build_society<R: Rng + ?Sized>(
    composition: &Composition,
    dims: Dims,
    delta_b_max: f64,
    rng: &mut R,
) -> Result<Society> {
    let counts = composition.counts(dims.sites());
    let mut kinds: Vec<AgentType> = AgentType::ALL
        .iter()
        .zip(counts)
        .flat_map(|(&k, c)| std::iter::repeat_n(k, c))
        .collect();
    kinds.shuffle(rng);
    let agents = kinds
        .into_iter()
        .map(|k| sample_agent(k, delta_b_max, rng))
        .collect::<Result<Vec<_>>>()?;
    Society::from_agents(dims, agents)
}

/// Initial behavior assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitPolicy {
    AllCompliant,
    AllNonCompliant,
    /// Start value per agent type, in [`AgentType::ALL`] order.
    PerType([Spin; 4]),
}

impl InitPolicy {
    /// Selfish agents evading, everyone else compliant.
    pub const SELFISH_EVADE: InitPolicy = InitPolicy::PerType([
        Spin::Evading,
        Spin::Compliant,
        Spin::Compliant,
        Spin::Compliant,
    ]);

    pub fn spin_for(&self, kind: AgentType) -> Spin {
        match self {
            InitPolicy::AllCompliant => Spin::Compliant,
            InitPolicy::AllNonCompliant => Spin::Evading,
            InitPolicy::PerType(v) => v[kind.ordinal()],
        }
    }
}

impl fmt::Display for InitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitPolicy::AllCompliant => write!(f, "compliant"),
            InitPolicy::AllNonCompliant => write!(f, "noncompliant"),
            InitPolicy::PerType(v) => {
                let parts: Vec<String> = AgentType::ALL
                    .iter()
                    .zip(v)
                    .map(|(k, s)| format!("{}:{}", k.tag(), s.value()))
                    .collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

impl FromStr for InitPolicy {
    type Err = Error;

    /// `compliant`, `noncompliant`, or a per-type list such as `a:-1,b:1`
    /// (unlisted types start compliant).
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "compliant" | "all_compliant" => return Ok(InitPolicy::AllCompliant),
            "noncompliant" | "all_noncompliant" => return Ok(InitPolicy::AllNonCompliant),
            "per_type" => return Ok(InitPolicy::SELFISH_EVADE),
            _ => {}
        }
        let mut v = [Spin::Compliant; 4];
        for part in s.split(',') {
            let (k, val) = part
                .split_once(':')
                .ok_or_else(|| Error::invalid("init", format!("malformed entry `{part}`")))?;
            let kind: AgentType = k.parse()?;
            let spin = val
                .trim()
                .parse::<i32>()
                .ok()
                .and_then(Spin::from_value)
                .ok_or_else(|| Error::invalid("init", format!("spin must be 1 or -1, got `{val}`")))?;
            v[kind.ordinal()] = spin;
        }
        Ok(InitPolicy::PerType(v))
    }
}

pub fn init_spins(policy: InitPolicy, society: &Society) -> SpinGrid {
    let spins = society
        .agents()
        .iter()
        .map(|a| policy.spin_for(a.kind))
        .collect();
    SpinGrid::from_spins(society.dims(), spins).expect("society and grid share dims")
}

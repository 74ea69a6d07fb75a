//! Declarative conditioning protocols and the checks that define each
//! phenomenon.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::conditioning::{CircuitConfig, ConditioningCircuit, TrialSpec};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

pub const PHENOMENA: [&str; 6] = [
    "acquisition",
    "extinction",
    "reacquisition-savings",
    "spontaneous-recovery",
    "blocking",
    "conditioned-inhibition",
];

/// A run stops early once a trial's CR crosses the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    CrAtLeast(f64),
    CrAtMost(f64),
}

impl StopRule {
    fn met(&self, cr: f64) -> bool {
        match *self {
            StopRule::CrAtLeast(x) => cr >= x,
            StopRule::CrAtMost(x) => cr <= x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phase {
    /// `trials` learning trials cycling through `schedule`.
    Train {
        label: String,
        trials: usize,
        schedule: Vec<TrialSpec>,
        #[serde(default)]
        stop: Option<StopRule>,
    },
    /// Test trials without learning.
    Probe { label: String, trials: usize, spec: TrialSpec },
    Rest { label: String, ms: f64 },
}

impl Phase {
    pub fn label(&self) -> &str {
        match self {
            Phase::Train { label, .. } | Phase::Probe { label, .. } | Phase::Rest { label, .. } => label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub name: String,
    pub phases: Vec<Phase>,
}

impl Protocol {
    pub fn validate(&self) -> Result<()> {
        for p in &self.phases {
            match p {
                Phase::Train { trials, schedule, .. } => {
                    if *trials == 0 || schedule.is_empty() {
                        return Err(Error::param(p.label(), "training phase needs trials >= 1 and a schedule"));
                    }
                    if schedule.iter().any(|s| !(s.isi >= 0.0)) {
                        return Err(Error::param(p.label(), "interval must be >= 0"));
                    }
                }
                Phase::Probe { trials, spec, .. } => {
                    if *trials == 0 || !(spec.isi >= 0.0) {
                        return Err(Error::param(p.label(), "probe needs trials >= 1 and interval >= 0"));
                    }
                }
                Phase::Rest { ms, .. } => {
                    if !(*ms >= 0.0) {
                        return Err(Error::param(p.label(), "rest must be >= 0 ms"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrace {
    pub label: String,
    pub cr: Vec<f64>,
}

impl PhaseTrace {
    pub fn mean(&self) -> f64 {
        if self.cr.is_empty() {
            0.0
        } else {
            self.cr.iter().sum::<f64>() / self.cr.len() as f64
        }
    }

    /// Trials needed for the stop rule, or `None` if it never fired.
    pub fn trials_to(&self, rule: StopRule) -> Option<usize> {
        self.cr.iter().position(|&c| rule.met(c)).map(|i| i + 1)
    }
}

pub fn run_protocol(circuit: &mut ConditioningCircuit, protocol: &Protocol) -> Result<Vec<PhaseTrace>> {
    protocol.validate()?;
    let mut out = Vec::new();
    for phase in &protocol.phases {
        let mut cr = Vec::new();
        match phase {
            Phase::Train {
                trials, schedule, stop, ..
            } => {
                for spec in schedule.iter().cycle().take(*trials) {
                    let c = circuit.trial(spec)?.cr;
                    cr.push(c);
                    if stop.is_some_and(|s| s.met(c)) {
                        break;
                    }
                }
            }
            Phase::Probe { trials, spec, .. } => {
                for _ in 0..*trials {
                    cr.push(circuit.probe(spec)?.cr);
                }
            }
            Phase::Rest { ms, .. } => circuit.rest(*ms)?,
        }
        out.push(PhaseTrace {
            label: phase.label().to_string(),
            cr,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhenomenaSettings {
    pub isi: f64,
    pub max_trials: usize,
    pub criterion: f64,
    pub extinguished: f64,
    pub probes: usize,
    pub rest_ms: f64,
    pub blocked_max: f64,
    pub control_min: f64,
    pub recovery_min: f64,
    pub savings_ratio: f64,
    pub inhibition_margin: f64,
}

impl Default for PhenomenaSettings {
    fn default() -> Self {
        Self {
            isi: 250.0,
            max_trials: 50,
            criterion: 0.8,
            extinguished: 0.2,
            probes: 5,
            rest_ms: 24.0 * 3_600_000.0,
            blocked_max: 0.3,
            control_min: 0.8,
            recovery_min: 0.2,
            savings_ratio: 0.5,
            inhibition_margin: 0.3,
        }
    }
}

const A: usize = 0;
const B: usize = 1;
const X: usize = 2;
const Y: usize = 3;

fn spec(cs: &[usize], us: bool, s: &PhenomenaSettings) -> TrialSpec {
    TrialSpec::new(cs.to_vec(), us, s.isi)
}

fn train(label: &str, trials: usize, schedule: Vec<TrialSpec>, stop: Option<StopRule>) -> Phase {
    Phase::Train {
        label: label.into(),
        trials,
        schedule,
        stop,
    }
}

fn probe(label: &str, cs: &[usize], s: &PhenomenaSettings) -> Phase {
    Phase::Probe {
        label: label.into(),
        trials: s.probes,
        spec: spec(cs, false, s),
    }
}

/// Protocol scripts by phenomenon name. Blocking has a second script, its
/// unblocked control, under `blocking-control`.
pub fn protocol(name: &str, s: &PhenomenaSettings) -> Result<Protocol> {
    let n = s.max_trials;
    let paired = |cs: &[usize]| vec![spec(cs, true, s)];
    let alone = |cs: &[usize]| vec![spec(cs, false, s)];
    let up = Some(StopRule::CrAtLeast(s.criterion));
    let phases = match name {
        "acquisition" => vec![train("acquisition", n, paired(&[A]), None), probe("novel", &[Y], s)],
        "extinction" => vec![
            train("acquisition", n, paired(&[A]), None),
            train("extinction", n, alone(&[A]), None),
            probe("novel", &[Y], s),
        ],
        "reacquisition-savings" => vec![
            train("acquisition", n, paired(&[A]), up),
            train("overtraining", n, paired(&[A]), None),
            train("extinction", n, alone(&[A]), None),
            train("reacquisition", n, paired(&[A]), up),
        ],
        "spontaneous-recovery" => vec![
            train("acquisition", n, paired(&[A]), None),
            train("extinction", n, alone(&[A]), None),
            probe("after-extinction", &[A], s),
            Phase::Rest {
                label: "rest".into(),
                ms: s.rest_ms,
            },
            probe("after-rest", &[A], s),
        ],
        "blocking" | "blocking-control" => {
            let pre = if name == "blocking" { A } else { X };
            vec![
                train("pretraining", n, paired(&[pre]), None),
                train("compound", n, paired(&[A, B]), None),
                probe("test-b", &[B], s),
                probe("novel", &[Y], s),
            ]
        }
        "conditioned-inhibition" => vec![
            train("excitor-b", n, paired(&[B]), None),
            train("a-plus-ax-minus", 2 * n, vec![spec(&[A], true, s), spec(&[A, X], false, s)], None),
            probe("b", &[B], s),
            probe("bx", &[B, X], s),
            probe("by", &[B, Y], s),
            probe("novel", &[Y], s),
        ],
        other => {
            return Err(Error::Unknown {
                kind: "phenomenon",
                name: other.into(),
                registered: PHENOMENA.join(", "),
            })
        }
    };
    Ok(Protocol {
        name: name.into(),
        phases,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenomenonResult {
    pub name: String,
    pub pass: bool,
    pub metrics: BTreeMap<String, f64>,
    pub trace: Vec<PhaseTrace>,
}

fn find<'a>(trace: &'a [PhaseTrace], label: &str) -> &'a PhaseTrace {
    trace.iter().find(|t| t.label == label).expect("label from our own script")
}

/// Run a phenomenon's script on fresh circuits from `factory` and check its
/// defining inequality.
pub fn run_phenomenon(
    name: &str,
    factory: &dyn Fn(u64) -> Result<ConditioningCircuit>,
    settings: &PhenomenaSettings,
    seed: u64,
) -> Result<PhenomenonResult> {
    let s = settings;
    let p = protocol(name, s)?;
    let mut circuit = factory(derive_seed(seed, name, 0))?;
    let trace = run_protocol(&mut circuit, &p)?;
    let mut m = BTreeMap::new();
    let up = StopRule::CrAtLeast(s.criterion);
    let never = (s.max_trials + 1) as f64;
    let pass = match name {
        "acquisition" => {
            let acq = find(&trace, "acquisition");
            let t = acq.trials_to(up).map_or(never, |t| t as f64);
            let tail = &acq.cr[acq.cr.len().saturating_sub(10)..];
            let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
            m.insert("trials_to_criterion".into(), t);
            m.insert("final_cr".into(), tail_mean);
            m.insert("novel_cr".into(), find(&trace, "novel").mean());
            t <= s.max_trials as f64 && tail_mean >= s.criterion
        }
        "extinction" => {
            let ext = find(&trace, "extinction");
            let t = ext
                .trials_to(StopRule::CrAtMost(s.extinguished))
                .map_or(never, |t| t as f64);
            let tail = &ext.cr[ext.cr.len().saturating_sub(5)..];
            m.insert("trials_to_extinction".into(), t);
            m.insert("final_cr".into(), tail.iter().sum::<f64>() / tail.len() as f64);
            m.insert("novel_cr".into(), find(&trace, "novel").mean());
            t <= s.max_trials as f64
        }
        "reacquisition-savings" => {
            let a = find(&trace, "acquisition").trials_to(up).map_or(never, |t| t as f64);
            let r = find(&trace, "reacquisition").trials_to(up).map_or(never, |t| t as f64);
            m.insert("acquisition_trials".into(), a);
            m.insert("reacquisition_trials".into(), r);
            m.insert("extinction_final_cr".into(), *find(&trace, "extinction").cr.last().unwrap_or(&0.0));
            a <= s.max_trials as f64 && r <= s.savings_ratio * a
        }
        "spontaneous-recovery" => {
            let before = find(&trace, "after-extinction").mean();
            let after = find(&trace, "after-rest").mean();
            m.insert("cr_after_extinction".into(), before);
            m.insert("cr_after_rest".into(), after);
            m.insert("rebound".into(), after - before);
            before <= s.extinguished && after - before >= s.recovery_min
        }
        "blocking" => {
            let blocked = find(&trace, "test-b").mean();
            let mut control = factory(derive_seed(seed, name, 1))?;
            let ctrl_trace = run_protocol(&mut control, &protocol("blocking-control", s)?)?;
            let unblocked = find(&ctrl_trace, "test-b").mean();
            m.insert("cr_b_blocked".into(), blocked);
            m.insert("cr_b_control".into(), unblocked);
            m.insert("novel_cr".into(), find(&trace, "novel").mean());
            blocked <= s.blocked_max && unblocked >= s.control_min
        }
        "conditioned-inhibition" => {
            let (b, bx, by) = (
                find(&trace, "b").mean(),
                find(&trace, "bx").mean(),
                find(&trace, "by").mean(),
            );
            m.insert("cr_b".into(), b);
            m.insert("cr_bx".into(), bx);
            m.insert("cr_by".into(), by);
            m.insert("novel_cr".into(), find(&trace, "novel").mean());
            b >= s.criterion && bx <= b - s.inhibition_margin && bx <= by - s.inhibition_margin
        }
        _ => unreachable!("protocol() rejects unknown names"),
    };
    Ok(PhenomenonResult {
        name: name.into(),
        pass,
        metrics: m,
        trace,
    })
}

/// Factory producing circuits with the given configuration.
pub fn circuit_factory(config: CircuitConfig) -> impl Fn(u64) -> Result<ConditioningCircuit> {
    move |seed| ConditioningCircuit::new(config.clone(), seed)
}

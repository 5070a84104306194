//! On-disk formats: instance and trajectory JSON, lift output, CSV.
//!
//! Floats are always written with 17 significant digits so a reload gives back the same bits
//! and re-serializing is byte-identical.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use trajopt_core::conserved::GeneralizedInstance;
use trajopt_core::problem::{DEFAULT_EPS_GRAD, DEFAULT_EPS_POP};
use trajopt_core::trajectory::{OptimalTrajectory, TIE_BREAK_POLICY};
use trajopt_core::ProblemInstance;

fn default_eps_pop() -> f64 {
    DEFAULT_EPS_POP
}

fn default_eps_grad() -> f64 {
    DEFAULT_EPS_GRAD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub eigenvalues: Vec<f64>,
    pub target: Vec<f64>,
    pub cost: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conserved: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_populations: Option<Vec<f64>>,
    #[serde(default = "default_eps_pop")]
    pub eps_pop: f64,
    #[serde(default = "default_eps_grad")]
    pub eps_grad: f64,
}

impl InstanceFile {
    pub fn to_instance(&self) -> ProblemInstance {
        let mut inst =
            ProblemInstance::new(self.eigenvalues.clone(), self.target.clone(), self.cost.clone());
        inst.conserved = self.conserved.clone();
        inst.initial_populations = self.initial_populations.clone();
        inst.eps_pop = self.eps_pop;
        inst.eps_grad = self.eps_grad;
        inst
    }

    pub fn from_instance(inst: &ProblemInstance) -> Self {
        Self {
            eigenvalues: inst.lambda.clone(),
            target: inst.target.clone(),
            cost: inst.cost.clone(),
            conserved: inst.conserved.clone(),
            initial_populations: inst.initial_populations.clone(),
            eps_pop: inst.eps_pop,
            eps_grad: inst.eps_grad,
        }
    }
}

/// Swap between original basis indices `k` and `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRecord {
    pub k: usize,
    pub l: usize,
    pub gradient: f64,
    pub alpha_start: f64,
    pub alpha_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub tie_break: String,
    pub eps_pop: f64,
    pub eps_grad: f64,
    pub version: String,
}

/// A built trajectory in original basis coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryFile {
    pub alpha_range: [f64; 2],
    pub breakpoints: Vec<[f64; 2]>,
    pub steps: Vec<StepRecord>,
    pub vertices: Vec<Vec<f64>>,
    pub metadata: Metadata,
}

impl TrajectoryFile {
    pub fn from_trajectory(traj: &OptimalTrajectory, inst: &ProblemInstance) -> Self {
        let (lo, hi) = traj.alpha_range();
        Self {
            alpha_range: [lo, hi],
            breakpoints: traj.breakpoints.iter().map(|&(a, w)| [a, w]).collect(),
            steps: traj
                .steps
                .iter()
                .map(|s| {
                    let (k, l) = s.original_pair(&traj.order);
                    StepRecord {
                        k,
                        l,
                        gradient: s.gradient,
                        alpha_start: s.alpha_start,
                        alpha_end: s.alpha_end,
                    }
                })
                .collect(),
            vertices: (0..traj.vertices.len()).map(|i| traj.vertex_original(i)).collect(),
            metadata: Metadata {
                tie_break: TIE_BREAK_POLICY.to_string(),
                eps_pop: inst.eps_pop,
                eps_grad: inst.eps_grad,
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftFile {
    pub alpha: f64,
    /// Row-major.
    pub unitary: Vec<Vec<f64>>,
    pub doubly_stochastic: Vec<Vec<f64>>,
    pub populations: Vec<f64>,
}

/// Builds the trajectory for an instance, dispatching on the conserved observable.
pub fn build_any(inst: &ProblemInstance) -> trajopt_core::Result<OptimalTrajectory> {
    if inst.conserved.is_some() {
        let g = GeneralizedInstance::new(inst.clone())?;
        trajopt_core::conserved::build_generalized(&g)
    } else {
        trajopt_core::build(inst)
    }
}

/// As [`build_any`] but starting from the vertex `start` (original coordinates).
pub fn build_any_from(inst: &ProblemInstance, start: &[f64]) -> trajopt_core::Result<OptimalTrajectory> {
    if inst.conserved.is_some() {
        let g = GeneralizedInstance::new(inst.clone())?;
        trajopt_core::conserved::build_generalized_from(&g, start)
    } else {
        trajopt_core::build_from(inst, start)
    }
}

/// Pretty JSON with `{:.16e}` floats.
struct FixedFloats(PrettyFormatter<'static>);

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", fmt_f64(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// 17 significant digits, scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

//! Cooling instances: a system coupled to a thermal machine (coherent), optionally with a hot
//! bath under energy conservation (incoherent).
//!
//! Joint basis states are indexed row-major, `n = (i · d_M + j) · d_B + k` for system level
//! `i`, machine level `j`, bath level `k` (`d_B = 1` in the coherent case). Inverse
//! temperatures use `k_B = 1`; entropies are in nats.

use crate::conserved::GeneralizedInstance;
use crate::error::{Error, Result};
use crate::problem::{validate, ProblemInstance};

/// Default cap on the joint dimension.
pub const DEFAULT_MAX_DIM: usize = 4096;

const GROUND_TOL: f64 = 1e-12;

/// Energies of a local subsystem and, optionally, its initial (diagonal) populations.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub energies: Vec<f64>,
    pub populations: Option<Vec<f64>>,
}

impl SystemSpec {
    pub fn new(energies: Vec<f64>) -> Self {
        Self {
            energies,
            populations: None,
        }
    }

    pub fn with_populations(mut self, p: Vec<f64>) -> Self {
        self.populations = Some(p);
        self
    }

    /// Initial populations, thermal at `beta` unless given explicitly.
    fn populations_at(&self, beta: f64) -> Result<Vec<f64>> {
        match &self.populations {
            Some(p) if p.len() != self.energies.len() => Err(Error::DimensionMismatch {
                field: "populations",
                expected: self.energies.len(),
                found: p.len(),
            }),
            Some(p) => Ok(p.clone()),
            None => Ok(thermal_populations(&self.energies, beta)),
        }
    }

    fn check(&self, field: &'static str) -> Result<()> {
        if self.energies.is_empty() {
            return Err(Error::DimensionMismatch {
                field,
                expected: 1,
                found: 0,
            });
        }
        if self.energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite { field });
        }
        Ok(())
    }

    fn ground_levels(&self) -> Vec<bool> {
        let min = self.energies.iter().copied().fold(f64::INFINITY, f64::min);
        self.energies
            .iter()
            .map(|&e| e - min <= GROUND_TOL)
            .collect()
    }
}

/// Gibbs weights `e^{−βE} / Z`. `β = 0` is uniform; `β = ∞` spreads over the ground level(s).
pub fn thermal_populations(energies: &[f64], beta: f64) -> Vec<f64> {
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = if beta == f64::INFINITY {
        energies
            .iter()
            .map(|&e| if e - min <= GROUND_TOL { 1.0 } else { 0.0 })
            .collect()
    } else if beta == 0.0 {
        vec![1.0; energies.len()]
    } else {
        energies.iter().map(|&e| (-beta * (e - min)).exp()).collect()
    };
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoolingKind {
    Coherent,
    Incoherent { bath: SystemSpec, beta_bath: f64 },
}

/// A cooling problem and the bookkeeping needed to interpret it.
#[derive(Debug, Clone, PartialEq)]
pub struct CoolingInstance {
    pub instance: ProblemInstance,
    pub system: SystemSpec,
    pub machine: SystemSpec,
    /// Inverse temperature of the environment (machine).
    pub beta: f64,
    pub kind: CoolingKind,
    /// Joint indices on which the target is 1.
    pub ground_indices: Vec<usize>,
}

impl CoolingInstance {
    pub fn system_dim(&self) -> usize {
        self.system.energies.len()
    }

    pub fn machine_dim(&self) -> usize {
        self.machine.energies.len()
    }

    pub fn bath_dim(&self) -> usize {
        match &self.kind {
            CoolingKind::Coherent => 1,
            CoolingKind::Incoherent { bath, .. } => bath.energies.len(),
        }
    }

    /// Joint index of `(system, machine, bath)` levels.
    pub fn index(&self, s: usize, m: usize, b: usize) -> usize {
        (s * self.machine_dim() + m) * self.bath_dim() + b
    }

    /// Inverse of [`CoolingInstance::index`].
    pub fn levels(&self, n: usize) -> (usize, usize, usize) {
        let db = self.bath_dim();
        let dm = self.machine_dim();
        (n / (dm * db), (n / db) % dm, n % db)
    }

    fn is_qubit_system(&self) -> bool {
        self.system_dim() == 2
    }

    /// The generalized view of an incoherent instance.
    pub fn generalized(&self) -> Result<GeneralizedInstance> {
        match self.kind {
            CoolingKind::Incoherent { .. } => GeneralizedInstance::new(self.instance.clone()),
            CoolingKind::Coherent => Err(Error::WrongInstanceKind {
                expected: "an incoherent cooling instance",
            }),
        }
    }
}

fn kron(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().flat_map(|&a| y.iter().map(move |&b| a * b)).collect()
}

fn check_dim(d: usize, max: usize) -> Result<()> {
    if d > max {
        Err(Error::DimensionOverflow { dim: d, max })
    } else {
        Ok(())
    }
}

/// System ⊗ thermal machine; target is the system ground population, cost the total energy.
pub fn coherent_instance(sys: &SystemSpec, machine: &SystemSpec, beta: f64) -> Result<CoolingInstance> {
    coherent_instance_capped(sys, machine, beta, DEFAULT_MAX_DIM)
}

pub fn coherent_instance_capped(
    sys: &SystemSpec,
    machine: &SystemSpec,
    beta: f64,
    max_dim: usize,
) -> Result<CoolingInstance> {
    sys.check("system energies")?;
    machine.check("machine energies")?;
    let (ds, dm) = (sys.energies.len(), machine.energies.len());
    check_dim(ds * dm, max_dim)?;
    let ps = sys.populations_at(beta)?;
    let tau = thermal_populations(&machine.energies, beta);
    let lambda = kron(&ps, &tau);
    let ground = sys.ground_levels();
    let mut target = Vec::with_capacity(ds * dm);
    let mut cost = Vec::with_capacity(ds * dm);
    let mut ground_indices = Vec::new();
    for (i, (&g, &es)) in ground.iter().zip(&sys.energies).enumerate() {
        for (j, &em) in machine.energies.iter().enumerate() {
            if g {
                ground_indices.push(i * dm + j);
            }
            target.push(if g { 1.0 } else { 0.0 });
            cost.push(es + em);
        }
    }
    let instance = validate(
        ProblemInstance::new(lambda.clone(), target, cost).with_initial_populations(lambda),
    )?;
    Ok(CoolingInstance {
        instance,
        system: sys.clone(),
        machine: machine.clone(),
        beta,
        kind: CoolingKind::Coherent,
        ground_indices,
    })
}

/// System ⊗ machine ⊗ bath under energy-preserving unitaries; cost is the bath energy.
///
/// The system defaults to thermal at `beta_machine`; the bath is thermal at `beta_bath`.
pub fn incoherent_instance(
    sys: &SystemSpec,
    machine: &SystemSpec,
    bath: &SystemSpec,
    beta_machine: f64,
    beta_bath: f64,
) -> Result<CoolingInstance> {
    sys.check("system energies")?;
    machine.check("machine energies")?;
    bath.check("bath energies")?;
    let (ds, dm, db) = (sys.energies.len(), machine.energies.len(), bath.energies.len());
    check_dim(ds * dm * db, DEFAULT_MAX_DIM)?;
    let ps = sys.populations_at(beta_machine)?;
    let tm = thermal_populations(&machine.energies, beta_machine);
    let tb = bath.populations_at(beta_bath)?;
    let lambda = kron(&kron(&ps, &tm), &tb);
    let ground = sys.ground_levels();
    let d = ds * dm * db;
    let mut target = Vec::with_capacity(d);
    let mut cost = Vec::with_capacity(d);
    let mut conserved = Vec::with_capacity(d);
    let mut ground_indices = Vec::new();
    for (i, (&g, &es)) in ground.iter().zip(&sys.energies).enumerate() {
        for (j, &em) in machine.energies.iter().enumerate() {
            for (k, &eb) in bath.energies.iter().enumerate() {
                if g {
                    ground_indices.push((i * dm + j) * db + k);
                }
                target.push(if g { 1.0 } else { 0.0 });
                cost.push(eb);
                conserved.push(es + em + eb);
            }
        }
    }
    let instance = validate(
        ProblemInstance::new(lambda.clone(), target, cost)
            .with_conserved(conserved)
            .with_initial_populations(lambda),
    )?;
    Ok(CoolingInstance {
        instance,
        system: sys.clone(),
        machine: machine.clone(),
        beta: beta_machine,
        kind: CoolingKind::Incoherent {
            bath: bath.clone(),
            beta_bath,
        },
        ground_indices,
    })
}

fn binary_entropy(x: f64) -> f64 {
    let h = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    h(x) + h(1.0 - x)
}

/// Free-energy change of a qubit system moved from its initial ground population to `alpha`.
///
/// `ΔF(α) = [E_S(α) − S(α)/β] − [E_S(α_in) − S(α_in)/β]` with the system state `diag(α, 1 − α)`.
pub fn free_energy_bound(inst: &CoolingInstance, alpha: f64) -> Result<f64> {
    if !inst.is_qubit_system() {
        return Err(Error::WrongInstanceKind {
            expected: "a qubit system",
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange {
            alpha,
            min: 0.0,
            max: 1.0,
        });
    }
    let alpha_in = inst.instance.alpha_in().ok_or(Error::WrongInstanceKind {
        expected: "an instance with initial populations",
    })?;
    let e = &inst.system.energies;
    let (e_ground, e_excited) = if e[0] <= e[1] { (e[0], e[1]) } else { (e[1], e[0]) };
    let free = |x: f64| {
        let energy = x * e_ground + (1.0 - x) * e_excited;
        if inst.beta == f64::INFINITY {
            energy
        } else {
            energy - binary_entropy(x) / inst.beta
        }
    };
    Ok(free(alpha) - free(alpha_in))
}

/// Populations `p` (original coordinates) are non-increasing with machine energy inside
/// every system level.
pub fn subspace_passive(p: &[f64], inst: &CoolingInstance, eps: f64) -> Result<bool> {
    if inst.kind != CoolingKind::Coherent {
        return Err(Error::WrongInstanceKind {
            expected: "a coherent cooling instance",
        });
    }
    let dm = inst.machine_dim();
    let em = &inst.machine.energies;
    for s in 0..inst.system_dim() {
        for m in 0..dm {
            for n in 0..dm {
                if em[m] > em[n] + GROUND_TOL && p[s * dm + m] > p[s * dm + n] + eps {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Gradient of the swap `|0 i⟩ ↔ |1 j⟩` for a qubit system: `E_i − E_j − E_S`.
pub fn qubit_gradient(inst: &CoolingInstance, i: usize, j: usize) -> Result<f64> {
    if inst.kind != CoolingKind::Coherent || !inst.is_qubit_system() {
        return Err(Error::WrongInstanceKind {
            expected: "a coherent qubit cooling instance",
        });
    }
    let dm = inst.machine_dim();
    for index in [i, j] {
        if index >= dm {
            return Err(Error::IndexOutOfRange { index, dim: dm });
        }
    }
    let es = inst.system.energies[1] - inst.system.energies[0];
    Ok(inst.machine.energies[i] - inst.machine.energies[j] - es)
}

/// The qubit-plus-four-level-machine example: maximally mixed qubit with gap `0.3`, machine
/// spectrum `(0, 0.1, 0.4, 1.1)`, `β = 1`.
pub fn working_example() -> CoolingInstance {
    let sys = SystemSpec::new(vec![0.0, 0.3]).with_populations(vec![0.5, 0.5]);
    let machine = SystemSpec::new(vec![0.0, 0.1, 0.4, 1.1]);
    coherent_instance(&sys, &machine, 1.0).expect("fixture is valid")
}

/// Qubit system, qutrit machine and qubit bath, all with level spacing `delta`.
pub fn incoherent_example(
    delta: f64,
    system_populations: Option<Vec<f64>>,
    beta_machine: f64,
    beta_bath: f64,
) -> CoolingInstance {
    let mut sys = SystemSpec::new(vec![0.0, delta]);
    sys.populations = system_populations;
    let machine = SystemSpec::new(vec![0.0, delta, 2.0 * delta]);
    let bath = SystemSpec::new(vec![0.0, delta]);
    incoherent_instance(&sys, &machine, &bath, beta_machine, beta_bath).expect("fixture is valid")
}

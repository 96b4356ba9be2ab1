//! Trajectory integration of the semispray flow, with per-sample
//! conservation diagnostics.
//!
//! Integration methods implement [`Integrator`] and are registered by
//! name; [`integrator_by_name`] is how configs and CLI flags select one.

use nalgebra::DVector;

use crate::autodiff::Jet2;
use crate::dim::Dimension;
use crate::dynamics::{
    el_residual_from_jet, hessian_rcond, solve_semispray_from_jet, DynamicsError,
    DEFAULT_RCOND_THRESHOLD,
};
use crate::geometry::StructureMatrix;
use crate::lagrangian::{LagrangianError, LagrangianField};

/// A structure paired with a regular Lagrangian: everything the flow needs.
pub struct MechanicalSystem<'a> {
    structure: &'a StructureMatrix,
    lagrangian: &'a LagrangianField,
    rcond_threshold: f64,
}

impl<'a> MechanicalSystem<'a> {
    pub fn new(
        structure: &'a StructureMatrix,
        lagrangian: &'a LagrangianField,
    ) -> Result<Self, DynamicsError> {
        if structure.dim() != lagrangian.dim() {
            return Err(crate::dim::DimError::OperandMismatch {
                left: structure.dim().total(),
                right: lagrangian.dim().total(),
            }
            .into());
        }
        Ok(MechanicalSystem {
            structure,
            lagrangian,
            rcond_threshold: DEFAULT_RCOND_THRESHOLD,
        })
    }

    pub fn with_rcond_threshold(mut self, threshold: f64) -> Self {
        self.rcond_threshold = threshold;
        self
    }

    pub fn dim(&self) -> Dimension {
        self.structure.dim()
    }

    pub fn structure(&self) -> &StructureMatrix {
        self.structure
    }

    pub fn lagrangian(&self) -> &LagrangianField {
        self.lagrangian
    }

    fn jet(&self, x: &DVector<f64>) -> Result<Jet2, LagrangianError> {
        self.lagrangian.eval_jet(x)
    }

    /// The semispray velocity at `x`.
    pub fn semispray(&self, x: &DVector<f64>) -> Result<DVector<f64>, DynamicsError> {
        let jet = self.jet(x)?;
        solve_semispray_from_jet(self.structure, &jet, self.rcond_threshold)
    }

    /// Energy `(S v) . grad L - L` at a state.
    pub fn energy(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<f64, DynamicsError> {
        let jet = self.jet(x)?;
        let sv = self.structure.apply(v)?;
        Ok(sv.dot(&jet.gradient) - jet.value)
    }

    fn sample(&self, x: &DVector<f64>) -> Result<Sample, DynamicsError> {
        let jet = self.jet(x)?;
        let v = solve_semispray_from_jet(self.structure, &jet, self.rcond_threshold)?;
        let sv = self.structure.apply(&v)?;
        let energy = sv.dot(&jet.gradient) - jet.value;
        let residual_max = el_residual_from_jet(self.structure, &jet, &v)?.amax();
        let rcond = hessian_rcond(&jet.hessian);
        Ok(Sample {
            v,
            energy,
            residual_max,
            rcond,
        })
    }
}

struct Sample {
    v: DVector<f64>,
    energy: f64,
    residual_max: f64,
    rcond: f64,
}

/// Why a single integration step failed.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StepError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("implicit stage did not converge within {iterations} iterations")]
    StageNotConverged { iterations: usize },
}

/// One-step map of the semispray flow.
pub trait Integrator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Advances the position by one step of size `dt`.
    fn step(
        &self,
        sys: &MechanicalSystem<'_>,
        x: &DVector<f64>,
        dt: f64,
    ) -> Result<DVector<f64>, StepError>;
}

/// Classic fourth-order Runge-Kutta.
pub struct Rk4;

impl Integrator for Rk4 {
    fn name(&self) -> &'static str {
        "rk4"
    }

    fn step(
        &self,
        sys: &MechanicalSystem<'_>,
        x: &DVector<f64>,
        dt: f64,
    ) -> Result<DVector<f64>, StepError> {
        let k1 = sys.semispray(x)?;
        let k2 = sys.semispray(&(x + (dt / 2.0) * &k1))?;
        let k3 = sys.semispray(&(x + (dt / 2.0) * &k2))?;
        let k4 = sys.semispray(&(x + dt * &k3))?;
        Ok(x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    }
}

/// Implicit midpoint rule. The stage point `m = x + dt/2 f(m)` is found
/// by fixed-point iteration, tightened well past the documented 1e-12 so
/// quadratic invariants survive long runs.
pub struct ImplicitMidpoint {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ImplicitMidpoint {
    fn default() -> Self {
        ImplicitMidpoint {
            tolerance: 1e-13,
            max_iterations: 200,
        }
    }
}

impl Integrator for ImplicitMidpoint {
    fn name(&self) -> &'static str {
        "implicit_midpoint"
    }

    fn step(
        &self,
        sys: &MechanicalSystem<'_>,
        x: &DVector<f64>,
        dt: f64,
    ) -> Result<DVector<f64>, StepError> {
        let half = dt / 2.0;
        let mut mid = x + half * sys.semispray(x)?;
        let scale = 1.0f64.max(x.amax());
        for _ in 0..self.max_iterations {
            let next = x + half * sys.semispray(&mid)?;
            let delta = (&next - &mid).amax();
            mid = next;
            if delta <= self.tolerance * scale {
                return Ok(2.0 * mid - x);
            }
        }
        Err(StepError::StageNotConverged {
            iterations: self.max_iterations,
        })
    }
}

/// Integrators available by name.
pub const INTEGRATOR_NAMES: [&str; 2] = ["rk4", "implicit_midpoint"];

/// Looks an integration method up by its registered name.
pub fn integrator_by_name(name: &str) -> Option<Box<dyn Integrator>> {
    match name {
        "rk4" => Some(Box::new(Rk4)),
        "implicit_midpoint" => Some(Box::new(ImplicitMidpoint::default())),
        _ => None,
    }
}

/// A uniformly sampled integral curve with per-sample diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub velocities: Vec<DVector<f64>>,
    pub energies: Vec<f64>,
    pub residual_max: Vec<f64>,
    pub hessian_rcond: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Integration failure carrying whatever was computed before the bad step.
#[derive(Debug, thiserror::Error)]
#[error("integration failed at step {step}: {cause}")]
pub struct IntegrationError {
    pub step: usize,
    pub cause: StepError,
    pub partial: Trajectory,
}

/// Integrates the semispray flow from `x0` for `steps` uniform steps,
/// recording state, velocity and diagnostics at every sample (including
/// the initial one). `dt` must be positive.
pub fn integrate(
    sys: &MechanicalSystem<'_>,
    x0: &DVector<f64>,
    dt: f64,
    steps: usize,
    method: &dyn Integrator,
) -> Result<Trajectory, Box<IntegrationError>> {
    assert!(dt > 0.0, "step size must be positive, got {dt}");
    let mut traj = Trajectory {
        dt,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        velocities: Vec::with_capacity(steps + 1),
        energies: Vec::with_capacity(steps + 1),
        residual_max: Vec::with_capacity(steps + 1),
        hessian_rcond: Vec::with_capacity(steps + 1),
    };
    let record = |traj: &mut Trajectory, i: usize, x: DVector<f64>| -> Result<(), StepError> {
        let sample = sys.sample(&x)?;
        traj.times.push(i as f64 * dt);
        traj.states.push(x);
        traj.velocities.push(sample.v);
        traj.energies.push(sample.energy);
        traj.residual_max.push(sample.residual_max);
        traj.hessian_rcond.push(sample.rcond);
        Ok(())
    };

    let mut x = x0.clone();
    if let Err(cause) = record(&mut traj, 0, x.clone()) {
        return Err(Box::new(IntegrationError {
            step: 0,
            cause,
            partial: traj,
        }));
    }
    for i in 1..=steps {
        x = match method.step(sys, &x, dt) {
            Ok(next) => next,
            Err(cause) => {
                return Err(Box::new(IntegrationError {
                    step: i,
                    cause,
                    partial: traj,
                }))
            }
        };
        if let Err(cause) = record(&mut traj, i, x.clone()) {
            return Err(Box::new(IntegrationError {
                step: i,
                cause,
                partial: traj,
            }));
        }
    }
    Ok(traj)
}

/// Conservation summary of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsReport {
    /// `max_t |E(t) - E(0)|`.
    pub max_energy_drift: f64,
    /// Largest Euler-Lagrange residual seen at any sample.
    pub max_residual: f64,
    /// Worst (smallest) Hessian reciprocal-condition estimate seen.
    pub min_hessian_rcond: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagnoseError {
    #[error("cannot diagnose an empty trajectory")]
    EmptyTrajectory,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

impl From<LagrangianError> for DiagnoseError {
    fn from(e: LagrangianError) -> Self {
        DiagnoseError::Dynamics(e.into())
    }
}

impl From<crate::dim::DimError> for DiagnoseError {
    fn from(e: crate::dim::DimError) -> Self {
        DiagnoseError::Dynamics(e.into())
    }
}

/// Recomputes conservation diagnostics for a trajectory under the given
/// structure and Lagrangian.
pub fn diagnose(
    traj: &Trajectory,
    s: &StructureMatrix,
    l: &LagrangianField,
) -> Result<DiagnosticsReport, DiagnoseError> {
    if traj.is_empty() {
        return Err(DiagnoseError::EmptyTrajectory);
    }
    let mut e0 = 0.0;
    let mut report = DiagnosticsReport {
        max_energy_drift: 0.0,
        max_residual: 0.0,
        min_hessian_rcond: f64::INFINITY,
    };
    for (i, (x, v)) in traj.states.iter().zip(&traj.velocities).enumerate() {
        let jet = l.eval_jet(x)?;
        let sv = s.apply(v)?;
        let energy = sv.dot(&jet.gradient) - jet.value;
        if i == 0 {
            e0 = energy;
        }
        report.max_energy_drift = report.max_energy_drift.max((energy - e0).abs());
        let residual = el_residual_from_jet(s, &jet, v)?;
        report.max_residual = report.max_residual.max(residual.amax());
        report.min_hessian_rcond = report.min_hessian_rcond.min(hessian_rcond(&jet.hessian));
    }
    Ok(report)
}

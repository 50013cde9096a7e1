//! Explicit time integration of `du/dt = sum_ij (u^ij)_ij` and the analyses
//! run on the resulting traces.

mod analysis;

pub use analysis::{
    blowup_extract, blowup_potential, dissipation_checks, fit_decay_rate, fit_log_linear, Blowup,
    DecayFit, DissipationReport, DissipationSample,
};

use crate::error::{Error, Result};
use crate::field::PeriodicField;
use crate::geometry::{self, CurvatureForm};
use crate::potential::SymplecticPotential;

/// Accepted steps between attempts to double a previously halved step.
pub const DOUBLING_INTERVAL: usize = 20;
/// Calabi energy growth factor treated as a suspected blow-up.
pub const BLOWUP_FACTOR: f64 = 1e3;
/// Default `ca_stop` relative to `max(1, Ca(0))`.
pub const DEFAULT_CA_STOP: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig {
    pub t_end: f64,
    /// Safety factor in `dt = sigma * h^4 / (max eig u^ij)^2`.
    pub sigma: f64,
    pub dt_min: f64,
    /// Stop once `Ca < ca_stop`. `None` means `1e-14 * max(1, Ca(0))`;
    /// `Some(0.0)` disables the check.
    pub ca_stop: Option<f64>,
    /// Accepted steps between snapshots.
    pub record_every: usize,
    pub m_segments: usize,
    pub seed: u64,
    /// Accepted steps between diagnostics records.
    pub diagnostics_every: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            t_end: 1e-2,
            sigma: 0.02,
            dt_min: 1e-14,
            ca_stop: None,
            record_every: 100,
            m_segments: 32,
            seed: 0,
            diagnostics_every: 1,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return bad(format!("sigma must lie in (0, 1], got {}", self.sigma));
        }
        if !(self.dt_min.is_finite() && self.dt_min > 0.0) {
            return bad(format!("dt_min must be positive, got {}", self.dt_min));
        }
        if let Some(s) = self.ca_stop {
            if !(s.is_finite() && s >= 0.0) {
                return bad(format!("ca_stop must be non-negative, got {s}"));
            }
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        if self.diagnostics_every == 0 {
            return bad("diagnostics_every must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub u: SymplecticPotential,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// Step that produced this state (0 for the initial record).
    pub dt: f64,
    pub ca: f64,
    pub ma: f64,
    pub l2: f64,
    pub psi_mean: f64,
    pub max_rm: f64,
    pub eig_min: f64,
    pub eig_max: f64,
    pub m_estimate: f64,
    /// `scale/2 * min(sqrt(eig_min), 1/sqrt(eig_max))`.
    pub inj_proxy: f64,
    /// `int |Rm|^n`.
    pub total_energy_n: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: SymplecticPotential,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    TEnd,
    CaStop,
    StiffnessFailure { t: f64, dt: f64 },
    BlowupSuspected { t: f64, ca: f64, ca0: f64 },
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::TEnd => "t_end",
            Termination::CaStop => "ca_stop",
            Termination::StiffnessFailure { .. } => "stiffness_failure",
            Termination::BlowupSuspected { .. } => "blowup_suspected",
        }
    }

    /// The error describing an abnormal stop, if any.
    pub fn error(&self, dt_min: f64) -> Option<Error> {
        match *self {
            Termination::TEnd | Termination::CaStop => None,
            Termination::StiffnessFailure { t, dt } => Some(Error::StiffnessFailure { t, dt, dt_min }),
            Termination::BlowupSuspected { t, ca, ca0 } => Some(Error::BlowupSuspected { t, ca, ca0 }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowTrace {
    pub config: FlowConfig,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
    /// Last accepted state.
    pub final_state: FlowState,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Events emitted while a run progresses, in order.
pub enum FlowEvent<'a> {
    Record(&'a DiagnosticsRecord),
    Snapshot(&'a Snapshot),
    /// Every accepted state, before any record or snapshot of it.
    Accepted(&'a FlowState),
}

/// `sum_ij (u^ij)_ij = -S`.
pub fn rhs(u: &SymplecticPotential) -> PeriodicField {
    geometry::scalar_curvature(u, CurvatureForm::Direct).map(|s| -s)
}

/// `sigma * h^4 * (min eig u_ij)^2`, i.e. `sigma h^4 / (max eig u^ij)^2`.
pub fn stable_dt(u: &SymplecticPotential, sigma: f64) -> f64 {
    let h = u.spec().spacing();
    let lo = u.hessian_data().eig_min.min();
    sigma * h.powi(4) * lo * lo
}

fn is_rejection(e: &Error) -> bool {
    matches!(e, Error::ConvexityLoss { .. } | Error::NonFiniteSample { .. })
}

/// One classical RK4 step with `k1` precomputed.
fn rk4(u: &SymplecticPotential, k1: &PeriodicField, dt: f64) -> Result<SymplecticPotential> {
    let psi = u.psi();
    let u2 = u.with_psi(psi.axpy(0.5 * dt, k1))?;
    let k2 = rhs(&u2);
    let u3 = u.with_psi(psi.axpy(0.5 * dt, &k2))?;
    let k3 = rhs(&u3);
    let u4 = u.with_psi(psi.axpy(dt, &k3))?;
    let k4 = rhs(&u4);
    let spec = *psi.spec();
    let values = (0..spec.len())
        .map(|i| {
            let incr = k1.values()[i] + 2.0 * k2.values()[i] + 2.0 * k3.values()[i] + k4.values()[i];
            psi.values()[i] + dt / 6.0 * incr
        })
        .collect();
    u.with_psi(PeriodicField::new(spec, values)?)
}

/// A single RK4 attempt. Loss of convexity in any stage, or non-finite
/// values, is returned as an error and means the step was rejected.
pub fn step(state: &FlowState, dt: f64) -> Result<FlowState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {dt}")));
    }
    let u = rk4(&state.u, &rhs(&state.u), dt)?;
    Ok(FlowState { t: state.t + dt, u })
}

/// Steps with `dt`, halving on rejection until `dt < dt_min`. Returns the new
/// state and the step size actually taken.
pub fn step_with_retry(state: &FlowState, dt: f64, dt_min: f64) -> Result<(FlowState, f64)> {
    let k1 = rhs(&state.u);
    let mut dt = dt;
    loop {
        if dt < dt_min {
            return Err(Error::StiffnessFailure { t: state.t, dt, dt_min });
        }
        match rk4(&state.u, &k1, dt) {
            Ok(u) => return Ok((FlowState { t: state.t + dt, u }, dt)),
            Err(e) if is_rejection(&e) => dt *= 0.5,
            Err(e) => return Err(e),
        }
    }
}

/// Full diagnostics of one state; `s` is its scalar curvature.
pub fn diagnostics(
    u: &SymplecticPotential,
    s: &PeriodicField,
    t: f64,
    dt: f64,
    config: &FlowConfig,
) -> Result<DiagnosticsRecord> {
    let e = geometry::energies_with(u, s);
    let rm = geometry::riemann_norm(u)?;
    let hd = u.hessian_data();
    let eig_min = hd.eig_min.min();
    let eig_max = hd.eig_max.max();
    let m = u.m_condition_estimate(config.m_segments, config.seed);
    Ok(DiagnosticsRecord {
        t,
        dt,
        ca: e.ca,
        ma: e.ma,
        l2: e.l2,
        psi_mean: e.psi_mean,
        max_rm: rm.max(),
        eig_min,
        eig_max,
        m_estimate: m.m_estimate,
        inj_proxy: 0.5 * u.spec().scale() * eig_min.sqrt().min(1.0 / eig_max.sqrt()),
        total_energy_n: geometry::total_energy(&rm),
    })
}

pub fn run(u0: &SymplecticPotential, config: &FlowConfig) -> Result<FlowTrace> {
    run_with(u0, config, |_| {})
}

/// Adaptive RK4 loop.
///
/// The step is `dt = sigma h^4 / (max eig u^ij)^2`, recomputed every step,
/// halved on rejection and doubled back (never beyond the formula) after
/// [`DOUBLING_INTERVAL`] accepted steps; the last step is clipped to land on
/// `t_end`. Stiffness failure and suspected blow-up end the run early and are
/// reported in [`FlowTrace::termination`] with everything recorded so far.
pub fn run_with<F>(u0: &SymplecticPotential, config: &FlowConfig, mut observer: F) -> Result<FlowTrace>
where
    F: FnMut(FlowEvent<'_>),
{
    config.validate()?;
    let mut state = FlowState { t: 0.0, u: u0.clone() };
    let mut s = geometry::scalar_curvature(&state.u, CurvatureForm::Direct);
    let first = diagnostics(&state.u, &s, 0.0, 0.0, config)?;
    let ca0 = first.ca;
    let ca_stop = config.ca_stop.unwrap_or(DEFAULT_CA_STOP * ca0.max(1.0));
    observer(FlowEvent::Record(&first));
    let mut records = vec![first];
    let snap = Snapshot { t: 0.0, u: u0.clone() };
    observer(FlowEvent::Snapshot(&snap));
    let mut snapshots = vec![snap];

    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut since_halving = 0usize;
    let mut dt_factor = 1.0f64;
    let mut last_dt = 0.0;

    let termination = loop {
        if state.t >= config.t_end {
            break Termination::TEnd;
        }
        let cap = stable_dt(&state.u, config.sigma);
        let mut dt = dt_factor * cap;
        let remaining = config.t_end - state.t;
        let clipped = dt >= remaining;
        if clipped {
            dt = remaining;
        }
        let k1 = s.map(|v| -v);
        let next = loop {
            if dt < config.dt_min {
                break None;
            }
            match rk4(&state.u, &k1, dt) {
                Ok(u) => break Some(u),
                Err(e) if is_rejection(&e) => {
                    rejected += 1;
                    dt *= 0.5;
                    dt_factor = (dt / cap).min(dt_factor * 0.5);
                    since_halving = 0;
                }
                Err(e) => return Err(e),
            }
        };
        let Some(u) = next else {
            break Termination::StiffnessFailure { t: state.t, dt };
        };
        let t = if clipped && dt == remaining {
            config.t_end
        } else {
            state.t + dt
        };
        state = FlowState { t, u };
        s = geometry::scalar_curvature(&state.u, CurvatureForm::Direct);
        accepted += 1;
        last_dt = dt;
        observer(FlowEvent::Accepted(&state));
        if dt_factor < 1.0 {
            since_halving += 1;
            if since_halving >= DOUBLING_INTERVAL {
                dt_factor = (2.0 * dt_factor).min(1.0);
                since_halving = 0;
            }
        }

        let ca = geometry::energies_with(&state.u, &s).ca;
        let stop = if ca0 > 0.0 && ca > BLOWUP_FACTOR * ca0 {
            Some(Termination::BlowupSuspected { t: state.t, ca, ca0 })
        } else if ca < ca_stop {
            Some(Termination::CaStop)
        } else if state.t >= config.t_end {
            Some(Termination::TEnd)
        } else {
            None
        };
        if stop.is_none() && accepted.is_multiple_of(config.diagnostics_every) {
            let rec = diagnostics(&state.u, &s, state.t, dt, config)?;
            observer(FlowEvent::Record(&rec));
            records.push(rec);
        }
        if stop.is_none() && accepted.is_multiple_of(config.record_every) {
            let snap = Snapshot { t: state.t, u: state.u.clone() };
            observer(FlowEvent::Snapshot(&snap));
            snapshots.push(snap);
        }
        if let Some(reason) = stop {
            break reason;
        }
    };

    // The final accepted state is always recorded and snapshotted.
    if records.last().is_none_or(|r| r.t < state.t) {
        let rec = diagnostics(&state.u, &s, state.t, last_dt, config)?;
        observer(FlowEvent::Record(&rec));
        records.push(rec);
    }
    if snapshots.last().is_none_or(|sn| sn.t < state.t) {
        let snap = Snapshot { t: state.t, u: state.u.clone() };
        observer(FlowEvent::Snapshot(&snap));
        snapshots.push(snap);
    }
    Ok(FlowTrace {
        config: config.clone(),
        records,
        snapshots,
        termination,
        final_state: state,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}


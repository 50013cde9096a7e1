//! Post-processing of flow traces: dissipation identities, blow-up
//! extraction and decay-rate fits.

use super::FlowTrace;
use crate::error::{Error, Result};
use crate::geometry::{self, CurvatureForm};
use crate::potential::SymplecticPotential;

/// One interior snapshot triple compared against the analytic rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DissipationSample {
    pub t: f64,
    /// Three-point difference of `Ca`.
    pub dca_dt: f64,
    /// `-2 int S_ij u^ia S_ab u^bj`.
    pub ca_rate: f64,
    pub dma_dt: f64,
    /// `-int S^2`.
    pub ma_rate: f64,
    pub ca_rel_err: f64,
    pub ma_rel_err: f64,
    /// `sup |-dS/dt - d2u_dt2_star| / sup |d2u_dt2_star|`.
    pub star_rel_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DissipationReport {
    pub samples: Vec<DissipationSample>,
    pub ca_rel_err: f64,
    pub ma_rel_err: f64,
    pub star_rel_err: f64,
}

/// Relative error against an exact value, absolute when the exact value is 0.
fn rel_err(approx: f64, exact: f64) -> f64 {
    let d = (approx - exact).abs();
    if exact == 0.0 {
        d
    } else {
        d / exact.abs()
    }
}

/// Weights of the second-order three-point derivative at the middle node of
/// an arbitrary (possibly non-uniform) stencil `t0 < t1 < t2`.
fn middle_weights(t0: f64, t1: f64, t2: f64) -> [f64; 3] {
    let h1 = t1 - t0;
    let h2 = t2 - t1;
    [
        -h2 / (h1 * (h1 + h2)),
        (h2 - h1) / (h1 * h2),
        h1 / (h2 * (h1 + h2)),
    ]
}

/// Compares time differences over every run of three consecutive snapshots
/// with `dCa/dt = -2 int S_ij u^ia S_ab u^bj`, `dMa/dt = -int S^2` and
/// `d^2u/dt^2 = -dS/dt`, evaluated at the middle snapshot.
///
/// Snapshot spacing need not be uniform; the three-point formula adapts.
pub fn dissipation_checks(trace: &FlowTrace) -> Result<DissipationReport> {
    let snaps = &trace.snapshots;
    if snaps.len() < 3 {
        return Err(Error::InsufficientSnapshots(snaps.len()));
    }
    let curv: Vec<_> = snaps
        .iter()
        .map(|s| geometry::scalar_curvature(&s.u, CurvatureForm::Direct))
        .collect();
    let energies: Vec<_> = snaps
        .iter()
        .zip(&curv)
        .map(|(s, c)| geometry::energies_with(&s.u, c))
        .collect();
    let mut samples = Vec::with_capacity(snaps.len() - 2);
    for m in 1..snaps.len() - 1 {
        let w = middle_weights(snaps[m - 1].t, snaps[m].t, snaps[m + 1].t);
        let diff = |f: &dyn Fn(usize) -> f64| w[0] * f(m - 1) + w[1] * f(m) + w[2] * f(m + 1);
        let dca_dt = diff(&|i| energies[i].ca);
        let dma_dt = diff(&|i| energies[i].ma);
        let u = &snaps[m].u;
        let s = &curv[m];
        let ca_rate = -geometry::calabi_dissipation(u, s);
        let ma_rate = -energies[m].ca;

        let star = geometry::star::d2u_dt2_star_with(u, s);
        let len = s.len();
        let mut num: f64 = 0.0;
        for i in 0..len {
            let ds_dt =
                w[0] * curv[m - 1].values()[i] + w[1] * s.values()[i] + w[2] * curv[m + 1].values()[i];
            num = num.max((-ds_dt - star.values()[i]).abs());
        }
        let den = star.sup_norm();
        let star_rel_err = if den == 0.0 { num } else { num / den };

        samples.push(DissipationSample {
            t: snaps[m].t,
            dca_dt,
            ca_rate,
            dma_dt,
            ma_rate,
            ca_rel_err: rel_err(dca_dt, ca_rate),
            ma_rel_err: rel_err(dma_dt, ma_rate),
            star_rel_err,
        });
    }
    let worst = |f: fn(&DissipationSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    Ok(DissipationReport {
        ca_rel_err: worst(|s| s.ca_rel_err),
        ma_rel_err: worst(|s| s.ma_rel_err),
        star_rel_err: worst(|s| s.star_rel_err),
        samples,
    })
}

/// Outcome of a blow-up rescaling.
#[derive(Clone, Debug, PartialEq)]
pub struct Blowup {
    pub potential: SymplecticPotential,
    /// `lam = max |Rm|` before rescaling.
    pub lam: f64,
    /// Grid node where the maximum is attained.
    pub center: Vec<f64>,
    /// Factor `lam^2` by which flow time is stretched at the new scale.
    pub time_dilation: f64,
}

/// Curvature below this (times the domain size) counts as flat.
const FLAT_RM: f64 = 1e-10;

/// Rescales `u` around its curvature maximum `p` by `lam = |Rm|(p)`, so the
/// result has `|Rm| = 1` at the origin.
pub fn blowup_potential(u: &SymplecticPotential) -> Result<Blowup> {
    let rm = geometry::riemann_norm(u)?;
    let at = rm.argmax();
    let lam = rm.values()[at];
    if lam * u.spec().scale() <= FLAT_RM {
        return Err(Error::NothingToBlowUp);
    }
    let center = u.spec().point(at);
    let potential = u.rescale(lam, &center)?;
    Ok(Blowup {
        potential,
        lam,
        center,
        time_dilation: lam * lam,
    })
}

/// [`blowup_potential`] applied to the snapshot taken at time `t`.
pub fn blowup_extract(trace: &FlowTrace, t: f64) -> Result<SymplecticPotential> {
    let snap = trace
        .snapshots
        .iter()
        .find(|s| s.t == t)
        .ok_or_else(|| Error::InvalidArgument(format!("no snapshot at t = {t}")))?;
    Ok(blowup_potential(&snap.u)?.potential)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    /// `-slope` of `log Ca` against `t`.
    pub rate: f64,
    pub r_squared: f64,
    /// Set when the tail contained non-positive values and the fit fell back
    /// to the last strictly positive window.
    pub flagged: bool,
    pub points: usize,
}

/// Least-squares fit of `log y = a - rate * t`.
pub fn fit_log_linear(samples: &[(f64, f64)]) -> Result<DecayFit> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a decay fit needs at least 2 points, got {}",
            samples.len()
        )));
    }
    if let Some(&(t, y)) = samples.iter().find(|(_, y)| y.is_nan() || *y <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "non-positive value {y} at t = {t} in decay fit"
        )));
    }
    let m = samples.len() as f64;
    let tm = samples.iter().map(|p| p.0).sum::<f64>() / m;
    let lm = samples.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let mut stt = 0.0;
    let mut stl = 0.0;
    let mut sll = 0.0;
    for &(t, y) in samples {
        let dt = t - tm;
        let dl = y.ln() - lm;
        stt += dt * dt;
        stl += dt * dl;
        sll += dl * dl;
    }
    if stt == 0.0 {
        return Err(Error::InvalidArgument("decay fit needs distinct times".into()));
    }
    let slope = stl / stt;
    let r_squared = if sll == 0.0 { 1.0 } else { stl * stl / (stt * sll) };
    Ok(DecayFit {
        rate: -slope,
        r_squared,
        flagged: false,
        points: samples.len(),
    })
}

/// Exponential decay rate of `Ca` over the trailing `tail_fraction` of the
/// records.
pub fn fit_decay_rate(trace: &FlowTrace, tail_fraction: f64) -> Result<DecayFit> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tail fraction must lie in (0, 1), got {tail_fraction}"
        )));
    }
    let recs = &trace.records;
    let count = ((recs.len() as f64 * tail_fraction).ceil() as usize).clamp(2.min(recs.len()), recs.len());
    let tail: Vec<(f64, f64)> = recs[recs.len() - count..].iter().map(|r| (r.t, r.ca)).collect();
    if tail.iter().all(|p| p.1 > 0.0) {
        return fit_log_linear(&tail);
    }
    // Converged to round-off: use the last run of positive values.
    let end = tail
        .iter()
        .rposition(|p| p.1 > 0.0)
        .ok_or_else(|| Error::InvalidArgument("no positive Calabi energy in the tail".into()))?;
    let start = tail[..=end]
        .iter()
        .rposition(|p| p.1.is_nan() || p.1 <= 0.0)
        .map_or(0, |i| i + 1);
    let mut fit = fit_log_linear(&tail[start..=end])?;
    fit.flagged = true;
    Ok(fit)
}

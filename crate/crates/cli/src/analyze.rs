//! Single-potential diagnostics for the `analyze` command.

use calabi_core::geometry::{self, CurvatureForm};
use calabi_core::SymplecticPotential;
use serde::Serialize;

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Analysis {
    pub n: usize,
    #[serde(rename = "N")]
    pub points: usize,
    pub scale: f64,
    pub c: f64,
    #[serde(rename = "Ca")]
    pub ca: f64,
    #[serde(rename = "Ma")]
    pub ma: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    pub psi_mean: f64,
    /// `sup |S|`.
    pub max_s: f64,
    /// `2 int S_ij u^ia S_ab u^bj`.
    pub calabi_dissipation: f64,
    #[serde(rename = "max_Rm")]
    pub max_rm: f64,
    pub total_energy_n: f64,
    pub eig_min: f64,
    pub eig_max: f64,
    #[serde(rename = "M_estimate")]
    pub m_estimate: f64,
    pub inj_proxy: f64,
    pub trace_pairing_max: f64,
    pub sup_u: f64,
    pub sup_grad: f64,
}

pub fn analyze(u: &SymplecticPotential, m_segments: usize, seed: u64) -> Result<Analysis> {
    let spec = *u.spec();
    let s = geometry::scalar_curvature(u, CurvatureForm::Direct);
    let e = geometry::energies(u);
    let rm = geometry::riemann_norm(u)?;
    let hd = u.hessian_data();
    let eig_min = hd.eig_min.min();
    let eig_max = hd.eig_max.max();
    let sup = u.sup_norms();
    Ok(Analysis {
        n: spec.dim(),
        points: spec.points(),
        scale: spec.scale(),
        c: u.c(),
        ca: e.ca,
        ma: e.ma,
        l2: e.l2,
        psi_mean: e.psi_mean,
        max_s: s.sup_norm(),
        calabi_dissipation: geometry::calabi_dissipation(u, &s),
        max_rm: rm.max(),
        total_energy_n: geometry::total_energy(&rm),
        eig_min,
        eig_max,
        m_estimate: u.m_condition_estimate(m_segments, seed).m_estimate,
        inj_proxy: 0.5 * spec.scale() * eig_min.sqrt().min(1.0 / eig_max.sqrt()),
        trace_pairing_max: geometry::trace_pairing(u).max(),
        sup_u: sup.sup_u,
        sup_grad: sup.sup_grad,
    })
}

//! Snapshot files: `{"fmt":1, "kind":..., "t":..., "n":..., "N":..., "scale":..., "c":..., "psi":[...]}`
//! with `psi` in row-major order (axis 0 slowest).
//!
//! Kähler-side potentials use the same layout with `kind = "kahler"`, `c = 1`
//! and `psi` holding `phi`. Blown-up potentials carry their affine part in
//! the optional `linear` and `offset` fields.

use std::path::Path;

use calabi_core::{GridSpec, KahlerPotential, PeriodicField, SymplecticPotential};
use serde::{Deserialize, Serialize};

use crate::error::{read_file, write_file, Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    #[default]
    Symplectic,
    Kahler,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn all_zero(v: &[f64]) -> bool {
    v.iter().all(|&x| x == 0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotFile {
    pub fmt: u32,
    #[serde(default)]
    pub kind: PotentialKind,
    pub t: f64,
    pub n: usize,
    #[serde(rename = "N")]
    pub points: usize,
    pub scale: f64,
    pub c: f64,
    #[serde(default, skip_serializing_if = "all_zero")]
    pub linear: Vec<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub offset: f64,
    pub psi: Vec<f64>,
}

impl SnapshotFile {
    pub fn from_potential(t: f64, u: &SymplecticPotential) -> Self {
        let spec = u.spec();
        Self {
            fmt: FORMAT_VERSION,
            kind: PotentialKind::Symplectic,
            t,
            n: spec.dim(),
            points: spec.points(),
            scale: spec.scale(),
            c: u.c(),
            linear: u.linear().to_vec(),
            offset: u.offset(),
            psi: u.psi().values().to_vec(),
        }
    }

    pub fn from_kahler(t: f64, v: &KahlerPotential) -> Self {
        let spec = v.spec();
        Self {
            fmt: FORMAT_VERSION,
            kind: PotentialKind::Kahler,
            t,
            n: spec.dim(),
            points: spec.points(),
            scale: spec.scale(),
            c: 1.0,
            linear: Vec::new(),
            offset: 0.0,
            psi: v.phi().values().to_vec(),
        }
    }

    fn field(&self) -> Result<PeriodicField> {
        if self.fmt != FORMAT_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported snapshot format {} (expected {FORMAT_VERSION})",
                self.fmt
            )));
        }
        let spec = GridSpec::new(self.n, self.points, self.scale)?;
        Ok(PeriodicField::new(spec, self.psi.clone())?)
    }

    fn expect_kind(&self, kind: PotentialKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Invalid(format!(
                "expected a {kind:?} potential, the snapshot holds a {:?} one",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn to_potential(&self) -> Result<SymplecticPotential> {
        self.expect_kind(PotentialKind::Symplectic)?;
        Ok(SymplecticPotential::with_affine(self.c, self.field()?, &self.linear, self.offset)?)
    }

    pub fn to_kahler(&self) -> Result<KahlerPotential> {
        self.expect_kind(PotentialKind::Kahler)?;
        if self.c != 1.0 || !all_zero(&self.linear) || self.offset != 0.0 {
            return Err(Error::Invalid("a Kähler snapshot must have c = 1 and no affine part".into()));
        }
        Ok(KahlerPotential::new(self.field()?)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshots serialize")
    }

    pub fn read(path: &Path) -> Result<Self> {
        serde_json::from_str(&read_file(path)?).map_err(|source| Error::Schema {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_json())
    }
}

//! Scenario and charge-set files.
//!
//! Matrices are lists of rows; each entry is either a real number or an
//! `[re, im]` pair.

use std::path::Path;

use nalgebra::Complex;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::operators::{ChargeSet, DensityState, Observable, DEFAULT_DIM_CAP};
use crate::thermo::Scenario;

/// Tolerance for Hermiticity, trace and positivity of matrices read from files.
pub const FILE_TOL: f64 = 1e-9;

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

type MatrixSpec = Vec<Vec<Entry>>;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileOptions {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub dim_cap: Option<usize>,
    pub max_iter: Option<usize>,
    pub beta_max: Option<f64>,
    pub fd_step: Option<f64>,
    pub n_dirs: Option<usize>,
    /// Tolerance used when validating the matrices of this file.
    pub validation_tol: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    dims: Option<Vec<usize>>,
    system_charges: Option<Vec<MatrixSpec>>,
    bath_charges: Option<Vec<MatrixSpec>>,
    beta: Option<Vec<f64>>,
    #[serde(rename = "rho_S")]
    rho_s: Option<MatrixSpec>,
    #[serde(rename = "sigma_S")]
    sigma_s: Option<MatrixSpec>,
    work: Option<Vec<f64>>,
    #[serde(default)]
    options: FileOptions,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChargeFile {
    charges: Vec<MatrixSpec>,
}

/// A validated scenario file. Every part is optional so that commands needing
/// only the charges or the states can share the format; [`ScenarioFile::scenario`]
/// insists on all of them.
#[derive(Clone, Debug, Default)]
pub struct ScenarioFile {
    pub system_charges: Option<ChargeSet<f64>>,
    pub bath_charges: Option<ChargeSet<f64>>,
    pub beta: Option<Vec<f64>>,
    pub rho_s: Option<DensityState<f64>>,
    pub sigma_s: Option<DensityState<f64>>,
    pub work: Option<Vec<f64>>,
    pub options: FileOptions,
}

fn schema(path: impl Into<String>, message: impl ToString) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.to_string(),
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| schema("$", e))
}

fn from_value<D: DeserializeOwned>(v: Value) -> Result<D> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        schema(if path == "." { "$".to_string() } else { path }, e.into_inner())
    })
}

fn matrix(spec: &MatrixSpec, path: &str) -> Result<CMatrix<f64>> {
    let n = spec.len();
    if n == 0 {
        return Err(schema(path, "matrix is empty"));
    }
    if let Some((i, row)) = spec.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(schema(
            format!("{path}[{i}]"),
            format!("row has {} entries but the matrix has {n} rows", row.len()),
        ));
    }
    let mut m = CMatrix::zeros(n, n);
    for (i, row) in spec.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            let z = match *e {
                Entry::Real(x) => Complex::new(x, 0.0),
                Entry::Complex([re, im]) => Complex::new(re, im),
            };
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(schema(format!("{path}[{i}][{j}]"), "entry is not finite"));
            }
            m[(i, j)] = z;
        }
    }
    Ok(m)
}

fn charge_set(specs: &[MatrixSpec], path: &str, tol: f64) -> Result<ChargeSet<f64>> {
    let charges = specs
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let p = format!("{path}[{j}]");
            Observable::with_tolerance(matrix(s, &p)?, tol).map_err(|e| schema(p, e))
        })
        .collect::<Result<Vec<_>>>()?;
    ChargeSet::new(charges).map_err(|e| schema(path, e))
}

fn state(spec: &MatrixSpec, path: &str, tol: f64) -> Result<DensityState<f64>> {
    DensityState::with_tolerance(matrix(spec, path)?, tol).map_err(|e| schema(path, e))
}

fn finite_vec(v: Vec<f64>, path: &str) -> Result<Vec<f64>> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(schema(format!("{path}[{i}]"), "entry is not finite")),
        None => Ok(v),
    }
}

fn check_len(len: usize, want: usize, path: &str) -> Result<()> {
    if len != want {
        return Err(schema(path, format!("has length {len} but there are {want} charges")));
    }
    Ok(())
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_value(read_json(path)?)
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let raw: RawScenario = from_value(v)?;
        let tol = raw.options.validation_tol.unwrap_or(FILE_TOL);
        let system_charges = raw
            .system_charges
            .map(|s| charge_set(&s, "system_charges", tol))
            .transpose()?;
        let bath_charges = raw
            .bath_charges
            .map(|s| charge_set(&s, "bath_charges", tol))
            .transpose()?;
        let rho_s = raw.rho_s.map(|s| state(&s, "rho_S", tol)).transpose()?;
        let sigma_s = raw.sigma_s.map(|s| state(&s, "sigma_S", tol)).transpose()?;
        let beta = raw.beta.map(|b| finite_vec(b, "beta")).transpose()?;
        let work = raw.work.map(|w| finite_vec(w, "work")).transpose()?;

        if let Some(dims) = &raw.dims {
            if dims.len() != 2 {
                return Err(schema("dims", "expected [system dimension, bath dimension]"));
            }
            if let Some(s) = &system_charges {
                if s.dim() != dims[0] {
                    return Err(schema("system_charges", format!("act on dimension {} but dims[0] = {}", s.dim(), dims[0])));
                }
            }
            if let Some(b) = &bath_charges {
                if b.dim() != dims[1] {
                    return Err(schema("bath_charges", format!("act on dimension {} but dims[1] = {}", b.dim(), dims[1])));
                }
            }
        }
        if let Some(s) = &system_charges {
            let c = s.len();
            if let Some(b) = &bath_charges {
                check_len(b.len(), c, "bath_charges")?;
            }
            if let Some(b) = &beta {
                check_len(b.len(), c, "beta")?;
            }
            if let Some(w) = &work {
                check_len(w.len(), c, "work")?;
            }
            for (name, st) in [("rho_S", &rho_s), ("sigma_S", &sigma_s)] {
                if let Some(st) = st {
                    if st.dim() != s.dim() {
                        return Err(schema(
                            name,
                            format!("has dimension {} but system charges act on {}", st.dim(), s.dim()),
                        ));
                    }
                }
            }
        }
        Ok(Self {
            system_charges,
            bath_charges,
            beta,
            rho_s,
            sigma_s,
            work,
            options: raw.options,
        })
    }

    fn need<'a, X>(field: &'a Option<X>, name: &str) -> Result<&'a X> {
        field.as_ref().ok_or_else(|| schema(name, "missing"))
    }

    pub fn system_charges(&self) -> Result<&ChargeSet<f64>> {
        Self::need(&self.system_charges, "system_charges")
    }

    pub fn bath_charges(&self) -> Result<&ChargeSet<f64>> {
        Self::need(&self.bath_charges, "bath_charges")
    }

    pub fn rho_s(&self) -> Result<&DensityState<f64>> {
        Self::need(&self.rho_s, "rho_S")
    }

    pub fn sigma_s(&self) -> Result<&DensityState<f64>> {
        Self::need(&self.sigma_s, "sigma_S")
    }

    pub fn scenario(&self) -> Result<Scenario<f64>> {
        Scenario::new(
            self.system_charges()?.clone(),
            self.bath_charges()?.clone(),
            Self::need(&self.beta, "beta")?.clone(),
            self.rho_s()?.clone(),
            self.sigma_s()?.clone(),
            Self::need(&self.work, "work")?.clone(),
        )
        .map_err(|e| schema("$", e))
    }

    /// True when every field needed by [`ScenarioFile::scenario`] is present.
    pub fn is_complete(&self) -> bool {
        self.system_charges.is_some()
            && self.bath_charges.is_some()
            && self.beta.is_some()
            && self.rho_s.is_some()
            && self.sigma_s.is_some()
            && self.work.is_some()
    }
}

/// Reads a charge set, either `{"charges": [...]}` or a bare list of matrices.
pub fn load_charges(path: &Path) -> Result<ChargeSet<f64>> {
    charges_from_value(read_json(path)?)
}

pub fn charges_from_value(v: Value) -> Result<ChargeSet<f64>> {
    if v.is_object() {
        let raw: RawChargeFile = from_value(v)?;
        charge_set(&raw.charges, "charges", FILE_TOL)
    } else {
        let specs: Vec<MatrixSpec> = from_value(v)?;
        charge_set(&specs, "$", FILE_TOL)
    }
}

/// Dimension cap: command line, then the file, then `CHARGE_DIAGRAM_DIM_CAP`,
/// then the library default.
pub fn dim_cap(flag: Option<usize>, file: Option<usize>) -> Result<usize> {
    if let Some(c) = flag.or(file) {
        return Ok(c);
    }
    match std::env::var("CHARGE_DIAGRAM_DIM_CAP") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| schema("CHARGE_DIAGRAM_DIM_CAP", format!("not a positive integer: {s:?}"))),
        Err(_) => Ok(DEFAULT_DIM_CAP),
    }
}

//! On-disk field archives.
//!
//! An archive is a directory holding `manifest.json` plus one raw binary
//! payload per entry. The manifest carries `format_version` (currently 1),
//! the grid, and an entry list `{name, kind, degree?, dtype, file}`. Payloads
//! are raw little-endian IEEE-754 doubles, row-major in axis order
//! (zeta, theta, phi), with multi-component entries concatenated in the
//! documented component order (vector: z/t/p; 1-form: dz/dt/dp; 2-form:
//! dz^dt/dz^dp/dt^dp; metric: zz/zt/zp/tt/tp/pp).
//!
//! Round trips are bit-exact.

use crate::error::{Error, Result};
use crate::exterior::VolumeForm;
use crate::field::{form_components, KForm, MetricField, ScalarField, VectorField};
use crate::grid::Grid3;
use ndarray::Array3;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestGrid {
    pub n: [usize; 3],
    pub period: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<u8>,
    pub dtype: String,
    pub file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub grid: ManifestGrid,
    pub entries: Vec<ManifestEntry>,
}

/// One stored field, tagged by kind.
#[derive(Debug, Clone)]
pub enum FieldEntry {
    Scalar(ScalarField),
    Vector(VectorField),
    Form(KForm),
    Metric(MetricField),
}

impl FieldEntry {
    fn kind(&self) -> &'static str {
        match self {
            FieldEntry::Scalar(_) => "scalar",
            FieldEntry::Vector(_) => "vector",
            FieldEntry::Form(_) => "form",
            FieldEntry::Metric(_) => "metric",
        }
    }

    pub fn component_arrays(&self) -> Vec<&Array3<f64>> {
        match self {
            FieldEntry::Scalar(f) => vec![f.values()],
            FieldEntry::Vector(v) => (0..3).map(|c| v.comp(c)).collect(),
            FieldEntry::Form(w) => w.comps().iter().collect(),
            FieldEntry::Metric(g) => (0..6).map(|c| g.comp(c)).collect(),
        }
    }
}

/// An in-memory field bundle keyed by entry name.
#[derive(Debug, Clone, Default)]
pub struct FieldBundle {
    pub grid: Option<Grid3>,
    pub entries: BTreeMap<String, FieldEntry>,
}

impl FieldBundle {
    pub fn new(grid: Grid3) -> Self {
        FieldBundle {
            grid: Some(grid),
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, entry: FieldEntry) {
        self.entries.insert(name.to_string(), entry);
    }

    pub fn scalar(&self, name: &str) -> Result<&ScalarField> {
        match self.entries.get(name) {
            Some(FieldEntry::Scalar(f)) => Ok(f),
            Some(_) => Err(Error::Format(format!("entry '{name}' is not a scalar"))),
            None => Err(Error::Format(format!("archive has no entry '{name}'"))),
        }
    }

    pub fn vector(&self, name: &str) -> Result<&VectorField> {
        match self.entries.get(name) {
            Some(FieldEntry::Vector(v)) => Ok(v),
            Some(_) => Err(Error::Format(format!("entry '{name}' is not a vector"))),
            None => Err(Error::Format(format!("archive has no entry '{name}'"))),
        }
    }

    pub fn form(&self, name: &str) -> Result<&KForm> {
        match self.entries.get(name) {
            Some(FieldEntry::Form(w)) => Ok(w),
            Some(_) => Err(Error::Format(format!("entry '{name}' is not a form"))),
            None => Err(Error::Format(format!("archive has no entry '{name}'"))),
        }
    }

    pub fn metric(&self, name: &str) -> Result<&MetricField> {
        match self.entries.get(name) {
            Some(FieldEntry::Metric(g)) => Ok(g),
            Some(_) => Err(Error::Format(format!("entry '{name}' is not a metric"))),
            None => Err(Error::Format(format!("archive has no entry '{name}'"))),
        }
    }

    /// Volume form from a degree-3 form entry, if the entry exists.
    pub fn volume(&self, name: &str) -> Result<Option<VolumeForm>> {
        match self.entries.get(name) {
            None => Ok(None),
            Some(FieldEntry::Form(w)) if w.degree() == 3 => {
                let density = ScalarField::from_values(w.grid(), w.comp(0).clone())?;
                Ok(Some(VolumeForm::from_density(density)?))
            }
            Some(_) => Err(Error::Format(format!(
                "entry '{name}' is not a degree-3 form"
            ))),
        }
    }
}

fn array_to_bytes(arrays: &[&Array3<f64>]) -> Vec<u8> {
    let mut out = Vec::new();
    for a in arrays {
        // row-major (zeta, theta, phi)
        let owned = a.as_standard_layout();
        for v in owned.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn bytes_to_arrays(
    bytes: &[u8],
    grid: Grid3,
    count: usize,
    what: &str,
) -> Result<Vec<Array3<f64>>> {
    let n = grid.n();
    let per = n[0] * n[1] * n[2];
    if bytes.len() != count * per * 8 {
        return Err(Error::Shape(format!(
            "payload for {what} has {} bytes; expected {} ({} components x {} nodes x 8)",
            bytes.len(),
            count * per * 8,
            count,
            per
        )));
    }
    let mut out = Vec::with_capacity(count);
    for c in 0..count {
        let mut flat = Vec::with_capacity(per);
        for i in 0..per {
            let off = (c * per + i) * 8;
            let mut b = [0u8; 8];
            b.copy_from_slice(&bytes[off..off + 8]);
            flat.push(f64::from_le_bytes(b));
        }
        let arr = Array3::from_shape_vec((n[0], n[1], n[2]), flat)
            .map_err(|e| Error::Shape(format!("{what}: {e}")))?;
        out.push(arr);
    }
    Ok(out)
}

/// Writes to a temp file in the target directory, then renames, so readers
/// never observe partial payloads.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp-write");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Serializes a bundle into `dir` (created if needed).
pub fn field_io_write(dir: &Path, bundle: &FieldBundle) -> Result<()> {
    let grid = bundle
        .grid
        .ok_or_else(|| Error::Format("bundle has no grid".into()))?;
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for (name, entry) in &bundle.entries {
        let file = format!("{name}.f64");
        let arrays = entry.component_arrays();
        write_atomic(&dir.join(&file), &array_to_bytes(&arrays))?;
        entries.push(ManifestEntry {
            name: name.clone(),
            kind: entry.kind().to_string(),
            degree: match entry {
                FieldEntry::Form(w) => Some(w.degree()),
                _ => None,
            },
            dtype: "f64le".to_string(),
            file,
        });
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        grid: ManifestGrid {
            n: grid.n(),
            period: grid.period(),
        },
        entries,
    };
    let json = serde_json::to_vec_pretty(&manifest)?;
    write_atomic(&dir.join("manifest.json"), &json)?;
    Ok(())
}

/// Reads a bundle back from `dir`.
pub fn field_io_read(dir: &Path) -> Result<FieldBundle> {
    let manifest_path: PathBuf = dir.join("manifest.json");
    let mut raw = String::new();
    fs::File::open(&manifest_path)
        .map_err(|e| Error::Format(format!("cannot open {}: {e}", manifest_path.display())))?
        .read_to_string(&mut raw)?;
    let manifest: Manifest =
        serde_json::from_str(&raw).map_err(|e| Error::Format(format!("bad manifest: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unknown format_version {} (supported: {FORMAT_VERSION})",
            manifest.format_version
        )));
    }
    let grid = Grid3::with_periods(manifest.grid.n, manifest.grid.period)?;
    let mut bundle = FieldBundle::new(grid);
    for entry in &manifest.entries {
        if entry.dtype != "f64le" {
            return Err(Error::Format(format!(
                "entry '{}' has unsupported dtype '{}'",
                entry.name, entry.dtype
            )));
        }
        let mut bytes = Vec::new();
        fs::File::open(dir.join(&entry.file))
            .map_err(|e| Error::Format(format!("cannot open payload {}: {e}", entry.file)))?
            .read_to_end(&mut bytes)?;
        let parsed = match entry.kind.as_str() {
            "scalar" => {
                let arrs = bytes_to_arrays(&bytes, grid, 1, &entry.name)?;
                FieldEntry::Scalar(ScalarField::from_values(
                    grid,
                    arrs.into_iter().next().unwrap(),
                )?)
            }
            "vector" => {
                let mut arrs = bytes_to_arrays(&bytes, grid, 3, &entry.name)?.into_iter();
                FieldEntry::Vector(VectorField::from_components(
                    grid,
                    [
                        arrs.next().unwrap(),
                        arrs.next().unwrap(),
                        arrs.next().unwrap(),
                    ],
                )?)
            }
            "form" => {
                let degree = entry.degree.ok_or_else(|| {
                    Error::Format(format!("form entry '{}' lacks a degree", entry.name))
                })?;
                if degree > 3 {
                    return Err(Error::Format(format!(
                        "form entry '{}' has degree {degree}",
                        entry.name
                    )));
                }
                let arrs = bytes_to_arrays(&bytes, grid, form_components(degree), &entry.name)?;
                FieldEntry::Form(KForm::from_components(grid, degree, arrs)?)
            }
            "metric" => {
                let arrs = bytes_to_arrays(&bytes, grid, 6, &entry.name)?;
                let mut it = arrs.into_iter();
                FieldEntry::Metric(MetricField::from_components(
                    grid,
                    [
                        it.next().unwrap(),
                        it.next().unwrap(),
                        it.next().unwrap(),
                        it.next().unwrap(),
                        it.next().unwrap(),
                        it.next().unwrap(),
                    ],
                )?)
            }
            other => {
                return Err(Error::Format(format!(
                    "entry '{}' has unknown kind '{other}'",
                    entry.name
                )))
            }
        };
        bundle.entries.insert(entry.name.clone(), parsed);
    }
    Ok(bundle)
}

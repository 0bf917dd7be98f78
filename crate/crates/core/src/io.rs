//! SFLD v1 signal files and DSTC v1 coefficient files.
//!
//! Both are a JSON header plus a sidecar `.bin` with the raw little-endian
//! samples in row-major order (last axis fastest). Coefficient files store
//! shifts as the slow index and centered frequencies as the fast one.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::directions::DirectionFrame;
use crate::error::{Error, Result};
use crate::lattice::{FrequencyLattice, Lattice, SampledField};
use crate::transform::{CoefficientField, Provenance};
use crate::windows::{WindowBank, WindowSpec};

pub const FIELD_VERSION: &str = "SFLD v1";
pub const COEFF_VERSION: &str = "DSTC v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    C128,
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub version: String,
    pub dim: usize,
    pub origin: Vec<f64>,
    pub step: Vec<f64>,
    pub count: Vec<usize>,
    pub dtype: Dtype,
    pub label: String,
    /// Sidecar file name, relative to the header's directory.
    pub data: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffHeader {
    pub version: String,
    pub frame: DirectionFrame,
    pub analysis: Vec<String>,
    pub synthesis: Vec<String>,
    pub pairing_floor: f64,
    pub signal_lattice: Lattice,
    pub shift_lattice: Lattice,
    pub freq_lattice: FrequencyLattice,
    pub provenance: Provenance,
    /// `[shifts, frequencies]`.
    pub shape: [usize; 2],
    pub dtype: Dtype,
    pub data: String,
}

fn sidecar_name(header: &Path) -> Result<String> {
    let stem = header
        .file_stem()
        .ok_or_else(|| Error::Format(format!("{} has no file name", header.display())))?;
    Ok(format!("{}.bin", stem.to_string_lossy()))
}

fn sidecar_path(header: &Path, name: &str) -> PathBuf {
    header.parent().unwrap_or_else(|| Path::new(".")).join(name)
}

fn encode(values: &[Complex64], dtype: Dtype) -> Vec<u8> {
    match dtype {
        Dtype::C128 => {
            let mut out = Vec::with_capacity(values.len() * 16);
            for v in values {
                out.extend_from_slice(&v.re.to_le_bytes());
                out.extend_from_slice(&v.im.to_le_bytes());
            }
            out
        }
        Dtype::F64 => {
            let mut out = Vec::with_capacity(values.len() * 8);
            for v in values {
                out.extend_from_slice(&v.re.to_le_bytes());
            }
            out
        }
    }
}

fn decode(bytes: &[u8], dtype: Dtype, expected: usize) -> Result<Vec<Complex64>> {
    let width = match dtype {
        Dtype::C128 => 16,
        Dtype::F64 => 8,
    };
    if bytes.len() != expected * width {
        return Err(Error::Format(format!(
            "sidecar holds {} bytes, expected {} for {expected} {dtype:?} values",
            bytes.len(),
            expected * width
        )));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    Ok(match dtype {
        Dtype::C128 => bytes.chunks_exact(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect(),
        Dtype::F64 => bytes.chunks_exact(8).map(|c| Complex64::new(f(c), 0.0)).collect(),
    })
}

/// Writes `field` as `path` (header) plus `<stem>.bin`. Real fields are
/// stored as `f64`, others as `c128`.
pub fn write_field(path: &Path, field: &SampledField) -> Result<()> {
    let dtype = if field.is_real() { Dtype::F64 } else { Dtype::C128 };
    let data = sidecar_name(path)?;
    let header = FieldHeader {
        version: FIELD_VERSION.into(),
        dim: field.lattice.dim(),
        origin: field.lattice.origin().to_vec(),
        step: field.lattice.step().to_vec(),
        count: field.lattice.count().to_vec(),
        dtype,
        label: field.label.clone(),
        data: data.clone(),
    };
    fs::write(sidecar_path(path, &data), encode(&field.values, dtype))?;
    fs::write(path, serde_json::to_string_pretty(&header)? + "\n")?;
    Ok(())
}

pub fn read_field_header(path: &Path) -> Result<FieldHeader> {
    let header: FieldHeader = serde_json::from_str(&fs::read_to_string(path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if header.version != FIELD_VERSION {
        return Err(Error::Format(format!("unsupported signal file version `{}`", header.version)));
    }
    if header.origin.len() != header.dim {
        return Err(Error::Format("header dim disagrees with origin".into()));
    }
    Ok(header)
}

pub fn read_field(path: &Path) -> Result<SampledField> {
    let header = read_field_header(path)?;
    let lattice = Lattice::new(header.origin, header.step, header.count)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let bytes = fs::read(sidecar_path(path, &header.data))?;
    let values = decode(&bytes, header.dtype, lattice.len())?;
    SampledField::new(lattice, values, header.label)
}

pub fn write_coefficients(path: &Path, coeffs: &CoefficientField) -> Result<()> {
    let data = sidecar_name(path)?;
    let header = CoeffHeader {
        version: COEFF_VERSION.into(),
        frame: coeffs.frame.clone(),
        analysis: coeffs.bank.analysis().iter().map(|w| w.to_string()).collect(),
        synthesis: coeffs.bank.synthesis().iter().map(|w| w.to_string()).collect(),
        pairing_floor: coeffs.bank.pairing_floor(),
        signal_lattice: coeffs.signal_lattice.clone(),
        shift_lattice: coeffs.shift_lattice.clone(),
        freq_lattice: coeffs.freq_lattice.clone(),
        provenance: coeffs.provenance,
        shape: [coeffs.num_shifts(), coeffs.num_freqs()],
        dtype: Dtype::C128,
        data: data.clone(),
    };
    fs::write(sidecar_path(path, &data), encode(&coeffs.values, Dtype::C128))?;
    fs::write(path, serde_json::to_string_pretty(&header)? + "\n")?;
    Ok(())
}

pub fn read_coefficients(path: &Path) -> Result<CoefficientField> {
    let header: CoeffHeader = serde_json::from_str(&fs::read_to_string(path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if header.version != COEFF_VERSION {
        return Err(Error::Format(format!("unsupported coefficient file version `{}`", header.version)));
    }
    let parse = |v: &[String]| v.iter().map(|s| s.parse::<WindowSpec>()).collect::<Result<Vec<_>>>();
    let bank = WindowBank::with_floor(parse(&header.analysis)?, parse(&header.synthesis)?, header.pairing_floor)?;
    if header.shape != [header.shift_lattice.len(), header.freq_lattice.len()] {
        return Err(Error::Format("coefficient shape disagrees with lattices".into()));
    }
    let bytes = fs::read(sidecar_path(path, &header.data))?;
    let values = decode(&bytes, header.dtype, header.shape[0] * header.shape[1])?;
    Ok(CoefficientField {
        frame: header.frame,
        bank,
        signal_lattice: header.signal_lattice,
        shift_lattice: header.shift_lattice,
        freq_lattice: header.freq_lattice,
        values,
        provenance: header.provenance,
    })
}

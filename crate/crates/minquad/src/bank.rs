//! Barrier-bank file format.
//!
//! Banks are JSON with every float printed as a 17-significant-digit
//! decimal, which round-trips `f64` exactly: load(save(bank)) reproduces
//! the same bytes. Matrices are stored row-major as nested arrays.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use minquad_core::barrier::{BarrierError, MinQuadraticBarrier, QuadraticBarrierPair};
use minquad_core::plant::Plant;

use crate::config::PlantSpec;
use crate::synth::{BankSynthesis, SynthesisConfig};

pub const BANK_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BankError {
    #[error("bank i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bank parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported bank schema version {0}")]
    SchemaVersion(u32),
    #[error("bank pair {index} is invalid: {source}")]
    BadPair { index: usize, source: BarrierError },
    #[error("bank contains no pairs")]
    Empty,
}

/// One stored pair: equilibrium, shape, gain, and synthesis bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PairRecord {
    pub x_e: Vec<f64>,
    pub u_e: Vec<f64>,
    /// Ellipsoid shape matrix Q, row-major.
    pub q: Vec<Vec<f64>>,
    /// Feedback gain K, row-major.
    pub k: Vec<Vec<f64>>,
    /// Achieved log det Q.
    pub log_det: f64,
    /// Posterior constraint margins in program order.
    pub margins: Vec<f64>,
}

/// On-disk bank: plant echo, synthesis-config echo, and the pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BankFile {
    pub schema_version: u32,
    pub plant: PlantSpec,
    pub synthesis: SynthesisConfig,
    pub pairs: Vec<PairRecord>,
}

impl BankFile {
    pub fn from_synthesis(
        plant: PlantSpec,
        synthesis: SynthesisConfig,
        result: &BankSynthesis,
    ) -> Self {
        let pairs = result
            .syntheses
            .iter()
            .map(|s| PairRecord {
                x_e: s.pair.x_e().iter().copied().collect(),
                u_e: s.pair.u_e().iter().copied().collect(),
                q: matrix_rows(s.certificate.q()),
                k: matrix_rows(s.pair.k()),
                log_det: s.certificate.objective(),
                margins: s.certificate.margins().margins(),
            })
            .collect();
        Self {
            schema_version: BANK_SCHEMA_VERSION,
            plant,
            synthesis,
            pairs,
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17Formatter);
        self.serialize(&mut ser).expect("bank serialization");
        out.push(b'\n');
        String::from_utf8(out).expect("bank json is utf-8")
    }

    pub fn save(&self, path: &Path) -> Result<(), BankError> {
        let mut file = fs::File::create(path)?;
        file.write_all(self.to_json().as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, BankError> {
        let text = fs::read_to_string(path)?;
        let bank: BankFile = serde_json::from_str(&text)?;
        if bank.schema_version != BANK_SCHEMA_VERSION {
            return Err(BankError::SchemaVersion(bank.schema_version));
        }
        Ok(bank)
    }

    /// Rebuilds the runtime plant and barrier bank, revalidating every pair
    /// (symmetry, positive definiteness, inverse accuracy).
    pub fn build(&self) -> Result<(Box<dyn Plant>, MinQuadraticBarrier), BankError> {
        let plant = self.plant.build();
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for (index, rec) in self.pairs.iter().enumerate() {
            let pair = QuadraticBarrierPair::new(
                DVector::from_row_slice(&rec.x_e),
                DVector::from_row_slice(&rec.u_e),
                rows_to_matrix(&rec.q),
                rows_to_matrix(&rec.k),
            )
            .map_err(|source| BankError::BadPair { index, source })?;
            pairs.push(pair);
        }
        let bank = MinQuadraticBarrier::new(pairs).map_err(|_| BankError::Empty)?;
        Ok((plant, bank))
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c])
}

/// JSON formatter printing every float with 17 significant digits, enough to
/// reproduce any `f64` bit pattern on reload.
struct Sig17Formatter;

impl serde_json::ser::Formatter for Sig17Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Shared float formatting for CSV output (17 significant digits).
pub fn fmt17(value: f64) -> String {
    format!("{value:.16e}")
}

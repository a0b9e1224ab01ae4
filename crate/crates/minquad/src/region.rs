//! Export of projected safe-region boundaries for plotting.
//!
//! Every pair's ellipsoid is shadowed onto a coordinate plane (exact
//! projection via the Schur complement, matching what the phase-space plots
//! show) and sampled as a closed loop of boundary points.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use minquad_core::barrier::MinQuadraticBarrier;

use crate::bank::fmt17;

/// Boundary samples per pair.
pub const POINTS_PER_PAIR: usize = 256;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("projection needs two distinct coordinates")]
    BadProjection,
    #[error("region i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("ellipsoid shadow is degenerate")]
    Degenerate,
}

/// Resolves `--proj a,b` against the plant's coordinate names (bare indices
/// are accepted too).
pub fn parse_projection(spec: &str, names: &[&str]) -> Result<(usize, usize), RegionError> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(RegionError::BadProjection);
    }
    let resolve = |token: &str| -> Result<usize, RegionError> {
        if let Some(i) = names.iter().position(|n| *n == token) {
            return Ok(i);
        }
        if let Ok(i) = token.parse::<usize>() {
            if i < names.len() {
                return Ok(i);
            }
        }
        Err(RegionError::UnknownCoordinate(token.to_string()))
    };
    let a = resolve(parts[0])?;
    let b = resolve(parts[1])?;
    if a == b {
        return Err(RegionError::BadProjection);
    }
    Ok((a, b))
}

/// Inverse principal square root of a symmetric positive definite 2x2.
fn inv_sqrt_2x2(s: &DMatrix<f64>) -> Result<DMatrix<f64>, RegionError> {
    let eig = s.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&v| v <= 0.0) {
        return Err(RegionError::Degenerate);
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Writes `pair,<name0>,<name1>` rows: 256 boundary points per pair.
pub fn write_region_csv(
    out: &mut impl Write,
    bank: &MinQuadraticBarrier,
    projection: (usize, usize),
    names: (&str, &str),
) -> Result<(), RegionError> {
    writeln!(out, "pair,{},{}", names.0, names.1)?;
    for (index, pair) in bank.pairs().iter().enumerate() {
        let shadow = pair
            .shadow_2d(projection.0, projection.1)
            .map_err(|_| RegionError::BadProjection)?;
        let transform = inv_sqrt_2x2(&shadow)?;
        let center = DVector::from_row_slice(&[pair.x_e()[projection.0], pair.x_e()[projection.1]]);
        for k in 0..POINTS_PER_PAIR {
            let angle = core::f64::consts::TAU * (k as f64) / (POINTS_PER_PAIR as f64);
            let unit = DVector::from_row_slice(&[angle.cos(), angle.sin()]);
            let z = &center + &transform * unit;
            writeln!(out, "{index},{},{}", fmt17(z[0]), fmt17(z[1]))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use minquad_core::barrier::QuadraticBarrierPair;

    #[test]
    fn projection_parsing_accepts_names_and_indices() {
        let names = ["theta", "theta_dot"];
        assert_eq!(parse_projection("theta,theta_dot", &names).unwrap(), (0, 1));
        assert_eq!(parse_projection("1,0", &names).unwrap(), (1, 0));
        assert!(parse_projection("theta,psi", &names).is_err());
        assert!(parse_projection("theta,theta", &names).is_err());
        assert!(parse_projection("theta", &names).is_err());
    }

    #[test]
    fn identity_shape_exports_the_unit_circle() {
        let pair = QuadraticBarrierPair::new(
            DVector::zeros(2),
            DVector::zeros(1),
            DMatrix::identity(2, 2),
            DMatrix::zeros(1, 2),
        )
        .unwrap();
        let bank = MinQuadraticBarrier::new(vec![pair]).unwrap();
        let mut buf = Vec::new();
        write_region_csv(&mut buf, &bank, (0, 1), ("theta", "theta_dot")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + POINTS_PER_PAIR);
        assert_eq!(lines[0], "pair,theta,theta_dot");
        for line in &lines[1..] {
            let mut it = line.split(',');
            assert_eq!(it.next().unwrap(), "0");
            let x: f64 = it.next().unwrap().parse().unwrap();
            let y: f64 = it.next().unwrap().parse().unwrap();
            assert!((x * x + y * y - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shadow_boundary_touches_the_projected_extent() {
        // Diagonal Q: the shadow onto (0, 1) of the 3-D ellipsoid is the
        // ellipse with semi-axes sqrt(q00), sqrt(q11).
        let q = DMatrix::from_diagonal(&DVector::from_row_slice(&[4.0, 0.25, 9.0]));
        let pair = QuadraticBarrierPair::new(
            DVector::zeros(3),
            DVector::zeros(1),
            q,
            DMatrix::zeros(1, 3),
        )
        .unwrap();
        let bank = MinQuadraticBarrier::new(vec![pair]).unwrap();
        let mut buf = Vec::new();
        write_region_csv(&mut buf, &bank, (0, 1), ("a", "b")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut max_x: f64 = 0.0;
        let mut max_y: f64 = 0.0;
        for line in text.lines().skip(1) {
            let v: Vec<f64> = line
                .split(',')
                .skip(1)
                .map(|t| t.parse().unwrap())
                .collect();
            max_x = max_x.max(v[0].abs());
            max_y = max_y.max(v[1].abs());
        }
        assert!((max_x - 2.0).abs() < 1e-9, "max_x = {max_x}");
        assert!((max_y - 0.5).abs() < 1e-9, "max_y = {max_y}");
    }
}

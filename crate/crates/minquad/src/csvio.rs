//! CSV export of trajectories.
//!
//! Layout: `t,x0..x{n-1},u_req0..,u_app0..,B,mode,active_index` with floats
//! printed at 17 significant digits, mode encoded 0 = Transparent and
//! 1 = Safety, and an empty `active_index` field outside Safety mode.

use std::io::{self, Write};

use minquad_core::sim::Trajectory;
use minquad_core::supervisor::SupervisorMode;

use crate::bank::fmt17;

pub fn trajectory_header(n: usize, m: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((0..n).map(|i| format!("x{i}")));
    cols.extend((0..m).map(|i| format!("u_req{i}")));
    cols.extend((0..m).map(|i| format!("u_app{i}")));
    cols.push("B".into());
    cols.push("mode".into());
    cols.push("active_index".into());
    cols.join(",")
}

/// Writes every `stride`-th sample (and always the final one).
pub fn write_trajectory_csv(
    out: &mut impl Write,
    trajectory: &Trajectory,
    stride: usize,
) -> io::Result<()> {
    let stride = stride.max(1);
    let n = trajectory.states().first().map_or(0, |s| s.len());
    let m = trajectory.u_applied().first().map_or(0, |u| u.len());
    writeln!(out, "{}", trajectory_header(n, m))?;
    let last = trajectory.len().saturating_sub(1);
    for k in 0..trajectory.len() {
        if k % stride != 0 && k != last {
            continue;
        }
        let mut fields = vec![fmt17(trajectory.times()[k])];
        fields.extend(trajectory.states()[k].iter().map(|v| fmt17(*v)));
        fields.extend(trajectory.u_requested()[k].iter().map(|v| fmt17(*v)));
        fields.extend(trajectory.u_applied()[k].iter().map(|v| fmt17(*v)));
        fields.push(fmt17(trajectory.barrier_values()[k]));
        match trajectory.modes()[k] {
            SupervisorMode::Transparent => {
                fields.push("0".into());
                fields.push(String::new());
            }
            SupervisorMode::Safety { active } => {
                fields.push("1".into());
                fields.push(active.to_string());
            }
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use minquad_core::sim::Trajectory;
    use nalgebra::DVector;

    #[test]
    fn header_and_rows_match_layout() {
        let mut t = Trajectory::default();
        t.push(
            0.0,
            DVector::from_row_slice(&[0.25, -1.0]),
            DVector::from_row_slice(&[2.0]),
            DVector::from_row_slice(&[1.0]),
            -0.5,
            SupervisorMode::Transparent,
        );
        t.push(
            1e-3,
            DVector::from_row_slice(&[0.5, 0.0]),
            DVector::from_row_slice(&[3.0]),
            DVector::from_row_slice(&[3.0]),
            0.0,
            SupervisorMode::Safety { active: 7 },
        );
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &t, 1).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,x0,x1,u_req0,u_app0,B,mode,active_index"
        );
        let row0 = lines.next().unwrap();
        assert!(row0.starts_with("0.0000000000000000e0,2.5000000000000000e-1"));
        assert!(row0.ends_with(",0,"));
        let row1 = lines.next().unwrap();
        assert!(row1.ends_with(",1,7"));
    }

    #[test]
    fn stride_keeps_final_sample() {
        let mut t = Trajectory::default();
        for k in 0..5 {
            t.push(
                k as f64,
                DVector::from_row_slice(&[0.0]),
                DVector::from_row_slice(&[0.0]),
                DVector::from_row_slice(&[0.0]),
                -1.0,
                SupervisorMode::Transparent,
            );
        }
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &t, 3).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // header + samples 0, 3, 4 (final forced)
        assert_eq!(text.lines().count(), 4);
    }
}

//! CSV and OBJ artifact writers, and the trajectory-CSV domain annotator.
//!
//! All floats are written with Rust's shortest round-trip formatting, so
//! re-reading reproduces the exact binary values and repeated runs emit
//! byte-identical files. Undefined quantities (`None`, NaN) become empty
//! cells.

use std::io::{self, Write};

use crate::geom::Vector;
use crate::kinematics::KinematicsSample;
use crate::levelset::LevelSet;
use crate::manifold;
use crate::model::ModelSpec;
use crate::trajectory::Trajectory;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("bad input table: {0}")]
    BadTable(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Manifold(#[from] manifold::ManifoldError),
}

fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

fn axis_names(dim: usize) -> &'static [&'static str] {
    match dim {
        2 => &["x", "y"],
        _ => &["x", "y", "z"],
    }
}

/// `t, x, y[, z]` per node.
pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory) -> Result<(), CsvError> {
    let mut out = csv::Writer::from_writer(w);
    let dim = traj.states.first().map(|s| s.dim()).unwrap_or(0);
    let mut header = vec!["t"];
    header.extend_from_slice(axis_names(dim));
    out.write_record(&header)?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![fmt(*t)];
        row.extend(s.as_slice().iter().map(|x| fmt(*x)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// `t, x, y[, z], gamma_tau, gamma_nu, curvature, torsion, domain` —
/// one kinematics sample per trajectory node.
pub fn write_kinematics_csv<W: Write>(
    w: W,
    times: &[f64],
    samples: &[KinematicsSample],
) -> Result<(), CsvError> {
    let mut out = csv::Writer::from_writer(w);
    let dim = samples.first().map(|s| s.state.dim()).unwrap_or(0);
    let mut header = vec!["t"];
    header.extend_from_slice(axis_names(dim));
    header.extend_from_slice(&["gamma_tau", "gamma_nu", "curvature", "torsion", "domain"]);
    out.write_record(&header)?;
    for (t, s) in times.iter().zip(samples) {
        let mut row = vec![fmt(*t)];
        row.extend(s.state.as_slice().iter().map(|x| fmt(*x)));
        row.push(fmt_opt(s.gamma_tau));
        row.push(fmt_opt(s.gamma_nu));
        row.push(fmt_opt(s.curvature));
        row.push(fmt_opt(s.torsion));
        row.push(s.domain.map(|d| d.label()).unwrap_or("").to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// `t, x, y[, z]` per section crossing.
pub fn write_crossings_csv<W: Write>(
    w: W,
    crossings: &[(f64, Vector)],
) -> Result<(), CsvError> {
    let mut out = csv::Writer::from_writer(w);
    let dim = crossings.first().map(|(_, s)| s.dim()).unwrap_or(3);
    let mut header = vec!["t"];
    header.extend_from_slice(axis_names(dim));
    out.write_record(&header)?;
    for (t, s) in crossings {
        let mut row = vec![fmt(*t)];
        row.extend(s.as_slice().iter().map(|x| fmt(*x)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Point-cloud form of a level set:
/// `x, y[, z], phi_residual, torsion, attractivity, domain`.
pub fn write_levelset_csv<W: Write>(w: W, ls: &LevelSet) -> Result<(), CsvError> {
    let mut out = csv::Writer::from_writer(w);
    let dim = ls.vertices.first().map(|v| v.dim()).unwrap_or(2);
    let mut header: Vec<&str> = axis_names(dim).to_vec();
    header.extend_from_slice(&["phi_residual", "torsion", "attractivity", "domain"]);
    out.write_record(&header)?;
    for (i, v) in ls.vertices.iter().enumerate() {
        let mut row: Vec<String> = v.as_slice().iter().map(|x| fmt(*x)).collect();
        let ann = ls.annotations.get(i).copied().unwrap_or_default();
        row.push(fmt(ls.residuals[i]));
        row.push(fmt_opt(ann.torsion));
        row.push(fmt_opt(ann.attractivity));
        row.push(ann.domain.map(|d| d.label()).unwrap_or("").to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Triangle soup as OBJ text: `v x y z` then 1-based `f i j k`. Polyline
/// connectivity is exported as `l` lines for viewers that support them.
pub fn write_levelset_obj<W: Write>(mut w: W, ls: &LevelSet) -> Result<(), CsvError> {
    for v in &ls.vertices {
        let (x, y) = (v[0], v[1]);
        let z = if v.dim() > 2 { v[2] } else { 0.0 };
        writeln!(w, "v {} {} {}", fmt(x), fmt(y), fmt(z))?;
    }
    for t in &ls.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    for line in &ls.polylines {
        let idx: Vec<String> = line.iter().map(|i| (i + 1).to_string()).collect();
        writeln!(w, "l {}", idx.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `t, x, y[, z]` table back (any extra columns are ignored).
pub fn read_trajectory_csv<R: io::Read>(r: R) -> Result<Vec<(f64, Vector)>, CsvError> {
    let mut reader = csv::Reader::from_reader(r);
    let headers = reader.headers()?.clone();
    let dim = headers.len().saturating_sub(1).min(3);
    if headers.get(0) != Some("t") || !(2..=3).contains(&dim) {
        return Err(CsvError::BadTable(
            "expected header t,x,y[,z]".to_string(),
        ));
    }
    let mut rows = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64, CsvError> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| CsvError::BadTable(format!("row {}: bad number", n + 2)))
        };
        let t = parse(0)?;
        let mut s = Vector::zeros(dim);
        for a in 0..dim {
            s.set(a, parse(a + 1)?);
        }
        rows.push((t, s));
    }
    Ok(rows)
}

/// Copies a trajectory table, appending a `domain` column with the
/// slow/fast/boundary classification of each row's state. Original cells
/// are passed through verbatim.
pub fn append_domain_column<R: io::Read, W: Write>(
    r: R,
    w: W,
    model: &ModelSpec,
) -> Result<usize, CsvError> {
    let mut reader = csv::Reader::from_reader(r);
    let mut out = csv::Writer::from_writer(w);
    let headers = reader.headers()?.clone();
    let dim = model.dim();
    if headers.len() < dim + 1 || headers.get(0) != Some("t") {
        return Err(CsvError::BadTable(format!(
            "expected header t plus {dim} state columns"
        )));
    }
    let mut new_header: Vec<&str> = headers.iter().collect();
    new_header.push("domain");
    out.write_record(&new_header)?;
    let mut rows = 0;
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        let mut s = Vector::zeros(dim);
        for a in 0..dim {
            let x = rec
                .get(a + 1)
                .and_then(|c| c.trim().parse::<f64>().ok())
                .ok_or_else(|| CsvError::BadTable(format!("row {}: bad number", n + 2)))?;
            s.set(a, x);
        }
        let label = manifold::classify_domain(model, &s)?.label();
        let mut row: Vec<&str> = rec.iter().collect();
        row.push(label);
        out.write_record(&row)?;
        rows += 1;
    }
    out.flush()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::JerkMode;
    use crate::levelset::{self, GridSpec, SurfaceMode};
    use crate::model::{builtin, parse_model};
    use crate::trajectory::{integrate, Control};

    fn damped() -> ModelSpec {
        parse_model("dim 2; dx = y; dy = 0 - 4*x - 0.4*y;").unwrap()
    }

    fn short_spiral() -> Trajectory {
        integrate(
            &damped(),
            &Vector::new2(1.0, 0.0),
            0.0,
            2.0,
            Control::Fixed { dt: 0.05 },
        )
        .unwrap()
    }

    #[test]
    fn trajectory_roundtrip() {
        let traj = short_spiral();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x,y\n"));
        let rows = read_trajectory_csv(&buf[..]).unwrap();
        assert_eq!(rows.len(), traj.len());
        // Shortest round-trip formatting restores the exact bits.
        for ((t, s), (tt, ss)) in rows.iter().zip(traj.times.iter().zip(&traj.states)) {
            assert_eq!(t, tt);
            assert_eq!(s, ss);
        }
    }

    #[test]
    fn kinematics_table_shape() {
        let m = damped();
        let traj = short_spiral();
        let samples: Vec<KinematicsSample> = traj
            .states
            .iter()
            .map(|s| crate::kinematics::sample(&m, s, JerkMode::Exact).unwrap())
            .collect();
        let mut buf = Vec::new();
        write_kinematics_csv(&mut buf, &traj.times, &samples).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,x,y,gamma_tau,gamma_nu,curvature,torsion,domain"
        );
        let first = lines.next().unwrap();
        // 2D: torsion column is empty, domain is labeled.
        let cells: Vec<&str> = first.split(',').collect();
        assert_eq!(cells.len(), 8);
        assert_eq!(cells[6], "");
        assert!(["slow", "fast", "boundary"].contains(&cells[7]));
    }

    #[test]
    fn levelset_csv_and_obj() {
        let sphere = |s: &Vector| Ok(s.norm_sq() - 1.0);
        let grid = GridSpec::new(vec![(-1.5, 1.5); 3], vec![8; 3]).unwrap();
        let ls = levelset::extract_zero_3d_fn(sphere, &grid, SurfaceMode::Triangles).unwrap();

        let mut buf = Vec::new();
        write_levelset_csv(&mut buf, &ls).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,y,z,phi_residual,torsion,attractivity,domain\n"));
        assert_eq!(text.lines().count(), ls.len() + 1);

        let mut obj = Vec::new();
        write_levelset_obj(&mut obj, &ls).unwrap();
        let objtext = String::from_utf8(obj).unwrap();
        let nv = objtext.lines().filter(|l| l.starts_with("v ")).count();
        let nf = objtext.lines().filter(|l| l.starts_with("f ")).count();
        assert_eq!(nv, ls.len());
        assert_eq!(nf, ls.triangles.len());
        // Faces are 1-based and in range.
        for line in objtext.lines().filter(|l| l.starts_with("f ")) {
            for tok in line.split_whitespace().skip(1) {
                let i: usize = tok.parse().unwrap();
                assert!(i >= 1 && i <= nv);
            }
        }
    }

    #[test]
    fn domain_column_appended() {
        let traj = short_spiral();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let m = damped();
        let mut out = Vec::new();
        let rows = append_domain_column(&buf[..], &mut out, &m).unwrap();
        assert_eq!(rows, traj.len());
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x,y,domain");
        let mut seen = std::collections::HashSet::new();
        for line in lines {
            let last = line.rsplit(',').next().unwrap();
            assert!(["slow", "fast", "boundary"].contains(&last));
            seen.insert(last.to_string());
        }
        // A damped spiral alternates decelerating and accelerating arcs.
        assert!(seen.contains("slow") && seen.contains("fast"));
    }

    #[test]
    fn bad_tables_are_rejected() {
        let junk = b"a,b\n1,2\n";
        assert!(matches!(
            read_trajectory_csv(&junk[..]),
            Err(CsvError::BadTable(_))
        ));
        let m = builtin("lorenz", &[]).unwrap();
        let two_cols = b"t,x,y\n0,1,2\n";
        assert!(append_domain_column(&two_cols[..], Vec::new(), &m).is_err());
        let bad_num = b"t,x,y\n0,one,2\n";
        let m2 = builtin("vanderpol", &[]).unwrap();
        assert!(matches!(
            append_domain_column(&bad_num[..], Vec::new(), &m2),
            Err(CsvError::BadTable(_))
        ));
    }
}

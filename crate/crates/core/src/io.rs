//! File formats: CSV with 17-significant-digit floats, JSON written through a
//! formatter that prints every float the same way, and the results schema check.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::distributions::{DiscreteDistribution, TrajectoryBatch};
use crate::error::{Error, Result};

/// Scientific notation with 17 significant digits; parses back to the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON whose floats are always written with 17 significant digits.
struct SciFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, SciFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{what}: cannot parse {s:?} as a number")))
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

/// Noise trajectories, one headerless row per trajectory holding
/// `w_0, ..., w_{t-1}` back to back in time order.
pub fn write_noise_csv(path: &Path, batch: &TrajectoryBatch) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(File::create(path)?);
    for i in 0..batch.len() {
        let rec: Vec<String> = (0..batch.horizon())
            .flat_map(|k| {
                batch
                    .step(i, k)
                    .iter()
                    .map(|x| fmt_f64(*x))
                    .collect::<Vec<_>>()
            })
            .collect();
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows of comma-separated reals, one sample per row, skipping a
/// header line when `has_header` is set.
pub fn read_samples_csv(path: &Path, has_header: bool) -> Result<Vec<DVector<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .from_path(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(DVector::from_vec(
            rec.iter()
                .map(|s| parse_f64(s, "samples CSV"))
                .collect::<Result<Vec<_>>>()?,
        ));
    }
    if rows.is_empty() {
        return Err(Error::Config(format!("{}: no samples", path.display())));
    }
    Ok(rows)
}

/// Inverse of [`write_noise_csv`]; every row must hold `horizon * noise_dim` values.
pub fn read_noise_csv(
    path: &Path,
    horizon: usize,
    noise_dim: usize,
    has_header: bool,
) -> Result<TrajectoryBatch> {
    let rows = read_samples_csv(path, has_header)?;
    let mut seqs = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != horizon * noise_dim {
            return Err(Error::Config(format!(
                "noise CSV row {i} has {} values, expected horizon * noise dim = {}",
                row.len(),
                horizon * noise_dim
            )));
        }
        seqs.push(
            (0..horizon)
                .map(|k| row.rows(k * noise_dim, noise_dim).clone_owned())
                .collect::<Vec<_>>(),
        );
    }
    TrajectoryBatch::from_time_ordered(&seqs).map_err(|e| Error::Config(format!("noise CSV: {e}")))
}

/// `weight,x1,...,xd`, one atom per row.
pub fn write_atoms_csv(path: &Path, dist: &DiscreteDistribution) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["weight".to_string()];
    header.extend((1..=dist.dim()).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    for (x, p) in dist.iter() {
        let mut rec = vec![fmt_f64(p)];
        rec.extend(x.iter().map(|v| fmt_f64(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_atoms_csv(path: &Path) -> Result<DiscreteDistribution> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        weights.push(parse_f64(&rec[0], "atoms CSV")?);
        atoms.push(DVector::from_vec(
            (1..rec.len())
                .map(|c| parse_f64(&rec[c], "atoms CSV"))
                .collect::<Result<Vec<_>>>()?,
        ));
    }
    DiscreteDistribution::new(atoms, weights)
}

/// Headerless row-major matrix.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(File::create(path)?);
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(
            rec.iter()
                .map(|s| parse_f64(s, "matrix CSV"))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    crate::lti::matrix_from_rows(&rows, "matrix CSV")
}

/// Scatter data: `set_kind,x1,x2,...`.
pub fn write_scatter_csv(path: &Path, points: &[(&str, &DVector<f64>)]) -> Result<()> {
    let mut w = writer(path)?;
    let d = points.first().map_or(2, |(_, x)| x.len());
    let mut header = vec!["set_kind".to_string()];
    header.extend((1..=d).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    for (kind, x) in points {
        let mut rec = vec![kind.to_string()];
        rec.extend(x.iter().map(|v| fmt_f64(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

const RESULT_KINDS: [&str; 3] = ["reach", "plan", "cvar"];
const STATUSES: [&str; 3] = ["optimal", "infeasible", "max-iter"];

fn schema_err(msg: impl Into<String>) -> Error {
    Error::Config(format!("results schema: {}", msg.into()))
}

fn number_or_null(v: &Value, key: &str) -> Result<()> {
    match v.get(key) {
        Some(Value::Number(_)) | Some(Value::Null) => Ok(()),
        _ => Err(schema_err(format!("\"{key}\" must be a number or null"))),
    }
}

fn number_array(v: &Value, key: &str) -> Result<()> {
    match v.get(key) {
        Some(Value::Array(a)) if a.iter().all(Value::is_number) => Ok(()),
        _ => Err(schema_err(format!("\"{key}\" must be an array of numbers"))),
    }
}

/// Checks a results document against the documented schema.
pub fn validate_results(doc: &Value) -> Result<()> {
    let kind = doc
        .get("command")
        .and_then(Value::as_str)
        .ok_or_else(|| schema_err("missing \"command\""))?;
    if !RESULT_KINDS.contains(&kind) {
        return Err(schema_err(format!("unknown command {kind:?}")));
    }
    if !doc.get("seed").is_some_and(Value::is_u64) {
        return Err(schema_err("\"seed\" must be an unsigned integer"));
    }
    if !doc.get("horizon").is_some_and(Value::is_u64) {
        return Err(schema_err("\"horizon\" must be an unsigned integer"));
    }
    number_or_null(doc, "gamma")?;
    let results = doc
        .get("results")
        .and_then(Value::as_array)
        .ok_or_else(|| schema_err("missing \"results\" array"))?;
    for r in results {
        number_or_null(r, "epsilon")?;
        match kind {
            "reach" | "plan" => {
                let status = r
                    .get("status")
                    .and_then(Value::as_str)
                    .ok_or_else(|| schema_err("missing \"status\""))?;
                if !STATUSES.contains(&status) {
                    return Err(schema_err(format!("unknown status {status:?}")));
                }
                for key in [
                    "objective",
                    "lambda",
                    "empirical_cvar",
                    "violation_fraction",
                    "worst_case_cvar",
                ] {
                    number_or_null(r, key)?;
                }
                let decision = if kind == "reach" { "b" } else { "v" };
                if status == "optimal" {
                    number_array(r, decision)?;
                } else if !r.get(decision).is_some_and(Value::is_null) {
                    number_array(r, decision)?;
                }
            }
            _ => {
                number_or_null(r, "worst_case_cvar")?;
                number_or_null(r, "sample_cvar")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn floats_round_trip_bit_exact() {
        for x in [
            0.1,
            -1.0 / 3.0,
            1e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
            0.0,
            -0.0,
        ] {
            let back: f64 = fmt_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn json_floats_use_scientific_notation() {
        let s = to_json_string(&serde_json::json!({"a": 0.5, "b": [1.0, 2]})).unwrap();
        assert!(s.contains("5.0000000000000000e-1"));
        assert!(s.contains("1.0000000000000000e0"));
        assert!(s.contains(" 2\n") || s.contains("2\n"));
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"].as_f64(), Some(0.5));
    }

    #[test]
    fn atoms_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("atoms.csv");
        let d = DiscreteDistribution::new(
            vec![dvector![0.1, -2.0 / 3.0], dvector![1e-17, 5.0]],
            vec![0.3, 0.7],
        )
        .unwrap();
        write_atoms_csv(&p, &d).unwrap();
        assert_eq!(read_atoms_csv(&p).unwrap(), d);
    }

    #[test]
    fn noise_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("noise.csv");
        let seqs = vec![
            vec![dvector![0.1, 0.2], dvector![0.3, 0.4]],
            vec![dvector![-1.0, 0.0], dvector![2.5, 1.0 / 7.0]],
        ];
        let batch = TrajectoryBatch::from_time_ordered(&seqs).unwrap();
        write_noise_csv(&p, &batch).unwrap();
        assert_eq!(
            read_noise_csv(&p, batch.horizon(), batch.noise_dim(), false).unwrap(),
            batch
        );
    }
}

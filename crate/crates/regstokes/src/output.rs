//! CSV output. Every file starts with a `# units:` comment line, then a
//! header row, then data. Floats are written with 17 significant digits so
//! that reading a file back reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use regstokes_core::scenarios::blebbing::{self, BlebbingOutput};
use regstokes_core::scenarios::motility::{self, CycleEventKind, MotilityOutput};
use regstokes_core::scenarios::{tethered, ScenarioKind, ScenarioOutput, TimeSeries};

use crate::error::OutputError;

/// One written file and its number of data rows.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct WrittenFile {
    pub name: String,
    pub rows: usize,
}

/// A CSV value: floats in round-trip form, integers as integers, or text.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    F(f64),
    I(i64),
    S(&'static str),
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::F(v) => format_f64(*v),
            Value::I(v) => v.to_string(),
            Value::S(s) => (*s).to_string(),
        }
    }
}

/// 17 significant digits in scientific notation.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `rows` under `header`, preceded by a units comment when given.
pub fn write_rows(
    path: &Path,
    units: Option<&str>,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<Value>>,
) -> Result<usize, OutputError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    if let Some(u) = units {
        writeln!(out, "# units: {u}").map_err(io_err(path))?;
    }
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    };
    w.write_record(header).map_err(csv_err)?;
    let mut n = 0;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(row.iter().map(Value::render)).map_err(csv_err)?;
        n += 1;
    }
    w.flush().map_err(io_err(path))?;
    Ok(n)
}

/// Float-only table.
pub fn write_timeseries(path: &Path, units: Option<&str>, header: &[&str], rows: &[Vec<f64>]) -> Result<usize, OutputError> {
    write_rows(path, units, header, rows.iter().map(|r| r.iter().map(|v| Value::F(*v)).collect()))
}

/// Reads a file written by [`write_timeseries`]; comment lines are skipped.
pub fn read_timeseries(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), OutputError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|source| OutputError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    let header = r
        .headers()
        .map_err(|source| OutputError::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|source| OutputError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|e| OutputError::Format {
                    path: path.to_path_buf(),
                    message: format!("{s:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Units of each trace column, in column order.
pub fn trace_units(kind: ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::Tethered => "t s, x_ymax um, x_center um, y_center um, max_speed um/s",
        ScenarioKind::Motility => {
            "t s, nucleus_x um, nucleus_y um, displacement um, phase code, cycles count, bound_node index (-1 unbound), max_speed um/s"
        }
        ScenarioKind::Blebbing => {
            "t s, p_center Pa, cortex_radius um, membrane_top um, intact_links count, max_speed um/s"
        }
    }
}

pub fn trace_columns(kind: ScenarioKind) -> &'static [&'static str] {
    match kind {
        ScenarioKind::Tethered => &tethered::TRACE_COLUMNS,
        ScenarioKind::Motility => &motility::TRACE_COLUMNS,
        ScenarioKind::Blebbing => &blebbing::TRACE_COLUMNS,
    }
}

const POSITION_UNITS: &str = "t s, node index, x um, y um";

/// File name for a pressure profile at time `t`.
pub fn pressure_file_name(t: f64) -> String {
    format!("pressure_{t}.csv")
}

fn write_positions(dir: &Path, series: &TimeSeries, files: &mut Vec<WrittenFile>) -> Result<(), OutputError> {
    for name in series.structures() {
        let file = format!("positions_{name}.csv");
        let rows = series.snapshots_of(name).flat_map(|s| {
            s.nodes
                .iter()
                .enumerate()
                .map(move |(i, p)| vec![Value::F(s.t), Value::I(i as i64), Value::F(p.x), Value::F(p.y)])
        });
        let n = write_rows(&dir.join(&file), Some(POSITION_UNITS), &["t", "node", "x", "y"], rows)?;
        files.push(WrittenFile { name: file, rows: n });
    }
    Ok(())
}

fn write_trace(dir: &Path, kind: ScenarioKind, series: &TimeSeries, files: &mut Vec<WrittenFile>) -> Result<(), OutputError> {
    let n = write_timeseries(
        &dir.join("trace.csv"),
        Some(trace_units(kind)),
        &series.trace.columns,
        &series.trace.rows,
    )?;
    files.push(WrittenFile {
        name: "trace.csv".into(),
        rows: n,
    });
    Ok(())
}

fn write_motility_extras(dir: &Path, out: &MotilityOutput, files: &mut Vec<WrittenFile>) -> Result<(), OutputError> {
    let rows = out.events.iter().map(|e| {
        let (kind, ecm, cortex) = match e.kind {
            CycleEventKind::Protrusion { cortex_node } => ("protrusion", -1, cortex_node as i64),
            CycleEventKind::Bound { ecm_node, cortex_node } => ("bound", ecm_node as i64, cortex_node as i64),
            CycleEventKind::Contracted { ecm_node } => ("contracted", ecm_node as i64, -1),
            CycleEventKind::Released { ecm_node } => ("released", ecm_node as i64, -1),
            CycleEventKind::Settled => ("settled", -1, -1),
        };
        vec![Value::F(e.t), Value::S(kind), Value::I(ecm), Value::I(cortex)]
    });
    let n = write_rows(
        &dir.join("events.csv"),
        Some("t s, event name, ecm_node index (-1 none), cortex_node index (-1 none)"),
        &["t", "event", "ecm_node", "cortex_node"],
        rows,
    )?;
    files.push(WrittenFile {
        name: "events.csv".into(),
        rows: n,
    });

    let rows = out.edges.iter().map(|&(i, j)| vec![Value::I(i as i64), Value::I(j as i64)]);
    let n = write_rows(&dir.join("ecm_edges.csv"), Some("i index, j index"), &["i", "j"], rows)?;
    files.push(WrittenFile {
        name: "ecm_edges.csv".into(),
        rows: n,
    });

    let rows = out.ecm_initial.iter().zip(&out.ecm_final).enumerate().map(|(i, (a, b))| {
        vec![Value::I(i as i64), Value::F(a.x), Value::F(a.y), Value::F(b.x), Value::F(b.y)]
    });
    let n = write_rows(
        &dir.join("ecm_nodes.csv"),
        Some("node index, x0 um, y0 um, x um, y um"),
        &["node", "x0", "y0", "x", "y"],
        rows,
    )?;
    files.push(WrittenFile {
        name: "ecm_nodes.csv".into(),
        rows: n,
    });
    Ok(())
}

fn write_pressure(dir: &Path, out: &BlebbingOutput, files: &mut Vec<WrittenFile>) -> Result<(), OutputError> {
    for prof in &out.pressure {
        let file = pressure_file_name(prof.t);
        let rows: Vec<Vec<f64>> = prof.y.iter().zip(&prof.p).map(|(y, p)| vec![*y, *p]).collect();
        let n = write_timeseries(&dir.join(&file), Some("y um, p Pa (x = 0)"), &["y", "p"], &rows)?;
        files.push(WrittenFile { name: file, rows: n });
    }
    Ok(())
}

/// Writes every CSV for a finished run into `dir` and lists them.
pub fn write_scenario_output(dir: &Path, kind: ScenarioKind, output: &ScenarioOutput) -> Result<Vec<WrittenFile>, OutputError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = Vec::new();
    let series = output.series();
    write_trace(dir, kind, series, &mut files)?;
    write_positions(dir, series, &mut files)?;
    match output {
        ScenarioOutput::Tethered(_) => {}
        ScenarioOutput::Motility(m) => write_motility_extras(dir, m, &mut files)?,
        ScenarioOutput::Blebbing(b) => write_pressure(dir, b, &mut files)?,
    }
    Ok(files)
}

/// Writes the `sigma.csv` table.
pub fn write_sigma(path: &Path, rows: &[(f64, f64)]) -> Result<usize, OutputError> {
    let rows: Vec<Vec<f64>> = rows.iter().map(|(r, s)| vec![*r, *s]).collect();
    write_timeseries(path, Some("R um, sigma_u dimensionless"), &["R", "sigma_u"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rows_give_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        assert_eq!(write_timeseries(&p, None, &["t", "x"], &[]).unwrap(), 0);
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "t,x\n");
    }

    #[test]
    fn one_row_gives_two_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_timeseries(&p, None, &["a", "b", "c"], &[vec![1.0, 2.5, -3.0]]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let rows = vec![
            vec![0.1, 1.0 / 3.0, -2.0f64.sqrt()],
            vec![f64::MIN_POSITIVE, 1e300, -0.0],
            vec![123456789.12345679, 5e-324, std::f64::consts::PI],
        ];
        write_timeseries(&p, Some("a s, b um, c Pa"), &["a", "b", "c"], &rows).unwrap();
        let (header, back) = read_timeseries(&p).unwrap();
        assert_eq!(header, ["a", "b", "c"]);
        for (r, s) in rows.iter().zip(&back) {
            for (x, y) in r.iter().zip(s) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("# units: a s"));
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(-2.0), "-2.0000000000000000e0");
    }
}

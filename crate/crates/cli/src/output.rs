//! Output sinks and the CSV layouts.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use qbound::bounds::{BoundReport, BoundValue};
use qbound::estimators::EstimatorReport;
use qbound::reproduce::Table;

use super::{CliError, CliResult};

/// Buffered stdout or file; files are written only once the output is complete.
pub struct Sink {
    target: Option<std::path::PathBuf>,
    buf: Vec<u8>,
}

impl Sink {
    pub fn open(path: Option<&Path>) -> CliResult<Self> {
        Ok(Sink {
            target: path.map(Path::to_path_buf),
            buf: Vec::new(),
        })
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, value: &T) -> CliResult<()> {
        serde_json::to_writer_pretty(&mut self.buf, value).map_err(|e| CliError {
            kind: "io",
            message: e.to_string(),
        })?;
        self.buf.push(b'\n');
        Ok(())
    }

    pub fn finish(self) -> CliResult<()> {
        match self.target {
            Some(path) => {
                let mut w = BufWriter::new(File::create(path)?);
                w.write_all(&self.buf)?;
                w.flush()?;
            }
            None => io::stdout().lock().write_all(&self.buf)?,
        }
        Ok(())
    }
}

impl Write for Sink {
    fn write(&mut self, data: &[u8]) -> io::Result<usize> {
        self.buf.extend_from_slice(data);
        Ok(data.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// 17 significant digits; non-finite values spelled `inf`, `-inf`, `nan`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn header_comment(sink: &mut Sink, what: &str) -> CliResult<()> {
    write!(sink, "# qbound {} {what}\r\n", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

fn csv_error(e: csv::Error) -> CliError {
    CliError {
        kind: "io",
        message: e.to_string(),
    }
}

fn csv_writer(sink: &mut Sink) -> csv::Writer<&mut Sink> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(sink)
}

pub fn write_table_csv(sink: &mut Sink, table: &Table, what: &str) -> CliResult<()> {
    header_comment(sink, what)?;
    let mut w = csv_writer(sink);
    w.write_record(&table.columns).map_err(csv_error)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&v| num(v)))
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bound_csv(
    sink: &mut Sink,
    reports: &[BoundReport],
    param_dim: usize,
) -> CliResult<()> {
    header_comment(sink, "bound")?;
    let mut w = csv_writer(sink);
    let mut header: Vec<String> = if param_dim == 1 {
        vec!["theta".into()]
    } else {
        (1..=param_dim).map(|i| format!("theta{i}")).collect()
    };
    header.extend(
        [
            "kind",
            "flavor",
            "value",
            "information",
            "pinv_rank",
            "condition",
        ]
        .map(String::from),
    );
    w.write_record(&header).map_err(csv_error)?;
    for r in reports {
        let mut rec: Vec<String> = r.theta.iter().map(|&v| num(v)).collect();
        rec.push(
            serde_json::to_value(r.kind)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
        );
        rec.push(
            r.flavor
                .and_then(|f| serde_json::to_value(f).ok())
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
        );
        rec.push(match r.value {
            BoundValue::Finite(v) => num(v),
            BoundValue::Infinite => "inf".into(),
        });
        rec.push(opt_num(r.diagnostics.information));
        rec.push(
            r.diagnostics
                .pinv_rank
                .map(|k| k.to_string())
                .unwrap_or_default(),
        );
        rec.push(opt_num(r.diagnostics.condition));
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_estimator_csv(sink: &mut Sink, reports: &[EstimatorReport]) -> CliResult<()> {
    header_comment(sink, "simulate")?;
    let mut w = csv_writer(sink);
    w.write_record([
        "theta",
        "n",
        "trials",
        "bias",
        "mse",
        "n_times_mse",
        "std_error",
        "seed",
    ])
    .map_err(csv_error)?;
    for r in reports {
        let theta = r
            .theta
            .iter()
            .map(|&v| num(v))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            theta,
            r.n_copies.to_string(),
            r.trials.map(|t| t.to_string()).unwrap_or_default(),
            num(r.bias),
            num(r.mse),
            num(r.n_times_mse()),
            opt_num(r.std_error),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

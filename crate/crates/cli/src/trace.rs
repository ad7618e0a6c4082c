//! Trace files: one draw per line, `mask<TAB>g<TAB>log_bf`, with the mask in
//! lowercase hex. Blank lines and lines starting with `#` are ignored on input.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use modelspace::sampler::ChainTrace;
use modelspace::ModelIndex;

use crate::error::{io_error, CliError};

pub fn write_trace(trace: &ChainTrace, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    for ((m, g), lbf) in trace.models.iter().zip(&trace.g_draws).zip(&trace.log_bfs) {
        writeln!(w, "{}\t{g}\t{lbf}", m.to_hex()).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub model: ModelIndex,
    pub g: f64,
    pub log_bf: f64,
}

pub fn read_trace(path: &Path, p: usize) -> Result<Vec<Record>, CliError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    parse(BufReader::new(file), p).map_err(|(line, msg)| CliError::Data(format!("{}:{line}: {msg}", path.display())))
}

fn parse(reader: impl BufRead, p: usize) -> Result<Vec<Record>, (usize, String)> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| (line_no, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err((line_no, format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        let model = ModelIndex::from_hex(p, fields[0])
            .ok_or_else(|| (line_no, format!("`{}` is not a mask over {p} columns", fields[0])))?;
        let g = fields[1].parse().map_err(|_| (line_no, format!("bad g `{}`", fields[1])))?;
        let log_bf = fields[2].parse().map_err(|_| (line_no, format!("bad log_bf `{}`", fields[2])))?;
        out.push(Record { model, g, log_bf });
    }
    Ok(out)
}

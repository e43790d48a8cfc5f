//! CSV and JSON artifacts, and readers for them.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! reading a file back gives bitwise the values that were written.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use lockstep_hmc::diagnostics::{DiagnosticsReport, TraceRecorder};
use serde::{Deserialize, Serialize};

/// Columns before and after the parameters in a trace CSV.
pub const TRACE_LEADING: [&str; 2] = ["chain", "draw"];
pub const TRACE_TRAILING: [&str; 2] = ["is_accepted", "log_accept_ratio"];

/// A trace CSV held in memory. Rows are draw-major: all chains of draw 0,
/// then all chains of draw 1, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub param_names: Vec<String>,
    pub chains: usize,
    pub draws: usize,
    /// `values[(draw * chains + chain) * dim + param]`
    pub values: Vec<f64>,
    pub is_accepted: Vec<bool>,
    pub log_accept_ratio: Vec<f64>,
}

impl TraceTable {
    pub fn from_recorder(rec: &TraceRecorder, param_names: &[String]) -> Self {
        let (chains, dim, draws) = (rec.chains(), rec.dim(), rec.num_draws());
        assert_eq!(param_names.len(), dim, "one name per dimension");
        let mut values = Vec::with_capacity(draws * chains * dim);
        let mut is_accepted = Vec::with_capacity(draws * chains);
        let mut log_accept_ratio = Vec::with_capacity(draws * chains);
        for t in 0..draws {
            for c in 0..chains {
                values.extend((0..dim).map(|p| rec.value(t, c, p)));
                is_accepted.push(rec.is_accepted(t, c));
                log_accept_ratio.push(rec.log_accept_ratio(t, c));
            }
        }
        TraceTable {
            param_names: param_names.to_vec(),
            chains,
            draws,
            values,
            is_accepted,
            log_accept_ratio,
        }
    }

    pub fn dim(&self) -> usize {
        self.param_names.len()
    }

    pub fn value(&self, draw: usize, chain: usize, param: usize) -> f64 {
        self.values[(draw * self.chains + chain) * self.dim() + param]
    }

    pub fn write(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header = TRACE_LEADING
            .iter()
            .copied()
            .chain(self.param_names.iter().map(String::as_str))
            .chain(TRACE_TRAILING);
        w.write_record(header)?;
        let dim = self.dim();
        let mut record = Vec::with_capacity(dim + 4);
        for t in 0..self.draws {
            for c in 0..self.chains {
                let row = t * self.chains + c;
                record.clear();
                record.push(c.to_string());
                record.push(t.to_string());
                record.extend(self.values[row * dim..(row + 1) * dim].iter().map(f64::to_string));
                record.push(if self.is_accepted[row] { "1" } else { "0" }.to_string());
                record.push(self.log_accept_ratio[row].to_string());
                w.write_record(&record)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(input: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.len() < 4
            || header[..2] != TRACE_LEADING
            || header[header.len() - 2..] != TRACE_TRAILING
        {
            bail!("not a trace CSV: header is {header:?}");
        }
        let param_names = header[2..header.len() - 2].to_vec();
        let dim = param_names.len();
        let mut values = Vec::new();
        let mut is_accepted = Vec::new();
        let mut log_accept_ratio = Vec::new();
        let mut index = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |j: usize| rec.get(j).unwrap_or_default();
            let line = i + 2;
            let chain: usize = field(0).parse().with_context(|| format!("line {line}: chain"))?;
            let draw: usize = field(1).parse().with_context(|| format!("line {line}: draw"))?;
            index.push((chain, draw));
            for j in 0..dim {
                let v: f64 = field(2 + j)
                    .parse()
                    .with_context(|| format!("line {line}: {}", param_names[j]))?;
                values.push(v);
            }
            is_accepted.push(match field(2 + dim) {
                "1" => true,
                "0" => false,
                other => bail!("line {line}: is_accepted must be 0 or 1, got {other:?}"),
            });
            log_accept_ratio.push(
                field(3 + dim)
                    .parse()
                    .with_context(|| format!("line {line}: log_accept_ratio"))?,
            );
        }
        let chains = index.iter().take_while(|(_, d)| *d == 0).count();
        if chains == 0 && !index.is_empty() {
            bail!("first row must be draw 0");
        }
        let draws = if chains == 0 { 0 } else { index.len() / chains };
        if draws * chains != index.len() {
            bail!("{} rows do not form whole draws of {chains} chains", index.len());
        }
        for (i, &(c, t)) in index.iter().enumerate() {
            if (c, t) != (i % chains, i / chains) {
                bail!("rows out of order at data row {}", i + 1);
            }
        }
        Ok(TraceTable {
            param_names,
            chains,
            draws,
            values,
            is_accepted,
            log_accept_ratio,
        })
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(f);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        Self::read(BufReader::new(f))
    }
}

/// The JSON document `sample` writes: run settings and timing alongside
/// the diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub model: String,
    pub precision: String,
    pub seed: u64,
    pub data_seed: u64,
    pub warmup: usize,
    pub leapfrog_steps: usize,
    pub jitter: bool,
    pub stable_ratio: bool,
    pub adapt: bool,
    pub retention: String,
    /// Step size after warmup.
    pub step_size: f64,
    pub mass_diag: Option<Vec<f64>>,
    pub param_names: Vec<String>,
    pub acceptance_rate: f64,
    pub wall_seconds: f64,
    pub draws_per_second: f64,
    #[serde(flatten)]
    pub diagnostics: DiagnosticsReport,
}

pub fn write_json<S: Serialize>(value: &S, path: &Path) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<S: for<'de> Deserialize<'de>>(path: &Path) -> Result<S> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

/// One line of a throughput sweep. Timing fields are empty when the run
/// could not be performed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub chains: usize,
    pub wall_seconds: Option<f64>,
    pub draws_per_second: Option<f64>,
}

pub fn write_bench(rows: &[BenchRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(["chains", "wall_seconds", "draws_per_second"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_bench(input: impl Read) -> Result<Vec<BenchRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

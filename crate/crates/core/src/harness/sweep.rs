use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::ThreadPoolBuilder;

use super::{run_cell, CellResult, ExperimentConfig, MetricCounts};
use crate::error::{Error, Result};
use crate::market::write_market;
use crate::simgen::GENERATOR_ID;

pub const CSV_HEADER: &str =
    "lambda,alpha,delta,beta,draws,pct_da_efficient,pct_seq_mbp,pct_gmbp,pct_da_eq_ttc";

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Keep the rows of an existing output file that match this sweep and
    /// only compute the rest.
    pub resume: bool,
    /// Print one line per finished cell to stderr.
    pub progress: bool,
}

/// Pooled shares for one `(lambda, alpha)` pair over its delta/beta grid,
/// with binomial standard errors (in percentage points).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub lambda: f64,
    pub alpha: f64,
    pub cells: usize,
    pub draws: usize,
    pub pct: [Option<f64>; 4],
    pub se: [Option<f64>; 4],
    /// Markets with sequential MBP but TTC different from DA; unknown if
    /// any cell was resumed from an earlier file.
    pub seq_mbp_ttc_divergent: Option<usize>,
}

impl SummaryRow {
    pub fn pct_da_efficient(&self) -> Option<f64> {
        self.pct[0]
    }
    pub fn pct_seq_mbp(&self) -> Option<f64> {
        self.pct[1]
    }
    pub fn pct_gmbp(&self) -> Option<f64> {
        self.pct[2]
    }
    pub fn pct_da_eq_ttc(&self) -> Option<f64> {
        self.pct[3]
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub cells: Vec<CellResult>,
    pub summaries: Vec<SummaryRow>,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
    /// Cells taken over from an existing file.
    pub resumed_cells: usize,
}

pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("summary.csv")
}

/// Where a market that broke an implication is dumped.
pub fn violation_dump_path(csv: &Path, cell: usize, draw: usize) -> PathBuf {
    csv.with_extension(format!("violation-cell{cell}-draw{draw}.json"))
}

fn metadata_lines(config: &ExperimentConfig) -> Vec<String> {
    vec![
        "# mbp sweep results".to_string(),
        format!("# version: {}", env!("CARGO_PKG_VERSION")),
        format!("# generator: {GENERATOR_ID}"),
        format!("# master_seed: {}", config.master_seed),
        format!(
            "# n: {}, m: {}, q: {}, draws_per_cell: {}",
            config.n, config.m, config.q, config.draws_per_cell
        ),
        format!("# metrics: {}", config.metrics.names().join(",")),
    ]
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_row(cell: &CellResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        cell.lambda,
        cell.alpha,
        cell.delta,
        cell.beta,
        cell.draws,
        fmt_opt(cell.pct_da_efficient()),
        fmt_opt(cell.pct_seq_mbp()),
        fmt_opt(cell.pct_gmbp()),
        fmt_opt(cell.pct_da_eq_ttc()),
    )
}

fn parse_row(line: &str) -> Option<CellResult> {
    let fields: Vec<&str> = line.trim_end().split(',').collect();
    if fields.len() != 9 {
        return None;
    }
    let num = |s: &str| s.parse::<f64>().ok();
    let draws: usize = fields[4].parse().ok()?;
    let count = |s: &str| -> Option<Option<usize>> {
        if s.is_empty() {
            Some(None)
        } else {
            let pct = num(s)?;
            Some(Some((pct * draws as f64 / 100.0).round() as usize))
        }
    };
    Some(CellResult {
        lambda: num(fields[0])?,
        alpha: num(fields[1])?,
        delta: num(fields[2])?,
        beta: num(fields[3])?,
        draws,
        counts: MetricCounts {
            da_efficient: count(fields[5])?,
            seq_mbp: count(fields[6])?,
            gmbp: count(fields[7])?,
            da_eq_ttc: count(fields[8])?,
            seq_mbp_ttc_divergent: None,
        },
    })
}

/// Reads the cell rows of a results file, skipping metadata comments.
pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<CellResult>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    match lines.next() {
        Some(h) if h.trim_end() == CSV_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "{}: expected header {CSV_HEADER:?}, found {other:?}",
                path.display()
            )))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| parse_row(l).ok_or_else(|| Error::Parse(format!("bad row in {}: {l}", path.display()))))
        .collect()
}

/// Rows of an earlier run that can be reused: the longest prefix of cells
/// that matches this configuration, provided the metadata is identical.
fn resumable_prefix(path: &Path, config: &ExperimentConfig) -> Result<Vec<CellResult>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let expected = metadata_lines(config);
    let mut lines = text.lines();
    for want in &expected {
        if lines.next() != Some(want.as_str()) {
            return Err(Error::Resume {
                path: path.to_path_buf(),
                reason: format!("metadata differs from this configuration (expected {want:?})"),
            });
        }
    }
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Resume {
            path: path.to_path_buf(),
            reason: "missing header row".into(),
        });
    }
    let mut kept = Vec::new();
    for (line, params) in lines.zip(config.cells()) {
        match parse_row(line) {
            Some(row)
                if row.lambda == params.lambda
                    && row.alpha == params.alpha
                    && row.delta == params.delta
                    && row.beta == params.beta
                    && row.draws == config.draws_per_cell
                    && csv_row(&row) == line =>
            {
                kept.push(row)
            }
            _ => break,
        }
    }
    Ok(kept)
}

/// Groups cells by `(lambda, alpha)` in first-seen order and pools them.
pub fn summarize(cells: &[CellResult]) -> Vec<SummaryRow> {
    let mut keys: Vec<(f64, f64)> = Vec::new();
    for c in cells {
        if !keys.iter().any(|&(l, a)| l == c.lambda && a == c.alpha) {
            keys.push((c.lambda, c.alpha));
        }
    }
    keys.into_iter()
        .map(|(lambda, alpha)| {
            let group: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.lambda == lambda && c.alpha == alpha)
                .collect();
            let draws: usize = group.iter().map(|c| c.draws).sum();
            let mut pct = [None; 4];
            let mut se = [None; 4];
            for k in 0..4 {
                let counts: Option<usize> = group.iter().map(|c| c.counts.as_array()[k]).sum();
                if let Some(total) = counts {
                    let p = total as f64 / draws as f64;
                    pct[k] = Some(100.0 * p);
                    se[k] = Some(100.0 * (p * (1.0 - p) / draws as f64).sqrt());
                }
            }
            SummaryRow {
                lambda,
                alpha,
                cells: group.len(),
                draws,
                pct,
                se,
                seq_mbp_ttc_divergent: group.iter().map(|c| c.counts.seq_mbp_ttc_divergent).sum(),
            }
        })
        .collect()
}

fn write_summary(path: &Path, config: &ExperimentConfig, rows: &[SummaryRow]) -> Result<()> {
    let mut out = String::new();
    for line in metadata_lines(config) {
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str(
        "lambda,alpha,cells,draws,pct_da_efficient,se_da_efficient,pct_seq_mbp,se_seq_mbp,pct_gmbp,se_gmbp,pct_da_eq_ttc,se_da_eq_ttc,seq_mbp_ttc_divergent\n",
    );
    for r in rows {
        out.push_str(&format!("{},{},{},{}", r.lambda, r.alpha, r.cells, r.draws));
        for k in 0..4 {
            out.push_str(&format!(",{},{}", fmt_opt(r.pct[k]), fmt_opt(r.se[k])));
        }
        out.push_str(&format!(",{}\n", r.seq_mbp_ttc_divergent.map(|c| c.to_string()).unwrap_or_default()));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Runs every cell of `config` and writes the results CSV at
/// `config.output`, plus a `(lambda, alpha)` summary next to it.
///
/// Rows are appended and flushed in cell order as cells finish, so an
/// interrupted run can be resumed. Output depends only on the
/// configuration, never on scheduling.
pub fn run_sweep(config: &ExperimentConfig, options: &SweepOptions) -> Result<SweepReport> {
    config.validate()?;
    let csv_path = config
        .output
        .clone()
        .ok_or_else(|| Error::InvalidParams("no output path configured".into()))?;
    let cells = config.cells();

    let kept = if options.resume {
        resumable_prefix(&csv_path, config)?
    } else {
        Vec::new()
    };
    let resumed_cells = kept.len();

    let file = File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e| Error::io(&csv_path, e);
    for line in metadata_lines(config) {
        writeln!(out, "{line}").map_err(io_err)?;
    }
    writeln!(out, "{CSV_HEADER}").map_err(io_err)?;
    for row in &kept {
        writeln!(out, "{}", csv_row(row)).map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;

    let pool = ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot start worker pool: {e}")))?;

    let mut results = kept;
    for (index, params) in cells.iter().enumerate().skip(resumed_cells) {
        let cell = pool.install(|| {
            run_cell(params, config.draws_per_cell, config.master_seed, index, config.metrics)
        });
        let cell = match cell {
            Ok(c) => c,
            Err(Error::ImplicationViolation {
                cell,
                draw,
                seed,
                detail,
                market,
            }) => {
                write_market(&market, violation_dump_path(&csv_path, cell, draw))?;
                return Err(Error::ImplicationViolation {
                    cell,
                    draw,
                    seed,
                    detail,
                    market,
                });
            }
            Err(e) => return Err(e),
        };
        writeln!(out, "{}", csv_row(&cell)).map_err(io_err)?;
        out.flush().map_err(io_err)?;
        if options.progress {
            eprintln!(
                "cell {}/{}: lambda={} alpha={} delta={} beta={}",
                index + 1,
                cells.len(),
                params.lambda,
                params.alpha,
                params.delta,
                params.beta
            );
        }
        results.push(cell);
    }
    drop(out);

    let summaries = summarize(&results);
    let summary_path = summary_path(&csv_path);
    write_summary(&summary_path, config, &summaries)?;
    Ok(SweepReport {
        cells: results,
        summaries,
        csv_path,
        summary_path,
        resumed_cells,
    })
}

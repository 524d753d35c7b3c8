use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::run::{run_with, HorizonSummary, RunSummary};
use super::sim::{Phase, RunRecord};
use crate::error::{OrbitError, Result};

pub const REP_HEADER: &str = "t,phase,bin,u,u_tilde,price,purchase,inst_regret,cum_regret";
pub const SUMMARY_HEADER: &str = "T,reps,median,q25,q75,mean";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Where the transcript of repetition `k` at horizon `t` goes. Runs over
/// several horizons use one subdirectory per horizon.
pub fn rep_path(dir: &Path, config: &ExperimentConfig, t: u64, k: usize) -> PathBuf {
    if config.horizons.len() == 1 {
        dir.join(format!("rep_{k}.csv"))
    } else {
        dir.join(format!("T_{t}")).join(format!("rep_{k}.csv"))
    }
}

pub fn write_rep_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{REP_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            r.phase.as_str(),
            r.bin.map_or(String::new(), |b| b.to_string()),
            num(r.u),
            r.u_tilde.map_or(String::new(), num),
            num(r.price),
            u8::from(r.purchase),
            num(r.inst_regret),
            num(r.cum_regret),
        )?;
    }
    w.flush()?;
    Ok(())
}

fn parse_err(path: &Path, line: usize, what: &str) -> OrbitError {
    OrbitError::contract(format!("{}:{line}: {what}", path.display()))
}

pub fn read_rep_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line != REP_HEADER {
                return Err(parse_err(path, 1, "unexpected header"));
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(parse_err(path, i + 1, "expected 9 fields"));
        }
        let float = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| parse_err(path, i + 1, "bad number"))
        };
        let opt = |s: &str| {
            if s.is_empty() {
                Ok(None)
            } else {
                float(s).map(Some)
            }
        };
        out.push(RunRecord {
            t: f[0]
                .parse()
                .map_err(|_| parse_err(path, i + 1, "bad round"))?,
            phase: Phase::parse(f[1]).ok_or_else(|| parse_err(path, i + 1, "bad phase"))?,
            bin: if f[2].is_empty() {
                None
            } else {
                Some(
                    f[2].parse()
                        .map_err(|_| parse_err(path, i + 1, "bad bin"))?,
                )
            },
            u: float(f[3])?,
            u_tilde: opt(f[4])?,
            price: float(f[5])?,
            purchase: f[6] == "1",
            inst_regret: float(f[7])?,
            cum_regret: float(f[8])?,
        });
    }
    Ok(out)
}

pub fn write_summary_csv(path: &Path, horizons: &[HorizonSummary]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{SUMMARY_HEADER}")?;
    for h in horizons {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            h.horizon,
            h.finals.len(),
            num(h.median),
            num(h.q25),
            num(h.q75),
            num(h.mean)
        )?;
    }
    w.flush()?;
    Ok(())
}

/// `(T, median)` pairs from a summary file.
pub fn read_summary_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_HEADER) {
        return Err(parse_err(path, 1, "unexpected header"));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(parse_err(path, i + 2, "expected 6 fields"));
            }
            let t = f[0]
                .parse::<f64>()
                .map_err(|_| parse_err(path, i + 2, "bad horizon"))?;
            let m = f[2]
                .parse::<f64>()
                .map_err(|_| parse_err(path, i + 2, "bad median"))?;
            Ok((t, m))
        })
        .collect()
}

/// Runs the experiment and writes transcripts, `summary.csv` and `meta.txt`
/// into `dir`. Configuration problems surface before any file is created.
pub fn emit(config: &ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    config.validate()?;
    fs::create_dir_all(dir)?;
    if config.write_transcripts && config.horizons.len() > 1 {
        for &t in &config.horizons {
            fs::create_dir_all(dir.join(format!("T_{t}")))?;
        }
    }
    let summary = run_with(config, |out| {
        if config.write_transcripts {
            write_rep_csv(
                &rep_path(dir, config, out.horizon, out.repetition),
                &out.records,
            )?;
        }
        Ok(())
    })?;
    write_summary_csv(&dir.join("summary.csv"), &summary.horizons)?;
    let mut meta = String::new();
    meta.push_str(&format!("orbit-core {}\n", env!("CARGO_PKG_VERSION")));
    meta.push_str("aggregation = median and interquartile range of final cumulative regret over repetitions\n");
    meta.push_str("regret = oracle-table benchmark, linear interpolation, raw values below -1e-6 counted as slack violations, clamped at 0\n");
    meta.push_str(&config.to_text());
    meta.push_str(&summary.details);
    for h in &summary.horizons {
        let ex: Vec<String> = h.explore_rounds.iter().map(u64::to_string).collect();
        meta.push_str(&format!(
            "[T = {}] explore_rounds = [{}]\n",
            h.horizon,
            ex.join(", ")
        ));
        meta.push_str(&format!(
            "[T = {}] slack_violations = {}\n",
            h.horizon, h.slack_violations
        ));
    }
    fs::write(dir.join("meta.txt"), meta)?;
    Ok(summary)
}

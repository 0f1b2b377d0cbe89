use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use twofold::ensemble::EnsembleOutcome;
use twofold::filippov::{Event, TrajectorySegment};
use twofold::model::{eval_g, eval_h};
use twofold::scan::{ScanResult, MASK_NAMES};
use twofold::tyre::TyreOutput;
use twofold::SystemParams;

/// Numbers are written with 17 significant digits so that they round-trip.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .flexible(true)
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
    Ok(String::from_utf8(bytes)?)
}

/// Files are collected in memory and only written once the whole run has
/// succeeded, so a failing run leaves nothing behind.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, String)>,
}

impl Outputs {
    pub fn add(&mut self, path: PathBuf, body: String) {
        self.files.push((path, body));
    }

    pub fn paths(&self) -> Vec<&Path> {
        self.files.iter().map(|(p, _)| p.as_path()).collect()
    }

    pub fn commit(self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut staged = Vec::new();
        for (path, body) in &self.files {
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
            let tmp = path.with_file_name(format!(".{name}.partial"));
            if let Err(e) = fs::write(&tmp, body) {
                let _ = fs::remove_file(&tmp);
                for (t, _) in &staged {
                    let _ = fs::remove_file(t);
                }
                return Err(e).with_context(|| format!("writing {}", path.display()));
            }
            staged.push((tmp, path.clone()));
        }
        for (tmp, path) in &staged {
            fs::rename(tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
        }
        Ok(())
    }
}

pub fn event_rows(w: &mut csv::Writer<Vec<u8>>, events: &[Event]) -> Result<()> {
    w.write_record(["# events"])?;
    w.write_record(["event", "kind", "time", "r", "v", "omega", "detail"])?;
    for e in events {
        w.write_record([
            "event".to_string(),
            e.kind.label().to_string(),
            num(e.time),
            num(e.state.r),
            num(e.state.v),
            num(e.state.omega),
            e.detail.label(),
        ])?;
    }
    Ok(())
}

/// Trajectory samples followed by the event log.
pub fn trajectory_csv(segments: &[TrajectorySegment], p: &SystemParams) -> Result<String> {
    let mut w = writer();
    w.write_record(["t", "r", "v", "omega", "h", "g", "mode", "lambda"])?;
    for seg in segments {
        for s in &seg.samples {
            w.write_record([
                num(s.t),
                num(s.state.r),
                num(s.state.v),
                num(s.state.omega),
                num(eval_h(&s.state, p)),
                num(eval_g(&s.state, p)),
                seg.mode.label().to_string(),
                s.lambda.map(num).unwrap_or_default(),
            ])?;
        }
    }
    let events: Vec<Event> = segments.iter().map(|s| s.terminal.clone()).collect();
    event_rows(&mut w, &events)?;
    finish(w)
}

/// One CSV per mask plus the combined mask; invalid cells carry `NA`.
pub fn scan_csvs(result: &ScanResult) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let names = MASK_NAMES.iter().copied().chain(std::iter::once("combined"));
    for (k, name) in names.enumerate() {
        let mut w = writer();
        w.write_record(["r_star", "omega_star", "value"])?;
        for c in &result.cells {
            let value = match c.masks {
                None => "NA".to_string(),
                Some(m) => {
                    let b = if k < MASK_NAMES.len() { m.values()[k] } else { m.combined() };
                    (b as u8).to_string()
                }
            };
            w.write_record([num(c.r_star), num(c.omega_star), value])?;
        }
        out.push((format!("{name}.csv"), finish(w)?));
    }
    Ok(out)
}

pub fn tyre_csv(rows: &[(f64, TyreOutput)]) -> Result<String> {
    let mut w = writer();
    w.write_record(["phi", "F", "M", "regime"])?;
    for (phi, o) in rows {
        w.write_record([num(*phi), num(o.force), num(o.moment), o.regime.label().to_string()])?;
    }
    finish(w)
}

pub fn ensemble_summary_csv(outcomes: &[EnsembleOutcome]) -> Result<String> {
    let mut w = writer();
    w.write_record([
        "member_id",
        "returned",
        "return_time",
        "n_crossings",
        "n_stick_segments",
        "singularity_return",
        "terminal",
    ])?;
    for o in outcomes {
        w.write_record([
            o.member_id.to_string(),
            o.returned.to_string(),
            o.return_time.map(num).unwrap_or_default(),
            o.n_crossings.to_string(),
            o.n_stick_segments.to_string(),
            o.singularity_return.to_string(),
            match (&o.error, o.terminal()) {
                (Some(e), _) => format!("error: {e}"),
                (None, Some(ev)) => ev.kind.label().to_string(),
                (None, None) => String::new(),
            },
        ])?;
    }
    finish(w)
}

pub fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

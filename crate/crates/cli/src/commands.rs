//! The four subcommands. Each writes its artifacts under the output
//! directory and returns the list of files written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bilevel::tomo::{encode_image, encode_pgm, encode_sinogram};
use bilevel::trace::fmt17;
use bilevel::Image;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::experiment::{self, Comparison, MethodRun};
use crate::testbed::{self, Testbed};

pub const SUMMARY_HEADER: &str = "method,iterations,best_rel_error,best_rel_error_k,best_f0,final_f0,final_f1,abort";

/// Output of a command: the files written, in order.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
}

struct Writer<'a> {
    dir: &'a Path,
    out: Artifacts,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
        Ok(Writer { dir, out: Artifacts::default() })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        self.out.files.push(path);
        Ok(())
    }

    fn image(&mut self, stem: &str, img: &Image) -> Result<(), CliError> {
        self.put(&format!("{stem}.bimg"), &encode_image(img))?;
        self.put(&format!("{stem}.pgm"), &encode_pgm(img))
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt17(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

pub fn summary_csv(runs: &[MethodRun]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in runs {
        let best = r.best_rel_error();
        let last = r.trace.last();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            csv_field(&r.name),
            r.trace.len(),
            opt17(best.map(|b| b.1)),
            best.map(|b| b.0.to_string()).unwrap_or_default(),
            opt17(r.best_f0()),
            opt17(last.map(|l| l.f0)),
            opt17(last.map(|l| l.f1)),
            csv_field(r.abort.as_deref().unwrap_or("")),
        );
    }
    s
}

pub fn quality_csv(runs: &[MethodRun]) -> String {
    let mut s = String::from("method,k,rel_error\n");
    for r in runs {
        for (k, e) in r.rel_error.iter().enumerate() {
            let _ = writeln!(s, "{},{k},{}", csv_field(&r.name), fmt17(*e));
        }
    }
    s
}

pub fn phase_plane_csv(runs: &[MethodRun]) -> String {
    let mut s = String::from("method,k,f0,f1\n");
    for r in runs {
        for rec in r.trace.records() {
            let _ = writeln!(s, "{},{},{},{}", csv_field(&r.name), rec.k, fmt17(rec.f0), fmt17(rec.f1));
        }
    }
    s
}

pub fn matched_csv(cmp: &Comparison) -> String {
    let mut s = String::from("group,level,f0_level,method,k,f1\n");
    for g in &cmp.groups {
        for (l, (level, row)) in g.levels.iter().zip(&g.entries).enumerate() {
            for (&m, &(k, f1)) in g.methods.iter().zip(row) {
                let _ = writeln!(
                    s,
                    "{},{l},{},{},{k},{}",
                    csv_field(&g.name),
                    fmt17(*level),
                    csv_field(&cmp.runs[m].name),
                    fmt17(f1)
                );
            }
        }
    }
    s
}

/// Phantom at the configured side and intensity.
pub fn cmd_phantom(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let img = testbed::phantom(&cfg.testbed)?;
    let mut w = Writer::new(&cfg.output)?;
    w.image("phantom", &img)?;
    Ok(w.out)
}

/// Clean and noisy sinograms plus a one-line noise report.
pub fn cmd_project(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let tb = Testbed::build(&cfg.testbed)?;
    let mut w = Writer::new(&cfg.output)?;
    w.put("sinogram_clean.bsin", &encode_sinogram(&tb.clean))?;
    w.put("sinogram_noisy.bsin", &encode_sinogram(&tb.noisy))?;
    let report = format!("relative_error,incident\n{},{}\n", fmt17(tb.relative_error), fmt17(tb.incident));
    w.put("noise.csv", report.as_bytes())?;
    Ok(w.out)
}

/// Trace, per-iteration relative error, final image and a summary row. A
/// solver abort still writes everything recorded and is then reported as an
/// error.
pub fn cmd_reconstruct(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let tb = Testbed::build(&cfg.testbed)?;
    let run = experiment::reconstruct(cfg, &tb)?;
    let mut w = Writer::new(&cfg.output)?;
    w.put("trace.csv", run.trace.to_csv().as_bytes())?;
    w.put("quality.csv", quality_csv(std::slice::from_ref(&run)).as_bytes())?;
    let img = Image::new(cfg.testbed.side, run.x.clone()).map_err(CliError::solver("reconstruction"))?;
    w.image("reconstruction", &img)?;
    w.put("summary.csv", summary_csv(std::slice::from_ref(&run)).as_bytes())?;
    if let Some(reason) = &run.abort {
        return Err(CliError::Aborted { method: run.name.clone(), reason: reason.clone() });
    }
    Ok(w.out)
}

/// Summary, phase-plane pairs, relative errors and the matched-`f0` table.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<(Artifacts, Comparison), CliError> {
    let tb = Testbed::build(&cfg.testbed)?;
    let cmp = experiment::compare(cfg, &tb)?;
    let mut w = Writer::new(&cfg.output)?;
    w.put("summary.csv", summary_csv(&cmp.runs).as_bytes())?;
    w.put("phase_plane.csv", phase_plane_csv(&cmp.runs).as_bytes())?;
    w.put("quality.csv", quality_csv(&cmp.runs).as_bytes())?;
    w.put("matched.csv", matched_csv(&cmp).as_bytes())?;
    Ok((w.out, cmp))
}

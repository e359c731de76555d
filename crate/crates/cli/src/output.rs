//! Byte-stable CSV emission and manifests.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use lepsim::{Mode, QuantumState, SweepAnalysis, TimeSeries};
use sha2::{Digest, Sha256};

pub const TRAJECTORY_HEADER: &str = "t,Sz,Sx,Sy,rho11,Re rho12,Im rho12";
pub const SWEEP_HEADER: &str = "muE0,Re omega1,Im omega1,Re omega2,Im omega2,|d1|,gap,modeCount,lepFlag";
pub const EIGENMODE_HEADER: &str = "muE0,Re omega1,Im omega1,Re omega2,Im omega2";
pub const MODES_HEADER: &str = "Re omega,Im omega,Re d,Im d,|d|";

/// 17 significant digits, scientific, two-digit signed exponent.
/// Negative zero prints as zero.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_owned();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_owned();
    }
    let x = if x == 0.0 { 0.0 } else { x };
    let s = format!("{x:.16e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

pub fn trajectory_csv(series: &TimeSeries<QuantumState>) -> String {
    let mut out = String::with_capacity(160 * (series.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (n, s) in series.values.iter().enumerate() {
        let [sx, sy, sz] = s.spin();
        row(&mut out, &[series.t(n), sz, sx, sy, s.rho11, s.rho12.re, s.rho12.im].map(sci));
    }
    out
}

pub fn sweep_csv(a: &SweepAnalysis) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in &a.tracked.records {
        let mut cells: Vec<String> =
            [r.mu_e0, r.omega1.re, r.omega1.im, r.omega2.re, r.omega2.im, r.d1abs, r.gap].into_iter().map(sci).collect();
        cells.push(r.mode_count.to_string());
        cells.push(u8::from(r.lep_flag).to_string());
        row(&mut out, &cells);
    }
    match a.lep {
        Some(mu) => writeln!(out, "# lep={}", sci(mu)).unwrap(),
        None => out.push_str("# lep=none\n"),
    }
    out
}

pub fn eigenmode_csv(a: &SweepAnalysis) -> String {
    let mut out = String::new();
    out.push_str(EIGENMODE_HEADER);
    out.push('\n');
    for r in &a.tracked.records {
        row(&mut out, &[r.mu_e0, r.omega1.re, r.omega1.im, r.omega2.re, r.omega2.im].map(sci));
    }
    out
}

pub fn modes_csv(modes: &[Mode]) -> String {
    let mut out = String::new();
    out.push_str(MODES_HEADER);
    out.push('\n');
    for m in modes {
        row(&mut out, &[m.omega.re, m.omega.im, m.d.re, m.d.im, m.d.norm()].map(sci));
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// One output file with the configuration that produced it.
pub struct Artifact {
    pub file: String,
    pub contents: String,
    pub config_file: String,
    pub config: String,
}

/// Writes each artifact and its echoed configuration, then a MANIFEST
/// listing `file sha256 config-file sha256` per line.
pub fn write_artifacts(dir: &Path, command: &str, artifacts: &[Artifact]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut manifest = format!("# lepsim {} {command}\n", env!("CARGO_PKG_VERSION"));
    for a in artifacts {
        write_file(&dir.join(&a.file), &a.contents)?;
        write_file(&dir.join(&a.config_file), &a.config)?;
        writeln!(
            manifest,
            "{} sha256:{} {} sha256:{}",
            a.file,
            sha256_hex(a.contents.as_bytes()),
            a.config_file,
            sha256_hex(a.config.as_bytes())
        )
        .unwrap();
    }
    write_file(&dir.join("MANIFEST"), &manifest)
}

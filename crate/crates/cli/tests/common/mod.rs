//! Shared fixtures: simulated panel CSVs and a binary runner.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

use vela_core::synthetic::{generate_vecm_data, SyntheticSpec};

pub const HEADER: &str = "agency,year,sb_usd_b,gdp_per_capita_usd,researchers_per_million,military_pct_gdp,education_pct_gdp,rnd_pct_gdp";

/// Rows for one agency: sb, gpc and md share one cointegrating relation,
/// rd, ed and sd are independent random walks. Columns are exp(level)
/// times a per-variable scale, so every value is positive.
pub fn planted_rows(agency: &str, t_len: usize, seed: u64) -> String {
    let z = generate_vecm_data(&SyntheticSpec::reference_r1(t_len, seed));
    let w = generate_vecm_data(&SyntheticSpec::random_walks(3, 0.0, t_len, seed ^ 0xabcd).unwrap());
    let mut out = String::new();
    for t in 0..t_len {
        // scale levels down so exp() stays in a sensible range
        let lv = |x: f64| (0.1 * x).exp();
        let _ = writeln!(
            out,
            "{agency},{},{:.9},{:.6},{:.6},{:.9},{:.9},{:.9}",
            1950 + t,
            2.0 * lv(z[(t, 0)]),
            20000.0 * lv(z[(t, 1)]),
            1500.0 * lv(w[(t, 0)]),
            3.0 * lv(z[(t, 2)]),
            4.0 * lv(w[(t, 1)]),
            2.5 * lv(w[(t, 2)]),
        );
    }
    out
}

pub fn write_panel(path: &Path, agencies: &[(&str, u64)], t_len: usize) {
    let mut text = format!("{HEADER}\n");
    for (a, seed) in agencies {
        text.push_str(&planted_rows(a, t_len, *seed));
    }
    std::fs::write(path, text).unwrap();
}

pub fn vela(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vela"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Six independent stationary series (white noise in logs): every rank
/// test rejects up to full rank.
pub fn noise_rows(agency: &str, t_len: usize, seed: u64) -> String {
    let w = generate_vecm_data(&SyntheticSpec::random_walks(6, 0.0, t_len + 1, seed).unwrap());
    let mut out = String::new();
    for t in 0..t_len {
        let _ = write!(out, "{agency},{}", 1950 + t);
        for j in 0..6 {
            let _ = write!(out, ",{:.9}", (1.0 + 0.1 * (w[(t + 1, j)] - w[(t, j)])).exp());
        }
        out.push('\n');
    }
    out
}

//! CSV rendering. Columns are fixed; numbers use a fixed format so files
//! are byte-identical across runs and platforms.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::bounds::BoundReport;
use crate::error::Result;

pub const SIM_HEADER: &str = "policy,k_b,beta,seed,faults,fault_rate,ratio_vs_belady";
pub const BOUND_HEADER: &str =
    "bound,policy,k_b,beta,rho,p,c,d_f,bound_value,empirical,satisfied,slack,seed_count";

pub(crate) fn real(v: f64) -> String {
    format!("{v:.6}")
}

fn opt(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

pub fn bound_row(r: &BoundReport) -> String {
    let p = &r.params;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.name,
        p.policy.map(|k| k.to_string()).unwrap_or_default(),
        p.k_b,
        opt(p.beta),
        opt(p.rho),
        opt(p.p),
        opt(p.c),
        opt(p.d_f),
        real(r.bound_value),
        real(r.empirical_value),
        r.satisfied,
        real(r.slack),
        p.seeds.len().max(1),
    )
}

pub fn write_csv<I>(path: &Path, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = String>,
{
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    out.flush()?;
    Ok(())
}

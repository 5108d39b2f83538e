//! Deterministic file emission: identical configurations produce
//! byte-identical outputs on one platform (fixed float formatting, no
//! timestamps, ordered metrics).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use extinction_core::analysis::NormSeries;
use extinction_core::solver::RadialField;

pub type IoResult = std::io::Result<()>;

pub fn write_text(path: &Path, text: &str) -> IoResult {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)
}

/// Norm series as CSV with columns `t,linf,l1,lip`.
pub fn write_series(path: &Path, series: &NormSeries) -> IoResult {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = BufWriter::new(fs::File::create(path)?);
    writeln!(f, "t,linf,l1,lip")?;
    for e in &series.entries {
        writeln!(
            f,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            e.t, e.linf, e.l1, e.lip
        )?;
    }
    f.flush()
}

/// Snapshot as a plain-text table, one row per node, `#` header lines.
pub fn write_snapshot(path: &Path, t: f64, field: &RadialField, config_hash: &str) -> IoResult {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = BufWriter::new(fs::File::create(path)?);
    writeln!(f, "# t = {t:.16e}")?;
    writeln!(f, "# config = {config_hash}")?;
    writeln!(
        f,
        "# grid: r_max = {:.16e}, n = {}, dim = {}",
        field.grid.r_max, field.grid.n, field.grid.dim
    )?;
    writeln!(f, "# columns: r u")?;
    for i in 0..=field.grid.n {
        writeln!(f, "{:.16e} {:.16e}", field.grid.radius(i), field.values[i])?;
    }
    f.flush()
}

/// All snapshots of a run under `dir/snap_NNN.txt`.
pub fn write_snapshots(
    dir: &Path,
    snapshots: &[(f64, RadialField)],
    config_hash: &str,
) -> IoResult {
    for (k, (t, field)) in snapshots.iter().enumerate() {
        write_snapshot(
            &dir.join(format!("snap_{k:03}.txt")),
            *t,
            field,
            config_hash,
        )?;
    }
    Ok(())
}

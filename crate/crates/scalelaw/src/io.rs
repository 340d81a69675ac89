//! CSV measurement tables, JSON reports, and atomic file writes.
//!
//! Two table shapes are supported. Dense grids:
//!
//! ```csv
//! m,n,error[,replicate]
//! ```
//!
//! Pruning families:
//!
//! ```csv
//! depth,width_scale,density,n,error[,replicate]
//! ```
//!
//! Every (depth, width_scale, n) configuration of a pruning table must
//! include a density = 1 row; the mean of those rows (in file order) becomes
//! the configuration's unpruned anchor `eps_np`. Emitting and reloading a
//! table reproduces it exactly: floats are written in shortest round-trip
//! form and anchors are recomputed from the same rows.

use crate::error::{Error, Result};
use crate::forms::{DenseMeasurement, PruneMeasurement};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

fn parse_field<T: std::str::FromStr>(field: &str, row: usize, col: usize, what: &str) -> Result<T> {
    field.trim().parse().map_err(|_| {
        Error::Parse(format!("row {row}, column {col}: expected {what}, got {field:?}"))
    })
}

fn positive(v: f64, row: usize, col: usize, name: &str) -> Result<f64> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::Parse(format!(
            "row {row}, column {col}: {name} must be finite and > 0, got {v}"
        )));
    }
    Ok(v)
}

/// Splits CSV text into trimmed rows, tracking 1-based line numbers.
/// Fields never contain commas or quotes in these schemas, so a plain
/// comma split is exact.
fn rows(text: &str) -> Vec<(usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| (i + 1, line.trim_end_matches('\r').split(',').collect()))
        .collect()
}

fn check_header(fields: &[&str], required: &[&str], row: usize) -> Result<bool> {
    let names: Vec<String> = fields.iter().map(|f| f.trim().to_ascii_lowercase()).collect();
    let matches = |want: &[&str]| names.len() == want.len() && names.iter().map(String::as_str).eq(want.iter().copied());
    let with_rep: Vec<&str> =
        required.iter().copied().chain(std::iter::once("replicate")).collect();
    if matches(required) {
        Ok(false)
    } else if matches(&with_rep) {
        Ok(true)
    } else {
        Err(Error::Parse(format!(
            "row {row}: header must be {} with an optional trailing replicate column, got {}",
            required.join(","),
            fields.join(",")
        )))
    }
}

/// Parses a dense measurement table.
pub fn load_dense_csv(text: &str) -> Result<Vec<DenseMeasurement>> {
    let rows = rows(text);
    let Some((hrow, header)) = rows.first() else {
        return Err(Error::Parse("empty table: expected an m,n,error header".into()));
    };
    let has_rep = check_header(header, &["m", "n", "error"], *hrow)?;
    let want = 3 + usize::from(has_rep);
    let mut out = Vec::with_capacity(rows.len() - 1);
    for (row, fields) in &rows[1..] {
        if fields.len() != want {
            return Err(Error::Parse(format!(
                "row {row}: expected {want} fields, got {}",
                fields.len()
            )));
        }
        let m = positive(parse_field(fields[0], *row, 1, "a number")?, *row, 1, "m")?;
        let n = positive(parse_field(fields[1], *row, 2, "a number")?, *row, 2, "n")?;
        let error = positive(parse_field(fields[2], *row, 3, "a number")?, *row, 3, "error")?;
        let replicate = if has_rep {
            Some(parse_field::<u32>(fields[3], *row, 4, "a replicate index")?)
        } else {
            None
        };
        out.push(DenseMeasurement { m, n, error, replicate });
    }
    if out.is_empty() {
        return Err(Error::Parse("table has a header but no measurement rows".into()));
    }
    Ok(out)
}

/// Parses a pruning measurement table. Returns the rows (anchors filled in)
/// plus advisory warnings, currently one per configuration whose density
/// ladder does not follow successive 0.8 steps.
pub fn load_prune_csv(text: &str) -> Result<(Vec<PruneMeasurement>, Vec<String>)> {
    let rows = rows(text);
    let Some((hrow, header)) = rows.first() else {
        return Err(Error::Parse(
            "empty table: expected a depth,width_scale,density,n,error header".into(),
        ));
    };
    let has_rep = check_header(header, &["depth", "width_scale", "density", "n", "error"], *hrow)?;
    let want = 5 + usize::from(has_rep);
    let mut out: Vec<PruneMeasurement> = Vec::with_capacity(rows.len() - 1);
    for (row, fields) in &rows[1..] {
        if fields.len() != want {
            return Err(Error::Parse(format!(
                "row {row}: expected {want} fields, got {}",
                fields.len()
            )));
        }
        let l = positive(parse_field(fields[0], *row, 1, "a number")?, *row, 1, "depth")?;
        let w = positive(parse_field(fields[1], *row, 2, "a number")?, *row, 2, "width_scale")?;
        let d = positive(parse_field(fields[2], *row, 3, "a number")?, *row, 3, "density")?;
        if d > 1.0 {
            return Err(Error::Parse(format!(
                "row {row}, column 3: density must lie in (0, 1], got {d}"
            )));
        }
        let n = positive(parse_field(fields[3], *row, 4, "a number")?, *row, 4, "n")?;
        let error = positive(parse_field(fields[4], *row, 5, "a number")?, *row, 5, "error")?;
        let replicate = if has_rep {
            Some(parse_field::<u32>(fields[5], *row, 6, "a replicate index")?)
        } else {
            None
        };
        out.push(PruneMeasurement { l, w, d, n, error, eps_np: f64::NAN, replicate });
    }
    if out.is_empty() {
        return Err(Error::Parse("table has a header but no measurement rows".into()));
    }

    // anchor every configuration on the mean of its density = 1 rows
    let mut warnings = Vec::new();
    let mut keys: Vec<(u64, u64, u64)> = Vec::new();
    for p in &out {
        let key = (p.l.to_bits(), p.w.to_bits(), p.n.to_bits());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    for key in keys {
        let members: Vec<usize> = out
            .iter()
            .enumerate()
            .filter(|(_, p)| (p.l.to_bits(), p.w.to_bits(), p.n.to_bits()) == key)
            .map(|(i, _)| i)
            .collect();
        let anchors: Vec<f64> =
            members.iter().filter(|&&i| out[i].d == 1.0).map(|&i| out[i].error).collect();
        let (l, w, n) = (out[members[0]].l, out[members[0]].w, out[members[0]].n);
        if anchors.is_empty() {
            return Err(Error::Invalid(format!(
                "configuration (depth {l}, width_scale {w}, n {n}) has no density = 1 anchor row"
            )));
        }
        let anchor = anchors.iter().sum::<f64>() / anchors.len() as f64;
        for &i in &members {
            out[i].eps_np = anchor;
        }
        let mut ladder: Vec<f64> = members.iter().map(|&i| out[i].d).collect();
        ladder.sort_by(|a, b| b.total_cmp(a));
        ladder.dedup();
        if ladder.windows(2).any(|pair| (pair[1] / pair[0] / 0.8 - 1.0).abs() > 1e-9) {
            warnings.push(format!(
                "configuration (depth {l}, width_scale {w}, n {n}): densities do not follow \
                 successive 0.8 steps; treating the ladder as given"
            ));
        }
    }
    Ok((out, warnings))
}

/// Renders a dense table; the replicate column appears when any row has one.
pub fn emit_dense_csv(data: &[DenseMeasurement]) -> String {
    let with_rep = data.iter().any(|p| p.replicate.is_some());
    let mut s = String::from(if with_rep { "m,n,error,replicate\n" } else { "m,n,error\n" });
    for p in data {
        let _ = write!(s, "{},{},{}", p.m, p.n, p.error);
        if with_rep {
            let _ = write!(s, ",{}", p.replicate.unwrap_or(0));
        }
        s.push('\n');
    }
    s
}

/// Renders a pruning table. Anchors are not a column: they are recomputed
/// from the density = 1 rows on load.
pub fn emit_prune_csv(data: &[PruneMeasurement]) -> String {
    let with_rep = data.iter().any(|p| p.replicate.is_some());
    let mut s = String::from(if with_rep {
        "depth,width_scale,density,n,error,replicate\n"
    } else {
        "depth,width_scale,density,n,error\n"
    });
    for p in data {
        let _ = write!(s, "{},{},{},{},{}", p.l, p.w, p.d, p.n, p.error);
        if with_rep {
            let _ = write!(s, ",{}", p.replicate.unwrap_or(0));
        }
        s.push('\n');
    }
    s
}

/// Serializes a report payload under the versioned envelope
/// `{"schema": 1, "kind": ..., ...payload}`.
pub fn report_json<T: Serialize>(kind: &str, payload: &T) -> Result<String> {
    #[derive(Serialize)]
    struct Envelope<'a, T: Serialize> {
        schema: u32,
        kind: &'a str,
        #[serde(flatten)]
        payload: &'a T,
    }
    let mut s = serde_json::to_string_pretty(&Envelope { schema: 1, kind, payload })
        .map_err(|e| Error::Invalid(format!("report serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes via a sibling temp file and rename, so readers never observe a
/// partially written artifact and a crash leaves the old content intact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Invalid(format!("not a writable path: {}", path.display())))?;
    let tmp = dir.join(format!("{}.tmp.{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::Io(e)
    })
}

use std::io::Write;

use super::{table_len, Displacements, KernelMethod, KernelTable};
use crate::error::{Error, Result};

pub const CACHE_MAGIC: &str = "# fraclat-kernel v1";
const MAGIC_PREFIX: &str = "# fraclat-kernel ";
const KEYS: [&str; 5] = ["dim", "alpha", "radius", "method", "accuracy"];
const MAX_DIM: usize = 6;

/// Cache file name for a kernel request; the key covers everything that can
/// change the stored values.
pub fn cache_file_name(dim: usize, alpha: f64, radius: usize, method: KernelMethod, tol: f64) -> String {
    let alpha_key = (alpha * 1e15).round() as i64;
    format!("kernel_d{dim}_a{alpha_key}e-15_r{radius}_{method}_tol{tol:e}.csv")
}

/// Writes `table` in the v1 text format.
pub fn write_cache<W: Write>(table: &KernelTable, mut w: W) -> Result<()> {
    writeln!(w, "{CACHE_MAGIC}")?;
    writeln!(w, "# dim={}", table.dim)?;
    writeln!(w, "# alpha={:.16e}", table.alpha)?;
    writeln!(w, "# radius={}", table.radius)?;
    writeln!(w, "# method={}", table.method)?;
    writeln!(w, "# accuracy={:.16e}", table.accuracy)?;
    let header: Vec<String> = (1..=table.dim).map(|i| format!("z{i}")).collect();
    writeln!(w, "{},value", header.join(","))?;
    let mut line = String::new();
    for (z, v) in table.displacements().zip(&table.values) {
        line.clear();
        for c in &z {
            line.push_str(&c.to_string());
            line.push(',');
        }
        line.push_str(&format!("{v:.16e}"));
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

fn fail(line: usize, reason: impl Into<String>) -> Error {
    Error::CacheFormat {
        line,
        reason: reason.into(),
    }
}

/// Parses a v1 kernel cache.
///
/// The reader is strict: every metadata key must appear exactly once, rows
/// must enumerate the displacements in lexicographic order, and nothing may
/// follow the last row.
pub fn read_cache(text: &str) -> Result<KernelTable> {
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines.next().ok_or_else(|| fail(1, "empty file"))?;
    if first != CACHE_MAGIC {
        if let Some(version) = first.strip_prefix(MAGIC_PREFIX) {
            return Err(Error::UnsupportedVersion(version.to_string()));
        }
        return Err(fail(1, "missing `# fraclat-kernel v1` header"));
    }

    let mut meta: [Option<&str>; 5] = [None; 5];
    let mut header = None;
    for (no, line) in lines.by_ref() {
        let Some(rest) = line.strip_prefix("# ") else {
            header = Some((no, line));
            break;
        };
        let (key, value) = rest
            .split_once('=')
            .ok_or_else(|| fail(no, "metadata line without `=`"))?;
        let slot = KEYS
            .iter()
            .position(|k| *k == key)
            .ok_or_else(|| fail(no, format!("unknown metadata key {key:?}")))?;
        if meta[slot].replace(value).is_some() {
            return Err(fail(no, format!("duplicate metadata key {key:?}")));
        }
    }
    let (header_no, header) = header.ok_or_else(|| fail(0, "missing CSV header"))?;
    let get = |i: usize| meta[i].ok_or_else(|| fail(header_no, format!("missing metadata key {:?}", KEYS[i])));

    let dim: usize = get(0)?.parse().map_err(|_| fail(header_no, "bad dim"))?;
    let alpha: f64 = get(1)?.parse().map_err(|_| fail(header_no, "bad alpha"))?;
    let radius: usize = get(2)?.parse().map_err(|_| fail(header_no, "bad radius"))?;
    let method: KernelMethod = get(3)?.parse().map_err(|_| fail(header_no, "bad method"))?;
    let accuracy: f64 = get(4)?.parse().map_err(|_| fail(header_no, "bad accuracy"))?;
    if dim == 0 || dim > MAX_DIM {
        return Err(fail(header_no, format!("dim must lie in 1..={MAX_DIM}")));
    }
    if radius == 0 {
        return Err(fail(header_no, "radius must be positive"));
    }
    let count = table_len(dim, radius).ok_or_else(|| fail(header_no, "table size exceeds the reader limit"))?;

    let expected: Vec<String> = (1..=dim)
        .map(|i| format!("z{i}"))
        .chain(["value".to_string()])
        .collect();
    if header != expected.join(",") {
        return Err(fail(header_no, format!("expected header {:?}", expected.join(","))));
    }

    let mut values = Vec::with_capacity(count);
    let mut want = Displacements::new(dim, radius);
    for (no, line) in lines.by_ref() {
        if values.len() == count {
            if line.is_empty() {
                break;
            }
            return Err(fail(no, "extra rows after the table"));
        }
        let z = want.next().expect("count matches iterator length");
        let mut fields = line.split(',');
        for &c in &z {
            let f = fields.next().ok_or_else(|| fail(no, "too few fields"))?;
            let got: i64 = f.parse().map_err(|_| fail(no, format!("bad coordinate {f:?}")))?;
            if got != c {
                return Err(fail(no, format!("expected displacement {z:?}")));
            }
        }
        let f = fields.next().ok_or_else(|| fail(no, "missing value"))?;
        let v: f64 = f.parse().map_err(|_| fail(no, format!("bad value {f:?}")))?;
        if fields.next().is_some() {
            return Err(fail(no, "too many fields"));
        }
        values.push(v);
    }
    if values.len() != count {
        return Err(fail(0, format!("expected {count} rows, found {}", values.len())));
    }
    if let Some((no, _)) = lines.next() {
        return Err(fail(no, "trailing content"));
    }
    KernelTable::from_values(dim, alpha, radius, method, accuracy, values).map_err(|e| fail(0, e.to_string()))
}

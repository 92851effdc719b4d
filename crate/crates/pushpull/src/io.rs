//! Text formats: `%.17g` float formatting, dense matrix CSV, trace CSV.

use ndarray::{Array1, Array2};

use crate::engine::Trace;
use crate::error::{Error, Result};

/// Format like C's `%.17g`: 17 significant digits, positional notation for
/// exponents in `[-4, 17)`, scientific otherwise, trailing zeros stripped.
/// 17 significant digits make the round trip exact.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp_str) = sci.split_once('e').expect("exponential format");
    let exp10: i32 = exp_str.parse().expect("exponent");
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 17);

    let body = if (-4..17).contains(&exp10) {
        let point = exp10 + 1;
        let mut s = String::new();
        if point <= 0 {
            s.push_str("0.");
            for _ in 0..(-point) {
                s.push('0');
            }
            s.push_str(&digits);
        } else {
            let point = point as usize;
            s.push_str(&digits[..point]);
            s.push('.');
            s.push_str(&digits[point..]);
        }
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        if s.is_empty() {
            "0".to_string()
        } else {
            s
        }
    } else {
        let head = &digits[..1];
        let tail = digits[1..].trim_end_matches('0');
        let mant = if tail.is_empty() {
            head.to_string()
        } else {
            format!("{head}.{tail}")
        };
        let sign = if exp10 < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp10.abs())
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Dense row-major CSV, one matrix row per line.
pub fn matrix_to_csv(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|&v| fmt_g17(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for cell in line.split(',') {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("bad number {cell:?}"),
            })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!(
                        "row has {} cells, expected {}",
                        row.len(),
                        first.len()
                    ),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "empty matrix".into(),
        });
    }
    let ncols = rows[0].len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let nrows = flat.len() / ncols;
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| Error::Numeric(format!("matrix shape: {e}")))
}

pub fn vector_to_csv(v: &Array1<f64>) -> String {
    let cells: Vec<String> = v.iter().map(|&x| fmt_g17(x)).collect();
    cells.join(",")
}

pub const TRACE_HEADER: &str = "t,gamma,grad_norm_sq,consensus,tracking,invariant_residual,f_hat";

/// Trace CSV with the fixed header.
pub fn trace_to_csv(trace: &Trace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.t,
            fmt_g17(r.gamma),
            fmt_g17(r.grad_norm_sq),
            fmt_g17(r.consensus),
            fmt_g17(r.tracking),
            fmt_g17(r.invariant_residual),
            fmt_g17(r.f_hat),
        ));
    }
    out
}

/// Column-wise mean of several aligned traces, same CSV layout.
pub fn aggregate_to_csv(traces: &[Trace]) -> Result<String> {
    let first = traces.first().ok_or_else(|| {
        Error::InvalidSize("aggregate needs at least one trace".into())
    })?;
    let len = first.records.len();
    for t in traces {
        if t.records.len() != len {
            return Err(Error::DimensionMismatch(
                "traces have different record counts".into(),
            ));
        }
    }
    let k = traces.len() as f64;
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for idx in 0..len {
        let t = first.records[idx].t;
        let mut acc = [0.0f64; 6];
        for tr in traces {
            let r = &tr.records[idx];
            acc[0] += r.gamma;
            acc[1] += r.grad_norm_sq;
            acc[2] += r.consensus;
            acc[3] += r.tracking;
            acc[4] += r.invariant_residual;
            acc[5] += r.f_hat;
        }
        out.push_str(&format!(
            "{t},{},{},{},{},{},{}\n",
            fmt_g17(acc[0] / k),
            fmt_g17(acc[1] / k),
            fmt_g17(acc[2] / k),
            fmt_g17(acc[3] / k),
            fmt_g17(acc[4] / k),
            fmt_g17(acc[5] / k),
        ));
    }
    Ok(out)
}

/// Write a file atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &std::path::Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

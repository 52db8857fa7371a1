//! CSV and JSON emitters. Every CSV starts with `# lowrank-ncvx <kind> v1`.

use anyhow::Result;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Shortest representation that parses back to the same f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_csv(kind: &str, comments: &[&str], header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut text = format!("# lowrank-ncvx {kind} v{SCHEMA_VERSION}\n");
    for c in comments {
        text.push_str(&format!("# {c}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    text.push_str(std::str::from_utf8(&w.into_inner()?)?);
    Ok(text)
}

/// Header and rows of an emitted CSV, comment lines skipped.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.map(|x| x.iter().map(String::from).collect())).collect::<Result<_, _>>()?;
    Ok((header, rows))
}

pub fn write_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_csv() {
        let xs = [0.1 + 0.2, 1e-300, -3.5e17, f64::MIN_POSITIVE, 1.0 / 3.0, f64::NAN, f64::INFINITY, 0.0];
        let rows: Vec<Vec<String>> = xs.iter().map(|&x| vec!["a,b".into(), fmt_f64(x)]).collect();
        let text = write_csv("test", &["note"], &["label".into(), "x".into()], &rows).unwrap();
        assert!(text.starts_with("# lowrank-ncvx test v1\n# note\n"));
        let (h, back) = read_csv(&text).unwrap();
        assert_eq!(h, vec!["label", "x"]);
        for (x, r) in xs.iter().zip(&back) {
            assert_eq!(r[0], "a,b");
            let y: f64 = r[1].parse().unwrap();
            assert!(y.to_bits() == x.to_bits() || (x.is_nan() && y.is_nan()));
        }
    }
}

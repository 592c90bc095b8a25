//! Text tables, CSV and JSON rendering shared by the commands.

use serde_json::Value;

/// Compact number for human-readable tables: integers without a fraction,
/// everything else to four decimals with trailing zeros dropped.
pub fn short(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    if v == v.trunc() && v.abs() < 1e12 {
        return format!("{v:.0}");
    }
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Shortest round-trip form, for machine-readable files.
pub fn exact(v: f64) -> String {
    v.to_string()
}

pub fn exact_opt(v: Option<f64>) -> String {
    v.map(exact).unwrap_or_default()
}

pub fn short_opt(v: Option<f64>) -> String {
    v.map(short).unwrap_or_else(|| "-".into())
}

/// Left-aligns the first column and right-aligns the rest.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (j, cell) in cells.iter().enumerate().take(cols) {
            if j > 0 {
                s.push_str("  ");
            }
            let pad = width[j] - cell.chars().count();
            if j == 0 {
                s.push_str(cell);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str(&" ".repeat(pad));
                s.push_str(cell);
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out.push_str(&line(width.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().iter().map(String::as_str).collect()));
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

/// Comment header for text reports: title plus the effective config.
pub fn text_header(title: &str, config: &Value) -> String {
    format!("# {title}\n# config: {config}\n\n")
}

pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_numbers() {
        assert_eq!(short(171.0), "171");
        assert_eq!(short(-0.0), "0");
        assert_eq!(short(33.60000001), "33.6");
        assert_eq!(short(-0.00001), "0");
        assert_eq!(short(2.5), "2.5");
        assert_eq!(short(f64::INFINITY), "inf");
    }

    #[test]
    fn table_alignment() {
        let t = table(&["Feature", "CF"], &[vec!["glucose".into(), "135".into()], vec!["bmi".into(), "30.25".into()]]);
        assert_eq!(t, "Feature     CF\n-------  -----\nglucose    135\nbmi      30.25\n");
    }

    #[test]
    fn csv_has_one_header() {
        let s = csv_text(&["a", "b"], &[vec!["1".into(), "x,y".into()]]);
        assert_eq!(s, "a,b\n1,\"x,y\"\n");
    }
}

//! Metrics as text tables and tab-separated files.

use std::fmt::Write as _;

use antimuclass_core::{ConfusionMatrix, UNKNOWN};

fn label(c: u16) -> String {
    if c == UNKNOWN {
        "unknown".into()
    } else {
        c.to_string()
    }
}

fn columns(k: usize) -> impl Iterator<Item = u16> {
    (1..=k as u16).chain(std::iter::once(UNKNOWN))
}

/// Rate, error, unknown count, the matrix and every non-zero confusion rate.
pub fn human_report(title: &str, m: &ConfusionMatrix) -> String {
    let k = m.class_count();
    let mut s = String::new();
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "  evaluated pixels     {}", m.total());
    let _ = writeln!(s, "  classification rate  {:.2} %", m.classification_rate());
    let _ = writeln!(s, "  error                {:.2} %", m.error_rate());
    let _ = writeln!(s, "  unknown pixels       {}", m.unknown());
    let _ = writeln!(s, "  confusion matrix (rows: truth, columns: prediction, ?: unknown)");
    let _ = write!(s, "  {:>5}", "");
    for c in columns(k) {
        let _ = write!(s, " {:>6}", if c == UNKNOWN { "?".into() } else { c.to_string() });
    }
    s.push('\n');
    for t in 1..=k as u16 {
        let _ = write!(s, "  {t:>5}");
        for c in m.row(t) {
            let _ = write!(s, " {c:>6}");
        }
        s.push('\n');
    }
    let mut pairs = String::new();
    for t in 1..=k as u16 {
        for p in columns(k).filter(|&p| p != t && m.count(t, p) > 0) {
            let _ = writeln!(pairs, "    {t} -> {}: {:.2} %", label(p), m.confusion_rate(t, p));
        }
    }
    if !pairs.is_empty() {
        let _ = writeln!(s, "  confusion rates");
        s.push_str(&pairs);
    }
    s
}

/// `metric<TAB>value` summary.
pub fn summary_tsv(m: &ConfusionMatrix) -> String {
    format!(
        "metric\tvalue\nevaluated\t{}\nclassification_rate\t{}\nerror_rate\t{}\nunknown\t{}\n",
        m.total(),
        m.classification_rate(),
        m.error_rate(),
        m.unknown()
    )
}

/// One `truth, prediction, count, percent of row` line per matrix cell.
pub fn confusion_tsv(m: &ConfusionMatrix) -> String {
    let mut s = String::from("truth\tprediction\tcount\trow_percent\n");
    for t in 1..=m.class_count() as u16 {
        for p in columns(m.class_count()) {
            let _ = writeln!(s, "{t}\t{}\t{}\t{}", label(p), m.count(t, p), m.confusion_rate(t, p));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_contents() {
        let m = ConfusionMatrix::from_pairs(2, [(1, 1), (1, 2), (2, 2), (2, UNKNOWN)]).unwrap();
        let h = human_report("held-out", &m);
        assert!(h.contains("50.00 %"));
        assert!(h.contains("1 -> 2: 50.00 %"));
        assert!(h.contains("2 -> unknown: 50.00 %"));
        let t = summary_tsv(&m);
        assert!(t.contains("classification_rate\t50\n"));
        assert!(t.contains("unknown\t1\n"));
        let c = confusion_tsv(&m);
        assert_eq!(c.lines().count(), 1 + 2 * 3);
        assert!(c.contains("2\tunknown\t1\t50\n"));
    }
}

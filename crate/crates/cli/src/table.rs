//! Plain-text column alignment.

fn numeric(cell: &str) -> bool {
    cell.is_empty() || cell == "n/a" || cell.parse::<f64>().is_ok()
}

/// Renders rows under a header. Columns holding only numbers are
/// right-aligned, everything else is left-aligned.
pub fn render(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    let mut right = vec![true; header.len()];
    for row in rows {
        for (i, cell) in row.iter().enumerate().take(header.len()) {
            width[i] = width[i].max(cell.chars().count());
            right[i] &= numeric(cell);
        }
    }
    let line = |cells: &[&str]| {
        let mut s = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = " ".repeat(width[i] - cell.chars().count());
            if right[i] {
                s.push_str(&pad);
                s.push_str(cell);
            } else {
                s.push_str(cell);
                s.push_str(&pad);
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&line(&rule.iter().map(String::as_str).collect::<Vec<_>>()));
    for row in rows {
        out.push_str(&line(&row.iter().map(String::as_str).collect::<Vec<_>>()));
    }
    out
}

pub fn f3(x: f64) -> String {
    format!("{x:.3}")
}

pub fn f4(x: f64) -> String {
    format!("{x:.4}")
}

/// p-values: fixed point when readable, scientific when tiny.
pub fn p(x: f64) -> String {
    if x == 0.0 || x >= 1e-4 {
        format!("{x:.4}")
    } else {
        format!("{x:.2e}")
    }
}

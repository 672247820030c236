//! Braid diagrams as SVG 1.1. Time runs downwards; strands keep their colour.

use std::fmt::Write;

use mixlink::BraidWord;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

const GAP: f64 = 40.0;
const ROW: f64 = 40.0;
const MARGIN: f64 = 20.0;

fn x_of(pos: usize) -> f64 {
    MARGIN + GAP * pos as f64
}

fn line(out: &mut String, x1: f64, y1: f64, x2: f64, y2: f64, colour: &str) {
    let _ = writeln!(
        out,
        r#"  <line x1="{x1:.1}" y1="{y1:.1}" x2="{x2:.1}" y2="{y2:.1}" stroke="{colour}" stroke-width="3" stroke-linecap="round"/>"#
    );
}

/// A positive letter `σ_j` draws the strand moving from position `j` to `j + 1` underneath.
pub fn render_word(w: &BraidWord) -> String {
    let n = w.strands;
    let rows = w.letters.len().max(1);
    let width = 2.0 * MARGIN + GAP * (n.saturating_sub(1)) as f64;
    let height = 2.0 * MARGIN + ROW * rows as f64;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(out, r#"  <title>braid {}</title>"#, if w.letters.is_empty() { "(trivial)".to_string() } else { w.to_string() });
    let _ = writeln!(out, r#"  <rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#);
    // strand identity at each position
    let mut at: Vec<usize> = (0..n).collect();
    let colour = |s: usize| PALETTE[s % PALETTE.len()];
    for row in 0..rows {
        let y0 = MARGIN + ROW * row as f64;
        let y1 = y0 + ROW;
        let letter = w.letters.get(row).copied();
        let j = letter.map(|l| l.unsigned_abs() as usize - 1);
        for p in 0..n {
            if Some(p) == j || Some(p) == j.map(|j| j + 1) {
                continue;
            }
            line(&mut out, x_of(p), y0, x_of(p), y1, colour(at[p]));
        }
        if let (Some(l), Some(j)) = (letter, j) {
            let (left, right) = (at[j], at[j + 1]);
            let (xa, xb) = (x_of(j), x_of(j + 1));
            // under strand: split around the middle
            let (under_from, under_to, under, over_from, over_to, over) =
                if l > 0 { (xa, xb, left, xb, xa, right) } else { (xb, xa, right, xa, xb, left) };
            let gap = 0.22;
            let mx = |f: f64| under_from + (under_to - under_from) * f;
            let my = |f: f64| y0 + (y1 - y0) * f;
            line(&mut out, mx(0.0), my(0.0), mx(0.5 - gap), my(0.5 - gap), colour(under));
            line(&mut out, mx(0.5 + gap), my(0.5 + gap), mx(1.0), my(1.0), colour(under));
            line(&mut out, over_from, y0, over_to, y1, colour(over));
            at.swap(j, j + 1);
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trefoil_diagram() {
        let w = BraidWord::parse("1 1 1", None).unwrap();
        let svg = render_word(&w);
        assert_eq!(svg, render_word(&w));
        assert!(svg.contains(r#"viewBox="0 0 80 160""#));
        // three crossings, each one over line and two under halves
        assert_eq!(svg.matches("<line").count(), 9);
        assert!(svg.contains(PALETTE[0]) && svg.contains(PALETTE[1]));
    }
}

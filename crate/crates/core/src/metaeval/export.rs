//! Tabular and graphical renderings of grid results and corpus statistics.
//! TSVs carry full precision; text tables use four decimals.

use std::fmt::Write as _;

use super::grid::GridResult;
use super::stats::CorpusStats;

const POOLED: &str = "POOLED";
const MACRO: &str = "MACRO";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), |x| x.to_string())
}

/// Columns `w, s, lang_pair, n_pairs, accuracy`: one row per language pair,
/// then a `POOLED` (micro-average) and a `MACRO` row per cell.
pub fn grid_tsv(grid: &GridResult) -> String {
    let mut out = String::from("w\ts\tlang_pair\tn_pairs\taccuracy\n");
    for (&(w, s), report) in &grid.cells {
        for (lp, counts) in &report.per_lang_pair {
            let _ = writeln!(out, "{w}\t{s}\t{lp}\t{}\t{}", counts.n_pairs, opt(counts.accuracy()));
        }
        let _ = writeln!(
            out,
            "{w}\t{s}\t{POOLED}\t{}\t{}",
            report.pooled.n_pairs,
            opt(report.accuracy())
        );
        let _ = writeln!(
            out,
            "{w}\t{s}\t{MACRO}\t{}\t{}",
            report.pooled.n_pairs,
            opt(report.macro_accuracy())
        );
    }
    out
}

/// System scores per cell: `w, s, lang_pair, system, value, n_chunks, n_sentences_covered`.
pub fn grid_scores_tsv(grid: &GridResult) -> String {
    let mut out = String::from("w\ts\tlang_pair\tsystem\tvalue\tn_chunks\tn_sentences_covered\n");
    for (&(w, s), scores) in &grid.system_scores {
        for sc in scores {
            let _ = writeln!(
                out,
                "{w}\t{s}\t{}\t{}\t{}\t{}\t{}",
                sc.lang_pair, sc.system_name, sc.value, sc.n_chunks, sc.n_sentences_covered
            );
        }
    }
    out
}

/// Window-by-stride table of pooled accuracy; rows are `w`, columns `s`.
pub fn grid_heatmap_text(grid: &GridResult) -> String {
    let w_max = grid.w_max();
    let mut out = String::from("  w\\s");
    for s in 1..=w_max {
        let _ = write!(out, " {s:>6}");
    }
    out.push('\n');
    for w in 1..=w_max {
        let _ = write!(out, "{w:>5}");
        for s in 1..=w {
            let cell = grid
                .cells
                .get(&(w, s))
                .and_then(|r| r.accuracy())
                .map_or_else(|| "    --".to_owned(), |a| format!("{a:.4}"));
            let _ = write!(out, " {cell:>6}");
        }
        out.push('\n');
    }
    out
}

/// Accuracy heatmap as a standalone SVG. Cells shade from white (lowest
/// pooled accuracy in the grid) to dark blue (highest).
pub fn grid_heatmap_svg(grid: &GridResult, title: &str) -> String {
    const CELL: usize = 56;
    const MARGIN: usize = 48;
    let w_max = grid.w_max();
    let size = MARGIN + CELL * w_max + 16;
    let accs: Vec<f64> = grid.cells.values().filter_map(|r| r.accuracy()).collect();
    let lo = accs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = accs.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{}" font-family="sans-serif" font-size="11">"#,
        size + 20
    );
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="16" font-size="13">{}</text>"#, xml_escape(title));
    let top = 28;
    for w in 1..=w_max {
        let y = top + (w - 1) * CELL;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">w={w}</text>"#,
            MARGIN - 6,
            y + CELL / 2 + 4
        );
        for s in 1..=w {
            let x = MARGIN + (s - 1) * CELL;
            let acc = grid.cells.get(&(w, s)).and_then(|r| r.accuracy());
            let t = match acc {
                Some(a) if hi > lo => (a - lo) / (hi - lo),
                Some(_) => 1.0,
                None => 0.0,
            };
            let shade = |full: f64| (255.0 - t * (255.0 - full)).round() as u8;
            let fill = format!("#{:02x}{:02x}{:02x}", shade(33.0), shade(102.0), shade(172.0));
            let ink = if t > 0.55 { "white" } else { "black" };
            let label = acc.map_or_else(|| "--".to_owned(), |a| format!("{a:.3}"));
            let _ = writeln!(
                svg,
                r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="white"/><text x="{}" y="{}" text-anchor="middle" fill="{ink}">{label}</text>"#,
                x + CELL / 2,
                y + CELL / 2 + 4
            );
        }
    }
    for s in 1..=w_max {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">s={s}</text>"#,
            MARGIN + (s - 1) * CELL + CELL / 2,
            top + w_max * CELL + 14
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Columns `w, s, lang_pair, dropped, total, dropped_fraction`.
pub fn dropped_tsv(stats: &[CorpusStats]) -> String {
    let mut out = String::from("w\ts\tlang_pair\tdropped\ttotal\tdropped_fraction\n");
    for st in stats {
        for (&(w, s), cell) in &st.dropped {
            let _ = writeln!(
                out,
                "{w}\t{s}\t{}\t{}\t{}\t{}",
                st.lang_pair,
                cell.dropped,
                cell.total,
                cell.fraction()
            );
        }
    }
    out
}

/// Columns `w, lang_pair, limit, n_chunks, n_overlength, overlength_fraction`.
pub fn overlength_tsv(stats: &[CorpusStats]) -> String {
    let mut out = String::from("w\tlang_pair\tlimit\tn_chunks\tn_overlength\toverlength_fraction\n");
    for st in stats {
        for (&w, cell) in &st.overlength {
            let _ = writeln!(
                out,
                "{w}\t{}\t{}\t{}\t{}\t{}",
                st.lang_pair,
                st.limit,
                cell.n_chunks,
                cell.n_overlength,
                opt(cell.fraction())
            );
        }
    }
    out
}

/// Percentage table of overlength chunks: rows `w`, one column per language pair.
pub fn overlength_table(stats: &[CorpusStats]) -> String {
    let mut out = format!("{:>3}", "w");
    for st in stats {
        let _ = write!(out, " {:>10}", st.lang_pair);
    }
    out.push('\n');
    let w_max = stats
        .iter()
        .flat_map(|s| s.overlength.keys())
        .copied()
        .max()
        .unwrap_or(0);
    for w in 1..=w_max {
        let _ = write!(out, "{w:>3}");
        for st in stats {
            let cell = st
                .overlength
                .get(&w)
                .and_then(|c| c.fraction())
                .map_or_else(|| "--".to_owned(), |f| format!("{:.4}", 100.0 * f));
            let _ = write!(out, " {cell:>10}");
        }
        out.push('\n');
    }
    out
}

//! Text renderings of the block Euler-Lagrange systems.

use cliffmech::dynamics::ELPairingTable;
use serde::Serialize;

/// `x_i`, `x_{n+i}`, `x_{2n+i}`, ... for blocks 0, 1, 2, ...
fn block_subscript(block: usize) -> String {
    match block {
        0 => "i".to_string(),
        1 => "n+i".to_string(),
        k => format!("{k}n+i"),
    }
}

fn sign_str(sign: i8) -> &'static str {
    if sign >= 0 {
        "+"
    } else {
        "-"
    }
}

/// Plain-text listing: one `d/dt(dL/dx_b) +/- dL/dx_p = 0` line per block,
/// with the offset range of `i` in the header.
pub fn render_ascii(table: &ELPairingTable, n: usize) -> String {
    let mut out = format!(
        "{} Euler-Lagrange equations on R^{} (n = {n}, i = 1..{n}):\n",
        table.label,
        8 * n
    );
    for row in &table.rows {
        let lhs = wrap_ascii(&block_subscript(row.block));
        let rhs = wrap_ascii(&block_subscript(row.partner));
        out.push_str(&format!(
            "d/dt(dL/dx{lhs}) {} dL/dx{rhs} = 0\n",
            sign_str(row.sign)
        ));
    }
    out
}

fn wrap_ascii(sub: &str) -> String {
    if sub == "i" {
        "_i".to_string()
    } else {
        format!("_{{{sub}}}")
    }
}

/// LaTeX listing in partial-derivative notation.
pub fn render_latex(table: &ELPairingTable, n: usize) -> String {
    let mut lines = Vec::with_capacity(table.rows.len() + 1);
    lines.push(format!(
        "% {} Euler-Lagrange equations on R^{{{}}}, i = 1,\\dots,{n}",
        table.label,
        8 * n
    ));
    for row in &table.rows {
        let lhs = block_subscript(row.block);
        let rhs = block_subscript(row.partner);
        lines.push(format!(
            "\\frac{{\\partial}}{{\\partial t}}\\left(\\frac{{\\partial L}}{{\\partial x_{{{lhs}}}}}\\right) {} \\frac{{\\partial L}}{{\\partial x_{{{rhs}}}}} = 0 \\\\",
            sign_str(row.sign)
        ));
    }
    let mut out = lines.join("\n");
    // Drop the line break after the final equation.
    out.truncate(out.len() - " \\\\".len());
    out.push('\n');
    out
}

#[derive(Serialize)]
struct JsonRow {
    block: usize,
    partner: usize,
    sign: i8,
}

#[derive(Serialize)]
struct JsonTable {
    structure: String,
    n: usize,
    rows: Vec<JsonRow>,
}

/// JSON rendering of the pairing table itself.
pub fn render_json(table: &ELPairingTable, n: usize) -> String {
    let value = JsonTable {
        structure: table.label.to_string(),
        n,
        rows: table
            .rows
            .iter()
            .map(|r| JsonRow {
                block: r.block,
                partner: r.partner,
                sign: r.sign,
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&value).expect("table serializes");
    out.push('\n');
    out
}

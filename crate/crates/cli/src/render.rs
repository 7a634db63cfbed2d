//! Table, CSV and JSON text for a [`ReportDocument`].

use fracrl_core::rules::{OperandCondition, SideConditions};
use fracrl_core::FracDerivResult;

use crate::args::Format;
use crate::report::{Record, ReportDocument};

#[derive(Debug, Clone)]
enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::text("-"), Cell::Num)
    }

    fn human(&self) -> String {
        match self {
            Cell::Num(v) => sig7(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    /// Shortest text that parses back to the same value.
    fn exact(&self) -> String {
        match self {
            Cell::Num(v) if v.is_nan() => "nan".into(),
            Cell::Num(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(v) => format!("{}", v + 0.0),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Seven significant digits.
pub fn sig7(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..7).contains(&exp) {
        let digits = (6 - exp).max(0) as usize;
        let s = format!("{v:.digits$}");
        // rounding can carry into an extra digit, e.g. 9.9999999 -> 10.000000
        if s.trim_start_matches('-')
            .replace('.', "")
            .trim_start_matches('0')
            .len()
            > 7
            && digits > 0
        {
            let d = digits - 1;
            return format!("{v:.d$}");
        }
        s
    } else {
        format!("{v:.6e}")
    }
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn render(&self, out: &mut String) {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::human).collect())
            .collect();
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: Vec<&str>, out: &mut String| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:<w$}"))
                .collect();
            out.push_str(padded.join("  ").trim_end());
            out.push('\n');
        };
        line(self.header.clone(), out);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        line(rule.iter().map(String::as_str).collect(), out);
        for r in &rows {
            line(r.iter().map(String::as_str).collect(), out);
        }
    }
}

struct Sheet {
    /// The first table is also the CSV body.
    tables: Vec<Table>,
    notes: Vec<String>,
}

fn derivative_row(function: &str, r: &FracDerivResult) -> Vec<Cell> {
    vec![
        Cell::text(function),
        Cell::Num(r.alpha.get()),
        Cell::Num(r.point),
        Cell::text(r.method.to_string()),
        Cell::Num(r.left_limit),
        Cell::Num(r.right_limit),
        Cell::opt(r.value),
        Cell::Num(r.err_estimate),
    ]
}

fn condition_summary(c: &SideConditions) -> String {
    c.operands
        .iter()
        .map(|o| {
            let state = if o.differentiable {
                "differentiable"
            } else {
                "non-differentiable"
            };
            format!("{} {state} at {}", o.operand, o.at)
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn condition_row(o: &OperandCondition) -> Vec<Cell> {
    vec![
        Cell::text(o.operand.clone()),
        Cell::Num(o.at),
        Cell::opt(o.left_derivative),
        Cell::opt(o.right_derivative),
        Cell::text(if o.differentiable { "yes" } else { "no" }),
    ]
}

fn sheet(doc: &ReportDocument) -> Sheet {
    let mut tables = Vec::new();
    let mut notes = Vec::new();
    let mut derivs = Vec::new();
    let mut rules = Vec::new();
    let mut conditions = Vec::new();
    let mut suite = Vec::new();
    let mut continuations = Vec::new();

    for rec in &doc.results {
        match rec {
            Record::Derivative { function, result } => {
                derivs.push(derivative_row(function, result))
            }
            Record::Rule { operands, report } => {
                let ops = operands
                    .iter()
                    .map(|o| format!("{}={}", o.name, o.function))
                    .collect::<Vec<_>>()
                    .join("; ");
                rules.push(vec![
                    Cell::text(report.rule.to_string()),
                    Cell::text(ops),
                    Cell::Num(report.alpha.get()),
                    Cell::Num(report.point),
                    Cell::Num(report.lhs),
                    Cell::Num(report.rhs),
                    Cell::Num(report.residual),
                    Cell::text(report.verdict.to_string()),
                    Cell::text(condition_summary(&report.side_conditions)),
                ]);
                conditions.extend(report.side_conditions.operands.iter().map(condition_row));
                notes.extend(report.side_conditions.notes.iter().cloned());
            }
            Record::Locality { u1, report } => {
                for e in &report.continuations {
                    continuations.push(vec![
                        Cell::text(e.function.clone()),
                        Cell::Num(e.result.left_limit),
                        Cell::Num(e.result.right_limit),
                        Cell::opt(e.result.value),
                        Cell::Num(e.deviation),
                    ]);
                }
                notes.push(format!(
                    "{u1} at t0 = {}: base {}, max deviation {} (tol {:e}), {}",
                    report.t0,
                    sig7(report.base),
                    sig7(report.max_deviation),
                    report.tol,
                    if report.agrees { "agrees" } else { "DIFFERS" }
                ));
            }
            Record::Counterexample(row) => suite.push(vec![
                Cell::text(row.id.clone()),
                Cell::text(row.report.rule.to_string()),
                Cell::Num(row.report.lhs),
                Cell::Num(row.expected_lhs),
                Cell::Num(row.report.rhs),
                Cell::Num(row.expected_rhs),
                Cell::Num(row.report.residual),
                Cell::text(row.report.verdict.to_string()),
                Cell::text(if row.matches { "yes" } else { "NO" }),
            ]),
            Record::LocalityCheck(row) => suite.push(vec![
                Cell::text("LOCALITY"),
                Cell::text("-"),
                Cell::Num(row.report.base),
                Cell::Num(row.expected_base),
                Cell::text("-"),
                Cell::text("-"),
                Cell::Num(row.report.max_deviation),
                Cell::text(if row.report.agrees {
                    "LOCAL"
                } else {
                    "NOT_LOCAL"
                }),
                Cell::text(if row.matches { "yes" } else { "NO" }),
            ]),
        }
    }

    if !derivs.is_empty() {
        tables.push(Table {
            header: vec![
                "function", "alpha", "t", "method", "left", "right", "value", "err",
            ],
            rows: derivs,
        });
    }
    if !rules.is_empty() {
        tables.push(Table {
            header: vec![
                "rule",
                "operands",
                "alpha",
                "t",
                "lhs",
                "rhs",
                "residual",
                "verdict",
                "conditions",
            ],
            rows: rules,
        });
        tables.push(Table {
            header: vec![
                "operand",
                "at",
                "left slope",
                "right slope",
                "differentiable",
            ],
            rows: conditions,
        });
    }
    if !suite.is_empty() {
        tables.push(Table {
            header: vec![
                "id", "rule", "lhs", "expected", "rhs", "expected", "residual", "verdict", "match",
            ],
            rows: suite,
        });
    }
    if !continuations.is_empty() {
        tables.push(Table {
            header: vec!["function", "left", "right", "value", "deviation"],
            rows: continuations,
        });
    }
    Sheet { tables, notes }
}

fn table_text(doc: &ReportDocument) -> String {
    let sheet = sheet(doc);
    let mut out = String::new();
    for (i, t) in sheet.tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        t.render(&mut out);
    }
    if !sheet.notes.is_empty() {
        out.push('\n');
        for n in &sheet.notes {
            out.push_str(n);
            out.push('\n');
        }
    }
    out.push_str(&format!(
        "\nstatus: {}\n",
        serde_json::to_value(doc.status).unwrap().as_str().unwrap()
    ));
    out
}

fn csv_text(doc: &ReportDocument) -> Result<String, csv::Error> {
    let sheet = sheet(doc);
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(t) = sheet.tables.first() {
        w.write_record(&t.header)?;
        for r in &t.rows {
            w.write_record(r.iter().map(Cell::exact))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn render(doc: &ReportDocument, format: Format) -> String {
    match format {
        Format::Table => table_text(doc),
        Format::Csv => csv_text(doc).expect("writing CSV to memory"),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(doc).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_significant_digits() {
        assert_eq!(sig7(0.886_226_925_452_758), "0.8862269");
        assert_eq!(sig7(1.772_453_850_905_516), "1.772454");
        assert_eq!(sig7(-0.752_252_778_063_675), "-0.7522528");
        assert_eq!(sig7(12.376_305_848), "12.37631");
        assert_eq!(sig7(9.999_999_99), "10.00000");
        assert_eq!(sig7(1.5e-9), "1.500000e-9");
        assert_eq!(sig7(0.0), "0");
        assert_eq!(sig7(f64::NEG_INFINITY), "-inf");
    }
}

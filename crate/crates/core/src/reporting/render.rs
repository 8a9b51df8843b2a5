use std::fmt::Write as _;
use std::str::FromStr;

use super::*;
use crate::estimator::ScheduleBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    /// Aligned text tables.
    Plain,
    /// CSV blocks, one per table, separated by blank lines.
    Delimited,
    /// The bundle as a JSON document.
    Json,
}

impl FromStr for Format {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, ReportError> {
        match s {
            "plain" | "text" => Ok(Format::Plain),
            "csv" | "delimited" => Ok(Format::Delimited),
            "json" => Ok(Format::Json),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

pub fn render(bundle: &ReportBundle, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(bundle).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Plain => bundle
            .reports
            .iter()
            .map(plain)
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Delimited => bundle
            .reports
            .iter()
            .flat_map(delimited)
            .collect::<Vec<_>>()
            .join("\n"),
    }
}

fn f2(x: f64) -> String {
    format!("{x:.2}")
}

fn basis_name(b: ScheduleBasis) -> &'static str {
    match b {
        ScheduleBasis::PerPackageMax => "per-package-max",
        ScheduleBasis::Monolithic => "monolithic",
    }
}

/// Aligned table; `numeric[i]` right-aligns column `i`.
fn table(headers: &[&str], numeric: &[bool], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut out = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            let pad = widths[i].saturating_sub(cell.chars().count());
            if numeric[i] {
                out.push_str(&" ".repeat(pad));
                out.push_str(cell);
            } else {
                out.push_str(cell);
                if i + 1 < cells.len() {
                    out.push_str(&" ".repeat(pad));
                }
            }
        }
        out.trim_end().to_string() + "\n"
    };
    let mut out = line(headers.to_vec());
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

fn plain(report: &Report) -> String {
    let mut out = String::new();
    match report {
        Report::Summary(s) => {
            let _ = writeln!(out, "release {}", s.release_id);
            let statuses: Vec<String> = s
                .by_status
                .iter()
                .filter(|(st, _)| **st != MeasureStatus::Ok)
                .map(|(st, n)| format!("{st} {n}"))
                .collect();
            let _ = write!(out, "packages {} (ok {}", s.packages, s.ok);
            for st in &statuses {
                let _ = write!(out, ", {st}");
            }
            let _ = writeln!(out, ")");
            let rows: Vec<Vec<String>> = s
                .totals
                .iter()
                .map(|(p, n)| vec![p.to_string(), p.describe().to_string(), n.to_string()])
                .collect();
            out.push_str(&table(&["phase", "", "sloc"], &[false, false, true], &rows));
            if !s.skipped.is_empty() {
                let _ = writeln!(out, "skipped:");
                for sk in &s.skipped {
                    let _ = writeln!(out, "  {}  {}  {}", sk.package, sk.status, sk.detail.as_deref().unwrap_or(""));
                }
            }
        }
        Report::Languages(b) => {
            let _ = writeln!(out, "languages, phase {} ({} SLOC)", b.phase, b.total_sloc);
            let mut rows: Vec<Vec<String>> = b
                .rows
                .iter()
                .map(|r| vec![r.language.clone(), r.sloc.to_string(), f2(r.percent)])
                .collect();
            if let Some(o) = &b.other {
                rows.push(vec!["other".into(), o.sloc.to_string(), f2(o.percent)]);
            }
            rows.push(vec!["total".into(), b.total_sloc.to_string(), f2(b.percent_sum())]);
            out.push_str(&table(&["language", "sloc", "percent"], &[false, true, true], &rows));
            if let Some(o) = &b.other {
                let _ = writeln!(out, "other (< {}%): {}", b.threshold_percent, o.languages.join(", "));
            }
        }
        Report::Top(t) => {
            let _ = writeln!(out, "largest packages, phase {}", t.phase);
            let rows: Vec<Vec<String>> = t
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.rank.to_string(),
                        r.package.name.clone(),
                        r.package.version.clone(),
                        r.sloc.to_string(),
                        r.main_language.clone().unwrap_or_else(|| "-".into()),
                        r.main_language_sloc.to_string(),
                    ]
                })
                .collect();
            out.push_str(&table(
                &["rank", "package", "version", "sloc", "main language", "main sloc"],
                &[true, false, false, true, false, true],
                &rows,
            ));
        }
        Report::Distribution(d) => {
            let _ = writeln!(out, "size distribution, phase {} ({} packages)", d.phase, d.packages);
            let _ = writeln!(out, "mean sloc    {}", f2(d.mean_sloc));
            let _ = writeln!(out, "median sloc  {}", f2(d.median_sloc));
            let _ = writeln!(out, "mean bytes   {}", f2(d.mean_bytes));
            let _ = writeln!(out, "rank-size:");
            let rows: Vec<Vec<String>> = d.rank_size.iter().map(|(r, s)| vec![r.to_string(), s.to_string()]).collect();
            out.push_str(&table(&["rank", "sloc"], &[true, true], &rows));
            let _ = writeln!(out, "histogram:");
            let rows: Vec<Vec<String>> = d
                .histogram
                .iter()
                .map(|b| vec![format!("[{}, {})", b.lower, b.upper), b.count.to_string()])
                .collect();
            out.push_str(&table(&["sloc", "packages"], &[false, true], &rows));
        }
        Report::Deltas(d) => {
            for (title, rows) in [("D - U", &d.debian_minus_upstream), ("D - S", &d.debian_minus_sans)] {
                let _ = writeln!(out, "{title} by language");
                let rows: Vec<Vec<String>> = rows.iter().map(|r| vec![r.language.clone(), format!("{:+}", r.delta)]).collect();
                out.push_str(&table(&["language", "delta"], &[false, true], &rows));
            }
            if let Some(n) = &d.notice {
                let _ = writeln!(out, "note: {n}");
            }
        }
        Report::Estimate(e) => {
            let _ = writeln!(out, "basic COCOMO ({})", basis_name(e.schedule_basis));
            let _ = writeln!(out, "total physical SLOC  {}", e.total_sloc);
            let _ = writeln!(out, "effort               {} person-months ({} person-years)", f2(e.effort_pm), f2(e.effort_py));
            let _ = writeln!(out, "schedule             {} months ({} years)", f2(e.schedule_months), f2(e.schedule_months / 12.0));
            let _ = writeln!(out, "cost                 {} USD", f2(e.cost_usd));
            let _ = writeln!(
                out,
                "params               a={} b={} c={} d={} salary={} overhead={}",
                e.params.a, e.params.b, e.params.c, e.params.d, e.params.salary, e.params.overhead
            );
            let rows: Vec<Vec<String>> = e
                .per_package
                .iter()
                .map(|p| vec![p.name.clone(), p.sloc.to_string(), f2(p.effort_pm), f2(p.schedule_months)])
                .collect();
            out.push_str(&table(&["package", "sloc", "effort pm", "schedule months"], &[false, true, true, true], &rows));
        }
        Report::Comparison(c) => {
            let _ = writeln!(out, "system sizes (lines of code, approximate)");
            let mut all: Vec<(&SizeReference, bool)> = c.rows.iter().map(|r| (r, false)).collect();
            if let Some(m) = &c.measured {
                all.push((m, true));
            }
            all.sort_by(|a, b| a.0.lines.cmp(&b.0.lines).then(a.1.cmp(&b.1)));
            let rows: Vec<Vec<String>> = all
                .iter()
                .map(|(r, measured)| vec![if *measured { "*".into() } else { String::new() }, r.system.clone(), r.lines.to_string()])
                .collect();
            out.push_str(&table(&["", "system", "lines"], &[false, false, true], &rows));
        }
    }
    out
}

fn csv_block(headers: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(headers).expect("in-memory csv");
    for row in rows {
        w.write_record(&row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv of utf-8 input")
}

fn delimited(report: &Report) -> Vec<String> {
    match report {
        Report::Summary(s) => {
            let mut kv = vec![
                vec!["summary".into(), "release".into(), s.release_id.clone()],
                vec!["summary".into(), "packages".into(), s.packages.to_string()],
            ];
            for (st, n) in &s.by_status {
                kv.push(vec!["summary".into(), st.to_string(), n.to_string()]);
            }
            for (p, n) in &s.totals {
                kv.push(vec!["summary".into(), format!("sloc_{p}"), n.to_string()]);
            }
            let mut blocks = vec![csv_block(&["report", "key", "value"], kv)];
            if !s.skipped.is_empty() {
                blocks.push(csv_block(
                    &["report", "package", "version", "status", "detail"],
                    s.skipped
                        .iter()
                        .map(|k| {
                            vec![
                                "skipped".into(),
                                k.package.name.clone(),
                                k.package.version.clone(),
                                k.status.to_string(),
                                k.detail.clone().unwrap_or_default(),
                            ]
                        })
                        .collect(),
                ));
            }
            blocks
        }
        Report::Languages(b) => {
            let mut rows: Vec<Vec<String>> = b
                .rows
                .iter()
                .map(|r| vec!["languages".into(), b.phase.to_string(), r.language.clone(), r.sloc.to_string(), f2(r.percent)])
                .collect();
            if let Some(o) = &b.other {
                rows.push(vec!["languages".into(), b.phase.to_string(), "other".into(), o.sloc.to_string(), f2(o.percent)]);
            }
            vec![csv_block(&["report", "phase", "language", "sloc", "percent"], rows)]
        }
        Report::Top(t) => vec![csv_block(
            &["report", "phase", "rank", "package", "version", "sloc", "main_language", "main_language_sloc"],
            t.rows
                .iter()
                .map(|r| {
                    vec![
                        "top".into(),
                        t.phase.to_string(),
                        r.rank.to_string(),
                        r.package.name.clone(),
                        r.package.version.clone(),
                        r.sloc.to_string(),
                        r.main_language.clone().unwrap_or_default(),
                        r.main_language_sloc.to_string(),
                    ]
                })
                .collect(),
        )],
        Report::Distribution(d) => vec![
            csv_block(
                &["report", "phase", "key", "value"],
                vec![
                    vec!["distribution".into(), d.phase.to_string(), "packages".into(), d.packages.to_string()],
                    vec!["distribution".into(), d.phase.to_string(), "mean_sloc".into(), f2(d.mean_sloc)],
                    vec!["distribution".into(), d.phase.to_string(), "median_sloc".into(), f2(d.median_sloc)],
                    vec!["distribution".into(), d.phase.to_string(), "mean_bytes".into(), f2(d.mean_bytes)],
                ],
            ),
            csv_block(
                &["report", "rank", "sloc"],
                d.rank_size.iter().map(|(r, s)| vec!["rank_size".into(), r.to_string(), s.to_string()]).collect(),
            ),
            csv_block(
                &["report", "lower", "upper", "packages"],
                d.histogram
                    .iter()
                    .map(|b| vec!["histogram".into(), b.lower.to_string(), b.upper.to_string(), b.count.to_string()])
                    .collect(),
            ),
        ],
        Report::Deltas(d) => {
            let mut rows = Vec::new();
            for (name, list) in [("d_minus_u", &d.debian_minus_upstream), ("d_minus_s", &d.debian_minus_sans)] {
                rows.extend(list.iter().map(|r| vec!["deltas".into(), name.into(), r.language.clone(), r.delta.to_string()]));
            }
            vec![csv_block(&["report", "table", "language", "delta"], rows)]
        }
        Report::Estimate(e) => vec![
            csv_block(
                &["report", "key", "value"],
                [
                    ("total_sloc", e.total_sloc.to_string()),
                    ("effort_pm", f2(e.effort_pm)),
                    ("effort_py", f2(e.effort_py)),
                    ("schedule_months", f2(e.schedule_months)),
                    ("schedule_basis", basis_name(e.schedule_basis).to_string()),
                    ("cost_usd", f2(e.cost_usd)),
                ]
                .into_iter()
                .map(|(k, v)| vec!["estimate".into(), k.into(), v])
                .collect(),
            ),
            csv_block(
                &["report", "package", "sloc", "effort_pm", "schedule_months"],
                e.per_package
                    .iter()
                    .map(|p| vec!["estimate_package".into(), p.name.clone(), p.sloc.to_string(), f2(p.effort_pm), f2(p.schedule_months)])
                    .collect(),
            ),
        ],
        Report::Comparison(c) => {
            let mut rows: Vec<Vec<String>> = c
                .rows
                .iter()
                .map(|r| vec!["comparison".into(), r.system.clone(), r.lines.to_string(), "false".into()])
                .collect();
            if let Some(m) = &c.measured {
                rows.push(vec!["comparison".into(), m.system.clone(), m.lines.to_string(), "true".into()]);
            }
            vec![csv_block(&["report", "system", "lines", "measured"], rows)]
        }
    }
}

/// Per-language table of a single tree count, closed by a `total` row.
pub fn render_tree(tree: &crate::sloc::TreeCount, format: Format) -> String {
    if format == Format::Json {
        let mut s = serde_json::to_string_pretty(tree).expect("tree counts serialize");
        s.push('\n');
        return s;
    }
    let mut files: BTreeMap<&str, usize> = BTreeMap::new();
    for f in tree.files.iter().filter(|f| f.is_counted()) {
        *files.entry(f.language.as_str()).or_insert(0) += 1;
    }
    let mut langs: Vec<(&String, &u64)> = tree.per_language.iter().collect();
    langs.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    let mut rows: Vec<Vec<String>> = langs
        .iter()
        .map(|(l, s)| vec![l.to_string(), files.get(l.as_str()).unwrap_or(&0).to_string(), s.to_string()])
        .collect();
    let counted: usize = files.values().sum();
    rows.push(vec!["total".into(), counted.to_string(), tree.total_sloc.to_string()]);
    if format == Format::Delimited {
        return csv_block(&["language", "files", "sloc"], rows);
    }
    let mut out = table(&["language", "files", "sloc"], &[false, true, true], &rows);
    let skips = tree.skip_totals();
    if !skips.is_empty() {
        let parts: Vec<String> = skips
            .iter()
            .map(|(r, n)| format!("{} {n}", serde_json::to_value(r).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()))
            .collect();
        let _ = writeln!(out, "skipped: {}", parts.join(", "));
    }
    out
}

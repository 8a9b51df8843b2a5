//! Tables and plot-ready series computed from a release measurement.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::debsrc::{PackageId, Phase};
use crate::estimator::EstimateResult;
use crate::pipeline::{MeasureStatus, ReleaseMeasurement, SkipRecord};

mod reference;
mod render;

pub use reference::{size_references, SizeComparison, SizeReference};
pub use render::{render, render_tree, Format};

pub const DEFAULT_OTHER_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("no ok package has a phase {0} count")]
    NoPackages(Phase),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown format `{0}` (plain, csv, json)")]
    UnknownFormat(String),
    #[error("malformed report document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageRow {
    pub language: String,
    pub sloc: u64,
    /// Share of the phase total, rounded to hundredths so that the column
    /// adds up to exactly 100.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtherBucket {
    pub languages: Vec<String>,
    pub sloc: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageBreakdown {
    pub phase: Phase,
    pub total_sloc: u64,
    pub threshold_percent: f64,
    pub rows: Vec<LanguageRow>,
    pub other: Option<OtherBucket>,
}

impl LanguageBreakdown {
    pub fn percent_sum(&self) -> f64 {
        self.rows.iter().map(|r| r.percent).sum::<f64>() + self.other.as_ref().map_or(0.0, |o| o.percent)
    }
}

/// Round shares of `total` to hundredths of a percent with the largest
/// remainder method: the rounded values sum to 100.00 exactly.
fn hundredths(values: &[u64], total: u64) -> Vec<u64> {
    if total == 0 {
        return vec![0; values.len()];
    }
    let exact: Vec<u128> = values.iter().map(|v| *v as u128 * 10_000).collect();
    let mut floor: Vec<u64> = exact.iter().map(|e| (e / total as u128) as u64).collect();
    let missing = 10_000 - floor.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] % total as u128;
        let rb = exact[b] % total as u128;
        rb.cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(missing as usize) {
        floor[i] += 1;
    }
    floor
}

/// Breakdown of a per-language map. Languages whose share is below
/// `threshold_percent` go to the `other` bucket.
pub fn breakdown_from_totals(per_language: &BTreeMap<String, u64>, phase: Phase, threshold_percent: f64) -> LanguageBreakdown {
    let total: u64 = per_language.values().sum();
    let mut major: Vec<(&String, u64)> = Vec::new();
    let mut minor: Vec<(&String, u64)> = Vec::new();
    for (lang, &sloc) in per_language {
        if sloc == 0 {
            continue;
        }
        let share = sloc as f64 * 100.0 / total as f64;
        if share < threshold_percent {
            minor.push((lang, sloc));
        } else {
            major.push((lang, sloc));
        }
    }
    major.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let other_sloc: u64 = minor.iter().map(|(_, s)| s).sum();
    let mut values: Vec<u64> = major.iter().map(|(_, s)| *s).collect();
    if !minor.is_empty() {
        values.push(other_sloc);
    }
    let rounded = hundredths(&values, total);
    let rows = major
        .iter()
        .zip(&rounded)
        .map(|((lang, sloc), h)| LanguageRow {
            language: lang.to_string(),
            sloc: *sloc,
            percent: *h as f64 / 100.0,
        })
        .collect();
    let other = (!minor.is_empty()).then(|| OtherBucket {
        languages: minor.iter().map(|(l, _)| l.to_string()).collect(),
        sloc: other_sloc,
        percent: *rounded.last().expect("other value present") as f64 / 100.0,
    });
    LanguageBreakdown {
        phase,
        total_sloc: total,
        threshold_percent,
        rows,
        other,
    }
}

pub fn language_breakdown(m: &ReleaseMeasurement, phase: Phase, threshold_percent: f64) -> LanguageBreakdown {
    let empty = BTreeMap::new();
    let per_language = m.totals.get(&phase).map_or(&empty, |t| &t.per_language);
    breakdown_from_totals(per_language, phase, threshold_percent)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopRow {
    pub rank: usize,
    pub package: PackageId,
    pub sloc: u64,
    /// Language with the most SLOC in the package, if any was counted.
    pub main_language: Option<String>,
    pub main_language_sloc: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopPackages {
    pub phase: Phase,
    pub rows: Vec<TopRow>,
}

/// The `n` largest ok packages by phase SLOC; ties go to the smaller name.
pub fn top_packages(m: &ReleaseMeasurement, n: usize, phase: Phase) -> Result<TopPackages, ReportError> {
    if n == 0 {
        return Err(ReportError::InvalidArgument("top needs n >= 1".into()));
    }
    let mut sized: Vec<_> = m
        .ok_packages()
        .filter_map(|p| p.phases.get(&phase).map(|t| (p, t)))
        .collect();
    sized.sort_by(|a, b| b.1.total_sloc.cmp(&a.1.total_sloc).then_with(|| a.0.package.cmp(&b.0.package)));
    let rows = sized
        .into_iter()
        .take(n)
        .enumerate()
        .map(|(i, (p, t))| {
            let main = t
                .per_language
                .iter()
                .filter(|(_, s)| **s > 0)
                .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)));
            TopRow {
                rank: i + 1,
                package: p.package.clone(),
                sloc: t.total_sloc,
                main_language: main.map(|(l, _)| l.clone()),
                main_language_sloc: main.map_or(0, |(_, s)| *s),
            }
        })
        .collect();
    Ok(TopPackages { phase, rows })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBucket {
    /// Inclusive lower bound; buckets are `[0, 1)` and then `[2^k, 2^(k+1))`.
    pub lower: u64,
    pub upper: u64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub phase: Phase,
    pub packages: usize,
    pub rank_size: Vec<(usize, u64)>,
    pub histogram: Vec<HistogramBucket>,
    pub mean_sloc: f64,
    pub median_sloc: f64,
    /// Mean size in bytes of the counted files per package.
    pub mean_bytes: f64,
}

fn bucket_of(sloc: u64) -> (u64, u64) {
    if sloc == 0 {
        return (0, 1);
    }
    let k = 63 - sloc.leading_zeros();
    let lower = 1u64 << k;
    (lower, lower.saturating_mul(2))
}

pub fn size_distribution(m: &ReleaseMeasurement, phase: Phase) -> Result<DistributionStats, ReportError> {
    let mut sizes: Vec<(u64, u64)> = m
        .ok_packages()
        .filter_map(|p| p.phases.get(&phase))
        .map(|t| (t.total_sloc, t.counted_bytes()))
        .collect();
    if sizes.is_empty() {
        return Err(ReportError::NoPackages(phase));
    }
    sizes.sort_by_key(|s| std::cmp::Reverse(s.0));
    let n = sizes.len();
    let rank_size: Vec<(usize, u64)> = sizes.iter().enumerate().map(|(i, s)| (i + 1, s.0)).collect();

    let mut buckets: BTreeMap<u64, HistogramBucket> = BTreeMap::new();
    for (sloc, _) in &sizes {
        let (lower, upper) = bucket_of(*sloc);
        buckets.entry(lower).or_insert(HistogramBucket { lower, upper, count: 0 }).count += 1;
    }
    // Fill the gaps so the histogram is contiguous.
    let mut histogram = Vec::new();
    if let (Some(&first), Some(&last)) = (buckets.keys().next(), buckets.keys().last()) {
        let mut lower = first;
        loop {
            let (lo, hi) = bucket_of(lower);
            histogram.push(buckets.get(&lo).cloned().unwrap_or(HistogramBucket { lower: lo, upper: hi, count: 0 }));
            if lo >= last {
                break;
            }
            lower = hi;
        }
    }

    let mean_sloc = sizes.iter().map(|s| s.0 as f64).sum::<f64>() / n as f64;
    let mean_bytes = sizes.iter().map(|s| s.1 as f64).sum::<f64>() / n as f64;
    let median_sloc = if n % 2 == 1 {
        sizes[n / 2].0 as f64
    } else {
        (sizes[n / 2 - 1].0 as f64 + sizes[n / 2].0 as f64) / 2.0
    };
    Ok(DistributionStats {
        phase,
        packages: n,
        rank_size,
        histogram,
        mean_sloc,
        median_sloc,
        mean_bytes,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub language: String,
    pub delta: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseDelta {
    /// Per-language D − U over the phase totals.
    pub debian_minus_upstream: Vec<DeltaRow>,
    /// Per-language D − S: what the `debian/` directories contain.
    pub debian_minus_sans: Vec<DeltaRow>,
    pub notice: Option<String>,
}

fn delta_rows(a: &BTreeMap<String, u64>, b: &BTreeMap<String, u64>) -> Vec<DeltaRow> {
    let langs: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    let mut rows: Vec<DeltaRow> = langs
        .into_iter()
        .map(|l| DeltaRow {
            language: l.clone(),
            delta: *a.get(l).unwrap_or(&0) as i64 - *b.get(l).unwrap_or(&0) as i64,
        })
        .filter(|r| r.delta != 0)
        .collect();
    rows.sort_by(|x, y| y.delta.abs().cmp(&x.delta.abs()).then_with(|| x.language.cmp(&y.language)));
    rows
}

pub fn phase_delta(m: &ReleaseMeasurement) -> PhaseDelta {
    let empty = BTreeMap::new();
    let langs = |p: Phase| m.totals.get(&p).map_or(&empty, |t| &t.per_language);
    let has_u = m.totals.get(&Phase::U).is_some_and(|t| t.packages > 0);
    let natives = m.ok_packages().filter(|p| !p.phases.contains_key(&Phase::U)).count();
    let notice = if !has_u {
        Some("no package has an upstream count; the D - U table is empty".to_string())
    } else if natives > 0 {
        Some(format!("{natives} package(s) without an upstream count contribute their whole D count to D - U"))
    } else {
        None
    };
    PhaseDelta {
        debian_minus_upstream: if has_u { delta_rows(langs(Phase::D), langs(Phase::U)) } else { Vec::new() },
        debian_minus_sans: delta_rows(langs(Phase::D), langs(Phase::S)),
        notice,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseSummary {
    pub release_id: String,
    pub totals: BTreeMap<Phase, u64>,
    pub packages: usize,
    pub ok: usize,
    pub by_status: BTreeMap<MeasureStatus, usize>,
    pub skipped: Vec<SkipRecord>,
}

pub fn summary(m: &ReleaseMeasurement) -> ReleaseSummary {
    let mut by_status = BTreeMap::new();
    for p in &m.packages {
        *by_status.entry(p.status).or_insert(0) += 1;
    }
    ReleaseSummary {
        release_id: m.release_id.clone(),
        totals: Phase::ALL.iter().map(|p| (*p, m.total(*p))).collect(),
        packages: m.packages.len(),
        ok: m.ok_packages().count(),
        by_status,
        skipped: m.skipped.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Report {
    Summary(ReleaseSummary),
    Languages(LanguageBreakdown),
    Top(TopPackages),
    Distribution(DistributionStats),
    Deltas(PhaseDelta),
    Estimate(EstimateResult),
    Comparison(SizeComparison),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub release_id: String,
    pub reports: Vec<Report>,
}

impl ReportBundle {
    pub fn from_json(text: &str) -> Result<ReportBundle, ReportError> {
        serde_json::from_str(text).map_err(|e| ReportError::Malformed(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn langs(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
        pairs.iter().map(|(l, s)| (l.to_string(), *s)).collect()
    }

    #[test]
    fn c_share_of_debian_total() {
        let b = breakdown_from_totals(&langs(&[("c", 66_550_000), ("rest", 38_950_000)]), Phase::D, 0.5);
        assert_eq!(b.rows[0].language, "c");
        assert!((b.rows[0].percent - 63.08).abs() < 1e-9);
        assert!((b.percent_sum() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn single_language_is_everything() {
        let b = breakdown_from_totals(&langs(&[("perl", 42)]), Phase::S, 0.5);
        assert_eq!(b.rows.len(), 1);
        assert_eq!(b.rows[0].percent, 100.0);
        assert!(b.other.is_none());
    }

    #[test]
    fn zero_total_is_empty() {
        let b = breakdown_from_totals(&langs(&[("c", 0)]), Phase::U, 0.5);
        assert!(b.rows.is_empty() && b.other.is_none());
        assert_eq!(b.total_sloc, 0);
    }

    #[test]
    fn small_languages_fold_into_other() {
        let b = breakdown_from_totals(&langs(&[("c", 995), ("awk", 3), ("sed", 2)]), Phase::D, 0.5);
        assert_eq!(b.rows.len(), 1);
        let other = b.other.as_ref().unwrap();
        assert_eq!(other.languages, ["awk", "sed"]);
        assert_eq!(other.sloc, 5);
        assert!((other.percent - 0.5).abs() < 1e-9);
        assert!((b.percent_sum() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn thirds_round_to_exactly_hundred() {
        let h = hundredths(&[1, 1, 1], 3);
        assert_eq!(h.iter().sum::<u64>(), 10_000);
        assert_eq!(h, [3334, 3333, 3333]);
    }

    #[test]
    fn buckets_are_powers_of_two() {
        assert_eq!(bucket_of(0), (0, 1));
        assert_eq!(bucket_of(1), (1, 2));
        assert_eq!(bucket_of(10), (8, 16));
        assert_eq!(bucket_of(1024), (1024, 2048));
    }
}

//! Version families: several source packages that are releases of the same
//! software are counted once, through a representative.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::debsrc::SourcePackageRecord;

mod overrides;

pub use overrides::{OverrideRule, OverrideTable, DEFAULT_OVERRIDES};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CurationError {
    #[error("override file line {line}: {message}")]
    OverrideSyntax { line: usize, message: String },
    #[error("family `{family}`: members {members:?} have the same version; add an override")]
    Ambiguous { family: String, members: Vec<String> },
    #[error("override `{rule}` names `{name}`, which is not in family `{family}`")]
    OutsideFamily { rule: String, name: String, family: String },
    #[error("package names are not unique: {0:?}")]
    DuplicateNames(Vec<String>),
    #[error("empty family")]
    EmptyFamily,
    #[error("plan does not cover: {0:?}")]
    Uncovered(Vec<String>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    #[default]
    HighestVersion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Family {
    pub base: String,
    pub members: Vec<String>,
    pub representative: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyPlan {
    pub families: Vec<Family>,
    pub overrides_applied: Vec<String>,
    pub singletons: Vec<String>,
    /// Families whose representative could not be decided without an
    /// override. Empty in a final plan.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unresolved: Vec<String>,
}

/// Split a package name into its stem and trailing version token:
/// `gcc2.95` → (`gcc`, `2.95`), `emacs20` → (`emacs`, `20`), `apt` → (`apt`, none).
pub fn split_version_token(name: &str) -> (&str, Option<&str>) {
    let bytes = name.as_bytes();
    let mut start = bytes.len();
    while start > 0 && (bytes[start - 1].is_ascii_digit() || bytes[start - 1] == b'.') {
        start -= 1;
    }
    // The token begins at its first digit; leading dots stay with the stem.
    while start < bytes.len() && bytes[start] == b'.' {
        start += 1;
    }
    if start == bytes.len() || start == 0 {
        return (name, None);
    }
    (&name[..start], Some(&name[start..]))
}

fn version_components(token: Option<&str>) -> Vec<u64> {
    token
        .unwrap_or("")
        .split('.')
        .filter(|c| !c.is_empty())
        .map(|c| c.parse().unwrap_or(u64::MAX))
        .collect()
}

/// Compare dot-separated numeric versions; missing components count as 0.
pub fn compare_versions(a: &str, b: &str) -> Ordering {
    let (va, vb) = (version_components(Some(a)), version_components(Some(b)));
    let n = va.len().max(vb.len());
    (0..n)
        .map(|i| va.get(i).unwrap_or(&0).cmp(vb.get(i).unwrap_or(&0)))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn name_version(name: &str) -> &str {
    split_version_token(name).1.unwrap_or("")
}

/// Pick a family's representative: the override's choice when one applies,
/// otherwise the member with the greatest version token.
pub fn select_representative(
    base: &str,
    members: &[String],
    policy: SelectionPolicy,
    overrides: &OverrideTable,
) -> Result<String, CurationError> {
    if members.is_empty() {
        return Err(CurationError::EmptyFamily);
    }
    let unique: BTreeSet<&String> = members.iter().collect();
    if unique.len() != members.len() {
        return Err(CurationError::Ambiguous {
            family: base.to_string(),
            members: members.to_vec(),
        });
    }
    if let Some(OverrideRule::Family { representative, .. }) = overrides.family_rule(base) {
        if members.contains(representative) {
            return Ok(representative.clone());
        }
        return Err(CurationError::OutsideFamily {
            rule: format!("family:{base}"),
            name: representative.clone(),
            family: base.to_string(),
        });
    }
    match policy {
        SelectionPolicy::HighestVersion => {
            let mut sorted: Vec<&String> = members.iter().collect();
            sorted.sort_by(|a, b| compare_versions(name_version(b), name_version(a)));
            if sorted.len() > 1 && compare_versions(name_version(sorted[0]), name_version(sorted[1])).is_eq() {
                let top = name_version(sorted[0]);
                return Err(CurationError::Ambiguous {
                    family: base.to_string(),
                    members: sorted
                        .iter()
                        .filter(|m| compare_versions(name_version(m), top).is_eq())
                        .map(|m| m.to_string())
                        .collect(),
                });
            }
            Ok(sorted[0].clone())
        }
    }
}

/// Draft plan: names sharing a stem (with or without a trailing version
/// token) form a family when there are at least two of them. Representatives
/// follow the default policy; undecidable families are listed in
/// `unresolved` with their lexicographically last member as placeholder.
pub fn group_families(names: &[String]) -> FamilyPlan {
    let mut by_stem: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for name in names.iter().collect::<BTreeSet<_>>() {
        let (stem, _) = split_version_token(name);
        by_stem.entry(stem.to_ascii_lowercase()).or_default().push(name.clone());
    }
    let mut plan = FamilyPlan::default();
    for (base, mut members) in by_stem {
        if members.len() < 2 {
            plan.singletons.extend(members);
            continue;
        }
        members.sort();
        let representative = match select_representative(&base, &members, SelectionPolicy::HighestVersion, &OverrideTable::default()) {
            Ok(r) => r,
            Err(_) => {
                plan.unresolved.push(base.clone());
                members.last().cloned().expect("non-empty")
            }
        };
        plan.families.push(Family { base, members, representative });
    }
    plan.singletons.sort();
    plan
}

/// Group `names` and apply `overrides`. Fails when a family stays
/// ambiguous or an override names a package outside its family.
pub fn build_plan(names: &[String], overrides: &OverrideTable, policy: SelectionPolicy) -> Result<FamilyPlan, CurationError> {
    let mut seen = BTreeSet::new();
    let dups: Vec<String> = names.iter().filter(|n| !seen.insert(n.as_str())).cloned().collect();
    if !dups.is_empty() {
        return Err(CurationError::DuplicateNames(dups));
    }
    let draft = group_families(names);
    let present: BTreeSet<&str> = names.iter().map(String::as_str).collect();
    let mut plan = FamilyPlan {
        singletons: draft.singletons.clone(),
        ..FamilyPlan::default()
    };

    for family in draft.families {
        let mut members = family.members.clone();
        if let Some(rule @ OverrideRule::Family { members: listed, representative, .. }) = overrides.family_rule(&family.base) {
            for name in listed.iter().chain(std::iter::once(representative)) {
                if present.contains(name.as_str()) && !family.members.contains(name) {
                    return Err(CurationError::OutsideFamily {
                        rule: rule.id(),
                        name: name.clone(),
                        family: family.base.clone(),
                    });
                }
            }
            if !listed.is_empty() && !listed.contains(representative) {
                return Err(CurationError::OutsideFamily {
                    rule: rule.id(),
                    name: representative.clone(),
                    family: family.base.clone(),
                });
            }
            if present.contains(representative.as_str()) {
                if !listed.is_empty() {
                    let (kept, split): (Vec<String>, Vec<String>) =
                        members.into_iter().partition(|m| listed.contains(m));
                    plan.singletons.extend(split);
                    members = kept;
                }
                plan.overrides_applied.push(rule.id());
            } else {
                log::warn!("override {} skipped: {} not in the index", rule.id(), representative);
            }
        }
        match members.len() {
            0 => {}
            1 => plan.singletons.extend(members),
            _ => {
                let scoped = if plan.overrides_applied.contains(&format!("family:{}", family.base)) {
                    overrides.clone()
                } else {
                    OverrideTable::default()
                };
                let representative = select_representative(&family.base, &members, policy, &scoped)?;
                plan.families.push(Family { base: family.base, members, representative });
            }
        }
    }

    let stems: BTreeSet<String> = names
        .iter()
        .map(|n| split_version_token(n).0.to_ascii_lowercase())
        .collect();
    for rule in &overrides.rules {
        if let OverrideRule::Separate { a, b, .. } = rule {
            if stems.contains(a) && stems.contains(b) {
                plan.overrides_applied.push(rule.id());
            }
        }
    }
    plan.singletons.sort();
    Ok(plan)
}

/// Keep the records the plan selects (representatives and singletons), in
/// input order.
pub fn apply_plan(plan: &FamilyPlan, records: &[SourcePackageRecord]) -> Result<Vec<SourcePackageRecord>, CurationError> {
    let keep: BTreeSet<&str> = plan
        .families
        .iter()
        .map(|f| f.representative.as_str())
        .chain(plan.singletons.iter().map(String::as_str))
        .collect();
    let covered: BTreeSet<&str> = plan
        .families
        .iter()
        .flat_map(|f| f.members.iter().map(String::as_str))
        .chain(plan.singletons.iter().map(String::as_str))
        .collect();
    let uncovered: BTreeSet<String> = records
        .iter()
        .filter(|r| !covered.contains(r.name.as_str()))
        .map(|r| r.name.clone())
        .collect();
    if !uncovered.is_empty() {
        return Err(CurationError::Uncovered(uncovered.into_iter().collect()));
    }
    Ok(records
        .iter()
        .filter(|r| keep.contains(r.name.as_str()))
        .cloned()
        .collect())
}

impl FamilyPlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("plan serializes")))
    }

    /// Table for human review.
    pub fn to_table(&self, overrides: &OverrideTable) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} families, {} singletons", self.families.len(), self.singletons.len());
        for f in &self.families {
            let _ = writeln!(out);
            let _ = writeln!(out, "family {}  ->  {}", f.base, f.representative);
            for m in &f.members {
                let mark = if *m == f.representative { "*" } else { " " };
                let _ = writeln!(out, "  {mark} {m}");
            }
        }
        if !self.overrides_applied.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "overrides applied:");
            for id in &self.overrides_applied {
                let reason = overrides
                    .rules
                    .iter()
                    .find(|r| r.id() == *id)
                    .map(|r| r.reason())
                    .unwrap_or("");
                let _ = writeln!(out, "  {id}: {reason}");
            }
        }
        if !self.unresolved.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "needs an override: {}", self.unresolved.join(", "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(ns: &[&str]) -> Vec<String> {
        ns.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn version_tokens() {
        assert_eq!(split_version_token("gcc2.95"), ("gcc", Some("2.95")));
        assert_eq!(split_version_token("gcc272"), ("gcc", Some("272")));
        assert_eq!(split_version_token("emacs20"), ("emacs", Some("20")));
        assert_eq!(split_version_token("apt"), ("apt", None));
        assert_eq!(split_version_token("42"), ("42", None));
        assert_eq!(split_version_token("foo.2"), ("foo.", Some("2")));
    }

    #[test]
    fn version_comparison() {
        assert_eq!(compare_versions("3.0", "2.96"), Ordering::Greater);
        assert_eq!(compare_versions("2.96", "2.95"), Ordering::Greater);
        assert_eq!(compare_versions("2", "2.0"), Ordering::Equal);
        assert_eq!(compare_versions("272", "3.0"), Ordering::Greater);
    }

    #[test]
    fn gcc_family() {
        let plan = group_families(&names(&["gcc272", "gcc2.95", "gcc2.96", "gcc3.0"]));
        assert_eq!(plan.families.len(), 1);
        assert_eq!(plan.families[0].base, "gcc");
        assert_eq!(plan.families[0].members.len(), 4);
        // Literal comparison ranks 272 first; the shipped override fixes it.
        assert_eq!(plan.families[0].representative, "gcc272");
        let fixed = build_plan(
            &names(&["gcc272", "gcc2.95", "gcc2.96", "gcc3.0"]),
            &OverrideTable::defaults(),
            SelectionPolicy::HighestVersion,
        )
        .unwrap();
        assert_eq!(fixed.families[0].representative, "gcc3.0");
        assert_eq!(fixed.overrides_applied, ["family:gcc"]);
    }

    #[test]
    fn emacs_and_xemacs_stay_apart() {
        let plan = group_families(&names(&["emacs20", "xemacs21"]));
        assert!(plan.families.is_empty());
        assert_eq!(plan.singletons, ["emacs20", "xemacs21"]);
    }

    #[test]
    fn plain_singleton() {
        let plan = group_families(&names(&["apt"]));
        assert_eq!(plan.singletons, ["apt"]);
        assert_eq!(
            select_representative("apt", &names(&["apt"]), SelectionPolicy::HighestVersion, &OverrideTable::default()).unwrap(),
            "apt"
        );
    }

    #[test]
    fn duplicate_members_are_ambiguous() {
        let err = select_representative(
            "pkg",
            &names(&["pkg2.0", "pkg2.0"]),
            SelectionPolicy::HighestVersion,
            &OverrideTable::default(),
        )
        .unwrap_err();
        assert!(matches!(err, CurationError::Ambiguous { .. }));
    }

    #[test]
    fn equal_versions_need_override() {
        let ns = names(&["pkg2", "pkg2.0"]);
        let draft = group_families(&ns);
        assert_eq!(draft.unresolved, ["pkg"]);
        assert!(build_plan(&ns, &OverrideTable::default(), SelectionPolicy::HighestVersion).is_err());
        let ov = OverrideTable::parse("family pkg: ; representative pkg2.0; reason \"newer tarball\"").unwrap();
        let plan = build_plan(&ns, &ov, SelectionPolicy::HighestVersion).unwrap();
        assert_eq!(plan.families[0].representative, "pkg2.0");
    }

    #[test]
    fn override_outside_family_rejected() {
        let ns = names(&["gcc2.95", "gcc3.0", "gnat"]);
        let ov = OverrideTable::parse("family gcc: gcc3.0 gnat; representative gcc3.0; reason \"no\"").unwrap();
        assert!(matches!(
            build_plan(&ns, &ov, SelectionPolicy::HighestVersion),
            Err(CurationError::OutsideFamily { .. })
        ));
    }

    #[test]
    fn member_list_splits_family() {
        let ns = names(&["php3", "php4", "php4.1"]);
        let ov = OverrideTable::parse("family php: php4 php4.1; representative php4.1; reason \"php4 rewrote php3\"").unwrap();
        let plan = build_plan(&ns, &ov, SelectionPolicy::HighestVersion).unwrap();
        assert_eq!(plan.families[0].members, ["php4", "php4.1"]);
        assert_eq!(plan.singletons, ["php3"]);
    }

    #[test]
    fn bare_stem_joins_family() {
        let plan = group_families(&names(&["tcl8.3", "tcl"]));
        assert_eq!(plan.families[0].members, ["tcl", "tcl8.3"]);
        assert_eq!(plan.families[0].representative, "tcl8.3");
    }
}

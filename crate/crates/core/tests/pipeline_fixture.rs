use std::fs;
use std::path::Path;
use std::time::Duration;

use debsloc::curation::{build_plan, group_families, OverrideTable, SelectionPolicy};
use debsloc::debsrc::testkit::{mini_archive, MirrorBuilder};
use debsloc::debsrc::{FetchOptions, MirrorLocator, PackageKind, Phase, SourcePackageRecord};
use debsloc::pipeline::*;
use debsloc::sloc::builtin_registry;

fn opts(tmp: &Path) -> MeasureOptions {
    MeasureOptions {
        fetch: FetchOptions { retries: 0, backoff: Duration::ZERO },
        scratch_root: Some(tmp.join("scratch")),
        ..MeasureOptions::default()
    }
}

fn plan_for(records: &[SourcePackageRecord]) -> debsloc::curation::FamilyPlan {
    let names: Vec<String> = records.iter().map(|r| r.name.clone()).collect();
    build_plan(&names, &OverrideTable::defaults(), SelectionPolicy::HighestVersion).unwrap()
}

fn by_name<'a>(m: &'a ReleaseMeasurement, name: &str) -> &'a PackageMeasurement {
    m.packages.iter().find(|p| p.package.name == name).unwrap()
}

#[test]
fn patched_package_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let arch = mini_archive(&tmp.path().join("mirror"));
    let cache = Cache::open(tmp.path().join("cache")).unwrap();
    let mirror = MirrorLocator::Local(arch.mirror.clone());
    let (m, run) = measure_package(&arch.records[0], &mirror, &cache, builtin_registry(), &opts(tmp.path())).unwrap();
    assert!(run.fetched && !run.cache_hit);
    assert_eq!(m.status, MeasureStatus::Ok);
    assert_eq!(m.sloc(Phase::U), Some(5));
    assert_eq!(m.sloc(Phase::D), Some(9));
    assert_eq!(m.sloc(Phase::S), Some(6));
    assert_eq!(m.debian_sloc(), Some(3));
    m.check().unwrap();
    assert_eq!(m.phases[&Phase::D].root, "hello_2.1-3/D");
}

#[test]
fn native_package_has_no_upstream_count() {
    let tmp = tempfile::tempdir().unwrap();
    let arch = mini_archive(&tmp.path().join("mirror"));
    let cache = Cache::open(tmp.path().join("cache")).unwrap();
    let mirror = MirrorLocator::Local(arch.mirror.clone());
    let tools = &arch.records[1];
    assert_eq!(tools.kind, PackageKind::Native);
    let (m, _) = measure_package(tools, &mirror, &cache, builtin_registry(), &opts(tmp.path())).unwrap();
    assert_eq!(m.sloc(Phase::U), None);
    assert_eq!((m.sloc(Phase::D), m.sloc(Phase::S)), (Some(5), Some(3)));

    let mut o = opts(tmp.path());
    o.native_upstream = NativeUpstream::SubstituteDebian;
    let (m, run) = measure_package(tools, &mirror, &cache, builtin_registry(), &o).unwrap();
    assert!(!run.cache_hit, "policy is part of the cache key");
    assert_eq!(m.sloc(Phase::U), Some(5));
    m.check().unwrap();
}

#[test]
fn native_without_debian_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let mut mb = MirrorBuilder::new(tmp.path().join("mirror"));
    let rec = mb.native("bare", "1", &[("a.c", "int a;\n")]);
    let cache = Cache::open(tmp.path().join("cache")).unwrap();
    let mirror = MirrorLocator::Local(mb.root().to_path_buf());
    let (m, _) = measure_package(&rec, &mirror, &cache, builtin_registry(), &opts(tmp.path())).unwrap();
    assert!(m.is_ok() && m.debian_missing);
    assert_eq!(m.sloc(Phase::D), m.sloc(Phase::S));
}

#[test]
fn release_totals_and_skips() {
    let tmp = tempfile::tempdir().unwrap();
    let arch = mini_archive(&tmp.path().join("mirror"));
    let cache = Cache::open(tmp.path().join("cache")).unwrap();
    let mirror = MirrorLocator::Local(arch.mirror.clone());
    let plan = plan_for(&arch.records);
    let (rel, stats) = measure_release(
        "mini",
        &arch.records,
        &plan,
        &mirror,
        &cache,
        builtin_registry(),
        &opts(tmp.path()),
    )
    .unwrap();
    assert_eq!((rel.total(Phase::U), rel.total(Phase::D), rel.total(Phase::S)), (5, 14, 9));
    assert_eq!(rel.packages.len(), 3);
    assert_eq!(rel.skipped.len(), 1);
    assert_eq!(rel.skipped[0].package.name, "broken");
    assert_eq!(rel.skipped[0].status, MeasureStatus::PatchFailed);
    assert_eq!(stats, RunStats { packages: 3, cache_hits: 0, fetches: 3, ok: 2, failed: 1 });
    for p in rel.ok_packages() {
        assert_eq!(p.sloc(Phase::D).unwrap() - p.sloc(Phase::S).unwrap(), p.debian_sloc().unwrap());
    }
    assert_eq!(by_name(&rel, "hello").phases[&Phase::D].per_language["c"], 6);
    assert_eq!(rel.totals[&Phase::D].per_language["makefile"], 5);

    // Totals are the sums of the package counts.
    let sum: u64 = rel.ok_packages().filter_map(|p| p.sloc(Phase::D)).sum();
    assert_eq!(sum, rel.total(Phase::D));

    // Reloading from the cache gives the same measurement.
    assert_eq!(cache.load_release("mini").unwrap(), rel);
}

#[test]
fn warm_rerun_is_all_cached_and_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let arch = mini_archive(&tmp.path().join("mirror"));
    let cache = Cache::open(tmp.path().join("cache")).unwrap();
    let mirror = MirrorLocator::Local(arch.mirror.clone());
    let plan = plan_for(&arch.records);
    let o = opts(tmp.path());
    let run = || measure_release("mini", &arch.records, &plan, &mirror, &cache, builtin_registry(), &o).unwrap();
    let (first, _) = run();
    let record = fs::read(cache.record_path(&arch.records[0].id())).unwrap();
    let (second, stats) = run();
    assert_eq!(first, second);
    assert_eq!(stats.fetches, 0);
    assert_eq!(stats.cache_hits, 3);
    assert_eq!(fs::read(cache.record_path(&arch.records[0].id())).unwrap(), record);
}

#[test]
fn parallelism_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let arch = mini_archive(&tmp.path().join("mirror"));
    let mirror = MirrorLocator::Local(arch.mirror.clone());
    let plan = plan_for(&arch.records);
    let mut results = Vec::new();
    for (jobs, dir) in [(1, "c1"), (4, "c4")] {
        let cache = Cache::open(tmp.path().join(dir)).unwrap();
        let mut o = opts(tmp.path());
        o.jobs = jobs;
        let mut records = arch.records.clone();
        if jobs == 4 {
            records.reverse();
        }
        results.push(measure_release("mini", &records, &plan, &mirror, &cache, builtin_registry(), &o).unwrap().0);
    }
    assert_eq!(results[0], results[1]);
}

#[test]
fn empty_release() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = Cache::open(tmp.path().join("cache")).unwrap();
    let mirror = MirrorLocator::Local(tmp.path().join("nowhere"));
    let plan = group_families(&[]);
    let (rel, stats) = measure_release("none", &[], &plan, &mirror, &cache, builtin_registry(), &opts(tmp.path())).unwrap();
    assert!(Phase::ALL.iter().all(|p| rel.total(*p) == 0));
    assert_eq!(stats.packages, 0);
}

#[test]
fn unreachable_mirror_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let arch = mini_archive(&tmp.path().join("mirror"));
    let cache = Cache::open(tmp.path().join("cache")).unwrap();
    let plan = plan_for(&arch.records);
    let missing = MirrorLocator::Local(tmp.path().join("nowhere"));
    let err = measure_release("mini", &arch.records, &plan, &missing, &cache, builtin_registry(), &opts(tmp.path()))
        .unwrap_err();
    assert!(matches!(err, PipelineError::MirrorUnreachable(_)), "{err}");
}

#[test]
fn fetch_failures_are_retried_next_run() {
    let tmp = tempfile::tempdir().unwrap();
    let mut mb = MirrorBuilder::new(tmp.path().join("mirror"));
    let rec = mb.native("flaky", "1", &[("a.c", "int a;\n")]);
    let tarball = mb.root().join(&rec.directory).join(&rec.tarball().filename);
    let good = fs::read(&tarball).unwrap();
    fs::remove_file(&tarball).unwrap();
    let cache = Cache::open(tmp.path().join("cache")).unwrap();
    let mirror = MirrorLocator::Local(mb.root().to_path_buf());
    let (m, _) = measure_package(&rec, &mirror, &cache, builtin_registry(), &opts(tmp.path())).unwrap();
    assert_eq!(m.status, MeasureStatus::FetchFailed);
    fs::write(&tarball, good).unwrap();
    let (m, run) = measure_package(&rec, &mirror, &cache, builtin_registry(), &opts(tmp.path())).unwrap();
    assert!(!run.cache_hit);
    assert!(m.is_ok());
}

#[test]
fn corrupt_tarball_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let mut mb = MirrorBuilder::new(tmp.path().join("mirror"));
    let rec = mb.native("junk", "1", &[("a.c", "int a;\n")]);
    // Replace the tarball and fix up the index so the digest matches.
    let text = mb.index_text();
    let tarball = mb.root().join(&rec.directory).join(&rec.tarball().filename);
    let old = fs::read(&tarball).unwrap();
    let garbage = vec![0x1f, 0x8b, 8, 0, 0, 0, 0, 0, 0, 3, 1, 2, 3];
    fs::write(&tarball, &garbage).unwrap();
    let md5 = |b: &[u8]| debsloc::debsrc::DigestAlgo::Md5.digest_bytes(b);
    let text = text
        .replace(&md5(&old), &md5(&garbage))
        .replace(&format!(" {} junk_1.tar.gz", old.len()), &format!(" {} junk_1.tar.gz", garbage.len()));
    // The .dsc still lists the old digest; rewrite it too.
    let dsc = mb.root().join(&rec.directory).join("junk_1.dsc");
    let dsc_old = fs::read(&dsc).unwrap();
    let dsc_text = String::from_utf8(dsc_old.clone())
        .unwrap()
        .replace(&md5(&old), &md5(&garbage))
        .replace(&format!(" {} junk_1.tar.gz", old.len()), &format!(" {} junk_1.tar.gz", garbage.len()));
    fs::write(&dsc, &dsc_text).unwrap();
    let text = text
        .replace(&md5(&dsc_old), &md5(dsc_text.as_bytes()))
        .replace(&format!(" {} junk_1.dsc", dsc_old.len()), &format!(" {} junk_1.dsc", dsc_text.len()));
    let rec = debsloc::debsrc::parse_sources_index(&text).records.remove(0);

    let cache = Cache::open(tmp.path().join("cache")).unwrap();
    let mirror = MirrorLocator::Local(mb.root().to_path_buf());
    let (m, _) = measure_package(&rec, &mirror, &cache, builtin_registry(), &opts(tmp.path())).unwrap();
    assert_eq!(m.status, MeasureStatus::Corrupt, "{:?}", m.detail);
    assert!(!m.detail.unwrap().contains(&*tmp.path().to_string_lossy()));
}

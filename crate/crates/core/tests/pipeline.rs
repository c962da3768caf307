use std::fs;

use receval::harness::{read_report, render_report, run_evaluation, Cell, EvalConfig, ReportFormat, RowSegment};
use receval::synth::{generate_dataset, SynthConfig};
use receval::{Algorithm, Dataset, Error, EvaluationReport, Segment};

fn small_synth() -> SynthConfig {
    SynthConfig {
        n_users: 1200,
        n_items: 150,
        target_sparsity: 0.97,
        seed: 5,
        ..SynthConfig::default()
    }
}

fn small_cfg(s: &SynthConfig) -> EvalConfig {
    let mut cfg = EvalConfig {
        seed: 11,
        boundary: Some(s.boundary()),
        bootstrap_resamples: 200,
        ..EvalConfig::default()
    };
    cfg.als.factors = 8;
    cfg.als.iterations = 5;
    cfg.forest.n_trees = 15;
    cfg.forest.negatives_per_user = 20;
    cfg
}

fn run() -> (Dataset, EvalConfig, EvaluationReport) {
    let s = small_synth();
    let data = generate_dataset(&s).unwrap();
    let cfg = small_cfg(&s);
    let report = run_evaluation(&cfg, &data).unwrap();
    (data, cfg, report)
}

#[test]
fn report_invariants() {
    let (_, _, r) = run();
    for row in RowSegment::ALL {
        let mp = r.cells(row, Algorithm::MP).unwrap();
        let ad = mp.ad.value().unwrap();
        let rp = mp.rp.value().unwrap();
        assert_eq!((ad.point, ad.dispersion), (0.0, 0.0), "{row:?}");
        assert_eq!((rp.point, rp.dispersion), (1.0, 0.0), "{row:?}");
        assert!(mp.ndcg.is_available());
    }
    for row in [RowSegment::NewUsers, RowSegment::Average] {
        let cf = r.cells(row, Algorithm::CF).unwrap();
        assert_eq!((&cf.ndcg, &cf.ad, &cf.rp), (&Cell::NotAvailable, &Cell::NotAvailable, &Cell::NotAvailable));
    }
    let total = r.row(RowSegment::Average).unwrap().n_users;
    let parts: usize = [RowSegment::SaleUsers, RowSegment::ViewUsers, RowSegment::NewUsers]
        .iter()
        .map(|s| r.row(*s).unwrap().n_users)
        .sum();
    assert_eq!(parts, total);
    for c in &r.coverage {
        assert_eq!(c.covered + c.uncovered, total);
    }
    assert_eq!(r.coverage_of(Algorithm::MP).unwrap().covered, total);
    assert_eq!(r.coverage_of(Algorithm::CB).unwrap().covered, total);
    let new = r.stats.segment(Segment::NewUser).unwrap().users;
    assert_eq!(r.coverage_of(Algorithm::CF).unwrap().uncovered, new);
    // intervals bracket the point estimate
    for row in &r.rows {
        for c in &row.cells {
            for v in [c.ad.value(), c.rp.value(), c.ndcg.value().map(|n| &n.value)].into_iter().flatten() {
                assert!(v.ci_low <= v.point + 1e-12 && v.point <= v.ci_high + 1e-12);
            }
        }
    }
    let sh = &r.short_head;
    assert_eq!(*sh.cumulative_share.last().unwrap(), 1.0);
    assert!(sh.short_head_fraction > 0.0 && sh.short_head_fraction <= 1.0);
}

#[test]
fn deterministic_across_thread_counts() {
    let s = small_synth();
    let data = generate_dataset(&s).unwrap();
    let mut cfg = small_cfg(&s);
    cfg.threads = Some(1);
    let a = serde_json::to_string(&run_evaluation(&cfg, &data).unwrap()).unwrap();
    cfg.threads = Some(3);
    let b = serde_json::to_string(&run_evaluation(&cfg, &data).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn json_reload_renders_identical_tables() {
    let (_, _, r) = run();
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    render_report(&r, ReportFormat::Json, &first).unwrap();
    let direct = render_report(&r, ReportFormat::Csv, &first).unwrap();
    let back = read_report(&first.join("report.json")).unwrap();
    assert_eq!(back, r);
    let reloaded = render_report(&back, ReportFormat::Csv, &second).unwrap();
    for (a, b) in direct.iter().zip(&reloaded) {
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap(), "{}", a.display());
    }
    let ad = fs::read_to_string(first.join("tables/ad.csv")).unwrap();
    assert!(ad.lines().nth(1).unwrap().contains(",0(0),"), "{ad}");
    render_report(&r, ReportFormat::Markdown, &first).unwrap();
    let md = fs::read_to_string(first.join("report.md")).unwrap();
    assert!(md.contains("| New Users |") && md.contains(" - |"));
}

#[test]
fn errors_name_their_stage() {
    let s = small_synth();
    let data = generate_dataset(&s).unwrap();
    let mut cfg = small_cfg(&s);
    cfg.boundary = Some(s.end());
    let e = run_evaluation(&cfg, &data).unwrap_err();
    assert!(e.to_string().starts_with("split:"), "{e}");
    assert!(matches!(e.root(), Error::TooFewUsers { .. }));

    // CB without feature tables fails while building the scorer
    let bare = Dataset::from_events(data.events().to_vec()).unwrap();
    let cfg = small_cfg(&s);
    let e = run_evaluation(&cfg, &bare).unwrap_err();
    assert!(e.to_string().starts_with("train:forest:"), "{e}");
}

#[test]
fn algorithms_can_be_disabled() {
    let s = small_synth();
    let data = generate_dataset(&s).unwrap();
    let mut cfg = small_cfg(&s);
    cfg.algorithms = vec![Algorithm::MP];
    let r = run_evaluation(&cfg, &data).unwrap();
    assert_eq!(r.algorithms(), vec![Algorithm::MP]);
    assert!(r.cells(RowSegment::Average, Algorithm::CB).is_none());
}

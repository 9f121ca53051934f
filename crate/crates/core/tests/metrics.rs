use std::time::Instant;

use proptest::prelude::*;
use triage_core::metrics::{
    bootstrap_ci, cohens_kappa, mcnemar_test, safety_from_cases, scores_from_cases, BootstrapConfig, Case, McNemarMethod,
    Metric,
};
use triage_core::rng;
use triage_core::TriageLabel::{self, *};

/// Counts and rates computed with plain loops over label pairs.
struct Naive {
    f1: [f64; 4],
    macro_f1: f64,
    accuracy: f64,
    under: f64,
    severe: f64,
    over: f64,
    urgent_recall: Option<f64>,
    emergency_recall: Option<f64>,
}

fn naive(gold: &[usize], pred: &[usize]) -> Naive {
    let n = gold.len();
    let mut f1 = [0.0; 4];
    for (k, f) in f1.iter_mut().enumerate() {
        let mut tp = 0;
        let mut fp = 0;
        let mut fnn = 0;
        for i in 0..n {
            match (gold[i] == k, pred[i] == k) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fnn += 1,
                _ => {}
            }
        }
        let den = 2 * tp + fp + fnn;
        *f = if den == 0 { 0.0 } else { (2 * tp) as f64 / den as f64 };
    }
    let correct = (0..n).filter(|&i| gold[i] == pred[i]).count();
    let under = (0..n).filter(|&i| pred[i] < gold[i]).count();
    let severe = (0..n).filter(|&i| gold[i] >= pred[i] + 2).count();
    let over = (0..n).filter(|&i| pred[i] > gold[i]).count();
    let high: Vec<usize> = (0..n).filter(|&i| gold[i] >= 2).collect();
    let er: Vec<usize> = (0..n).filter(|&i| gold[i] == 3).collect();
    Naive {
        f1,
        macro_f1: (f1[0] + f1[1] + f1[2] + f1[3]) / 4.0,
        accuracy: correct as f64 / n as f64,
        under: under as f64 / n as f64,
        severe: severe as f64 / n as f64,
        over: over as f64 / n as f64,
        urgent_recall: (!high.is_empty())
            .then(|| high.iter().filter(|&&i| pred[i] >= 2).count() as f64 / high.len() as f64),
        emergency_recall: (!er.is_empty()).then(|| er.iter().filter(|&&i| pred[i] == 3).count() as f64 / er.len() as f64),
    }
}

fn to_cases(gold: &[usize], pred: &[usize]) -> Vec<Case> {
    gold.iter()
        .zip(pred)
        .map(|(g, p)| Case {
            gold: TriageLabel::from_index(*g).unwrap(),
            pred: TriageLabel::from_index(*p),
        })
        .collect()
}

#[test]
fn exhaustive_oracle_over_all_four_case_assignments() {
    let start = Instant::now();
    let mut checked = 0;
    for code in 0..4usize.pow(8) {
        let digits: Vec<usize> = (0..8).map(|i| (code >> (2 * i)) & 3).collect();
        let (gold, pred) = digits.split_at(4);
        let cases = to_cases(gold, pred);
        let want = naive(gold, pred);
        let s = scores_from_cases(&cases).unwrap();
        let m = safety_from_cases(&cases).unwrap();
        assert_eq!(s.per_class_f1, want.f1, "{gold:?} {pred:?}");
        assert_eq!(s.macro_f1, want.macro_f1);
        assert_eq!(s.accuracy, want.accuracy);
        assert_eq!(m.under_triage_rate, want.under);
        assert_eq!(m.severe_under_triage_rate, want.severe);
        assert_eq!(m.over_triage_rate, want.over);
        assert_eq!(m.urgent_or_higher_recall, want.urgent_recall);
        assert_eq!(m.emergency_recall, want.emergency_recall);
        checked += 1;
    }
    assert_eq!(checked, 65_536);
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn hand_fixture() {
    let cases = to_cases(&[0, 1, 2, 3], &[0, 1, 1, 3]);
    let s = scores_from_cases(&cases).unwrap();
    assert!((s.per_class_f1[1] - 2.0 / 3.0).abs() < 1e-9);
    assert!((s.macro_f1 - 0.666_666_666_7).abs() < 1e-9);
    assert_eq!(s.accuracy, 0.75);
    let m = safety_from_cases(&cases).unwrap();
    assert_eq!(
        (m.under_triage_rate, m.severe_under_triage_rate, m.over_triage_rate),
        (0.25, 0.0, 0.0)
    );
    assert_eq!(m.urgent_or_higher_recall, Some(0.5));
    assert_eq!(m.emergency_recall, Some(1.0));
}

#[test]
fn parse_failures_are_excluded() {
    let mut cases = to_cases(&[0, 1, 2, 3], &[0, 1, 2, 3]);
    cases[2].pred = None;
    let s = scores_from_cases(&cases).unwrap();
    assert_eq!(s.confusion.valid_n, 3);
    assert_eq!(s.accuracy, 1.0);
}

#[test]
fn kappa_fixtures() {
    assert_eq!(
        cohens_kappa(&[SelfCare, SelfCare, ScheduleVisit, ScheduleVisit], &[SelfCare, ScheduleVisit, SelfCare, ScheduleVisit])
            .unwrap(),
        Some(0.0)
    );
    assert_eq!(cohens_kappa(&[SelfCare; 5], &[SelfCare; 5]).unwrap(), None);
}

#[test]
fn mcnemar_exact_oracle() {
    let mut a = vec![true; 10];
    let mut b = vec![false; 10];
    a.extend([false, false]);
    b.extend([true, true]);
    let r = mcnemar_test(&a, &b).unwrap();
    assert_eq!(r.method, McNemarMethod::ExactBinomial);
    // 2 * P(X <= 2), X ~ Bin(12, 1/2) = 2 * 79 / 4096.
    assert!((r.p_value - 0.038_574_218_75).abs() < 1e-6);
    assert!((r.p_value - 0.0386).abs() < 5e-5);
}

#[test]
fn mcnemar_switches_method_at_threshold() {
    let run = |b: usize, c: usize| {
        let mut x = vec![true; b];
        let mut y = vec![false; b];
        x.extend(vec![false; c]);
        y.extend(vec![true; c]);
        mcnemar_test(&x, &y).unwrap()
    };
    assert_eq!(run(20, 4).method, McNemarMethod::ExactBinomial);
    assert_eq!(run(20, 5).method, McNemarMethod::ContinuityCorrected);
    let r = run(0, 0);
    assert_eq!(r.p_value, 1.0);
}

#[test]
fn safety_identities_fuzzed() {
    let mut g = rng::seeded(2024);
    let mut total = 0usize;
    while total < 100_000 {
        let n = 1 + rng::below(&mut g, 40) as usize;
        let gold: Vec<usize> = (0..n).map(|_| rng::below(&mut g, 4) as usize).collect();
        let pred: Vec<usize> = (0..n).map(|_| rng::below(&mut g, 4) as usize).collect();
        let m = safety_from_cases(&to_cases(&gold, &pred)).unwrap();
        assert!((m.under_triage_rate + m.over_triage_rate + m.exact_rate - 1.0).abs() < 1e-12);
        assert!(m.severe_under_triage_rate <= m.under_triage_rate);

        let always_er = vec![3; n];
        let e = safety_from_cases(&to_cases(&gold, &always_er)).unwrap();
        assert_eq!(e.under_triage_rate, 0.0);
        assert!(e.emergency_recall.is_none_or(|r| r == 1.0));
        total += n;
    }
}

fn label() -> impl Strategy<Value = TriageLabel> {
    (0usize..4).prop_map(|i| TriageLabel::from_index(i).unwrap())
}

fn paired(max: usize) -> impl Strategy<Value = (Vec<TriageLabel>, Vec<TriageLabel>)> {
    (1..max).prop_flat_map(|n| (prop::collection::vec(label(), n), prop::collection::vec(label(), n)))
}

proptest! {
    #[test]
    fn kappa_is_symmetric((a, b) in paired(30)) {
        let ab = cohens_kappa(&a, &b).unwrap();
        let ba = cohens_kappa(&b, &a).unwrap();
        match (ab, ba) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn kappa_invariant_under_relabeling((a, b) in paired(30), perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
        let map = |v: &[TriageLabel]| -> Vec<TriageLabel> {
            v.iter().map(|l| TriageLabel::from_index(perm[l.index()]).unwrap()).collect()
        };
        let before = cohens_kappa(&a, &b).unwrap();
        let after = cohens_kappa(&map(&a), &map(&b)).unwrap();
        match (before, after) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn macro_f1_invariant_under_relabeling((a, b) in paired(30), perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
        let cases = |g: &[TriageLabel], p: &[TriageLabel], f: &dyn Fn(TriageLabel) -> TriageLabel| -> Vec<Case> {
            g.iter().zip(p).map(|(g, p)| Case { gold: f(*g), pred: Some(f(*p)) }).collect()
        };
        let id = |l: TriageLabel| l;
        let relabel = |l: TriageLabel| TriageLabel::from_index(perm[l.index()]).unwrap();
        let x = scores_from_cases(&cases(&a, &b, &id)).unwrap();
        let y = scores_from_cases(&cases(&a, &b, &relabel)).unwrap();
        prop_assert!((x.macro_f1 - y.macro_f1).abs() < 1e-12);
        prop_assert_eq!(x.accuracy, y.accuracy);
    }

    #[test]
    fn bootstrap_bounds((a, b) in paired(40), seed in 0u64..1000) {
        prop_assume!(a.len() >= 2);
        let cases: Vec<Case> = a.iter().zip(&b).map(|(g, p)| Case { gold: *g, pred: Some(*p) }).collect();
        let cfg = BootstrapConfig { replicates: 200, seed };
        for metric in [Metric::MacroF1, Metric::Accuracy, Metric::UnderTriage, Metric::OverTriage] {
            let ci = bootstrap_ci(&cases, metric, cfg).unwrap();
            prop_assert!(ci.lo <= ci.hi);
            prop_assert!((0.0..=1.0).contains(&ci.lo) && (0.0..=1.0).contains(&ci.hi));
            prop_assert_eq!(ci, bootstrap_ci(&cases, metric, cfg).unwrap());
        }
    }
}

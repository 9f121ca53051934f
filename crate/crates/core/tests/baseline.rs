use proptest::prelude::*;
use triage_core::baseline::{
    cv_select, fit_baseline, loss, loss_and_gradient, param_len, select_and_fit, stratified_folds, train_logreg,
    BaselineConfig, BaselineError, LogRegConfig, SparseVec, SplitRole, TfidfModel, TrainingExample, TrainingSubset,
};
use triage_core::rng;
use triage_core::TriageLabel::{self, *};

#[test]
fn tfidf_hand_example() {
    let m = TfidfModel::fit(&["chest pain", "mild cold", "chest tight"], 5000).unwrap();
    let idf = |t: &str| m.idf[m.column(t).unwrap()];
    assert!((idf("chest") - 1.2877).abs() < 1e-3);
    assert!((idf("pain") - 1.6931).abs() < 1e-3);
    let v = m.vectorize("chest pain");
    let nonzero: Vec<&str> = v.iter().map(|(j, _)| m.terms[j].as_str()).collect();
    assert_eq!(nonzero, ["chest", "chest pain", "pain"]);
    assert!((v.get(m.column("chest").unwrap()) - 0.4736).abs() < 1e-3);
    assert!((v.norm() - 1.0).abs() < 1e-9);
    assert_eq!(m.vectorize("nothing shared here").nnz(), 0);
}

#[test]
fn vocabulary_cap_is_exact() {
    // 6000 distinct unigrams, one per document, plus no shared bigrams.
    let docs: Vec<String> = (0..6000).map(|i| format!("term{i:05}")).collect();
    let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
    let m = TfidfModel::fit(&refs, 5000).unwrap();
    assert_eq!(m.len(), 5000);
    let again = TfidfModel::fit(&refs, 5000).unwrap();
    assert_eq!(m.terms, again.terms);
    assert_eq!(m.idf, again.idf);
    // Equal document frequency everywhere: the lexicographically first 5000 survive.
    assert_eq!(m.terms.last().unwrap(), "term04999");
}

fn random_problem(seed: u64, n: usize, d: usize) -> (Vec<SparseVec>, Vec<TriageLabel>, Vec<f64>) {
    let mut g = rng::seeded(seed);
    let mut unit = || rng::below(&mut g, 1 << 20) as f64 / (1 << 20) as f64;
    let texts: Vec<String> = (0..n)
        .map(|_| (0..6).map(|_| format!("w{}", (unit() * d as f64) as usize)).collect::<Vec<_>>().join(" "))
        .collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let m = TfidfModel::fit(&refs, 5000).unwrap();
    let x: Vec<SparseVec> = refs.iter().map(|t| m.vectorize(t)).collect();
    let y: Vec<TriageLabel> = (0..n).map(|i| TriageLabel::ALL[i % 4]).collect();
    let params: Vec<f64> = (0..param_len(m.len())).map(|_| unit() - 0.5).collect();
    (x, y, params)
}

#[test]
fn gradient_matches_central_differences() {
    for seed in 0..5 {
        let (x, y, params) = random_problem(seed, 24, 15);
        let d = (params.len() - 4) / 4;
        let l2 = 0.7;
        let (_, grad) = loss_and_gradient(&params, d, &x, &y, l2);
        let h = 1e-5;
        for j in 0..params.len() {
            let mut p = params.clone();
            p[j] += h;
            let up = loss(&p, d, &x, &y, l2);
            p[j] -= 2.0 * h;
            let down = loss(&p, d, &x, &y, l2);
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - grad[j]).abs() / fd.abs().max(grad[j].abs()).max(1e-8);
            assert!(rel <= 1e-4 || (fd - grad[j]).abs() < 1e-9, "seed {seed} param {j}: fd {fd} vs {}", grad[j]);
        }
    }
}

#[test]
fn separable_two_class_fixture() {
    let texts: Vec<String> = (0..20)
        .map(|i| if i % 2 == 0 { format!("sneeze sniffle note{i}") } else { format!("crushing pressure note{i}") })
        .collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let y: Vec<TriageLabel> = (0..20).map(|i| if i % 2 == 0 { SelfCare } else { EmergencyReferral }).collect();
    let m = TfidfModel::fit(&refs, 5000).unwrap();
    let x: Vec<SparseVec> = refs.iter().map(|t| m.vectorize(t)).collect();
    let model = train_logreg(&x, &y, m.len(), &LogRegConfig::default()).unwrap();
    let correct = x.iter().zip(&y).filter(|(xi, yi)| model.predict(xi) == **yi).count();
    assert_eq!(correct, 20);
    assert!(model.meta.loss_trace.windows(2).all(|w| w[1] <= w[0]));
}

fn examples(n_per_class: usize) -> Vec<TrainingExample> {
    let words = ["cold vitamin", "follow up medication", "swollen infected", "crushing chest"];
    let mut out = Vec::new();
    for (k, label) in TriageLabel::ALL.iter().enumerate() {
        for i in 0..n_per_class {
            out.push(TrainingExample {
                id: (k * 100 + i) as u64,
                text: format!("{} case{i}", words[k]),
                label: *label,
            });
        }
    }
    out
}

#[test]
fn fitting_on_gold_or_fewshot_is_refused() {
    for role in [SplitRole::Gold, SplitRole::Fewshot] {
        let subset = TrainingSubset::new(role, examples(3));
        assert_eq!(fit_baseline(&subset, &BaselineConfig::default()).unwrap_err(), BaselineError::Leakage(role));
        assert!(matches!(cv_select(&[BaselineConfig::default()], &subset, 2), Err(BaselineError::Leakage(_))));
    }
}

#[test]
fn cv_tie_goes_to_first_grid_entry() {
    let subset = TrainingSubset::new(SplitRole::Silver, examples(6));
    let cfg = BaselineConfig::default();
    let grid = [cfg, cfg, cfg];
    let (sel, model) = select_and_fit(&grid, &subset, 3).unwrap();
    assert_eq!(sel.mean_scores[0], sel.mean_scores[1]);
    assert_eq!(sel.winner, 0);
    assert_eq!(model.config, cfg);
}

#[test]
fn balanced_downsample_equalizes_classes() {
    let mut ex = examples(5);
    ex.retain(|e| !(e.label == ScheduleVisit && e.id % 100 >= 2));
    let b = TrainingSubset::new(SplitRole::Silver, ex).balanced().unwrap();
    for l in TriageLabel::ALL {
        assert_eq!(b.examples().iter().filter(|e| e.label == l).count(), 2);
    }
}

proptest! {
    #[test]
    fn folds_are_stratified(counts in prop::array::uniform4(3usize..12), folds in 2usize..4) {
        let mut ex = Vec::new();
        for (k, n) in counts.iter().enumerate() {
            for i in 0..*n {
                ex.push(TrainingExample { id: (k * 100 + i) as u64, text: String::new(), label: TriageLabel::ALL[k] });
            }
        }
        let assign = stratified_folds(&ex, folds).unwrap();
        for (k, n) in counts.iter().enumerate() {
            for f in 0..folds {
                let c = ex.iter().zip(&assign).filter(|(e, a)| e.label == TriageLabel::ALL[k] && **a == f).count();
                prop_assert!(c == n / folds || c == n / folds + 1);
            }
        }
    }

    #[test]
    fn nonzero_tfidf_vectors_have_unit_norm(doc in "[a-z ]{0,60}") {
        let m = TfidfModel::fit(&["alpha beta", "beta gamma delta", "the quick fox"], 5000).unwrap();
        let v = m.vectorize(&doc);
        if v.nnz() > 0 {
            prop_assert!((v.norm() - 1.0).abs() < 1e-9);
        }
    }
}

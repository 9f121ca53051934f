use std::collections::BTreeMap;

use proptest::prelude::*;
use triage_core::prompt::{render_prompt, select_demonstrations, DemoPlacement, LabeledExample, PromptTemplate};
use triage_core::{PromptSetting, TriageLabel};

fn pool_from(ids: &[(u64, usize)]) -> Vec<LabeledExample> {
    ids.iter()
        .map(|(id, k)| LabeledExample {
            id: *id,
            text: format!("example {id}"),
            label: TriageLabel::ALL[*k],
        })
        .collect()
}

fn pool_strategy() -> impl Strategy<Value = Vec<LabeledExample>> {
    prop::collection::btree_map(0u64..500, 0usize..4, 12..60).prop_filter_map("three per class", |m| {
        let ids: Vec<(u64, usize)> = m.into_iter().collect();
        (0..4)
            .all(|k| ids.iter().filter(|(_, c)| *c == k).count() >= 3)
            .then(|| pool_from(&ids))
    })
}

proptest! {
    #[test]
    fn four_shot_is_prefix_of_twelve_shot(pool in pool_strategy()) {
        let none = BTreeMap::new();
        let four = select_demonstrations(&pool, 1, &none).unwrap();
        let twelve = select_demonstrations(&pool, 3, &none).unwrap();
        prop_assert_eq!(&twelve[..4], &four[..]);
        let labels: Vec<TriageLabel> = four.iter().map(|d| d.label).collect();
        prop_assert_eq!(labels, TriageLabel::ALL.to_vec());
        for l in TriageLabel::ALL {
            prop_assert_eq!(twelve.iter().filter(|d| d.label == l).count(), 3);
        }
    }

    #[test]
    fn rendering_is_deterministic_and_hash_sensitive(pool in pool_strategy(), msg in "[a-z ]{1,80}") {
        let t = PromptTemplate::default();
        let demos = select_demonstrations(&pool, 1, &BTreeMap::new()).unwrap();
        for placement in [DemoPlacement::User, DemoPlacement::System] {
            let a = render_prompt(&t, PromptSetting::FourShot, &demos, &msg, placement).unwrap();
            let b = render_prompt(&t, PromptSetting::FourShot, &demos, &msg, placement).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.query(), msg.as_str());
            let zero = render_prompt(&t, PromptSetting::ZeroShot, &[], &msg, placement).unwrap();
            prop_assert_ne!(a.content_hash, zero.content_hash);
        }
    }
}

#[test]
fn wrong_demo_count_is_rejected() {
    let t = PromptTemplate::default();
    let pool = pool_from(&[(1, 0), (2, 1), (3, 2), (4, 3)]);
    let demos = select_demonstrations(&pool, 1, &BTreeMap::new()).unwrap();
    assert!(render_prompt(&t, PromptSetting::TwelveShot, &demos, "x", DemoPlacement::User).is_err());
    assert!(render_prompt(&t, PromptSetting::External, &[], "x", DemoPlacement::User).is_err());
}

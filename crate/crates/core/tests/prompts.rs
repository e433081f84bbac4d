use std::path::Path;

use chainboost::llm::{build_prompt, extract_input, parse_label, PromptTemplate, Shot};
use chainboost::{ChainContext, ClassLabelMap};
use proptest::prelude::*;

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn sentiment() -> ClassLabelMap {
    ClassLabelMap::new(["Positive", "Negative"]).unwrap()
}

fn template(shots: Vec<Shot>) -> PromptTemplate {
    let map = sentiment();
    PromptTemplate::new(
        PromptTemplate::classification_instruction("SENTIMENT", &map),
        &map,
        shots,
    )
    .unwrap()
}

fn one_chain() -> ChainContext {
    let mut chain = ChainContext::new();
    chain.push(0, 0.12);
    chain
}

fn dull_shot() -> Vec<Shot> {
    vec![Shot {
        text: "a dull plot".into(),
        label: 1,
    }]
}

#[test]
fn zero_shot_matches_golden() {
    assert_eq!(
        build_prompt(&template(vec![]), "fine film", None),
        golden("zero_shot.txt")
    );
}

#[test]
fn chain_block_matches_golden() {
    let prompt = build_prompt(&template(vec![]), "fine film", Some(&one_chain()));
    assert_eq!(prompt, golden("zero_shot_chain.txt"));
}

#[test]
fn one_shot_matches_golden() {
    let t = template(dull_shot());
    assert_eq!(build_prompt(&t, "fine film", None), golden("one_shot.txt"));
    assert_eq!(
        build_prompt(&t, "fine film", Some(&one_chain())),
        golden("one_shot_chain.txt")
    );
}

#[test]
fn empty_chain_adds_nothing() {
    let t = template(vec![]);
    assert_eq!(
        build_prompt(&t, "fine film", Some(&ChainContext::new())),
        build_prompt(&t, "fine film", None)
    );
}

#[test]
fn shots_insert_only_the_demonstration_block() {
    let zero = build_prompt(&template(vec![]), "fine film", None);
    let one = build_prompt(&template(dull_shot()), "fine film", None);
    let block = "\nEXAMPLE INPUT: a dull plot\nEXAMPLE LABEL: Negative\n";
    let (head, tail) = zero.split_once('\n').unwrap();
    assert_eq!(one, format!("{head}\n{block}{tail}"));
}

#[test]
fn parse_label_examples() {
    let map = sentiment();
    assert_eq!(parse_label("Positive", &map).unwrap(), 0);
    assert_eq!(parse_label("The label is Negative.", &map).unwrap(), 1);
    assert!(parse_label("Positive or Negative", &map).is_err());
    assert!(parse_label("no idea", &map).is_err());
}

fn chain_strategy() -> impl Strategy<Value = Vec<(usize, f64)>> {
    prop::collection::vec((0usize..2, 0.0f64..1.0), 0..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn prompts_are_injective(
        a in "[a-z \\\\\n]{0,12}",
        b in "[a-z \\\\\n]{0,12}",
        ca in chain_strategy(),
        cb in chain_strategy(),
    ) {
        let t = template(vec![]);
        let round = |c: &[(usize, f64)]| -> Vec<(usize, String)> {
            c.iter().map(|&(l, e)| (l, format!("{e:.4}"))).collect()
        };
        let chain = |c: &[(usize, f64)]| {
            let mut ctx = ChainContext::new();
            for &(l, e) in c { ctx.push(l, e); }
            ctx
        };
        let pa = build_prompt(&t, &a, Some(&chain(&ca)));
        let pb = build_prompt(&t, &b, Some(&chain(&cb)));
        // Error rates are printed to four decimals, so compare at that precision.
        let same_input = a == b && round(&ca) == round(&cb);
        prop_assert_eq!(pa == pb, same_input);
        prop_assert_eq!(extract_input(&pa), Some(a));
    }

    #[test]
    fn exact_label_name_parses_to_itself(names in prop::collection::btree_set("[A-Za-z]{3,8}", 2..6), pick in 0usize..6) {
        let names: Vec<String> = names.into_iter().collect();
        // Case-insensitive duplicates would make the map ambiguous.
        let lower: std::collections::BTreeSet<String> = names.iter().map(|n| n.to_lowercase()).collect();
        prop_assume!(lower.len() == names.len());
        let map = ClassLabelMap::new(names.clone()).unwrap();
        let i = pick % names.len();
        prop_assert_eq!(parse_label(&names[i], &map).unwrap(), i);
    }
}

use std::collections::BTreeMap;

use fairlens_core::canonical::{to_canonical_bytes, value_to_canonical_bytes, CanonicalError};
use fairlens_core::ExtendedReal;
use proptest::prelude::*;
use serde_json::{json, Value};

fn json_value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        any::<i64>().prop_map(|n| json!(n)),
        any::<f64>().prop_filter("finite", |f| f.is_finite()).prop_map(|f| json!(f)),
        "[a-zA-Z0-9 _\\-é\"\\\\\n]{0,8}".prop_map(Value::String),
    ];
    leaf.prop_recursive(3, 32, 6, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..6).prop_map(Value::Array),
            prop::collection::btree_map("[a-zA-Z_é]{0,6}", inner, 0..6)
                .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

proptest! {
    #[test]
    fn canonical_bytes_parse_back_to_the_same_value(v in json_value()) {
        let bytes = value_to_canonical_bytes(&v);
        let parsed: Value = serde_json::from_slice(&bytes).unwrap();
        prop_assert_eq!(value_to_canonical_bytes(&parsed), bytes.clone());
        let text = std::str::from_utf8(&bytes).unwrap();
        prop_assert!(!text.contains(": ") && !text.contains(", "));
    }

    #[test]
    fn key_insertion_order_is_irrelevant(pairs in prop::collection::vec(("[a-z]{1,5}", any::<i32>()), 0..10)) {
        let forward: serde_json::Map<String, Value> = pairs.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let backward: serde_json::Map<String, Value> = pairs.iter().rev().map(|(k, v)| (k.clone(), json!(v))).collect();
        // Later duplicates win in each map, so compare only on distinct keys.
        let distinct: BTreeMap<_, _> = pairs.iter().cloned().collect();
        prop_assume!(distinct.len() == pairs.len());
        prop_assert_eq!(
            value_to_canonical_bytes(&Value::Object(forward)),
            value_to_canonical_bytes(&Value::Object(backward))
        );
    }
}

#[test]
fn non_finite_values_are_rejected_except_the_infinity_marker() {
    assert!(matches!(to_canonical_bytes(&vec![1.0, f64::NAN]), Err(CanonicalError::NonFinite)));
    assert!(matches!(to_canonical_bytes(&Some(f64::NEG_INFINITY)), Err(CanonicalError::NonFinite)));
    assert_eq!(to_canonical_bytes(&[ExtendedReal::Infinite, ExtendedReal::Finite(0.5)]).unwrap(), br#"["inf",0.5]"#);
}

#[test]
fn layout_rules() {
    let v = json!({"b": [1, 2.5, null], "a": {"z": "\u{e9}", "y": -0.0}, "A": true});
    assert_eq!(value_to_canonical_bytes(&v), r#"{"A":true,"a":{"y":0.0,"z":"é"},"b":[1,2.5,null]}"#.as_bytes());
}

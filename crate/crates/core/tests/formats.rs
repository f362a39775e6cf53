// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::Path;

use culture_neurons::actlog::{LayerActivity, NeuronActivity};
use culture_neurons::mask::{build_keep_mask, MaskMeta, RunManifest, RunTarget};
use culture_neurons::{
    parse_activation_log, parse_prediction_log, write_activation_log, CultureStats, Error, ErrorPolicy, Layout, LogHeader,
    Method, NeuronId, NeuronMask, SampleRecord,
};

const HEADER: &str =
    r#"{"model_name":"toy","num_layers":2,"neurons_per_layer":[4,4],"cultures":["A","B"],"format_version":1}"#;

fn header() -> LogHeader {
    LogHeader::new("toy", vec![4, 4], vec!["A".into(), "B".into()])
}

#[test]
fn header_only_log_is_empty() {
    let text = format!("{HEADER}\n");
    let reader = parse_activation_log(text.as_bytes(), ErrorPolicy::FailFast).unwrap();
    assert_eq!(reader.header(), &header());
    assert_eq!(reader.count(), 0);

    let mut buf = Vec::new();
    write_activation_log(&header(), [], &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), format!("{HEADER}\n"));
}

#[test]
fn single_entry_roundtrip() {
    let rec = SampleRecord {
        sample_id: "x".into(),
        culture: "A".into(),
        answered_correctly: true,
        valid_tokens: 4,
        layers: vec![LayerActivity {
            layer: 0,
            entries: vec![NeuronActivity {
                neuron: 2,
                fire_count: 3,
                pos_sum: 1.5,
            }],
        }],
    };
    let mut buf = Vec::new();
    write_activation_log(&header(), [&rec], &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.ends_with("{\"id\":\"x\",\"culture\":\"A\",\"correct\":true,\"T\":4,\"layers\":[[0,[[2,3,1.5]]]]}\n"));
    let back: Vec<_> = parse_activation_log(&buf[..], ErrorPolicy::FailFast).unwrap().collect();
    assert_eq!(back.len(), 1);
    assert_eq!(back[0].as_ref().unwrap(), &rec);
}

#[test]
fn malformed_header_is_fatal() {
    for bad in [
        "",
        "not json\n",
        r#"{"model_name":"m","num_layers":0,"neurons_per_layer":[],"cultures":["A"],"format_version":1}"#,
        r#"{"model_name":"m","num_layers":2,"neurons_per_layer":[4],"cultures":["A"],"format_version":1}"#,
        r#"{"model_name":"m","num_layers":1,"neurons_per_layer":[4],"cultures":["A","A"],"format_version":1}"#,
        r#"{"model_name":"m","num_layers":1,"neurons_per_layer":[0],"cultures":["A"],"format_version":1}"#,
    ] {
        assert!(
            matches!(parse_activation_log(bad.as_bytes(), ErrorPolicy::Skip), Err(Error::Header(_))),
            "{bad}"
        );
    }
}

#[test]
fn record_errors_name_the_sample() {
    let lines = [
        r#"{"id":"ok","culture":"A","correct":true,"T":3,"layers":[[0,[[1,2,0.5]]]]}"#,
        r#"{"id":"too-many","culture":"A","correct":true,"T":3,"layers":[[0,[[1,5,0.5]]]]}"#,
        r#"{"id":"who","culture":"Z","correct":true,"T":3,"layers":[]}"#,
        r#"{"id":"wide","culture":"B","correct":true,"T":3,"layers":[[1,[[4,1,0.5]]]]}"#,
        r#"{"id":"order","culture":"B","correct":true,"T":3,"layers":[[0,[[2,1,0.5],[1,1,0.5]]]]}"#,
        r#"{"id":"neg","culture":"B","correct":true,"T":3,"layers":[[0,[[2,1,-0.5]]]]}"#,
        r#"{"id":"last","culture":"B","correct":false,"T":3,"layers":[]}"#,
    ];
    let text = format!("{HEADER}\n{}\n", lines.join("\n"));

    let mut fail_fast = parse_activation_log(text.as_bytes(), ErrorPolicy::FailFast).unwrap();
    assert_eq!(fail_fast.next().unwrap().unwrap().sample_id, "ok");
    match fail_fast.next().unwrap() {
        Err(Error::Record { line, sample_id, .. }) => {
            assert_eq!(line, 3);
            assert_eq!(sample_id, "too-many");
        }
        other => panic!("{other:?}"),
    }
    assert!(fail_fast.next().is_none());

    let mut skip = parse_activation_log(text.as_bytes(), ErrorPolicy::Skip).unwrap();
    let ids: Vec<String> = skip.by_ref().map(|r| r.unwrap().sample_id).collect();
    assert_eq!(ids, ["ok", "last"]);
    let skipped: Vec<String> = skip
        .skipped()
        .iter()
        .map(|e| match e {
            Error::Record { sample_id, .. } => sample_id.clone(),
            other => panic!("{other:?}"),
        })
        .collect();
    assert_eq!(skipped, ["too-many", "who", "wide", "order", "neg"]);
}

#[test]
fn writer_rejects_undeclared_references() {
    let rec = SampleRecord {
        sample_id: "bad".into(),
        culture: "A".into(),
        answered_correctly: true,
        valid_tokens: 1,
        layers: vec![LayerActivity {
            layer: 2,
            entries: vec![NeuronActivity {
                neuron: 0,
                fire_count: 1,
                pos_sum: 1.0,
            }],
        }],
    };
    let err = write_activation_log(&header(), [&rec], Vec::new()).unwrap_err();
    assert!(err.to_string().contains("bad"), "{err}");
}

fn pred_line(id: &str, truth: &str, options: &str) -> String {
    format!(
        r#"{{"id":"{id}","culture":"A","question":"q","options":{options},"truth":"{truth}","prediction":"tea","run":"full"}}"#
    )
}

#[test]
fn prediction_log_validation() {
    let text = [
        pred_line("ok", "tea", r#"["tea","rice","bread","soup"]"#),
        pred_line("missing-truth", "milk", r#"["tea","rice","bread","soup"]"#),
        pred_line("duplicate", "tea", r#"["tea","Tea ","bread","soup"]"#),
        pred_line("three", "tea", r#"["tea","rice","bread"]"#),
        pred_line("ok2", "soup", r#"["tea","rice","bread","soup"]"#),
    ]
    .join("\n");
    let mut reader = parse_prediction_log(text.as_bytes(), ErrorPolicy::Skip);
    let ok: Vec<String> = reader.by_ref().map(|r| r.unwrap().sample_id).collect();
    assert_eq!(ok, ["ok", "ok2"]);
    assert_eq!(reader.skipped().len(), 3);

    let mut strict = parse_prediction_log(text.as_bytes(), ErrorPolicy::FailFast);
    assert_eq!(strict.next().unwrap().unwrap().run_id, "full");
    assert!(strict.next().unwrap().is_err());
}

#[test]
fn mask_file_layout() {
    let layout = Layout::new(vec![4, 4]).unwrap();
    let meta = MaskMeta {
        method: Method::Cas,
        culture: "IND".into(),
        r_percent: 1.0,
        seed: None,
    };
    let mask = build_keep_mask(meta, [NeuronId::new(1, 3), NeuronId::new(0, 2)], &layout).unwrap();
    assert_eq!(mask.file_name(), "CAS_IND.mask");
    assert_eq!(mask.keep_vector(0), [1, 1, 0, 1]);
    assert_eq!(mask.keep_vector(1), [1, 1, 1, 0]);
    let mut buf = Vec::new();
    mask.write(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1..], ["[0,2]", "[1,3]"]);
    assert_eq!(NeuronMask::read(&buf[..]).unwrap(), mask);

    let err = build_keep_mask(mask.meta().clone(), [NeuronId::new(2, 0)], &layout).unwrap_err();
    assert!(matches!(err, Error::Dimension(_)));
    assert!(matches!(mask.apply(&[0.0; 5], 0), Err(Error::Dimension(_))));
}

#[test]
fn manifest_roundtrip_and_resolution() {
    let mut m = RunManifest::default();
    m.push("full", RunTarget::Full).unwrap();
    m.push("CAS_A", RunTarget::Mask("masks/CAS_A.mask".into())).unwrap();
    assert!(m.push("full", RunTarget::Full).is_err());
    let mut buf = Vec::new();
    m.write(&mut buf).unwrap();
    let back = RunManifest::read(&buf[..]).unwrap();
    assert_eq!(back, m);
    let resolved = back.resolve(Path::new("/data"));
    assert_eq!(resolved.get("CAS_A"), Some(&RunTarget::Mask("/data/masks/CAS_A.mask".into())));
    assert_eq!(resolved.get("full"), Some(&RunTarget::Full));
}

#[test]
fn stats_snapshot_roundtrip() {
    let records = [
        SampleRecord {
            sample_id: "a".into(),
            culture: "A".into(),
            answered_correctly: true,
            valid_tokens: 4,
            layers: vec![LayerActivity {
                layer: 1,
                entries: vec![NeuronActivity {
                    neuron: 3,
                    fire_count: 2,
                    pos_sum: 0.1 + 0.2,
                }],
            }],
        },
        SampleRecord {
            sample_id: "b".into(),
            culture: "B".into(),
            answered_correctly: false,
            valid_tokens: 2,
            layers: vec![],
        },
    ];
    let stats = CultureStats::from_records(&header(), records.iter().cloned().map(Ok), false).unwrap();
    let mut buf = Vec::new();
    stats.write_snapshot(false, &mut buf).unwrap();
    let (back, correct_only) = CultureStats::read_snapshot(&buf[..]).unwrap();
    assert!(!correct_only);
    assert_eq!(back.pos_sums(0), stats.pos_sums(0));
    assert_eq!(back.fire_counts(0), stats.fire_counts(0));
    assert_eq!(back.tokens(1), 2);
    assert_eq!(back.samples_used(1), 1);
}

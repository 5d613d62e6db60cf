//! Every JSON shape the bindings exchange survives a serde round trip, and
//! the documented field names are the ones on the wire.

use datashifts::bound::{BoundReport, DataShiftsReport};
use datashifts::lipschitz::{LipschitzSpec, LossSpec};
use datashifts::ot::SolverConfig;
use datashifts::shift::oracle::{ConditionalLaw, LabelFunction, Noise};
use datashifts::shift::{EstimatorKind, ShiftEstimates, ShiftOptions};
use datashifts::synth::{random_task, CptTaskSpec, GaussianShiftSpec, ValidationSummary};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

fn round_trip<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(value: &T) -> Value {
    let text = serde_json::to_string(value).unwrap();
    let back: T = serde_json::from_str(&text).unwrap();
    assert_eq!(&back, value);
    serde_json::from_str(&text).unwrap()
}

fn shifts() -> ShiftEstimates {
    ShiftEstimates {
        s_cov: 0.7,
        s_cpt: Some(0.2),
        beta: 1e-3,
        n_source: 10,
        n_target: 12,
        estimator_kind: EstimatorKind::Debiased,
        num_splits: 3,
        seed: 9,
    }
}

#[test]
fn options_and_estimates() {
    let options = ShiftOptions {
        num_splits: 4,
        ..Default::default()
    };
    let v = round_trip(&options);
    assert_eq!(v["estimator"], "debiased");
    assert_eq!(v["solver"]["beta"], 1e-3);
    round_trip(&SolverConfig::with_beta(0.0));

    let v = round_trip(&shifts());
    assert_eq!(v["estimator_kind"], "debiased");
    let unlabelled = ShiftEstimates {
        s_cpt: None,
        ..shifts()
    };
    assert!(round_trip(&unlabelled).get("s_cpt").is_none());
}

#[test]
fn bound_report() {
    let lipschitz = LipschitzSpec::for_loss(&LossSpec::AbsoluteError, 2.0).unwrap();
    let report = DataShiftsReport {
        shifts: shifts(),
        bound: Some(BoundReport {
            source_error: 0.1,
            x_term: 1.4,
            y_term: 0.2,
            bound: 1.7,
            lipschitz,
            target_error: None,
        }),
    };
    let v = round_trip(&report);
    assert_eq!(
        v["bound"]["lipschitz"],
        json!({"l_h": 2.0, "l_loss_label": 1.0, "l_loss_output": 1.0})
    );
    assert!(v["bound"].get("target_error").is_none());
}

#[test]
fn task_specs() {
    let v = round_trip(&random_task(4, 100));
    assert_eq!(v["loss"]["kind"], "absolute_error");
    assert_eq!(v["covariates"]["sample_size"], 100);

    let task = CptTaskSpec {
        dimension: 2,
        mean_offset_norm: 1.0,
        source_law: ConditionalLaw {
            function: LabelFunction::Linear {
                weights: vec![1.0, 0.5],
                bias: 0.0,
            },
            noise: Noise::Gaussian { sigma: 0.2 },
        },
        target_law: ConditionalLaw::deterministic(LabelFunction::Sine {
            weights: vec![1.0, 0.0],
            amplitude: 2.0,
            bias: 0.1,
        }),
    };
    let v = round_trip(&task);
    assert_eq!(v["source_law"]["noise"], json!({"kind": "gaussian", "sigma": 0.2}));

    // noise may be omitted for deterministic labels
    let law: ConditionalLaw =
        serde_json::from_value(json!({"function": {"kind": "linear", "weights": [1.0], "bias": 0.0}})).unwrap();
    assert_eq!(law.noise, Noise::None);

    let fixture =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/cpt_task.json")).unwrap();
    let parsed: CptTaskSpec = serde_json::from_str(&fixture).unwrap();
    assert_eq!(parsed.dimension, 2);

    round_trip(&GaussianShiftSpec {
        dimension: 3,
        mean_offset_norm: 0.5,
        sample_size: 20,
        seed: 1,
    });
    round_trip(&ValidationSummary {
        trials: 4,
        holds: 4,
        holds_rate: 1.0,
        worst_relative_gap: 0.3,
    });
}

#[test]
fn unknown_loss_is_rejected() {
    assert!(serde_json::from_value::<LossSpec>(json!({"kind": "hinge"})).is_err());
    let clamped: LossSpec = serde_json::from_value(json!({"kind": "cross_entropy_clamped", "a": 0.1})).unwrap();
    assert_eq!(clamped, LossSpec::CrossEntropyClamped { a: 0.1 });
}

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twist_retarget::hand_model::{default_model, Finger, HandModel, JointVector, NUM_JOINTS};
use twist_retarget::harness::{default_suite, generate_scenario, Pipeline, RunConfig};
use twist_retarget::retarget::{central_gradient, objective, refine, Method, RefineConfig};
use twist_retarget::robot_tripod::{compute_tripod_state, latch_reference, robot_turn_angle, TripodReference};

fn random_in_limits(model: &HandModel, rng: &mut ChaCha8Rng) -> JointVector {
    let mut q = JointVector::zeros();
    for i in 0..NUM_JOINTS {
        let (lo, hi) = model.limits(i);
        q[i] = rng.random_range(lo..hi);
    }
    q
}

fn rest_reference(model: &HandModel) -> TripodReference {
    latch_reference(&compute_tripod_state(model, &JointVector::zeros(), None).unwrap())
}

#[test]
fn gradient_agrees_with_richardson_reference() {
    let model = default_model();
    let cfg = RefineConfig::default();
    let reference = rest_reference(&model);
    let free = HandModel::tripod_joints();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = cfg.fd_step;
    let mut worst = Vec::new();
    let mut checked = 0;
    while checked < 100 {
        let q = random_in_limits(&model, &mut rng);
        let f = |q: &JointVector| objective(&model, q, &reference, 0.3, &cfg).map_or(f64::NAN, |b| b.total);
        if !f(&q).is_finite() {
            continue;
        }
        let g = central_gradient(&f, &q, &free, h);
        let g_half = central_gradient(&f, &q, &free, h / 2.0);
        let richardson: Vec<f64> = (0..NUM_JOINTS).map(|i| (4.0 * g_half[i] - g[i]) / 3.0).collect();
        let diff: f64 = (0..NUM_JOINTS).map(|i| (g[i] - richardson[i]).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = richardson.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(g[12..].iter().all(|&v| v == 0.0));
        if diff > 1e-4 * norm {
            let closure = compute_tripod_state(&model, &q, Some(&reference.a_ref)).unwrap().closure;
            worst.push(format!("relative error {:.2e}, tip distances {closure:.4?}", diff / norm));
        }
        checked += 1;
    }
    assert!(worst.is_empty(), "{} of 100 configurations exceed 1e-4: {worst:?}", worst.len());
}

#[test]
fn steady_turn_refinement_moves_toward_task_angle() {
    let cfg = RunConfig::default();
    let scenario = default_suite().into_iter().find(|s| s.name == "single_turn_120").unwrap();
    let (frames, gt) = generate_scenario(&scenario).unwrap();
    let mut pipeline = Pipeline::new(default_model(), Method::DexTwist, &cfg).unwrap();
    let (mut closer, mut refined) = (0usize, 0usize);
    for (k, frame) in frames.iter().enumerate() {
        let (record, trace) = pipeline.step(frame, Some(gt.value[k]));
        if !trace.refined {
            continue;
        }
        let session = pipeline.session();
        let reference = session.reference().unwrap();
        let target = pipeline.intent().theta_task - session.theta_at_latch();
        let angle = |q: &JointVector| {
            robot_turn_angle(&compute_tripod_state(session.model(), q, Some(&reference.a_ref)).unwrap(), reference).unwrap()
        };
        let before = (angle(&trace.q_init) - target).abs();
        let after = (angle(&JointVector(record.q_cmd)) - target).abs();
        refined += 1;
        if after <= before {
            closer += 1;
        }
    }
    assert!(refined > 50);
    let share = closer as f64 / refined as f64;
    assert!(share >= 0.9, "{closer}/{refined}");
}

fn joint_vector() -> impl Strategy<Value = JointVector> {
    let model = default_model();
    let ranges: Vec<_> = (0..NUM_JOINTS).map(|i| model.limits(i)).collect();
    prop::collection::vec(0.0f64..1.0, NUM_JOINTS).prop_map(move |u| {
        let mut q = JointVector::zeros();
        for i in 0..NUM_JOINTS {
            let (lo, hi) = ranges[i];
            // Half of each range around the rest pose keeps tripods valid.
            q[i] = (lo + u[i] * (hi - lo)) * 0.5;
        }
        q
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refine_contract_holds(q in joint_vector(), target in -1.0f64..1.0) {
        let model = default_model();
        let cfg = RefineConfig::default();
        let reference = rest_reference(&model);
        if let Ok(out) = refine(&model, &q, &reference, target, &cfg) {
            let before = objective(&model, &q, &reference, target, &cfg).unwrap().total;
            prop_assert!(out.cost <= before);
            prop_assert!(out.q_cmd.max_abs_diff(&q) <= cfg.iterations as f64 * cfg.per_iter_clip + 1e-12);
            for j in Finger::Ring.joints() {
                prop_assert_eq!(out.q_cmd[j].to_bits(), q[j].to_bits());
            }
            prop_assert!(model.within_limits(&out.q_cmd));
        }
    }
}

mod common;

use common::gen::system;
use common::*;
use inquir::analyzer::{analyze, CostModel};
use inquir::arch::ArchConfig;
use inquir::ast::{parse_program, print_program, QubitKind, Value};
use inquir::checker::{check, has_errors};
use inquir::frontend::{compile_qasm, LowerOptions};
use inquir::qstate::{BackendKind, OutcomeOracle};
use inquir::runtime::{run, RunConfig, RuntimeState, SchedulerPolicy};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn print_parse_roundtrip(sys in system()) {
        let text = print_program(&sys);
        let back = parse_program(&text).map_err(|e| TestCaseError::fail(format!("{}\n{}", e, text)))?;
        prop_assert_eq!(&back, &sys);
        prop_assert_eq!(print_program(&back), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // messages with one label come out in the order they went in
    #[test]
    fn heap_fifo_per_label(msgs in prop::collection::vec((0usize..3, any::<bool>()), 1..12), seed in any::<u64>()) {
        let labels = ["a", "b", "c"];
        let mut send = String::from("process 0 { s = open[0, 1]; ");
        for (l, v) in &msgs {
            send.push_str(&format!("s[1]!({}: {}); ", labels[*l], *v as u8));
        }
        send.push('}');
        // receive labels in a shuffled order
        let mut order: Vec<usize> = (0..msgs.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let mut recv = String::from("process 1 { s = open[0, 1]; ");
        for (k, &i) in order.iter().enumerate() {
            recv.push_str(&format!("s?({}: r{}); ", labels[msgs[i].0], k));
        }
        recv.push('}');
        let sys = parse_program(&format!("{}\n{}", send, recv)).unwrap();
        let cfg = RunConfig { policy: SchedulerPolicy::SeededRandom { seed }, ..RunConfig::default() };
        let out = run(&sys, &ArchConfig::linear(2, 1, 1).unwrap(), &cfg).unwrap();
        prop_assert_eq!(out.label(), "completed");
        let env = &out.state().procs[1].env;
        for l in 0..3 {
            let sent: Vec<bool> = msgs.iter().filter(|m| m.0 == l).map(|m| m.1).collect();
            let got: Vec<bool> = order
                .iter()
                .enumerate()
                .filter(|(_, &i)| msgs[i].0 == l)
                .map(|(k, _)| env[&format!("r{}", k)] == Value::Bit(true))
                .collect();
            prop_assert_eq!(sent, got);
        }
        prop_assert!(out.state().heap.values().all(|q| q.is_empty()));
    }

    // free store plus held qubits never changes, step by step
    #[test]
    fn qubit_and_epr_conservation(seed in any::<u64>(), n in 2usize..7, m in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = random_qasm(&mut rng, n, 15);
        let arch = line_for(n, m);
        let (sys, _) = compile_qasm(&src, &arch, &LowerOptions::default()).unwrap();
        let cfg = RunConfig { backend: BackendKind::Abstract, oracle: OutcomeOracle::born(seed), ..RunConfig::default() };
        let mut st = RuntimeState::new(&sys, &arch, &cfg).unwrap();
        let layout = st.layout().clone();
        let total_data: usize = layout.data.values().map(|v| v.len()).sum();
        let total_comm = layout.comm.len();
        let count = |st: &RuntimeState, k: QubitKind| st.holders.keys().filter(|q| q.kind == k).count();
        loop {
            let free_data: usize = st.data_store.values().map(|s| s.len()).sum();
            prop_assert_eq!(free_data + count(&st, QubitKind::Data), total_data);
            prop_assert_eq!(st.epr_free.len() + count(&st, QubitKind::Comm), total_comm);
            prop_assert_eq!(st.backend.live_count(), st.holders.len());
            let en = st.enabled_transitions();
            if en.is_empty() {
                break;
            }
            let t = en[rng.gen_range(0..en.len())].clone();
            st.step(&t).unwrap();
        }
        prop_assert!(st.is_terminated());
        prop_assert!(st.holders.is_empty());
    }

    #[test]
    fn seeded_runs_repeat(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = random_qasm(&mut rng, 4, 12);
        let arch = line_for(4, 2);
        let (sys, _) = compile_qasm(&src, &arch, &LowerOptions::default()).unwrap();
        let cfg = sv_config(seed, SchedulerPolicy::SeededRandom { seed });
        let a = run(&sys, &arch, &cfg).unwrap();
        let b = run(&sys, &arch, &cfg).unwrap();
        prop_assert_eq!(a.trace().to_jsonl(), b.trace().to_jsonl());
        prop_assert_eq!(a.state().backend.statevector().unwrap().to_json(), b.state().backend.statevector().unwrap().to_json());
    }

    #[test]
    fn compiled_programs_lint_clean_and_count(seed in any::<u64>(), n in 2usize..9, m in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = random_qasm(&mut rng, n, 30);
        let arch = line_for(n, m);
        let (sys, st) = compile_qasm(&src, &arch, &LowerOptions::default()).unwrap();
        let ds = check(&sys);
        prop_assert!(!has_errors(&ds), "{:?}", ds);
        let r = analyze(&sys, &arch, &CostModel::default()).unwrap().report;
        prop_assert_eq!(r.e_count, 2 * st.hops);
        prop_assert_eq!(r.c_count, 2 * r.e_count);
        prop_assert!(r.e_depth as usize <= r.e_count);
    }

    #[test]
    fn random_circuits_on_random_schedules(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=5);
        let src = random_qasm(&mut rng, n, 12);
        let cfg = sv_config(seed, SchedulerPolicy::SeededRandom { seed: seed ^ 1 });
        let f = distributed_fidelity(&src, &line_for(n, 2), &cfg);
        prop_assert!(f > 1.0 - 1e-9);
    }
}

fn born_frequency(src: &str, var: &str, trials: u64) -> u64 {
    let sys = parse_program(src).unwrap();
    let arch = ArchConfig::linear(1, 2, 0).unwrap();
    (0..trials)
        .filter(|&s| {
            let out = run(&sys, &arch, &RunConfig { oracle: OutcomeOracle::born(s), ..RunConfig::default() }).unwrap();
            out.state().procs[0].env[var] == Value::Bit(true)
        })
        .count() as u64
}

#[test]
fn born_rule_frequencies() {
    let n = 10_000u64;
    for theta in [0.7f64, 1.9, 2.6] {
        let p = (theta / 2.0).sin().powi(2);
        let src = format!("process 0 {{ x = init(); RY({})(x); m = measure(x); free x; }}", theta);
        let k = born_frequency(&src, "m", n) as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((k - n as f64 * p).abs() <= 3.0 * sigma, "theta {}: {} vs {}", theta, k, n as f64 * p);
    }
    // two-qubit parity of RY(a) x RY(b) product state
    let (a, b) = (1.1f64, 0.4f64);
    let (pa, pb) = ((a / 2.0).sin().powi(2), (b / 2.0).sin().powi(2));
    let p = pa * (1.0 - pb) + pb * (1.0 - pa);
    let src = format!(
        "process 0 {{ x = init(); y = init(); RY({})(x); RY({})(y); m = measure(x, y); free x; free y; }}",
        a, b
    );
    let k = born_frequency(&src, "m", n) as f64;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    assert!((k - n as f64 * p).abs() <= 3.0 * sigma);
}

mod common;

use std::collections::BTreeSet;

use common::{qaoa_instance, random_bits, random_circuit, rng, StateVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use tnsim::contraction::{contract, maxcut_energy};
use tnsim::ordering::{greedy_order, width_of_order, Greedy, RGreedy};
use tnsim::tensornet::{apply_fixed, circuit_to_network, energy_network, line_graph, OutSpec};

#[test]
fn random_circuits_match_statevector() {
    let mut r = rng(11);
    for _ in 0..40 {
        let n = rand::Rng::gen_range(&mut r, 1..=8);
        let circ = random_circuit(&mut r, n, 25);
        let input = random_bits(&mut r, n);
        let output = random_bits(&mut r, n);
        let net = apply_fixed(&circuit_to_network(&circ, &input, &OutSpec::Fixed(output.clone())).unwrap());
        let order = greedy_order(&line_graph(&net), &BTreeSet::new());
        let got = contract(&net, &order).unwrap().scalar().unwrap();
        let want = StateVector::run(&circ, &input).amplitude(&output);
        assert!((got - want).norm() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn qaoa_amplitudes_match_statevector() {
    for seed in 0..6 {
        let inst = qaoa_instance(10, 2, seed);
        let sv = StateVector::run(&inst.circuit, &[0; 10]);
        let out = random_bits(&mut rng(seed), 10);
        let net = circuit_to_network(&inst.circuit, &[0; 10], &OutSpec::Fixed(out.clone())).unwrap();
        let order = Greedy.order_for(&net);
        let got = contract(&net, &order).unwrap().scalar().unwrap();
        assert!((got - sv.amplitude(&out)).norm() < 1e-12);
    }
}

trait OrderFor {
    fn order_for(&self, net: &tnsim::TensorNetwork) -> tnsim::EliminationOrder;
}

impl<T: tnsim::Orderer> OrderFor for T {
    fn order_for(&self, net: &tnsim::TensorNetwork) -> tnsim::EliminationOrder {
        let open = net.open().iter().copied().collect();
        self.order(&line_graph(&apply_fixed(net)), &open)
    }
}

#[test]
fn batch_matches_single_amplitudes() {
    let inst = qaoa_instance(8, 1, 3);
    let sv = StateVector::run(&inst.circuit, &[0; 8]);
    let qubits = vec![5, 1, 6];
    let base = vec![1, 0, 1, 1, 0, 0, 1, 0];
    let spec = OutSpec::Open {
        qubits: qubits.clone(),
        bits: base.clone(),
    };
    let net = circuit_to_network(&inst.circuit, &[0; 8], &spec).unwrap();
    let result = contract(&net, &Greedy.order_for(&net)).unwrap();
    assert_eq!(result.values.len(), 8);
    for (k, v) in result.values.iter().enumerate() {
        let mut bits = base.clone();
        for (j, &q) in qubits.iter().enumerate() {
            bits[q] = ((k >> (qubits.len() - 1 - j)) & 1) as u8;
        }
        assert!((v - sv.amplitude(&bits)).norm() < 1e-12);
    }
}

#[test]
fn full_batch_is_normalized() {
    let inst = qaoa_instance(6, 2, 5);
    let net = circuit_to_network(&inst.circuit, &[0; 6], &OutSpec::open((0..6).collect(), 6)).unwrap();
    let result = contract(&net, &Greedy.order_for(&net)).unwrap();
    let norm: f64 = result.values.iter().map(|v| v.norm_sqr()).sum();
    assert!((norm - 1.0).abs() < 1e-12);
}

#[test]
fn energy_matches_statevector() {
    for seed in 0..4 {
        let inst = qaoa_instance(8, 1, seed);
        let sv = StateVector::run(&inst.circuit, &[0; 8]);
        let report = maxcut_energy(&inst.circuit, &inst.graph, &Greedy).unwrap();
        let mut total = 0.0;
        for e in &report.edges {
            let want = sv.zz(e.edge.0, e.edge.1);
            assert!((e.zz - want).abs() < 1e-12);
            total += (1.0 - want) / 2.0;
        }
        assert!((report.total - total).abs() < 1e-12);
        assert!(report.total >= 0.0 && report.total <= inst.graph.edges().len() as f64);
    }
}

#[test]
fn k4_energy_in_range() {
    let g = tnsim::ProblemGraph::complete(4);
    let circ = tnsim::build_qaoa_circuit(&g, &[0.7], &[0.4]).unwrap();
    let sv = StateVector::run(&circ, &[0; 4]);
    let report = maxcut_energy(&circ, &g, &RGreedy::default()).unwrap();
    let want: f64 = g.edges().iter().map(|&(a, b)| (1.0 - sv.zz(a, b)) / 2.0).sum();
    assert!((report.total - want).abs() < 1e-12);
    assert!((0.0..=6.0).contains(&report.total));
    let net = energy_network(&circ, &g, (0, 1)).unwrap();
    assert!(net.fixed().values().all(|&b| b == 0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn amplitude_independent_of_order(seed in any::<u64>(), n in 1usize..6, gates in 1usize..20) {
        let mut r = rng(seed);
        let circ = random_circuit(&mut r, n, gates);
        let input = random_bits(&mut r, n);
        let output = random_bits(&mut r, n);
        let net = apply_fixed(&circuit_to_network(&circ, &input, &OutSpec::Fixed(output.clone())).unwrap());
        let g = line_graph(&net);
        let mut labels: Vec<_> = g.vertices().collect();
        labels.shuffle(&mut r);
        let shuffled = width_of_order(&g, &labels).unwrap();
        let a = contract(&net, &shuffled).unwrap().scalar().unwrap();
        let b = contract(&net, &greedy_order(&g, &BTreeSet::new())).unwrap().scalar().unwrap();
        let want = StateVector::run(&circ, &input).amplitude(&output);
        prop_assert!((a - want).norm() < 1e-12);
        prop_assert!((b - want).norm() < 1e-12);
    }

    #[test]
    fn peak_rank_within_width(seed in any::<u64>(), n in 2usize..7) {
        let mut r = rng(seed);
        let circ = random_circuit(&mut r, n, 30);
        let net = apply_fixed(&circuit_to_network(&circ, &vec![0; n], &OutSpec::zeros(n)).unwrap());
        let order = greedy_order(&line_graph(&net), &BTreeSet::new());
        let result = contract(&net, &order).unwrap();
        prop_assert!(result.peak_rank <= order.width);
    }
}

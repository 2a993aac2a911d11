//! Dense statevector reference simulator and instance generators shared by
//! the integration tests. Qubit 0 is the most significant bit of a basis
//! index.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tnsim::circuit::{build_qaoa_circuit, random_regular_graph, Circuit, Gate, ProblemGraph};

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub struct StateVector {
    pub n: usize,
    pub amps: Vec<C>,
}

impl StateVector {
    pub fn basis(bits: &[u8]) -> Self {
        let n = bits.len();
        let mut amps = vec![c(0.0, 0.0); 1 << n];
        amps[index_of(bits)] = c(1.0, 0.0);
        StateVector { n, amps }
    }

    fn mask(&self, q: usize) -> usize {
        1 << (self.n - 1 - q)
    }

    fn apply_1q(&mut self, q: usize, m: [[C; 2]; 2]) {
        let mask = self.mask(q);
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | mask]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | mask] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn apply(&mut self, gate: &Gate) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match *gate {
            Gate::H(q) => self.apply_1q(q, [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]),
            Gate::X(q) => self.apply_1q(q, [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]),
            Gate::ZPow { exponent, qubit } => {
                let phase = C::from_polar(1.0, PI * exponent);
                self.apply_1q(qubit, [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), phase]])
            }
            Gate::Cnot { control, target } => {
                let (mc, mt) = (self.mask(control), self.mask(target));
                for i in 0..self.amps.len() {
                    if i & mc != 0 && i & mt == 0 {
                        self.amps.swap(i, i | mt);
                    }
                }
            }
            Gate::Cz(a, b) => {
                let m = self.mask(a) | self.mask(b);
                for i in 0..self.amps.len() {
                    if i & m == m {
                        self.amps[i] = -self.amps[i];
                    }
                }
            }
        }
    }

    pub fn run(circuit: &Circuit, in_bits: &[u8]) -> Self {
        let mut sv = StateVector::basis(in_bits);
        for g in circuit.gates() {
            sv.apply(g);
        }
        sv
    }

    pub fn amplitude(&self, bits: &[u8]) -> C {
        self.amps[index_of(bits)]
    }

    /// `<Z_a Z_b>`.
    pub fn zz(&self, a: usize, b: usize) -> f64 {
        let (ma, mb) = (self.mask(a), self.mask(b));
        self.amps
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let sign = if ((i & ma != 0) as u8 ^ (i & mb != 0) as u8) == 1 { -1.0 } else { 1.0 };
                sign * v.norm_sqr()
            })
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|v| v.norm_sqr()).sum()
    }
}

pub fn index_of(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| acc * 2 + usize::from(b))
}

pub fn random_bits(rng: &mut impl Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..2u8)).collect()
}

/// Random circuit over the full gate set.
pub fn random_circuit(rng: &mut impl Rng, n: usize, gates: usize) -> Circuit {
    let mut circ = Circuit::new(n);
    for _ in 0..gates {
        let q = rng.gen_range(0..n);
        let two = n > 1 && rng.gen_bool(0.4);
        let gate = if two {
            let mut t = rng.gen_range(0..n - 1);
            if t >= q {
                t += 1;
            }
            if rng.gen_bool(0.5) {
                Gate::Cnot { control: q, target: t }
            } else {
                Gate::Cz(q, t)
            }
        } else {
            match rng.gen_range(0..3) {
                0 => Gate::H(q),
                1 => Gate::X(q),
                _ => Gate::ZPow {
                    exponent: rng.gen_range(-2.0..2.0),
                    qubit: q,
                },
            }
        };
        circ.push(gate).unwrap();
    }
    circ
}

pub struct QaoaInstance {
    pub graph: ProblemGraph,
    pub circuit: Circuit,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

/// 3-regular QAOA instance with random angles.
pub fn qaoa_instance(n: usize, p: usize, seed: u64) -> QaoaInstance {
    let graph = random_regular_graph(n, 3, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let gammas: Vec<f64> = (0..p).map(|_| rng.gen_range(0.0..PI)).collect();
    let betas: Vec<f64> = (0..p).map(|_| rng.gen_range(0.0..PI)).collect();
    let circuit = build_qaoa_circuit(&graph, &gammas, &betas).unwrap();
    QaoaInstance {
        graph,
        circuit,
        gammas,
        betas,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

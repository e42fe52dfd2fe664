#![allow(dead_code)]

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use woodbury_core::circuits::{CircuitSpec, Gate, Unitary2};
use woodbury_core::experiment::random_circuit;
use woodbury_core::linalg::DenseMatrix;
use woodbury_core::oracle::circuit_matrix;
use woodbury_core::rng::stream_rng;
use woodbury_core::simulator::NoiseModel;

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    stream_rng(seed, stream)
}

pub fn circuit(rng: &mut ChaCha8Rng, n: usize) -> CircuitSpec {
    random_circuit(rng, n, 2)
}

/// Product circuit: one random single-qubit unitary per qubit.
pub fn product_circuit(rng: &mut ChaCha8Rng, n: usize) -> CircuitSpec {
    let layer = random_circuit(rng, n, 1);
    let gates = layer.gates().iter().filter(|g| g.arity() == 1).cloned().collect();
    CircuitSpec::with_gates(n, gates).unwrap()
}

fn embed(g: &Gate, n: usize) -> DenseMatrix {
    circuit_matrix(&CircuitSpec::with_gates(n, vec![g.clone()]).unwrap()).unwrap()
}

fn pauli(code: usize) -> Option<Unitary2> {
    match code {
        0 => None,
        1 => Some(Unitary2::pauli_x()),
        2 => Some(Unitary2::pauli_y()),
        _ => Some(Unitary2::pauli_z()),
    }
}

fn conjugate(u: &DenseMatrix, rho: &DenseMatrix) -> DenseMatrix {
    u.matmul(rho).unwrap().matmul(&u.adjoint()).unwrap()
}

/// Density-matrix evaluation of `P(0) − P(1)` on qubit 0 under gate-wise
/// depolarizing noise followed by the readout channel.
pub fn density_ancilla_statistic(c: &CircuitSpec, noise: &NoiseModel) -> f64 {
    let n = c.qubit_count();
    let dim = 1usize << n;
    let mut rho = DenseMatrix::zeros(dim, dim);
    rho[(0, 0)] = Complex64::new(1.0, 0.0);
    for g in c.gates() {
        rho = conjugate(&embed(g, n), &rho);
        let m = g.arity();
        let p = noise.gate_error_rate(m);
        if p == 0.0 {
            continue;
        }
        let strings = 4usize.pow(m as u32);
        let mut acc = rho.scale(Complex64::new(1.0 - p, 0.0));
        for code in 1..strings {
            let mut pc = CircuitSpec::new(n);
            for (slot, &q) in g.qubits().iter().enumerate() {
                if let Some(u) = pauli((code >> (2 * slot)) & 3) {
                    pc.push(Gate::u1q(q, u)).unwrap();
                }
            }
            let pm = circuit_matrix(&pc).unwrap();
            let term = conjugate(&pm, &rho).scale(Complex64::new(p / (strings - 1) as f64, 0.0));
            acc = acc.add(&term).unwrap();
        }
        rho = acc;
    }
    let p0: f64 = (0..dim).filter(|i| i & 1 == 0).map(|i| rho[(i, i)].re).sum();
    2.0 * noise.readout().observed_p0(p0) - 1.0
}

pub fn mean_and_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

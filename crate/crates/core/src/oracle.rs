//! Dense classical reference for small problems: builds `M = A + U C V`,
//! `|b⟩`, `|z⟩` explicitly and solves by LU.

use num_complex::Complex64;

use crate::circuits::CircuitSpec;
use crate::linalg::{direct_solve, DenseMatrix, DenseVector, LinalgError, MAX_ORACLE_QUBITS};
use crate::simulator::{apply, prepare, StateVector};
use crate::solver::{APart, HermitianLcu, SolveError, WoodburyProblem};

fn check_size(qubits: usize) -> Result<(), SolveError> {
    if qubits > MAX_ORACLE_QUBITS {
        return Err(LinalgError::TooLarge { dim: 1 << qubits }.into());
    }
    Ok(())
}

/// `C|0…0⟩` as a dense vector.
pub fn circuit_state(c: &CircuitSpec) -> Result<DenseVector, SolveError> {
    check_size(c.qubit_count())?;
    Ok(DenseVector::new(prepare(c)?.into_amplitudes())?)
}

/// Full unitary of a circuit, column by column.
pub fn circuit_matrix(c: &CircuitSpec) -> Result<DenseMatrix, SolveError> {
    let n = c.qubit_count();
    check_size(n)?;
    let columns = (0..1usize << n)
        .map(|i| {
            let s = apply(c, &StateVector::basis(n, i)?)?;
            Ok(DenseVector::new(s.into_amplitudes())?)
        })
        .collect::<Result<Vec<_>, SolveError>>()?;
    Ok(DenseMatrix::from_columns(&columns)?)
}

/// `(M, |b⟩, |z⟩)` for a problem.
pub fn dense_system(p: &WoodburyProblem) -> Result<(DenseMatrix, DenseVector, DenseVector), SolveError> {
    check_size(p.qubits())?;
    let dim = 1usize << p.qubits();
    let f = p.factors();
    let mut m = match p.a_part() {
        APart::Identity => DenseMatrix::identity(dim),
        APart::Unitary(q) => circuit_matrix(q)?,
    };
    let us = f.u_preparers.iter().map(circuit_state).collect::<Result<Vec<_>, _>>()?;
    let vs = f.v_preparers.iter().map(circuit_state).collect::<Result<Vec<_>, _>>()?;
    for (i, u) in us.iter().enumerate() {
        for (j, v) in vs.iter().enumerate() {
            let w = f.alphas[i] * f.c_matrix[(i, j)] * f.betas[j];
            if w == Complex64::new(0.0, 0.0) {
                continue;
            }
            for r in 0..dim {
                let ur = w * u[r];
                for c in 0..dim {
                    m[(r, c)] += ur * v[c].conj();
                }
            }
        }
    }
    Ok((m, circuit_state(p.b_preparer())?, circuit_state(p.z_preparer())?))
}

/// Unnormalized solution `|x⟩ = M⁻¹|b⟩`.
pub fn dense_solution(p: &WoodburyProblem) -> Result<DenseVector, SolveError> {
    let (m, b, _) = dense_system(p)?;
    Ok(direct_solve(&m, &b)?)
}

/// Reference `⟨z|x⟩`.
pub fn dense_overlap(p: &WoodburyProblem) -> Result<Complex64, SolveError> {
    let (m, b, z) = dense_system(p)?;
    Ok(z.inner(&direct_solve(&m, &b)?))
}

/// `O = Σ γ_i W_i` as a dense matrix.
pub fn lcu_matrix(o: &HermitianLcu) -> Result<DenseMatrix, SolveError> {
    let dim = 1usize << o.qubit_count();
    let mut acc = DenseMatrix::zeros(dim, dim);
    for (g, w) in o.gammas().iter().zip(o.w_circuits()) {
        acc = acc.add(&circuit_matrix(w)?.scale(*g))?;
    }
    Ok(acc)
}

/// Reference `⟨x|O|x⟩` (complex, so callers can inspect the residue).
pub fn dense_expectation(p: &WoodburyProblem, o: &HermitianLcu) -> Result<Complex64, SolveError> {
    let x = dense_solution(p)?;
    let ox = lcu_matrix(o)?.matvec(&x)?;
    Ok(x.inner(&ox))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{uniform_preparer, Gate};
    use crate::solver::LowRankFactors;

    #[test]
    fn uniform_instance_matrix() {
        let h = uniform_preparer(2).unwrap();
        let p = WoodburyProblem::new(
            APart::Identity,
            LowRankFactors {
                alphas: vec![Complex64::new(1.0, 0.0)],
                u_preparers: vec![h.clone()],
                betas: vec![Complex64::new(1.0, 0.0)],
                v_preparers: vec![h.clone()],
                c_matrix: DenseMatrix::identity(1),
            },
            h.clone(),
            h,
            true,
        )
        .unwrap();
        let (m, b, _) = dense_system(&p).unwrap();
        assert!((m[(0, 0)].re - 1.25).abs() < 1e-14);
        assert!((m[(0, 1)].re - 0.25).abs() < 1e-14);
        assert!((b[3].re - 0.5).abs() < 1e-14);
        assert!((dense_overlap(&p).unwrap().re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn circuit_matrix_of_cx() {
        let c = CircuitSpec::with_gates(2, vec![Gate::cx(0, 1).unwrap()]).unwrap();
        let m = circuit_matrix(&c).unwrap();
        let unit = Complex64::new(1.0, 0.0);
        // qubit 0 is the least significant bit
        assert_eq!(m[(3, 1)], unit);
        assert_eq!(m[(1, 3)], unit);
        assert_eq!(m[(0, 0)], unit);
        assert_eq!(m[(2, 2)], unit);
    }

    #[test]
    fn refuses_large_registers() {
        let c = uniform_preparer(MAX_ORACLE_QUBITS + 1).unwrap();
        assert!(circuit_state(&c).is_err());
    }
}

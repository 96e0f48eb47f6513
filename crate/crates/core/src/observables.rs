//! Measured quantities: excitation probabilities, two-atom Pauli
//! correlators, and field expectation profiles.
//!
//! Probabilities are projector expectations on the evolved state; this is
//! the Schrödinger-picture form of the Heisenberg-picture quantities the
//! closed-form predictions are written in.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::PropagatorConfig;
use crate::model::{Atom, FieldGrid, SetupParams, StateVector};
use crate::scalar::Real;
use crate::C;

/// Pauli axis for correlator measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// P_e(atom) = Σ |amplitude|² over basis states with the atom excited.
pub fn excitation_probability<T: Real>(psi: &StateVector<T>, atom: Atom) -> T {
    let p = psi.basis().photon_state_count();
    let blocks: [usize; 2] = match atom {
        Atom::A => [2, 3],
        Atom::B => [1, 3],
    };
    let amps = psi.amplitudes();
    let mut acc = T::zero();
    for b in blocks {
        for a in &amps[b * p..(b + 1) * p] {
            acc += a.norm_sqr();
        }
    }
    acc
}

/// Apply a single-atom Pauli operator, returning the new amplitude vector.
fn apply_pauli<T: Real>(amps: &[C<T>], photon_count: usize, atom: Atom, axis: PauliAxis) -> Vec<C<T>> {
    let bit = match atom {
        Atom::A => 0b10usize,
        Atom::B => 0b01,
    };
    let mut out = vec![C::new(T::zero(), T::zero()); amps.len()];
    for block in 0..4usize {
        let excited = block & bit != 0;
        let (target, factor) = match axis {
            PauliAxis::X => (block ^ bit, C::new(T::one(), T::zero())),
            // σ^y |e⟩ = i|g⟩, σ^y |g⟩ = −i|e⟩
            PauliAxis::Y => (
                block ^ bit,
                if excited { C::new(T::zero(), T::one()) } else { C::new(T::zero(), -T::one()) },
            ),
            PauliAxis::Z => (
                block,
                if excited { C::new(T::one(), T::zero()) } else { C::new(-T::one(), T::zero()) },
            ),
        };
        for p in 0..photon_count {
            out[target * photon_count + p] += factor * amps[block * photon_count + p];
        }
    }
    out
}

/// ⟨ψ| σ_A^{op_a} σ_B^{op_b} |ψ⟩, which is real for this Hermitian product.
pub fn two_atom_correlator<T: Real>(
    psi: &StateVector<T>,
    op_a: PauliAxis,
    op_b: PauliAxis,
) -> T {
    let p = psi.basis().photon_state_count();
    let tmp = apply_pauli(psi.amplitudes(), p, Atom::B, op_b);
    let tmp = apply_pauli(&tmp, p, Atom::A, op_a);
    let mut acc = C::new(T::zero(), T::zero());
    for (a, b) in psi.amplitudes().iter().zip(&tmp) {
        acc += a.conj() * *b;
    }
    assert!(
        acc.im.abs() <= T::of(1e-10).max(T::default_epsilon() * T::of(100.0)),
        "correlator must be real, got imaginary part {:e}",
        acc.im
    );
    acc.re
}

/// ⟨ψ|E(x)|ψ⟩ for each position, through the discretized mode sum.
pub fn field_expectation_profile<T: Real>(
    psi: &StateVector<T>,
    grid: &FieldGrid<T>,
    positions: &[T],
) -> Vec<T> {
    let basis = psi.basis();
    assert_eq!(grid.mode_count(), basis.mode_count(), "grid/basis mode mismatch");
    let photon_count = basis.photon_state_count();
    let amps = psi.amplitudes();
    // ⟨a_j⟩ first: E is linear in the mode operators.
    let mut mode_exp = vec![C::new(T::zero(), T::zero()); grid.mode_count()];
    let mut scratch: crate::model::Occupation = Vec::new();
    for block in 0..4usize {
        for p in 0..photon_count {
            let src = amps[block * photon_count + p];
            if src == C::new(T::zero(), T::zero()) {
                continue;
            }
            let occ = &basis.photon_states()[p];
            for &(m, c) in occ {
                lower(occ, m, &mut scratch);
                let q = basis.photon_state_index(&scratch).expect("lowered state in basis");
                let target = amps[block * photon_count + q];
                let root = T::of_usize(c as usize).sqrt();
                mode_exp[m as usize] += target.conj() * src * C::new(root, T::zero());
            }
        }
    }
    positions
        .iter()
        .map(|&x| {
            let mut acc = T::zero();
            for j in 0..grid.mode_count() {
                let arg = grid.momenta()[j] * x;
                let phase = C::new(arg.cos(), arg.sin());
                // 2·Re(i·g_j·e^{ikx}·⟨a_j⟩)
                let z = C::new(T::zero(), grid.couplings()[j]) * phase * mode_exp[j];
                acc += T::of(2.0) * z.re;
            }
            acc
        })
        .collect()
}

fn lower(occ: &[(u16, u8)], mode: u16, out: &mut crate::model::Occupation) {
    out.clear();
    for &(m, c) in occ {
        if m == mode {
            if c > 1 {
                out.push((m, c - 1));
            }
        } else {
            out.push((m, c));
        }
    }
}

/// Which state the run starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialState {
    /// (|e_A g_B, 0⟩ + |g_A e_B, 0⟩)/√2
    Switch,
    /// |e_A g_B, 0⟩
    ExcitedA,
    /// |g_A e_B, 0⟩
    ExcitedB,
}

/// Excitation-probability time series with its full parameter record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbabilityTrace<T> {
    pub times: Vec<T>,
    pub p_e_a: Vec<T>,
    pub p_e_b: Vec<T>,
    pub setup: SetupParams<T>,
    pub initial_state: InitialState,
    pub propagator: PropagatorConfig<T>,
}

impl<T: Real> ProbabilityTrace<T> {
    pub fn new(
        times: Vec<T>,
        p_e_a: Vec<T>,
        p_e_b: Vec<T>,
        setup: SetupParams<T>,
        initial_state: InitialState,
        propagator: PropagatorConfig<T>,
    ) -> Result<Self> {
        if times.len() != p_e_a.len() || times.len() != p_e_b.len() {
            return Err(Error::invalid("trace columns must have equal length"));
        }
        let slack = T::of(1e-9);
        for (p, t) in p_e_a.iter().chain(p_e_b.iter()).zip(times.iter().cycle()) {
            if !(*p >= -slack && *p <= T::one() + slack) {
                return Err(Error::invalid(format!(
                    "probability {p} out of [0,1] (slack 1e-9) at t={t}"
                )));
            }
        }
        Ok(Self { times, p_e_a, p_e_b, setup, initial_state, propagator })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{product_state, switch_state, FockBasis, QubitParams, QubitState};
    use crate::C64;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn switch_state_probabilities_are_half() {
        let basis = FockBasis::build(2, 1).unwrap();
        let psi = switch_state::<f64>(&basis);
        assert!((excitation_probability(&psi, Atom::A) - 0.5).abs() < 1e-15);
        assert!((excitation_probability(&psi, Atom::B) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn basis_projector_on_product_state() {
        let basis = FockBasis::build(2, 1).unwrap();
        let psi = product_state::<f64>(&basis, QubitState::Excited, QubitState::Ground);
        assert_eq!(excitation_probability(&psi, Atom::A), 1.0);
        assert_eq!(excitation_probability(&psi, Atom::B), 0.0);
    }

    #[test]
    fn excited_and_ground_probabilities_complete() {
        let basis = FockBasis::build(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut amps: Vec<C64> = (0..basis.dimension())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= n);
        let psi = StateVector::from_amplitudes(amps, Arc::clone(&basis)).unwrap();
        for atom in [Atom::A, Atom::B] {
            let p_e = excitation_probability(&psi, atom);
            // Complementary projector, summed explicitly.
            let photon_count = basis.photon_state_count();
            let ground_blocks: [usize; 2] = match atom {
                Atom::A => [0, 1],
                Atom::B => [0, 2],
            };
            let p_g: f64 = ground_blocks
                .iter()
                .flat_map(|b| {
                    psi.amplitudes()[b * photon_count..(b + 1) * photon_count].iter()
                })
                .map(|a| a.norm_sqr())
                .sum();
            assert_relative_eq!(p_e + p_g, 1.0, epsilon = 1e-9);
            assert!(p_e >= 0.0 && p_e <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn switch_state_correlators() {
        let basis = FockBasis::build(2, 1).unwrap();
        let psi = switch_state::<f64>(&basis);
        assert_relative_eq!(
            two_atom_correlator(&psi, PauliAxis::Y, PauliAxis::Y),
            1.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            two_atom_correlator(&psi, PauliAxis::Z, PauliAxis::Z),
            -1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn product_state_yy_correlator_vanishes() {
        let basis = FockBasis::build(2, 1).unwrap();
        let eg = product_state::<f64>(&basis, QubitState::Excited, QubitState::Ground);
        assert_eq!(two_atom_correlator(&eg, PauliAxis::Y, PauliAxis::Y), 0.0);
        let ge = product_state::<f64>(&basis, QubitState::Ground, QubitState::Excited);
        assert_eq!(two_atom_correlator(&ge, PauliAxis::Y, PauliAxis::Y), 0.0);
    }

    #[test]
    fn vacuum_sector_field_profile_vanishes() {
        let grid = FieldGrid::build(4, 2.0, 1.0, 1.0).unwrap();
        let basis = FockBasis::build(4, 2).unwrap();
        let psi = switch_state::<f64>(&basis);
        let xs = [-1.0, 0.0, 0.3, 2.0];
        for v in field_expectation_profile(&psi, &grid, &xs) {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn single_mode_superposition_profile_matches_mode_sum() {
        let grid = FieldGrid::build(4, 2.0, 1.0, 1.0).unwrap();
        let basis = FockBasis::build(4, 2).unwrap();
        // (|vac⟩ + |1_j⟩)/√2 in the gg sector; E expectation picks up the
        // off-diagonal term 2·g_j·Re(i·e^{ikx})·(1/2).
        let j = 2usize; // momentum +1
        let mut amps = vec![C64::new(0.0, 0.0); basis.dimension()];
        let vac = basis.vacuum_index(QubitState::Ground, QubitState::Ground);
        let one = basis
            .photon_states()
            .iter()
            .position(|occ| occ.as_slice() == [(j as u16, 1)])
            .unwrap();
        amps[vac] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[one] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let psi = StateVector::from_amplitudes(amps, Arc::clone(&basis)).unwrap();
        let xs = [-0.7, 0.0, 0.25, 1.3];
        let profile = field_expectation_profile(&psi, &grid, &xs);
        for (&x, &v) in xs.iter().zip(&profile) {
            let g = grid.couplings()[j];
            let k = grid.momenta()[j];
            let expected = 2.0 * g * (C64::i() * C64::new(0.0, k * x).exp()).re * 0.5;
            assert!(v != 0.0 || expected == 0.0);
            assert_relative_eq!(v, expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn profile_matches_dense_operator_quadratic_form() {
        let grid = FieldGrid::build(2, 1.0, 1.0, 1.0).unwrap();
        let basis = FockBasis::build(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut amps: Vec<C64> = (0..basis.dimension())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= n);
        let psi = StateVector::from_amplitudes(amps, Arc::clone(&basis)).unwrap();

        // Dense E(x) built independently from matrix elements of a, a†.
        let dim = basis.dimension();
        let photon_count = basis.photon_state_count();
        let xs = [0.0, 0.4, -1.1];
        let profile = field_expectation_profile(&psi, &grid, &xs);
        for (&x, &v) in xs.iter().zip(&profile) {
            let mut e = nalgebra::DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
            for block in 0..4 {
                for p in 0..photon_count {
                    let occ = &basis.photon_states()[p];
                    for j in 0..grid.mode_count() {
                        let n_j = occ
                            .iter()
                            .find(|&&(m, _)| m as usize == j)
                            .map_or(0u8, |&(_, c)| c);
                        if n_j > 0 {
                            // ⟨p−e_j| a_j |p⟩ = √n — row index p', col p.
                            let mut low = Vec::new();
                            super::lower(occ, j as u16, &mut low);
                            let q = basis
                                .photon_states()
                                .iter()
                                .position(|s| s == &low)
                                .unwrap();
                            let amp = C64::i()
                                * grid.couplings()[j]
                                * C64::new(0.0, grid.momenta()[j] * x).exp()
                                * (n_j as f64).sqrt();
                            let (r, c) = (block * photon_count + q, block * photon_count + p);
                            e[(r, c)] += amp;
                            e[(c, r)] += amp.conj();
                        }
                    }
                }
            }
            let psi_v = nalgebra::DVector::from_column_slice(psi.amplitudes());
            let expected = (psi_v.adjoint() * &e * &psi_v)[(0, 0)].re;
            assert_relative_eq!(v, expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn trace_validation() {
        let setup = SetupParams {
            qubit_a: QubitParams { omega: 1.0, dipole: 0.1, position: 0.0 },
            qubit_b: QubitParams { omega: 1.0, dipole: 0.1, position: 1.0 },
            speed: 1.0,
            normalization: 1.0,
            mode_count: 2,
            k_max: 1.0,
            max_total_photons: 1,
        };
        let cfg = PropagatorConfig::default_with_dt(0.1);
        assert!(ProbabilityTrace::new(
            vec![0.0, 0.1],
            vec![0.5, 0.5],
            vec![0.5, 0.5],
            setup,
            InitialState::Switch,
            cfg
        )
        .is_ok());
        assert!(ProbabilityTrace::new(
            vec![0.0],
            vec![1.5],
            vec![0.5],
            setup,
            InitialState::Switch,
            cfg
        )
        .is_err());
    }
}

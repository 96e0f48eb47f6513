//! Physical parameters, field discretization, truncated Fock basis, and
//! sparse Hamiltonian assembly.
//!
//! The model is a pair of two-level atoms coupled to a 1D bosonic field
//!
//! ```text
//! H = (Ω_A/2)σ^z_A + (Ω_B/2)σ^z_B + Σ_j ω_j a†_j a_j
//!     + Σ_i d_i σ^x_i E(x_i),      E(x) = Σ_j (i g_j e^{ik_j x} a_j + h.c.)
//! ```
//!
//! on a symmetric momentum grid k_j = ±Δk·{1..M/2} with ω_j = c|k_j| and
//! g_j = sqrt(N ω_j Δk), truncated to total photon number ≤ n_max.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::C;

/// Atom label; A sits at the smaller coordinate in the standard setup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Atom {
    A,
    B,
}

impl Atom {
    pub fn other(self) -> Atom {
        match self {
            Atom::A => Atom::B,
            Atom::B => Atom::A,
        }
    }
}

impl std::fmt::Display for Atom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Atom::A => write!(f, "A"),
            Atom::B => write!(f, "B"),
        }
    }
}

/// Internal state of one two-level atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitState {
    Ground,
    Excited,
}

/// Energy gap, dipole moment, and position of one atom (ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams<T> {
    pub omega: T,
    pub dipole: T,
    pub position: T,
}

impl<T: Real> QubitParams<T> {
    pub fn new(omega: T, dipole: T, position: T) -> Result<Self> {
        if !(omega > T::zero()) {
            return Err(Error::invalid(format!("omega must be > 0, got {omega}")));
        }
        if !position.is_finite() || !dipole.is_finite() {
            return Err(Error::invalid("dipole and position must be finite"));
        }
        Ok(Self { omega, dipole, position })
    }
}

/// Symmetric discretized momentum grid with derived frequencies and couplings.
///
/// Modes are stored in ascending momentum order; the k = 0 mode is excluded
/// (its coupling would vanish anyway).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid<T> {
    momenta: Vec<T>,
    freqs: Vec<T>,
    couplings: Vec<T>,
    speed: T,
    normalization: T,
    dk: T,
}

impl<T: Real> FieldGrid<T> {
    /// Build the grid with momenta ±Δk·{1..M/2}, Δk = 2·k_max/M.
    pub fn build(mode_count: usize, k_max: T, speed: T, normalization: T) -> Result<Self> {
        if mode_count < 2 || mode_count % 2 != 0 {
            return Err(Error::invalid(format!(
                "mode_count must be even and >= 2 for a parity-symmetric grid, got {mode_count}"
            )));
        }
        if !(k_max > T::zero()) || !(speed > T::zero()) || !(normalization > T::zero()) {
            return Err(Error::invalid("k_max, speed, and normalization must be > 0"));
        }
        let half = mode_count / 2;
        let dk = T::of(2.0) * k_max / T::of_usize(mode_count);
        // Compute each ± pair from the same positive momentum so that parity
        // symmetry is exact in floating point.
        let mut pos_k = Vec::with_capacity(half);
        let mut pos_w = Vec::with_capacity(half);
        let mut pos_g = Vec::with_capacity(half);
        for m in 1..=half {
            let k = dk * T::of_usize(m);
            let w = speed * k;
            let g = (normalization * w * dk).sqrt();
            pos_k.push(k);
            pos_w.push(w);
            pos_g.push(g);
        }
        let mut momenta = Vec::with_capacity(mode_count);
        let mut freqs = Vec::with_capacity(mode_count);
        let mut couplings = Vec::with_capacity(mode_count);
        for m in (0..half).rev() {
            momenta.push(-pos_k[m]);
            freqs.push(pos_w[m]);
            couplings.push(pos_g[m]);
        }
        momenta.extend_from_slice(&pos_k);
        freqs.extend_from_slice(&pos_w);
        couplings.extend_from_slice(&pos_g);
        Ok(Self { momenta, freqs, couplings, speed, normalization, dk })
    }

    pub fn mode_count(&self) -> usize {
        self.momenta.len()
    }

    pub fn momenta(&self) -> &[T] {
        &self.momenta
    }

    pub fn freqs(&self) -> &[T] {
        &self.freqs
    }

    pub fn couplings(&self) -> &[T] {
        &self.couplings
    }

    pub fn dk(&self) -> T {
        self.dk
    }

    pub fn speed(&self) -> T {
        self.speed
    }

    pub fn normalization(&self) -> T {
        self.normalization
    }

    /// Periodic box length L = 2π/Δk implied by the grid spacing.
    pub fn box_length(&self) -> T {
        T::two_pi() / self.dk
    }
}

/// Photon occupation pattern, sparse and sorted by mode index.
pub type Occupation = Vec<(u16, u8)>;

/// One joint basis label: both qubit states and the photon occupation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisLabel<'a> {
    pub qubit_a: QubitState,
    pub qubit_b: QubitState,
    pub photons: &'a [(u16, u8)],
}

fn qubit_block(a: QubitState, b: QubitState) -> usize {
    ((a == QubitState::Excited) as usize) << 1 | (b == QubitState::Excited) as usize
}

/// Enumeration of the truncated joint Hilbert space.
///
/// Layout: index = block·P + p with block ∈ {gg, ge, eg, ee} and p the photon
/// state index (total photons ascending, lexicographic within each total).
#[derive(Debug)]
pub struct FockBasis {
    mode_count: usize,
    max_total_photons: usize,
    photon_states: Vec<Occupation>,
    photon_index: HashMap<Occupation, usize>,
}

/// Default cap on the joint dimension; assembly of larger spaces must opt in.
pub const DEFAULT_DIMENSION_CAP: usize = 4_000_000;

impl FockBasis {
    pub fn build(mode_count: usize, max_total_photons: usize) -> Result<Arc<Self>> {
        Self::build_with_cap(mode_count, max_total_photons, DEFAULT_DIMENSION_CAP)
    }

    pub fn build_with_cap(
        mode_count: usize,
        max_total_photons: usize,
        dimension_cap: usize,
    ) -> Result<Arc<Self>> {
        if mode_count == 0 || mode_count > u16::MAX as usize {
            return Err(Error::invalid(format!("mode_count out of range: {mode_count}")));
        }
        let photon_count: usize = (0..=max_total_photons)
            .map(|n| binomial(n + mode_count - 1, n))
            .try_fold(0usize, |acc, c| acc.checked_add(c))
            .ok_or_else(|| Error::resource("photon state count overflows usize"))?;
        let dimension = photon_count
            .checked_mul(4)
            .ok_or_else(|| Error::resource("dimension overflows usize"))?;
        if dimension > dimension_cap {
            return Err(Error::resource(format!(
                "dimension {dimension} exceeds cap {dimension_cap} (M={mode_count}, n_max={max_total_photons})"
            )));
        }
        let mut photon_states = Vec::with_capacity(photon_count);
        let mut stack: Occupation = Vec::new();
        for n in 0..=max_total_photons {
            enumerate_occupations(mode_count, n, 0, &mut stack, &mut photon_states);
        }
        debug_assert_eq!(photon_states.len(), photon_count);
        let photon_index =
            photon_states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Arc::new(Self { mode_count, max_total_photons, photon_states, photon_index }))
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn max_total_photons(&self) -> usize {
        self.max_total_photons
    }

    pub fn dimension(&self) -> usize {
        4 * self.photon_states.len()
    }

    pub fn photon_state_count(&self) -> usize {
        self.photon_states.len()
    }

    pub fn photon_states(&self) -> &[Occupation] {
        &self.photon_states
    }

    pub fn label(&self, index: usize) -> BasisLabel<'_> {
        let p = self.photon_states.len();
        let (block, photon) = (index / p, index % p);
        let to_state = |bit| if bit { QubitState::Excited } else { QubitState::Ground };
        BasisLabel {
            qubit_a: to_state(block & 0b10 != 0),
            qubit_b: to_state(block & 0b01 != 0),
            photons: &self.photon_states[photon],
        }
    }

    pub fn index(&self, label: BasisLabel<'_>) -> Option<usize> {
        let p = *self.photon_index.get(label.photons)?;
        Some(qubit_block(label.qubit_a, label.qubit_b) * self.photon_states.len() + p)
    }

    /// Index of the photon-vacuum state with the given qubit configuration.
    pub fn vacuum_index(&self, qubit_a: QubitState, qubit_b: QubitState) -> usize {
        qubit_block(qubit_a, qubit_b) * self.photon_states.len()
    }

    pub fn photon_state_index(&self, occ: &Occupation) -> Option<usize> {
        self.photon_index.get(occ).copied()
    }

    fn total_photons(occ: &[(u16, u8)]) -> usize {
        occ.iter().map(|&(_, c)| c as usize).sum()
    }
}

fn enumerate_occupations(
    mode_count: usize,
    remaining: usize,
    first_mode: usize,
    stack: &mut Occupation,
    out: &mut Vec<Occupation>,
) {
    if remaining == 0 {
        out.push(stack.clone());
        return;
    }
    for mode in first_mode..mode_count {
        for count in 1..=remaining {
            stack.push((mode as u16, count as u8));
            enumerate_occupations(mode_count, remaining - count, mode + 1, stack, out);
            stack.pop();
        }
    }
}

/// Binomial coefficient, saturating only through u128 intermediates.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Complex state vector over a [`FockBasis`].
#[derive(Debug, Clone)]
pub struct StateVector<T> {
    amplitudes: Vec<C<T>>,
    basis: Arc<FockBasis>,
}

impl<T: Real> StateVector<T> {
    pub fn from_amplitudes(amplitudes: Vec<C<T>>, basis: Arc<FockBasis>) -> Result<Self> {
        if amplitudes.len() != basis.dimension() {
            return Err(Error::invalid(format!(
                "amplitude length {} does not match basis dimension {}",
                amplitudes.len(),
                basis.dimension()
            )));
        }
        Ok(Self { amplitudes, basis })
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C<T>] {
        &mut self.amplitudes
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).fold(T::zero(), |s, x| s + x).sqrt()
    }

    /// Conjugated inner product ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> C<T> {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * *b)
            .fold(C::new(T::zero(), T::zero()), |s, x| s + x)
    }
}

/// (|e_A g_B, 0⟩ + |g_A e_B, 0⟩)/√2: one excitation, which atom undefined.
pub fn switch_state<T: Real>(basis: &Arc<FockBasis>) -> StateVector<T> {
    let mut amplitudes = vec![C::new(T::zero(), T::zero()); basis.dimension()];
    let w = T::one() / T::of(2.0).sqrt();
    amplitudes[basis.vacuum_index(QubitState::Excited, QubitState::Ground)] =
        C::new(w, T::zero());
    amplitudes[basis.vacuum_index(QubitState::Ground, QubitState::Excited)] =
        C::new(w, T::zero());
    StateVector { amplitudes, basis: Arc::clone(basis) }
}

/// Photon-vacuum product state with definite qubit configuration.
pub fn product_state<T: Real>(
    basis: &Arc<FockBasis>,
    qubit_a: QubitState,
    qubit_b: QubitState,
) -> StateVector<T> {
    let mut amplitudes = vec![C::new(T::zero(), T::zero()); basis.dimension()];
    amplitudes[basis.vacuum_index(qubit_a, qubit_b)] = C::new(T::one(), T::zero());
    StateVector { amplitudes, basis: Arc::clone(basis) }
}

/// Sparse Hermitian Hamiltonian in CSR form, with the parameters it was
/// assembled from.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian<T> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<C<T>>,
    qubit_a: QubitParams<T>,
    qubit_b: QubitParams<T>,
    grid: FieldGrid<T>,
    basis: Arc<FockBasis>,
}

impl<T: Real> SparseHamiltonian<T> {
    /// Assemble H = H_0 + H_I on the truncated basis.
    ///
    /// Matrix elements that would leave the n ≤ n_max sector are dropped.
    /// Hermiticity holds exactly as stored: paired entries are computed from
    /// the same real products and conjugate phases.
    pub fn assemble(
        qubit_a: &QubitParams<T>,
        qubit_b: &QubitParams<T>,
        grid: &FieldGrid<T>,
        basis: &Arc<FockBasis>,
    ) -> Result<Self> {
        if grid.mode_count() != basis.mode_count() {
            return Err(Error::invalid(format!(
                "grid has {} modes but basis was built for {}",
                grid.mode_count(),
                basis.mode_count()
            )));
        }
        let modes = grid.mode_count();
        let photon_count = basis.photon_state_count();
        let dim = basis.dimension();
        let half = T::of(0.5);

        // Per-atom, per-mode coupling amplitude d_i·g_j and phase e^{i k_j x_i}.
        // The dipole and coupling enter only through their product.
        let atoms = [qubit_a, qubit_b];
        let mut amp = [Vec::with_capacity(modes), Vec::with_capacity(modes)];
        let mut phase = [Vec::with_capacity(modes), Vec::with_capacity(modes)];
        for (i, q) in atoms.iter().enumerate() {
            for j in 0..modes {
                amp[i].push(q.dipole * grid.couplings()[j]);
                let arg = grid.momenta()[j] * q.position;
                phase[i].push(C::new(arg.cos(), arg.sin()));
            }
        }

        let photon_energy: Vec<T> = basis
            .photon_states()
            .iter()
            .map(|occ| {
                occ.iter().fold(T::zero(), |acc, &(m, c)| {
                    acc + grid.freqs()[m as usize] * T::of_usize(c as usize)
                })
            })
            .collect();

        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols: Vec<u32> = Vec::new();
        let mut vals: Vec<C<T>> = Vec::new();
        row_ptr.push(0);

        let mut entries: Vec<(u32, C<T>)> = Vec::new();
        let mut scratch: Occupation = Vec::new();
        for block in 0..4usize {
            let sign = |bit: bool| if bit { T::one() } else { -T::one() };
            let qubit_energy = half * qubit_a.omega * sign(block & 0b10 != 0)
                + half * qubit_b.omega * sign(block & 0b01 != 0);
            for p in 0..photon_count {
                entries.clear();
                let row = block * photon_count + p;
                entries.push((row as u32, C::new(qubit_energy + photon_energy[p], T::zero())));
                let occ = &basis.photon_states()[p];
                let total = FockBasis::total_photons(occ);
                for (i, flip) in [(0usize, 0b10usize), (1, 0b01)] {
                    if atoms[i].dipole == T::zero() {
                        continue;
                    }
                    let col_block = (block ^ flip) * photon_count;
                    // a†_j on the column state: column has one fewer photon.
                    if total >= 1 {
                        for &(m, c) in occ.iter() {
                            let j = m as usize;
                            occupation_with(occ, m, c as i32 - 1, &mut scratch);
                            let q = basis.photon_state_index(&scratch).expect("basis closed");
                            let s = amp[i][j] * T::of_usize(c as usize).sqrt();
                            // -i·g·d·conj(φ)·√n attached to the a† transition.
                            let v = C::new(-s * phase[i][j].im, -s * phase[i][j].re);
                            entries.push(((col_block + q) as u32, v));
                        }
                    }
                    // a_j on the column state: column has one more photon.
                    if total < basis.max_total_photons() {
                        for j in 0..modes {
                            let n = occ
                                .iter()
                                .find(|&&(m, _)| m as usize == j)
                                .map_or(0, |&(_, c)| c as i32);
                            occupation_with(occ, j as u16, n + 1, &mut scratch);
                            let q = basis.photon_state_index(&scratch).expect("basis closed");
                            let s = amp[i][j] * T::of_usize(n as usize + 1).sqrt();
                            // +i·g·d·φ·√(n+1) attached to the a transition.
                            let v = C::new(-s * phase[i][j].im, s * phase[i][j].re);
                            entries.push(((col_block + q) as u32, v));
                        }
                    }
                }
                entries.sort_unstable_by_key(|&(c, _)| c);
                for &(c, v) in &entries {
                    cols.push(c);
                    vals.push(v);
                }
                row_ptr.push(cols.len());
            }
        }

        Ok(Self {
            dim,
            row_ptr,
            cols,
            vals,
            qubit_a: *qubit_a,
            qubit_b: *qubit_b,
            grid: grid.clone(),
            basis: Arc::clone(basis),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn grid(&self) -> &FieldGrid<T> {
        &self.grid
    }

    pub fn qubit(&self, atom: Atom) -> &QubitParams<T> {
        match atom {
            Atom::A => &self.qubit_a,
            Atom::B => &self.qubit_b,
        }
    }

    /// Stored entries of one row, as (column, value) pairs sorted by column.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C<T>)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.vals[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// y = H·x.
    pub fn matvec(&self, x: &[C<T>], y: &mut [C<T>]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for r in 0..self.dim {
            let mut acc = C::new(T::zero(), T::zero());
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[idx] * x[self.cols[idx] as usize];
            }
            y[r] = acc;
        }
    }

    /// ⟨ψ|H|ψ⟩ (real part; the imaginary part vanishes for Hermitian H).
    pub fn expectation(&self, psi: &StateVector<T>) -> T {
        let mut hx = vec![C::new(T::zero(), T::zero()); self.dim];
        self.matvec(psi.amplitudes(), &mut hx);
        psi.amplitudes()
            .iter()
            .zip(&hx)
            .map(|(a, b)| (a.conj() * *b).re)
            .fold(T::zero(), |s, x| s + x)
    }

    /// Largest deviation from Hermriticity among stored entries, exact lookup.
    pub fn hermiticity_defect(&self) -> T {
        let mut worst = T::zero();
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                let mirror = self
                    .row(c)
                    .find(|&(cc, _)| cc == r)
                    .map_or(C::new(T::zero(), T::zero()), |(_, m)| m);
                let d = (v - mirror.conj()).norm_sqr().sqrt();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<C<T>> {
        let mut m = DMatrix::from_element(self.dim, self.dim, C::new(T::zero(), T::zero()));
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Export the stored entries in the documented triplet text format.
    pub fn write_triplets<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = String::new();
        let _ = writeln!(header, "# lightcone sparse hamiltonian v1");
        let _ = writeln!(header, "# dimension {}", self.dim);
        let _ = writeln!(header, "# nnz {}", self.nnz());
        let _ = writeln!(
            header,
            "# qubit_a omega={:.17e} dipole={:.17e} position={:.17e}",
            self.qubit_a.omega, self.qubit_a.dipole, self.qubit_a.position
        );
        let _ = writeln!(
            header,
            "# qubit_b omega={:.17e} dipole={:.17e} position={:.17e}",
            self.qubit_b.omega, self.qubit_b.dipole, self.qubit_b.position
        );
        let _ = writeln!(
            header,
            "# grid modes={} dk={:.17e} speed={:.17e} normalization={:.17e}",
            self.grid.mode_count(),
            self.grid.dk(),
            self.grid.speed(),
            self.grid.normalization()
        );
        let _ = writeln!(header, "# basis n_max={}", self.basis.max_total_photons());
        let _ = writeln!(header, "# format: row col re im (0-based)");
        w.write_all(header.as_bytes())?;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                writeln!(w, "{} {} {:.17e} {:.17e}", r, c, v.re, v.im)?;
            }
        }
        Ok(())
    }
}

fn occupation_with(occ: &[(u16, u8)], mode: u16, count: i32, out: &mut Occupation) {
    debug_assert!(count >= 0);
    out.clear();
    let mut placed = false;
    for &(m, c) in occ {
        if m == mode {
            placed = true;
            if count > 0 {
                out.push((m, count as u8));
            }
        } else {
            if !placed && m > mode && count > 0 {
                out.push((mode, count as u8));
                placed = true;
            }
            out.push((m, c));
        }
    }
    if !placed && count > 0 {
        out.push((mode, count as u8));
    }
}

/// Full parameter record of one simulation setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetupParams<T> {
    pub qubit_a: QubitParams<T>,
    pub qubit_b: QubitParams<T>,
    pub speed: T,
    pub normalization: T,
    pub mode_count: usize,
    pub k_max: T,
    pub max_total_photons: usize,
}

impl<T: Real> SetupParams<T> {
    /// Signed atom separation r = x_B − x_A.
    pub fn separation(&self) -> T {
        self.qubit_b.position - self.qubit_a.position
    }

    pub fn build_grid(&self) -> Result<FieldGrid<T>> {
        FieldGrid::build(self.mode_count, self.k_max, self.speed, self.normalization)
    }

    pub fn build(&self) -> Result<(FieldGrid<T>, Arc<FockBasis>, SparseHamiltonian<T>)> {
        let grid = self.build_grid()?;
        let basis = FockBasis::build(self.mode_count, self.max_total_photons)?;
        let h = SparseHamiltonian::assemble(&self.qubit_a, &self.qubit_b, &grid, &basis)?;
        Ok((grid, basis, h))
    }
}

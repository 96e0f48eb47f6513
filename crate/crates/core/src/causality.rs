//! Paired-run causality experiments.
//!
//! "Independent of atom B" is operationalized as the discrepancy between two
//! simulations that differ only in atom B. Before the light-cone time r/c
//! the discrepancy is a discretization artifact that shrinks with grid
//! resolution; after it, the cross term of the leading-order prediction
//! becomes the dominant B-dependent signal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{evolve, PropagatorConfig};
use crate::model::{product_state, switch_state, QubitState, SetupParams, StateVector};
use crate::observables::{excitation_probability, InitialState, ProbabilityTrace};
use crate::model::Atom;
use crate::scalar::Real;

/// How the varied run differs from the base run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Variation<T> {
    /// d_B = 0: atom B decoupled entirely.
    RemoveB,
    /// Ω_B scaled by the given factor.
    ShiftOmegaB(T),
    /// d_B → −d_B: flips the sign of the d_A·d_B cross term.
    FlipDbSign,
}

/// Fraction of the pre-cone window excluded next to the cone; finite-k_max
/// fields ripple over a width ~1/(c·k_max) around it.
pub const DEFAULT_PRE_CONE_MARGIN: f64 = 0.1;

/// Empirical per-trace noise floor from propagator tolerances.
pub fn noise_floor<T: Real>() -> T {
    T::of(1e-8)
}

/// One rung of a resolution ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridResolution<T> {
    pub mode_count: usize,
    pub k_max: T,
    pub max_total_photons: usize,
}

/// Pre-cone discrepancy of one ladder rung.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry<T> {
    pub resolution: GridResolution<T>,
    pub pre_cone_max: T,
}

/// Conservation diagnostics of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceDiagnostics<T> {
    pub max_norm_drift: T,
    pub energy_rel_drift: T,
}

/// Outcome of a paired causality run, with full provenance of both runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CausalityReport<T> {
    pub variation: Variation<T>,
    pub base: ProbabilityTrace<T>,
    pub varied: ProbabilityTrace<T>,
    pub base_diagnostics: TraceDiagnostics<T>,
    pub varied_diagnostics: TraceDiagnostics<T>,
    pub times: Vec<T>,
    /// ε(t) = |P_eA^{base}(t) − P_eA^{varied}(t)|.
    pub epsilon: Vec<T>,
    pub cone_time: T,
    /// Pre-cone window is t < (1 − margin)·cone_time.
    pub margin: T,
    pub pre_cone_max: T,
    /// Absent when no sample lies beyond the cone.
    pub post_cone_max: Option<T>,
    pub convergence: Vec<ConvergenceEntry<T>>,
    /// Set by convergence studies: pre_cone_max non-increasing within noise.
    pub monotone_decreasing: Option<bool>,
}

/// Build the configured initial state.
pub fn initial_state_vector<T: Real>(
    basis: &std::sync::Arc<crate::model::FockBasis>,
    kind: InitialState,
) -> StateVector<T> {
    match kind {
        InitialState::Switch => switch_state(basis),
        InitialState::ExcitedA => product_state(basis, QubitState::Excited, QubitState::Ground),
        InitialState::ExcitedB => product_state(basis, QubitState::Ground, QubitState::Excited),
    }
}

/// Evolve one setup and collect the probability trace plus conservation
/// diagnostics.
pub fn simulate_trace<T: Real>(
    setup: &SetupParams<T>,
    initial_state: InitialState,
    t_grid: &[T],
    cfg: &PropagatorConfig<T>,
) -> Result<(ProbabilityTrace<T>, TraceDiagnostics<T>)> {
    let (_, basis, h) = setup.build()?;
    let psi0 = initial_state_vector::<T>(&basis, initial_state);
    let states = evolve(&h, &psi0, t_grid, cfg)?;
    let mut p_a = Vec::with_capacity(states.len());
    let mut p_b = Vec::with_capacity(states.len());
    let mut max_norm_drift = T::zero();
    let mut max_energy_dev = T::zero();
    let e0 = h.expectation(&psi0);
    let mut h_psi = vec![crate::C::new(T::zero(), T::zero()); h.dimension()];
    h.matvec(psi0.amplitudes(), &mut h_psi);
    let scale = h_psi
        .iter()
        .map(|a| a.norm_sqr())
        .fold(T::zero(), |s, v| s + v)
        .sqrt()
        .max(T::default_epsilon());
    for s in &states {
        p_a.push(excitation_probability(s, Atom::A));
        p_b.push(excitation_probability(s, Atom::B));
        max_norm_drift = max_norm_drift.max((s.norm() - T::one()).abs());
        max_energy_dev = max_energy_dev.max((h.expectation(s) - e0).abs());
    }
    let trace =
        ProbabilityTrace::new(t_grid.to_vec(), p_a, p_b, *setup, initial_state, *cfg)?;
    let diag = TraceDiagnostics { max_norm_drift, energy_rel_drift: max_energy_dev / scale };
    Ok((trace, diag))
}

fn varied_setup<T: Real>(setup: &SetupParams<T>, variation: Variation<T>) -> SetupParams<T> {
    let mut v = *setup;
    match variation {
        Variation::RemoveB => v.qubit_b.dipole = T::zero(),
        Variation::ShiftOmegaB(factor) => v.qubit_b.omega *= factor,
        Variation::FlipDbSign => v.qubit_b.dipole = -v.qubit_b.dipole,
    }
    v
}

/// Check the periodic-image precondition: the box must be long enough that
/// nothing wraps around and reaches the atoms within the simulated window.
fn check_wraparound<T: Real>(setup: &SetupParams<T>, t_max: T) -> Result<()> {
    let grid = setup.build_grid()?;
    let r = setup.separation().abs();
    let limit = (grid.box_length() - r) / setup.speed;
    if !(t_max < limit) {
        return Err(Error::invalid(format!(
            "t_max {t_max} reaches periodic images; limit is (L - r)/c = {limit} \
             (L = {}, r = {r})",
            grid.box_length()
        )));
    }
    Ok(())
}

/// Run the base and varied simulations and assemble the discrepancy report.
pub fn run_paired<T: Real>(
    setup: &SetupParams<T>,
    initial_state: InitialState,
    variation: Variation<T>,
    t_grid: &[T],
    cfg: &PropagatorConfig<T>,
    margin: T,
) -> Result<CausalityReport<T>> {
    if t_grid.is_empty() {
        return Err(Error::invalid("t_grid must not be empty"));
    }
    let t_max = t_grid[t_grid.len() - 1];
    check_wraparound(setup, t_max)?;
    let varied = varied_setup(setup, variation);

    let (base_run, varied_run) = std::thread::scope(|scope| {
        let base = scope.spawn(|| simulate_trace(setup, initial_state, t_grid, cfg));
        let var = scope.spawn(|| simulate_trace(&varied, initial_state, t_grid, cfg));
        (base.join().expect("base run panicked"), var.join().expect("varied run panicked"))
    });
    let (base, base_diagnostics) = base_run?;
    let (varied, varied_diagnostics) = varied_run?;

    let cone_time = setup.separation().abs() / setup.speed;
    let epsilon: Vec<T> = base
        .p_e_a
        .iter()
        .zip(&varied.p_e_a)
        .map(|(a, b)| (*a - *b).abs())
        .collect();
    let pre_limit = cone_time * (T::one() - margin);
    let mut pre_cone_max = T::zero();
    let mut post_cone_max: Option<T> = None;
    for (&t, &e) in t_grid.iter().zip(&epsilon) {
        if t < pre_limit {
            pre_cone_max = pre_cone_max.max(e);
        }
        if t > cone_time {
            post_cone_max = Some(post_cone_max.map_or(e, |m| m.max(e)));
        }
    }
    Ok(CausalityReport {
        variation,
        base,
        varied,
        base_diagnostics,
        varied_diagnostics,
        times: t_grid.to_vec(),
        epsilon,
        cone_time,
        margin,
        pre_cone_max,
        post_cone_max,
        convergence: Vec::new(),
        monotone_decreasing: None,
    })
}

/// Least-squares slope of the d_B-odd part [P_eA^{+d_B} − P_eA^{−d_B}]/2
/// over a window past the light cone.
///
/// The odd part isolates the cross term; its slope compares against
/// 2π·d_A·d_B·N·Ω/c.
pub fn cross_term_slope_fit<T: Real>(
    plus: &ProbabilityTrace<T>,
    minus: &ProbabilityTrace<T>,
    window: (T, T),
) -> Result<T> {
    if plus.times != minus.times {
        return Err(Error::invalid("paired traces must share the same time grid"));
    }
    let cone = plus.setup.separation().abs() / plus.setup.speed;
    let (w0, w1) = window;
    if !(w0 >= cone) {
        return Err(Error::invalid(format!(
            "fit window must start at or after the light cone r/c = {cone}, got {w0}"
        )));
    }
    if !(w1 > w0) {
        return Err(Error::invalid("fit window must have positive length"));
    }
    let pts: Vec<(T, T)> = plus
        .times
        .iter()
        .zip(plus.p_e_a.iter().zip(&minus.p_e_a))
        .filter(|(&t, _)| t > w0 && t <= w1)
        .map(|(&t, (&p, &m))| (t, (p - m) * T::of(0.5)))
        .collect();
    if pts.len() < 4 {
        return Err(Error::invalid(format!(
            "fit window contains {} samples; at least 4 required",
            pts.len()
        )));
    }
    let n = T::of_usize(pts.len());
    let t_mean = pts.iter().fold(T::zero(), |s, &(t, _)| s + t) / n;
    let y_mean = pts.iter().fold(T::zero(), |s, &(_, y)| s + y) / n;
    let mut num = T::zero();
    let mut den = T::zero();
    for &(t, y) in &pts {
        num += (t - t_mean) * (y - y_mean);
        den += (t - t_mean) * (t - t_mean);
    }
    Ok(num / den)
}

/// Repeat the paired experiment over a resolution ladder, recording the
/// pre-cone discrepancy of every rung.
pub fn convergence_study<T: Real>(
    setup: &SetupParams<T>,
    initial_state: InitialState,
    variation: Variation<T>,
    grids: &[GridResolution<T>],
    t_grid: &[T],
    cfg: &PropagatorConfig<T>,
    margin: T,
) -> Result<CausalityReport<T>> {
    if grids.is_empty() {
        return Err(Error::invalid("convergence study needs at least one resolution"));
    }
    let mut entries = Vec::with_capacity(grids.len());
    let mut last_report = None;
    for res in grids {
        let rung = SetupParams {
            mode_count: res.mode_count,
            k_max: res.k_max,
            max_total_photons: res.max_total_photons,
            ..*setup
        };
        let report = run_paired(&rung, initial_state, variation, t_grid, cfg, margin)?;
        entries.push(ConvergenceEntry { resolution: *res, pre_cone_max: report.pre_cone_max });
        last_report = Some(report);
    }
    let noise = noise_floor::<T>();
    let monotone = entries
        .windows(2)
        .all(|w| w[1].pre_cone_max <= w[0].pre_cone_max + noise * T::of(2.0));
    let mut report = last_report.expect("at least one rung ran");
    report.convergence = entries;
    report.monotone_decreasing = Some(monotone);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QubitParams;

    fn setup(d: f64, modes: usize, k_max: f64, n_max: usize) -> SetupParams<f64> {
        SetupParams {
            qubit_a: QubitParams { omega: 1.0, dipole: d, position: 0.0 },
            qubit_b: QubitParams { omega: 1.0, dipole: d, position: 0.15 },
            speed: 1.0,
            normalization: 1.0,
            mode_count: modes,
            k_max,
            max_total_photons: n_max,
        }
    }

    fn uniform_grid(t_max: f64, samples: usize) -> Vec<f64> {
        (0..samples).map(|i| t_max * i as f64 / (samples - 1) as f64).collect()
    }

    fn cfg() -> PropagatorConfig<f64> {
        PropagatorConfig::default_with_dt(0.005)
    }

    #[test]
    fn decoupled_atom_a_sees_nothing() {
        let mut s = setup(0.02, 16, 5.0, 2);
        s.qubit_a.dipole = 0.0;
        let grid = uniform_grid(0.3, 13);
        let report = run_paired(
            &s,
            InitialState::Switch,
            Variation::RemoveB,
            &grid,
            &cfg(),
            0.1,
        )
        .unwrap();
        for &e in &report.epsilon {
            assert!(e <= 1e-13, "epsilon {e} should be machine-level");
        }
    }

    #[test]
    fn inside_cone_grid_has_no_post_cone_stat() {
        let s = setup(0.02, 32, 10.0, 2);
        let grid = uniform_grid(0.1, 9); // r/c = 0.15, all samples inside
        let report = run_paired(
            &s,
            InitialState::Switch,
            Variation::RemoveB,
            &grid,
            &cfg(),
            0.1,
        )
        .unwrap();
        assert!(report.post_cone_max.is_none());
        // Resolution-limited bound, empirically calibrated for (M, k_max).
        assert!(report.pre_cone_max <= 1e-4, "pre_cone_max {}", report.pre_cone_max);
    }

    #[test]
    fn sign_flip_lights_up_after_the_cone() {
        // Needs a converged grid: the pre-cone tail shrinks with k_max while
        // the post-cone cross term stays finite.
        let s = setup(0.02, 128, 28.284271247461903, 2);
        let grid = uniform_grid(0.3, 31);
        let report = run_paired(
            &s,
            InitialState::Switch,
            Variation::FlipDbSign,
            &grid,
            &cfg(),
            0.1,
        )
        .unwrap();
        let post = report.post_cone_max.expect("samples past the cone");
        assert!(
            post > 10.0 * report.pre_cone_max,
            "post {post} vs pre {}",
            report.pre_cone_max
        );
    }

    #[test]
    fn wraparound_precondition_enforced() {
        let s = setup(0.02, 8, 4.0, 1); // dk = 1 → L = 2π ≈ 6.28
        let grid = uniform_grid(7.0, 8);
        let err = run_paired(
            &s,
            InitialState::Switch,
            Variation::RemoveB,
            &grid,
            &cfg(),
            0.1,
        )
        .unwrap_err();
        match err {
            Error::InvalidArgument(msg) => assert!(msg.contains("limit"), "{msg}"),
            other => panic!("expected argument error, got {other:?}"),
        }
    }

    #[test]
    fn slope_fit_validations() {
        let s = setup(0.02, 8, 4.0, 1);
        let grid = uniform_grid(0.3, 16);
        let (plus, _) = simulate_trace(&s, InitialState::Switch, &grid, &cfg()).unwrap();
        let minus_setup = varied_setup(&s, Variation::FlipDbSign);
        let (minus, _) = simulate_trace(&minus_setup, InitialState::Switch, &grid, &cfg()).unwrap();
        // Window starting before the cone is rejected.
        assert!(cross_term_slope_fit(&plus, &minus, (0.05, 0.3)).is_err());
        // Too few samples rejected.
        assert!(cross_term_slope_fit(&plus, &minus, (0.28, 0.3)).is_err());
        // A valid window works.
        assert!(cross_term_slope_fit(&plus, &minus, (0.15, 0.3)).is_ok());
    }

    #[test]
    fn slope_is_zero_without_b_dipole() {
        let mut s = setup(0.02, 16, 5.0, 1);
        s.qubit_b.dipole = 0.0;
        let grid = uniform_grid(0.3, 16);
        let (a, _) = simulate_trace(&s, InitialState::Switch, &grid, &cfg()).unwrap();
        let (b, _) = simulate_trace(&s, InitialState::Switch, &grid, &cfg()).unwrap();
        let slope = cross_term_slope_fit(&a, &b, (0.15, 0.3)).unwrap();
        assert_eq!(slope, 0.0);
    }

    #[test]
    fn reports_are_deterministic() {
        let s = setup(0.02, 16, 5.0, 2);
        let grid = uniform_grid(0.3, 11);
        let r1 = run_paired(&s, InitialState::Switch, Variation::RemoveB, &grid, &cfg(), 0.1)
            .unwrap();
        let r2 = run_paired(&s, InitialState::Switch, Variation::RemoveB, &grid, &cfg(), 0.1)
            .unwrap();
        assert_eq!(r1.epsilon, r2.epsilon);
        assert_eq!(r1.base.p_e_a, r2.base.p_e_a);
        assert_eq!(r1.pre_cone_max, r2.pre_cone_max);
    }

    #[test]
    fn convergence_ladder_records_every_rung() {
        let s = setup(0.02, 8, 4.0, 1);
        let grid = uniform_grid(0.12, 7);
        let ladder = [
            GridResolution { mode_count: 8, k_max: 4.0, max_total_photons: 1 },
            GridResolution { mode_count: 16, k_max: 4.0, max_total_photons: 1 },
        ];
        let report = convergence_study(
            &s,
            InitialState::Switch,
            Variation::RemoveB,
            &ladder,
            &grid,
            &cfg(),
            0.1,
        )
        .unwrap();
        assert_eq!(report.convergence.len(), 2);
        assert!(report.monotone_decreasing.is_some());
        // Coarsest rung reports a finite artifact, honestly nonzero.
        assert!(report.convergence[0].pre_cone_max > 0.0);
    }

    #[test]
    fn doubling_modes_at_fixed_kmax_does_not_grow_precone() {
        let s = setup(0.02, 32, 10.0, 1);
        let grid = uniform_grid(0.135, 10);
        let ladder = [
            GridResolution { mode_count: 32, k_max: 10.0, max_total_photons: 1 },
            GridResolution { mode_count: 64, k_max: 10.0, max_total_photons: 1 },
        ];
        let report = convergence_study(
            &s,
            InitialState::Switch,
            Variation::RemoveB,
            &ladder,
            &grid,
            &cfg(),
            0.1,
        )
        .unwrap();
        let e = &report.convergence;
        assert!(
            e[1].pre_cone_max <= e[0].pre_cone_max * 1.05 + 2.0 * noise_floor::<f64>(),
            "{} then {}",
            e[0].pre_cone_max,
            e[1].pre_cone_max
        );
    }

    #[test]
    fn photon_cap_step_shifts_traces_weakly() {
        let s = setup(0.02, 32, 10.0, 1);
        let grid = uniform_grid(0.3, 13);
        let (t1, _) = simulate_trace(&s, InitialState::Switch, &grid, &cfg()).unwrap();
        let s2 = SetupParams { max_total_photons: 2, ..s };
        let (t2, _) = simulate_trace(&s2, InitialState::Switch, &grid, &cfg()).unwrap();
        let max_shift = t1
            .p_e_a
            .iter()
            .zip(&t2.p_e_a)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_shift <= 1e-4, "n_max 1→2 shift {max_shift}");
    }
}

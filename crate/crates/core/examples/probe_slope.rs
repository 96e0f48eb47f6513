//! Scratch probe: d_B-odd slope fit vs the closed-form coefficient.

use lightcone::causality::{cross_term_slope_fit, simulate_trace, Variation};
use lightcone::evolve::PropagatorConfig;
use lightcone::model::{QubitParams, SetupParams};
use lightcone::observables::InitialState;

fn main() {
    let plus = SetupParams {
        qubit_a: QubitParams { omega: 1.0, dipole: 0.02, position: 0.0 },
        qubit_b: QubitParams { omega: 1.0, dipole: 0.02, position: 0.15 },
        speed: 1.0,
        normalization: 1.0,
        mode_count: 256,
        k_max: 40.0,
        max_total_photons: 2,
    };
    let minus = SetupParams {
        qubit_b: QubitParams { dipole: -0.02, ..plus.qubit_b },
        ..plus
    };
    let t_grid: Vec<f64> = (0..=60).map(|i| 0.3 * i as f64 / 60.0).collect();
    let cfg = PropagatorConfig::default_with_dt(0.005);
    let prediction = 2.0 * std::f64::consts::PI * 0.02 * 0.02 * 1.0 * 1.0 / 1.0;

    for state in [InitialState::Switch, InitialState::ExcitedA] {
        let (tp, _) = simulate_trace(&plus, state, &t_grid, &cfg).unwrap();
        let (tm, _) = simulate_trace(&minus, state, &t_grid, &cfg).unwrap();
        let slope = cross_term_slope_fit(&tp, &tm, (0.15, 0.3)).unwrap();
        println!(
            "{state:?}: slope={slope:.6e}  prediction={prediction:.6e}  ratio={:.4}",
            slope / prediction
        );
        // Odd part vs t for inspection.
        if state == InitialState::Switch {
            for i in (30..=60).step_by(5) {
                let odd = (tp.p_e_a[i] - tm.p_e_a[i]) / 2.0;
                let ramp = prediction * (t_grid[i] - 0.15).max(0.0);
                let shifted = prediction * (t_grid[i] - 0.30);
                println!(
                    "  t={:.3} odd={odd:+.4e}  eq24_ramp={ramp:+.4e}  shifted_ramp={shifted:+.4e}",
                    t_grid[i]
                );
            }
        }
    }
    // Also the M=64 default grid for comparison.
    let plus64 = SetupParams { mode_count: 64, k_max: 20.0, ..plus };
    let minus64 = SetupParams { mode_count: 64, k_max: 20.0, ..minus };
    let (tp, _) = simulate_trace(&plus64, InitialState::Switch, &t_grid, &cfg).unwrap();
    let (tm, _) = simulate_trace(&minus64, InitialState::Switch, &t_grid, &cfg).unwrap();
    let slope = cross_term_slope_fit(&tp, &tm, (0.15, 0.3)).unwrap();
    println!("Switch M=64: slope={slope:.6e}  ratio={:.4}", slope / prediction);
}

//! Scratch probe: pre-cone discrepancy across resolution ladders.

use lightcone::causality::{run_paired, Variation};
use lightcone::evolve::PropagatorConfig;
use lightcone::model::{QubitParams, SetupParams};
use lightcone::observables::InitialState;

fn main() {
    let base = SetupParams {
        qubit_a: QubitParams { omega: 1.0, dipole: 0.02, position: 0.0 },
        qubit_b: QubitParams { omega: 1.0, dipole: 0.02, position: 0.15 },
        speed: 1.0,
        normalization: 1.0,
        mode_count: 64,
        k_max: 20.0,
        max_total_photons: 2,
    };
    let t_grid: Vec<f64> = (0..=60).map(|i| 0.3 * i as f64 / 60.0).collect();
    let cfg = PropagatorConfig::default_with_dt(0.005);

    println!("=== ladder A: fixed k_max*dk (spec reading), margins 0.1 / 0.3 / 0.5 ===");
    for (m, k) in [(64usize, 20.0f64), (128, 800.0f64.sqrt()), (256, 40.0)] {
        let s = SetupParams { mode_count: m, k_max: k, ..base };
        for margin in [0.1, 0.3, 0.5] {
            let rep =
                run_paired(&s, InitialState::Switch, Variation::RemoveB, &t_grid, &cfg, margin)
                    .unwrap();
            println!(
                "M={m:4} k_max={k:8.4} margin={margin}  pre_cone_max={:.6e}",
                rep.pre_cone_max
            );
        }
    }

    println!("=== ladder B: fixed k_max=20, doubling M ===");
    for m in [64usize, 128, 256] {
        let s = SetupParams { mode_count: m, ..base };
        let rep = run_paired(&s, InitialState::Switch, Variation::RemoveB, &t_grid, &cfg, 0.1)
            .unwrap();
        println!("M={m:4} k_max=20  pre_cone_max={:.6e}", rep.pre_cone_max);
    }
}

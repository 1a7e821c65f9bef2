use inertia_suc::domain::{gb_reference_fleet, validate_fleet, SystemParams};
use inertia_suc::frequency::KStarCache;
use inertia_suc::milp::{solve_lp, solve_milp};
use inertia_suc::scenario::{build_tree, QuantileSpec, WindProcess};
use inertia_suc::scheduler::{build_suc, FleetState, SucConfig};
use std::time::Instant;

fn main() {
    let full = validate_fleet(gb_reference_fleet(), SystemParams::default()).unwrap();
    let desk = full.scaled_mw(0.1);
    let wind = WindProcess {
        capacity: 3000.0,
        mean_cf: 0.35,
        persistence: 0.95,
        sigma_step: 0.05,
        seed: 11,
    };
    let mut config = SucConfig::new(
        desk,
        QuantileSpec::new(vec![0.1, 0.5, 0.9]).unwrap(),
        wind,
    );
    config.horizon = 6;
    let demand: Vec<f64> = (0..7).map(|t| 2600.0 + 150.0 * t as f64).collect();
    let tree = build_tree(&config.wind, 800.0, &demand, &config.quantiles, 6).unwrap();
    let state = FleetState::all_online(config.system.classes());
    let cache = KStarCache::new();
    let t0 = Instant::now();
    let build = build_suc(&config, &tree, &state, &cache, &[]).unwrap();
    println!(
        "built: {} vars, {} rows in {:?}",
        build.model.num_variables(),
        build.model.num_constraints(),
        t0.elapsed()
    );
    let t0 = Instant::now();
    let lp = solve_lp(&build.model).unwrap();
    println!("LP: {:?} obj {:.2} in {:?}", lp.status, lp.objective, t0.elapsed());
    let t0 = Instant::now();
    let sol = solve_milp(&build.model, &config.milp).unwrap();
    println!(
        "MILP: {:?} obj {:.2} gap {:.2e} nodes {} in {:?}",
        sol.status,
        sol.objective,
        sol.gap,
        sol.nodes_explored,
        t0.elapsed()
    );
}

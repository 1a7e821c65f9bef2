use inertia_suc::milp::{solve_lp, solve_milp, MilpOptions, SolveStatus};

fn main() {
    // Reload the dumped hour-4 model via the LP text? Simpler: rebuild the same scenario.
    use inertia_suc::domain::{gb_reference_fleet, validate_fleet, SystemParams};
    use inertia_suc::frequency::KStarCache;
    use inertia_suc::scenario::{build_tree, QuantileSpec, WindProcess};
    use inertia_suc::scheduler::{build_suc, steady_state_commitment, FleetState, SucConfig};

    let full = validate_fleet(gb_reference_fleet(), SystemParams::default()).unwrap();
    let desk = full.scaled_mw(0.1);
    let params = SystemParams { wind_capacity: 1200.0, ..desk.params().clone() };
    let system = desk.with_params(params).unwrap();
    let wind_proc = WindProcess { capacity: 1200.0, mean_cf: 0.35, persistence: 0.95, sigma_step: 0.05, seed: 23 };
    let mut config = SucConfig::new(system, QuantileSpec::new(vec![0.25, 0.5, 0.75]).unwrap(), wind_proc);
    config.horizon = 8;
    config.extra_inertia = 100.0;

    let demand: Vec<f64> = (0..22)
        .map(|t| 2500.0 + 250.0 * ((t as f64) * std::f64::consts::TAU / 24.0).cos())
        .collect();
    let wind = config.wind.generate_trace(14);
    let cache = KStarCache::new();
    let warm = SucConfig { extra_inertia: 0.0, ..config.clone() };
    let initial = steady_state_commitment(&warm, demand[0], wind[0], &cache).unwrap();
    let mut state = FleetState::with_online(config.system.classes(), &initial);
    // Advance state like hours 0..3 did (keep 45 CCGT per the trace) then build hour 4.
    // Simplest: emulate with the same commitment as the trace showed.
    state.classes[1].online = 45;

    let window = &demand[4..=12];
    let tree = build_tree(&config.wind, wind[4], window, &config.quantiles, 8).unwrap();
    let build = build_suc(&config, &tree, &state, &cache, &[]).unwrap();
    let lp = solve_lp(&build.model).unwrap();
    println!("root LP obj {:.4}", lp.objective);
    let ints = build.model.integer_ids();
    let frac: Vec<(usize, f64)> = ints
        .iter()
        .filter_map(|&v| {
            let x = lp.value(v);
            let d = (x - x.round()).abs();
            (d > 1e-6).then_some((v, x))
        })
        .collect();
    println!("fractional ints at root: {} of {}", frac.len(), ints.len());
    for (v, x) in frac.iter().take(12) {
        println!("  {} = {:.4}", build.model.variables()[*v].name, x);
    }
    for (tol, limit) in [(1e-4, 20000), (1e-5, 20000), (1e-6, 20000)] {
        let opts = MilpOptions { gap_tol: tol, node_limit: limit, ..MilpOptions::default() };
        let t0 = std::time::Instant::now();
        let sol = solve_milp(&build.model, &opts).unwrap();
        println!(
            "gap_tol {tol:.0e}: {:?} obj {:.4} gap {:.2e} nodes {} in {:?}",
            sol.status, sol.objective, sol.gap, sol.nodes_explored, t0.elapsed()
        );
        if sol.status == SolveStatus::Optimal {
            println!("  integrality gap vs root LP: {:.4}", sol.objective - lp.objective);
        }
    }
}

use inertia_suc::domain::{gb_reference_fleet, validate_fleet, SystemParams};
use inertia_suc::frequency::KStarCache;
use inertia_suc::milp::{solve_lp, solve_milp};
use inertia_suc::scenario::{build_tree, QuantileSpec, WindProcess};
use inertia_suc::scheduler::{
    build_suc, extract_point, steady_state_commitment, FleetState, SucConfig,
};

fn main() {
    let full = validate_fleet(gb_reference_fleet(), SystemParams::default()).unwrap();
    let desk = full.scaled_mw(0.1);
    let params = SystemParams {
        wind_capacity: 1200.0,
        ..desk.params().clone()
    };
    let system = desk.with_params(params).unwrap();
    let wind_proc = WindProcess {
        capacity: 1200.0,
        mean_cf: 0.35,
        persistence: 0.95,
        sigma_step: 0.05,
        seed: 23,
    };
    let mut config = SucConfig::new(
        system,
        QuantileSpec::new(vec![0.25, 0.5, 0.75]).unwrap(),
        wind_proc,
    );
    config.horizon = 8;
    config.extra_inertia = 100.0;

    let demand: Vec<f64> = (0..22)
        .map(|t| 2500.0 + 250.0 * ((t as f64) * std::f64::consts::TAU / 24.0).cos())
        .collect();
    let wind = config.wind.generate_trace(14);
    let cache = KStarCache::new();

    let warm = SucConfig { extra_inertia: 0.0, ..config.clone() };
    let initial = steady_state_commitment(&warm, demand[0], wind[0], &cache).unwrap();
    println!("initial online: {initial:?}");
    let mut state = FleetState::with_online(config.system.classes(), &initial);

    for hour in 0..14 {
        let window = &demand[hour..=hour + 8];
        let tree = build_tree(&config.wind, wind[hour], window, &config.quantiles, 8).unwrap();
        let build = build_suc(&config, &tree, &state, &cache, &[]).unwrap();
        let lp = solve_lp(&build.model).unwrap();
        let sol = solve_milp(&build.model, &config.milp).unwrap();
        println!(
            "hour {hour}: wind {:6.1} demand {:6.1} LP {:?} MILP {:?} nodes {}",
            wind[hour], demand[hour], lp.status, sol.status, sol.nodes_explored
        );
        if sol.status != inertia_suc::milp::SolveStatus::Optimal {
            let mut f = std::fs::File::create(format!("/tmp/hour{hour}.lp")).unwrap();
            build.model.write_lp(&mut f).unwrap();
            println!("dumped /tmp/hour{hour}.lp  (LP relax said {:?})", lp.status);
            break;
        }
        let point = extract_point(&build, &sol, 0, config.system.classes(), tree.root().wind_available).unwrap();
        let stops: Vec<u32> = point
            .per_class
            .iter()
            .zip(&state.classes)
            .zip(config.system.classes())
            .map(|((dec, st), class)| {
                let started_now = if class.startup_time == 0 {
                    dec.n_start_gen
                } else {
                    st.pending_start.front().copied().unwrap_or(0)
                };
                (st.online + started_now).saturating_sub(dec.n_up)
            })
            .collect();
        println!(
            "   committed n_up {:?} starts {:?} stops {:?} shed {:.2}",
            point.per_class.iter().map(|d| d.n_up).collect::<Vec<_>>(),
            point.per_class.iter().map(|d| d.n_start_gen).collect::<Vec<_>>(),
            stops,
            point.shed
        );
        state.advance(config.system.classes(), &point.per_class, &stops);
    }
}

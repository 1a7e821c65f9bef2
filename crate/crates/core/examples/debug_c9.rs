use inertia_suc::config::StudyConfig;
use inertia_suc::frequency::KStarCache;
use inertia_suc::milp::{solve_lp, solve_milp, SolveStatus};
use inertia_suc::scenario::build_tree;
use inertia_suc::scheduler::{build_suc, extract_point, steady_state_commitment, FleetState, SucConfig};

fn desk_config() -> StudyConfig {
    let mut config = StudyConfig::gb_reference();
    config.fleet = config.fleet.iter().map(|c| c.scaled_mw(0.1)).collect();
    config.system.p_loss_max *= 0.1;
    config.system.wind_capacity *= 0.1;
    config.scenario.quantiles = vec![0.25, 0.5, 0.75];
    config.study.horizon_hours = 12;
    config.study.demand.base = 3000.0;
    config.study.demand.daily_amplitude = 700.0;
    config.study.demand.weekly_amplitude = 150.0;
    config.study.gap_tol = 1e-8;
    config.study.node_limit = 50_000;
    config
}

fn main() {
    let config = desk_config();
    let suc = config.suc_config(Some(0.25), 0.0, Some(1_500.0)).unwrap();
    let duration = 48;
    let demand = config.demand_trace(duration + suc.horizon as usize).unwrap();
    let wind = suc.wind.generate_trace(duration);
    let cache = KStarCache::new();

    let warm = SucConfig { extra_inertia: 0.0, ..suc.clone() };
    let initial = steady_state_commitment(&warm, demand[0], wind[0], &cache).unwrap();
    let mut state = FleetState::with_online(suc.system.classes(), &initial);
    for hour in 0..duration {
        let window = &demand[hour..=hour + 12];
        let tree = build_tree(&suc.wind, wind[hour].clamp(0.0, 1500.0), window, &suc.quantiles, 12).unwrap();
        let build = build_suc(&suc, &tree, &state, &cache, &[]).unwrap();
        let t0 = std::time::Instant::now();
        let sol = solve_milp(&build.model, &suc.milp).unwrap();
        if sol.nodes_explored > 200 || sol.status != SolveStatus::Optimal {
            let lp = solve_lp(&build.model).unwrap();
            println!(
                "hour {hour}: {:?} nodes {} gap {:.2e} obj {:.2} LPobj {:.2} igap {:.4} in {:?} (wind {:.0})",
                sol.status, sol.nodes_explored, sol.gap, sol.objective, lp.objective,
                sol.objective - lp.objective, t0.elapsed(), wind[hour]
            );
        }
        if sol.status != SolveStatus::Optimal {
            let mut f = std::fs::File::create("/tmp/c9_hard.lp").unwrap();
            build.model.write_lp(&mut f).unwrap();
            println!("dumped /tmp/c9_hard.lp");
            return;
        }
        let point = extract_point(&build, &sol, 0, suc.system.classes(), tree.root().wind_available).unwrap();
        let stops: Vec<u32> = point
            .per_class
            .iter()
            .zip(&state.classes)
            .zip(suc.system.classes())
            .map(|((dec, st), class)| {
                let started_now = if class.startup_time == 0 {
                    dec.n_start_gen
                } else {
                    st.pending_start.front().copied().unwrap_or(0)
                };
                (st.online + started_now).saturating_sub(dec.n_up)
            })
            .collect();
        state.advance(suc.system.classes(), &point.per_class, &stops);
    }
    println!("all hours done");
}

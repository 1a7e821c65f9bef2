use inertia_suc::config::StudyConfig;
use inertia_suc::frequency::KStarCache;
use inertia_suc::milp::solve_lp;
use inertia_suc::scenario::build_tree;
use inertia_suc::scheduler::{build_suc, extract_point, steady_state_commitment, FleetState, SucConfig};
use inertia_suc::milp::{solve_milp, SolveStatus};

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
    let duration = 34;
    let demand = config.demand_trace(duration + 12).unwrap();
    let wind = suc.wind.generate_trace(duration);
    let cache = KStarCache::new();
    let warm = SucConfig { extra_inertia: 0.0, ..suc.clone() };
    let initial = steady_state_commitment(&warm, demand[0], wind[0], &cache).unwrap();
    let mut state = FleetState::with_online(suc.system.classes(), &initial);
    for hour in 0..duration {
        let window = &demand[hour..=hour + 12];
        let tree = build_tree(&suc.wind, wind[hour].clamp(0.0, 1500.0), window, &suc.quantiles, 12).unwrap();
        let build = build_suc(&suc, &tree, &state, &cache, &[]).unwrap();
        if hour == 33 {
            let lp = solve_lp(&build.model).unwrap();
            println!("hour 33 LP obj {:.2}", lp.objective);
            let mut frac_mass_by_kind = std::collections::BTreeMap::<String, (usize, f64)>::new();
            for (v, var) in build.model.variables().iter().enumerate() {
                if var.kind == inertia_suc::milp::VarKind::Integer {
                    let x = lp.value(v);
                    let frac = (x - x.round()).abs();
                    if frac > 1e-6 {
                        let kind = var.name.split('_').take(2).collect::<Vec<_>>().join("_");
                        let e = frac_mass_by_kind.entry(kind).or_default();
                        e.0 += 1;
                        e.1 += frac;
                    }
                }
            }
            for (kind, (count, mass)) in &frac_mass_by_kind {
                println!("  {kind}: {count} fractional, total mass {mass:.3}");
            }
            return;
        }
        let sol = solve_milp(&build.model, &suc.milp).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let point = extract_point(&build, &sol, 0, suc.system.classes(), tree.root().wind_available).unwrap();
        let stops: Vec<u32> = point.per_class.iter().zip(&state.classes).zip(suc.system.classes())
            .map(|((dec, st), class)| {
                let started_now = if class.startup_time == 0 { dec.n_start_gen } else { st.pending_start.front().copied().unwrap_or(0) };
                (st.online + started_now).saturating_sub(dec.n_up)
            }).collect();
        state.advance(suc.system.classes(), &point.per_class, &stops);
    }
}

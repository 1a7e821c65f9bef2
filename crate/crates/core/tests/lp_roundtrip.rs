//! The LP-format dump must be faithful enough that an external solver sees
//! the same problem: parse the text back with an independent reader, rebuild
//! the model, and check that solving the rebuilt model reproduces the
//! built-in objective.

use inertia_suc::frequency::KStarCache;
use inertia_suc::milp::{solve_milp, MilpModel, MilpOptions, Relation, SolveStatus, VarKind};
use inertia_suc::scenario::{build_tree, QuantileSpec, WindProcess};
use inertia_suc::scheduler::{build_suc, FleetState, SucConfig};
use std::collections::HashMap;

/// Minimal reader for the emitted LP dialect: `Minimize`, `Subject To`,
/// `Bounds`, `Generals`, `End`, one constraint per line.
fn parse_lp(text: &str) -> MilpModel {
    #[derive(Default)]
    struct Parsed {
        objective: Vec<(String, f64)>,
        rows: Vec<(String, Vec<(String, f64)>, Relation, f64)>,
        bounds: Vec<(String, f64, f64)>,
        generals: Vec<String>,
    }

    fn parse_terms(expr: &str) -> Vec<(String, f64)> {
        let tokens: Vec<&str> = expr.split_whitespace().collect();
        let mut terms = Vec::new();
        let mut sign = 1.0;
        let mut pending: Option<f64> = None;
        for tok in tokens {
            match tok {
                "+" => sign = 1.0,
                "-" => sign = -1.0,
                _ => {
                    if let Ok(v) = tok.parse::<f64>() {
                        pending = Some(v);
                    } else {
                        let coef = sign * pending.take().unwrap_or(1.0);
                        terms.push((tok.to_string(), coef));
                        sign = 1.0;
                    }
                }
            }
        }
        terms
    }

    let mut parsed = Parsed::default();
    let mut section = "";
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('\\') {
            continue;
        }
        match line {
            "Minimize" => {
                section = "obj";
                continue;
            }
            "Subject To" => {
                section = "rows";
                continue;
            }
            "Bounds" => {
                section = "bounds";
                continue;
            }
            "Generals" => {
                section = "generals";
                continue;
            }
            "End" => break,
            _ => {}
        }
        match section {
            "obj" => {
                let expr = line.split_once(':').map(|(_, e)| e).unwrap_or(line);
                parsed.objective.extend(parse_terms(expr));
            }
            "rows" => {
                let (name, rest) = line.split_once(':').expect("row has a name");
                let (rel, pos) = if let Some(p) = rest.find("<=") {
                    (Relation::Le, p)
                } else if let Some(p) = rest.find(">=") {
                    (Relation::Ge, p)
                } else {
                    (Relation::Eq, rest.find('=').expect("row has a relation"))
                };
                let lhs = &rest[..pos];
                let rhs_text = rest[pos..].trim_start_matches(['<', '>', '=']).trim();
                parsed.rows.push((
                    name.trim().to_string(),
                    parse_terms(lhs),
                    rel,
                    rhs_text.parse().expect("rhs parses"),
                ));
            }
            "bounds" => {
                if let Some(name) = line.strip_suffix(" free") {
                    parsed
                        .bounds
                        .push((name.trim().into(), f64::NEG_INFINITY, f64::INFINITY));
                } else {
                    let parts: Vec<&str> = line.split("<=").map(str::trim).collect();
                    match parts.len() {
                        3 => parsed.bounds.push((
                            parts[1].into(),
                            parts[0].parse().unwrap(),
                            parts[2].parse().unwrap(),
                        )),
                        2 => {
                            // "x <= ub" or "lb >= x" style; only the former is emitted.
                            parsed.bounds.push((
                                parts[0].into(),
                                f64::NEG_INFINITY,
                                parts[1].parse().unwrap(),
                            ));
                        }
                        _ => {
                            let ge: Vec<&str> = line.split(">=").map(str::trim).collect();
                            assert_eq!(ge.len(), 2, "unrecognized bound line `{line}`");
                            parsed
                                .bounds
                                .push((ge[0].into(), ge[1].parse().unwrap(), f64::INFINITY));
                        }
                    }
                }
            }
            "generals" => parsed.generals.push(line.to_string()),
            _ => panic!("content outside any section: `{line}`"),
        }
    }

    // Assemble, declaring variables in bounds order (the dump writes every
    // variable's bounds in declaration order).
    let mut model = MilpModel::new();
    let mut ids: HashMap<String, usize> = HashMap::new();
    let obj: HashMap<&str, f64> = parsed
        .objective
        .iter()
        .map(|(n, c)| (n.as_str(), *c))
        .collect();
    let generals: std::collections::HashSet<&str> =
        parsed.generals.iter().map(String::as_str).collect();
    for (name, lo, hi) in &parsed.bounds {
        let kind = if generals.contains(name.as_str()) {
            VarKind::Integer
        } else {
            VarKind::Continuous
        };
        let id = model.add_variable(
            name.clone(),
            kind,
            *lo,
            *hi,
            obj.get(name.as_str()).copied().unwrap_or(0.0),
        );
        ids.insert(name.clone(), id);
    }
    for (name, terms, rel, rhs) in parsed.rows {
        let row: Vec<(usize, f64)> = terms
            .into_iter()
            .map(|(var, coef)| (ids[&var], coef))
            .collect();
        model.add_constraint(name, row, rel, rhs);
    }
    model
}

#[test]
fn dumped_model_solves_to_the_same_objective() {
    let full = inertia_suc::domain::validate_fleet(
        inertia_suc::domain::gb_reference_fleet(),
        inertia_suc::domain::SystemParams::default(),
    )
    .unwrap();
    let system = full.scaled_mw(0.1);
    let wind = WindProcess {
        capacity: 1000.0,
        mean_cf: 0.35,
        persistence: 0.9,
        sigma_step: 0.04,
        seed: 3,
    };
    let mut config = SucConfig::new(system, QuantileSpec::new(vec![0.3, 0.7]).unwrap(), wind);
    config.horizon = 3;

    let demand = vec![2900.0, 3000.0, 3100.0, 3050.0];
    let tree = build_tree(&config.wind, 400.0, &demand, &config.quantiles, 3).unwrap();
    let state = FleetState::all_online(config.system.classes());
    let cache = KStarCache::new();
    let build = build_suc(&config, &tree, &state, &cache, &[]).unwrap();

    let mut text = Vec::new();
    build.model.write_lp(&mut text).unwrap();
    let text = String::from_utf8(text).unwrap();
    let rebuilt = parse_lp(&text);

    assert_eq!(rebuilt.num_variables(), build.model.num_variables());
    assert_eq!(rebuilt.num_constraints(), build.model.num_constraints());

    let opts = MilpOptions::default();
    let original = solve_milp(&build.model, &opts).unwrap();
    let reparsed = solve_milp(&rebuilt, &opts).unwrap();
    assert_eq!(original.status, SolveStatus::Optimal);
    assert_eq!(reparsed.status, SolveStatus::Optimal);
    let tol = 1e-6 * original.objective.abs().max(1.0);
    assert!(
        (original.objective - reparsed.objective).abs() <= tol,
        "original {} vs reparsed {}",
        original.objective,
        reparsed.objective
    );
}

//! Solver tests against independent oracles: dense vertex enumeration for
//! LPs, integer-box enumeration with LP dispatch for MILPs.

use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exhaustive vertex enumeration for small LPs: every choice of `n` active
/// conditions (rows as equalities, variable bounds) is solved densely and
/// checked for feasibility; the best feasible vertex is the optimum of a
/// bounded feasible LP.
fn vertex_enumeration_optimum(model: &MilpModel) -> Option<f64> {
    let n = model.num_variables();
    // Conditions: (coeffs, rhs)
    let mut conditions: Vec<(Vec<f64>, f64)> = Vec::new();
    for con in model.constraints() {
        let mut row = vec![0.0; n];
        for &(v, c) in &con.terms {
            row[v] += c;
        }
        conditions.push((row, con.rhs));
    }
    for (j, v) in model.variables().iter().enumerate() {
        if v.lower.is_finite() {
            let mut row = vec![0.0; n];
            row[j] = 1.0;
            conditions.push((row, v.lower));
        }
        if v.upper.is_finite() {
            let mut row = vec![0.0; n];
            row[j] = 1.0;
            conditions.push((row, v.upper));
        }
    }

    let t = conditions.len();
    let mut best: Option<f64> = None;
    let mut combo: Vec<usize> = (0..n).collect();

    loop {
        if let Some(x) = solve_square(&combo, &conditions, n) {
            if feasible(model, &x) {
                let obj = model.objective_value(&x);
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if combo[i] != i + t - n {
                combo[i] += 1;
                for k in i + 1..n {
                    combo[k] = combo[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn solve_square(combo: &[usize], conditions: &[(Vec<f64>, f64)], n: usize) -> Option<Vec<f64>> {
    let mut a: Vec<Vec<f64>> = combo.iter().map(|&i| conditions[i].0.clone()).collect();
    let mut b: Vec<f64> = combo.iter().map(|&i| conditions[i].1).collect();
    // Gaussian elimination with partial pivoting.
    for col in 0..n {
        let (piv, mag) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if mag < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut v = b[r];
        for c in r + 1..n {
            v -= a[r][c] * x[c];
        }
        x[r] = v / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn feasible(model: &MilpModel, x: &[f64]) -> bool {
    let tol = 1e-7;
    for (j, v) in model.variables().iter().enumerate() {
        if x[j] < v.lower - tol || x[j] > v.upper + tol {
            return false;
        }
    }
    model.max_violation(x) <= tol
}

fn random_lp(rng: &mut ChaCha8Rng) -> MilpModel {
    let n = 5;
    let mut model = MilpModel::new();
    for j in 0..n {
        let upper = rng.random_range(1.0..10.0);
        let obj = rng.random_range(-10.0..10.0);
        model.add_continuous(format!("x{j}"), 0.0, upper, obj);
    }
    for i in 0..5 {
        let terms: Vec<(VarId, f64)> = (0..n)
            .map(|j| (j, rng.random_range(-5.0..5.0)))
            .collect();
        let rhs = rng.random_range(0.5..20.0);
        model.add_constraint(format!("c{i}"), terms, Relation::Le, rhs);
    }
    model
}

fn random_milp(rng: &mut ChaCha8Rng) -> MilpModel {
    let mut model = MilpModel::new();
    for j in 0..2 {
        let obj = rng.random_range(-10.0..10.0);
        model.add_integer(format!("n{j}"), 0.0, 3.0, obj);
    }
    for j in 0..2 {
        let obj = rng.random_range(-10.0..10.0);
        model.add_continuous(format!("x{j}"), 0.0, 10.0, obj);
    }
    for i in 0..4 {
        let terms: Vec<(VarId, f64)> = (0..4)
            .map(|j| (j, rng.random_range(-4.0..5.0)))
            .collect();
        let rhs = rng.random_range(1.0..25.0);
        model.add_constraint(format!("c{i}"), terms, Relation::Le, rhs);
    }
    model
}

/// Integer-box enumeration: fixes each integer assignment and dispatches the
/// continuous part with the LP solver.
fn box_enumeration_optimum(model: &MilpModel) -> Option<f64> {
    let ints = model.integer_ids();
    let ranges: Vec<(i64, i64)> = ints
        .iter()
        .map(|&v| {
            let var = &model.variables()[v];
            (var.lower.ceil() as i64, var.upper.floor() as i64)
        })
        .collect();
    let mut assignment: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let mut best: Option<f64> = None;
    loop {
        // Rebuild with pinned integer bounds.
        let mut pinned = MilpModel::new();
        for (j, v) in model.variables().iter().enumerate() {
            let (lo, hi) = match ints.iter().position(|&iv| iv == j) {
                Some(k) => (assignment[k] as f64, assignment[k] as f64),
                None => (v.lower, v.upper),
            };
            pinned.add_variable(v.name.clone(), v.kind, lo, hi, model.objective()[j]);
        }
        for c in model.constraints() {
            pinned.add_constraint(c.name.clone(), c.terms.clone(), c.relation, c.rhs);
        }
        if let Ok(sol) = solve_lp(&pinned) {
            if sol.status == SolveStatus::Optimal {
                best = Some(best.map_or(sol.objective, |b: f64| b.min(sol.objective)));
            }
        }

        let mut i = assignment.len();
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if assignment[i] < ranges[i].1 {
                assignment[i] += 1;
                for k in i + 1..assignment.len() {
                    assignment[k] = ranges[k].0;
                }
                break;
            }
        }
    }
}

#[test]
fn maximization_via_negated_cost() {
    let mut model = MilpModel::new();
    let x = model.add_continuous("x", 0.0, f64::INFINITY, -1.0);
    model.add_constraint("cap", vec![(x, 1.0)], Relation::Le, 3.0);
    let sol = solve_lp(&model).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.value(x) - 3.0).abs() < 1e-9);
    assert!((sol.objective + 3.0).abs() < 1e-9);
}

#[test]
fn contradictory_rows_are_infeasible() {
    let mut model = MilpModel::new();
    let x = model.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
    model.add_constraint("ge", vec![(x, 1.0)], Relation::Ge, 2.0);
    model.add_constraint("le", vec![(x, 1.0)], Relation::Le, 1.0);
    let sol = solve_lp(&model).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

#[test]
fn open_direction_is_unbounded() {
    let mut model = MilpModel::new();
    let x = model.add_continuous("x", 0.0, f64::INFINITY, -1.0);
    let y = model.add_continuous("y", 0.0, f64::INFINITY, 0.0);
    model.add_constraint("link", vec![(x, 1.0), (y, -1.0)], Relation::Le, 4.0);
    let sol = solve_lp(&model).unwrap();
    assert_eq!(sol.status, SolveStatus::Unbounded);
}

#[test]
fn equality_rows_are_honored() {
    let mut model = MilpModel::new();
    let x = model.add_continuous("x", 0.0, 10.0, 2.0);
    let y = model.add_continuous("y", 0.0, 10.0, 3.0);
    model.add_constraint("sum", vec![(x, 1.0), (y, 1.0)], Relation::Eq, 6.0);
    let sol = solve_lp(&model).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.value(x) + sol.value(y) - 6.0).abs() < 1e-8);
    assert!((sol.objective - 12.0).abs() < 1e-8, "cheapest fill uses x");
}

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 12 {
        let model = random_lp(&mut rng);
        let sol = solve_lp(&model).unwrap();
        assert_ne!(sol.status, SolveStatus::Unbounded, "box bounds preclude rays");
        let oracle = vertex_enumeration_optimum(&model);
        match sol.status {
            SolveStatus::Optimal => {
                let expect = oracle.expect("solver found an optimum the oracle missed");
                let tol = 1e-8 * expect.abs().max(1.0);
                assert!(
                    (sol.objective - expect).abs() <= tol,
                    "objective {} vs oracle {}",
                    sol.objective,
                    expect
                );
                assert!(model.max_violation(&sol.values) <= 1e-6);
                checked += 1;
            }
            SolveStatus::Infeasible => {
                assert!(oracle.is_none(), "oracle found a vertex in an `infeasible` LP");
            }
            other => panic!("unexpected status {other:?}"),
        }
    }
}

#[test]
fn integer_floor_snaps_up() {
    let mut model = MilpModel::new();
    let x = model.add_integer("x", 1.2, 3.0, 1.0);
    let _ = x;
    let sol = solve_milp(&model, &MilpOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert_eq!(sol.rounded_int(0), 2);
    assert!((sol.objective - 2.0).abs() < 1e-9);
}

#[test]
fn integral_relaxation_skips_branching() {
    let mut model = MilpModel::new();
    let x = model.add_integer("x", 0.0, 5.0, 1.0);
    model.add_constraint("ge", vec![(x, 1.0)], Relation::Ge, 3.0);
    let lp = solve_lp(&model).unwrap();
    let sol = solve_milp(&model, &MilpOptions::default()).unwrap();
    assert_eq!(sol.nodes_explored, 0);
    assert_eq!(sol.objective, lp.objective);
}

#[test]
fn random_milps_match_box_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let opts = MilpOptions {
        gap_tol: 1e-9,
        ..MilpOptions::default()
    };
    let mut checked = 0;
    while checked < 10 {
        let model = random_milp(&mut rng);
        let sol = solve_milp(&model, &opts).unwrap();
        let oracle = box_enumeration_optimum(&model);
        match sol.status {
            SolveStatus::Optimal => {
                let expect = oracle.expect("oracle disagrees on feasibility");
                let tol = 1e-7 * expect.abs().max(1.0);
                assert!(
                    (sol.objective - expect).abs() <= tol,
                    "objective {} vs oracle {}",
                    sol.objective,
                    expect
                );
                // Weak duality: the relaxation never exceeds the integer optimum.
                let lp = solve_lp(&model).unwrap();
                assert!(lp.objective <= sol.objective + 1e-7 * sol.objective.abs().max(1.0));
                // Solution invariants.
                assert!(model.max_violation(&sol.values) <= 1e-6);
                for &v in &model.integer_ids() {
                    assert!((sol.values[v] - sol.values[v].round()).abs() <= 1e-6);
                }
                checked += 1;
            }
            SolveStatus::Infeasible => assert!(oracle.is_none()),
            other => panic!("unexpected status {other:?}"),
        }
    }
}

#[test]
fn identical_models_solve_bit_identically() {
    let build = || {
        let mut rng = ChaCha8Rng::seed_from_u64(5150);
        random_milp(&mut rng)
    };
    let a = solve_milp(&build(), &MilpOptions::default()).unwrap();
    let b = solve_milp(&build(), &MilpOptions::default()).unwrap();
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    assert_eq!(a.values.len(), b.values.len());
    for (x, y) in a.values.iter().zip(&b.values) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn positive_objective_scaling_preserves_argmin() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let model = random_milp(&mut rng);
    let sol = solve_milp(&model, &MilpOptions::default()).unwrap();
    if sol.status != SolveStatus::Optimal {
        return;
    }

    let mut scaled = MilpModel::new();
    for (j, v) in model.variables().iter().enumerate() {
        scaled.add_variable(v.name.clone(), v.kind, v.lower, v.upper, model.objective()[j] * 3.5);
    }
    for c in model.constraints() {
        scaled.add_constraint(c.name.clone(), c.terms.clone(), c.relation, c.rhs);
    }
    let sol2 = solve_milp(&scaled, &MilpOptions::default()).unwrap();
    assert!(
        (sol2.objective - 3.5 * sol.objective).abs() <= 1e-9 * sol.objective.abs().max(1.0) * 3.5
    );
    for &v in &model.integer_ids() {
        assert_eq!(sol.values[v].round(), sol2.values[v].round());
    }
}

#[test]
fn gap_limit_reports_incumbent() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let model = random_milp(&mut rng);
    let opts = MilpOptions {
        node_limit: 1,
        gap_tol: 0.0,
        ..MilpOptions::default()
    };
    let sol = solve_milp(&model, &opts).unwrap();
    // Either proven at the root or cut off with a reported gap.
    match sol.status {
        SolveStatus::Optimal => assert!(sol.gap <= 1e-9),
        SolveStatus::GapLimit => assert!(sol.gap > 0.0),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn validation_catches_malformed_models() {
    let mut model = MilpModel::new();
    let x = model.add_integer("x", 0.0, f64::INFINITY, 1.0);
    assert!(matches!(
        solve_milp(&model, &MilpOptions::default()),
        Err(MilpError::UnboundedInteger(_))
    ));
    let mut model2 = MilpModel::new();
    model2.add_continuous("x", 0.0, 1.0, 1.0);
    model2.add_constraint("bad", vec![(5, 1.0)], Relation::Le, 1.0);
    assert!(matches!(
        solve_lp(&model2),
        Err(MilpError::UnknownVariable { .. })
    ));
    let mut model3 = MilpModel::new();
    model3.add_continuous("x", 0.0, 1.0, f64::NAN);
    assert!(matches!(solve_lp(&model3), Err(MilpError::NanCoefficient(_))));
    let _ = x;
}

#[test]
fn lp_dump_contains_the_model() {
    let mut model = MilpModel::new();
    let n = model.add_integer("n_up", 0.0, 4.0, 10.0);
    let p = model.add_continuous("power", 0.0, 100.0, 51.0);
    model.add_constraint("balance", vec![(p, 1.0)], Relation::Eq, 60.0);
    model.add_constraint("cap", vec![(p, 1.0), (n, -25.0)], Relation::Le, 0.0);
    let mut buf = Vec::new();
    model.write_lp(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("Minimize"));
    assert!(text.contains("balance: 1 power = 60"));
    assert!(text.contains("cap: 1 power - 25 n_up <= 0"));
    assert!(text.contains("Generals"));
    assert!(text.ends_with("End\n"));
}

use nsopt::{
    build_milp, extract_solution, generate_instance, load_instance, run_ccg, solve_milp, strip_cycles,
    validate_solution, CcgParams, CcgStatus, GeneratorConfig, MilpParams, MilpStatus, SliceSolution,
};

fn config() -> GeneratorConfig {
    GeneratorConfig { chain_length: 2, ..GeneratorConfig::tiny(6, 12, 2, 2) }
}

#[test]
fn generator_is_deterministic_and_round_trips() {
    let a = generate_instance(&config(), 42).unwrap();
    let b = generate_instance(&config(), 42).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, generate_instance(&config(), 43).unwrap());
    let back = load_instance(a.to_json().as_bytes()).unwrap();
    assert_eq!(a, back);
}

#[test]
fn milp_and_ccg_solutions_survive_json_and_validate() {
    let mut done = 0;
    for seed in 0..6 {
        let inst = generate_instance(&config(), seed).unwrap();
        let (m, idx) = build_milp(&inst);
        let r = solve_milp(&m, &MilpParams::default()).unwrap();
        if r.status != MilpStatus::Optimal {
            continue;
        }
        let exact = extract_solution(&idx, r.x.as_ref().unwrap()).unwrap();
        let back = SliceSolution::from_json(exact.to_json().as_bytes()).unwrap();
        assert_eq!(exact, back);
        let rep = validate_solution(&inst, &strip_cycles(&inst, &back).unwrap());
        assert!(rep.passed(), "seed {seed}: {rep}");

        let res = run_ccg(&inst, &CcgParams::default()).unwrap();
        assert_eq!(res.status, CcgStatus::Solved);
        let heuristic = strip_cycles(&inst, res.solution.as_ref().unwrap()).unwrap();
        let rep = validate_solution(&inst, &heuristic);
        assert!(rep.passed(), "seed {seed}: {rep}");
        assert!(rep.objective >= r.objective - 1e-6);
        done += 1;
    }
    assert!(done >= 3);
}

#[test]
fn infeasible_instance_is_reported_by_both_methods() {
    let mut inst = generate_instance(&config(), 1).unwrap();
    inst.services[1].gamma = 0.999999;
    let (m, _) = build_milp(&inst);
    assert_eq!(solve_milp(&m, &MilpParams::default()).unwrap().status, MilpStatus::Infeasible);
    let res = run_ccg(&inst, &CcgParams::default()).unwrap();
    assert_eq!(res.status, CcgStatus::Infeasible);
    assert_eq!(res.infeasible_service, Some(1));
}

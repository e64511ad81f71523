use std::sync::Arc;

use cloudchamber::oracle::{compare, dense_run};
use cloudchamber::{
    assemble_cn, assemble_hamiltonian, build_grid, channel_probs, initial_state, oracle_instance,
    BoundaryMode, CouplingFactor, DetectorLayout, Preset, Propagator, SolveConfig,
};

#[test]
fn production_matches_dense_reference_n2() {
    for mode in [BoundaryMode::Verbatim, BoundaryMode::Symmetrized] {
        for rho in [0.0, 10.0, 100.0] {
            let inst = oracle_instance(rho).unwrap();
            let a = inst.agreement(&inst.params, mode).unwrap();
            assert!(a.state_max_abs <= 1e-10, "{mode:?} rho={rho}: {a:?}");
            assert!(a.prob_max_abs <= 1e-12, "{mode:?} rho={rho}: {a:?}");
        }
    }
}

#[test]
fn coupling_reaches_detectors_in_reference_instance() {
    // Guards against a vacuous comparison: the packet must actually flip spins.
    let inst = oracle_instance(100.0).unwrap();
    let init = initial_state(&inst.params, &inst.grid, 4).unwrap();
    let fin = dense_run(
        &inst.params,
        &inst.grid,
        &inst.layout,
        inst.dt,
        BoundaryMode::Verbatim,
        &init,
        inst.steps,
    )
    .unwrap();
    let flipped: f64 = channel_probs(&fin, 0.0).p[1..].iter().sum();
    assert!(flipped > 1e-3, "{flipped}");
}

#[test]
fn wrong_coupling_factor_is_detected() {
    let inst = oracle_instance(100.0).unwrap();
    let q = cloudchamber::PhysicalParams {
        kappa: CouplingFactor::Two,
        ..inst.params
    };
    let a = inst.agreement(&q, BoundaryMode::Verbatim).unwrap();
    assert!(a.prob_max_abs > 1e-6, "{a:?}");
}

#[test]
fn uncoupled_single_channel_matches_oracle() {
    let grid = build_grid(1.0, 64).unwrap();
    let layout = DetectorLayout::from_indices(&grid, vec![40]).unwrap();
    let p = cloudchamber::PhysicalParams {
        alpha: 0.0,
        beta: 0.0,
        rho: 0.0,
        sigma: 0.1,
        trunc_a: 0.6,
        p0: 1.0,
        ..Preset::new(0.1, 2).scenario().unwrap().params
    };
    let h = assemble_hamiltonian(&p, &grid, &layout, BoundaryMode::Verbatim).unwrap();
    let init = initial_state(&p, &grid, 2).unwrap();
    let prop = Propagator::new(
        assemble_cn(Arc::new(h), 1e-3, p.hbar).unwrap(),
        SolveConfig::default(),
    )
    .unwrap();
    let mut s = init.clone();
    for _ in 0..30 {
        s = prop.step(&s).unwrap();
    }
    let d = dense_run(&p, &grid, &layout, 1e-3, BoundaryMode::Verbatim, &init, 30).unwrap();
    assert!(compare(&s, &d).unwrap().max_abs_diff <= 1e-12);
    assert!(s.channel(1).iter().all(|v| v.norm() == 0.0));
}

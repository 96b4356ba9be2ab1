//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured quantity (visible with `--nocapture`).
//!
//! Run with `cargo test -p cliffmech-cli --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cliffmech::autodiff::Jet2;
use cliffmech::checks::{QuadTrigField, REFERENCE_PAIRING_TABLES};
use cliffmech::dim::Dimension;
use cliffmech::dynamics::{
    el_residual, energy_differential, kahler_form, kahler_oracle_j1, pairing_table,
    solve_semispray, DynamicsError,
};
use cliffmech::geometry::{
    fundamental_form, make_structure, metric_compatibility, verify_algebra, StructureLabel,
};
use cliffmech::integrate::{diagnose, integrate, ImplicitMidpoint, MechanicalSystem, Rk4};
use cliffmech::lagrangian::{LagrangianField, QuadraticForm};

const SEED: u64 = 42;

fn dim(n: usize) -> Dimension {
    Dimension::new(n).unwrap()
}

fn e0(d: usize) -> DVector<f64> {
    let mut v = DVector::zeros(d);
    v[0] = 1.0;
    v
}

fn harmonic() -> LagrangianField {
    LagrangianField::builtin(dim(1), vec![1.0], 0.0, 0).unwrap()
}

fn random_symmetric(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let t = raw.transpose();
    0.5 * (raw + t)
}

fn pass(number: u8, name: &str, detail: String) {
    println!("criterion {number:02} ({name}): PASS: {detail}");
}

#[test]
fn c01_structure_algebra_exact() {
    let start = Instant::now();
    for n in [1usize, 2, 4] {
        let report = verify_algebra(dim(n));
        assert!(report.all_hold(), "n = {n}: {:?}", report.failures());
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    pass(
        1,
        "structure algebra",
        format!("squares and anticommutators exact for n in {{1,2,4}} in {elapsed:?}"),
    );
}

#[test]
fn c02_metric_compatibility() {
    let mut worst = 0.0f64;
    for label in StructureLabel::ALL {
        for n in [1usize, 2] {
            let s = make_structure(label, dim(n));
            worst = worst.max(metric_compatibility(&s, 1000, SEED));
        }
    }
    assert!(worst <= 1e-12, "max deviation {worst}");
    pass(
        2,
        "metric compatibility",
        format!("max |g(JX,JY) - g(X,Y)| = {worst:.3e} over 1000 pairs per structure"),
    );
}

#[test]
fn c03_fundamental_forms() {
    for label in StructureLabel::ALL {
        for n in [1usize, 2] {
            let s = make_structure(label, dim(n));
            let phi = fundamental_form(&s);
            let antisym = (phi.matrix() + phi.matrix().transpose()).abs().max();
            assert_eq!(antisym, 0.0, "{label}, n = {n}");
            assert_eq!(phi.matrix(), &(-s.to_dense()), "{label}, n = {n}");
        }
    }
    pass(
        3,
        "fundamental forms",
        "antisymmetry exact; matrix equals the negated structure".to_string(),
    );
}

#[test]
fn c04_kahler_closed_form_matches_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for n in [1usize, 2] {
        let d = dim(n);
        let j1 = make_structure(StructureLabel::J1, d);
        for _ in 0..20 {
            let h = random_symmetric(d.total(), &mut rng);
            let b = DVector::from_fn(d.total(), |_, _| rng.random_range(-1.0..1.0));
            let l = LagrangianField::from_field(Box::new(QuadraticForm::new(d, h, b).unwrap()));
            let x = DVector::from_fn(d.total(), |_, _| rng.random_range(-1.0..1.0));
            let closed = kahler_form(&j1, &l, &x).unwrap();
            let oracle = kahler_oracle_j1(&l, &x).unwrap();
            worst = worst.max((closed.matrix() - oracle).abs().max());
            count += 1;
        }
    }
    assert!(worst <= 1e-12, "max diff {worst}");
    assert!(count >= 20);
    pass(
        4,
        "Kahler form equivalence",
        format!("closed form vs term-by-term oracle: max diff {worst:.3e} over {count} Hessians"),
    );
}

#[test]
fn c05_formulation_consistency() {
    let mut worst_eq = 0.0f64;
    let mut worst_res = 0.0f64;
    for n in [1usize, 2] {
        let d = dim(n);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ n as u64);
        let l = LagrangianField::from_field(Box::new(QuadTrigField::random(d, &mut rng)));
        for label in StructureLabel::ALL {
            let s = make_structure(label, d);
            for _ in 0..100 {
                let x = DVector::from_fn(d.total(), |_, _| rng.random_range(-2.0..2.0));
                let v = solve_semispray(&s, &l, &x).unwrap();
                let omega = kahler_form(&s, &l, &x).unwrap();
                let de = energy_differential(&s, &l, &x, &v).unwrap();
                worst_eq = worst_eq.max((omega.matrix().transpose() * &v - de).amax());
                worst_res = worst_res.max(el_residual(&s, &l, &x, &v).unwrap().amax());
            }
        }
    }
    assert!(worst_eq <= 1e-9, "dynamics equation residual {worst_eq}");
    assert!(worst_res <= 1e-9, "Euler-Lagrange residual {worst_res}");
    pass(
        5,
        "formulation consistency",
        format!("max |W^T v - dE| = {worst_eq:.3e}, max EL residual = {worst_res:.3e} over 100 points x 3 structures x 2 dims"),
    );
}

#[test]
fn c06_pairing_tables_match_reference() {
    let mut checked = 0;
    for (label, expected) in REFERENCE_PAIRING_TABLES {
        let derived = pairing_table(label);
        for (b, &(partner, sign)) in expected.iter().enumerate() {
            assert_eq!(derived.rows[b].partner, partner, "{label} block {b}");
            assert_eq!(derived.rows[b].sign, sign, "{label} block {b}");
            checked += 1;
        }
    }
    assert_eq!(checked, 24);
    pass(
        6,
        "pairing tables",
        "all 24 derived block entries equal the reference".to_string(),
    );
}

#[test]
fn c07_analytic_trajectory() {
    let s = make_structure(StructureLabel::J1, dim(1));
    let l = harmonic();
    let sys = MechanicalSystem::new(&s, &l).unwrap();
    let start = Instant::now();
    let traj = integrate(&sys, &e0(8), 1e-3, 1000, &Rk4).unwrap();
    let elapsed = start.elapsed();

    let t = 1.0f64;
    let expected = t.cos() * e0(8) + t.sin() * s.apply(&e0(8)).unwrap();
    let final_err = (traj.states.last().unwrap() - expected).amax();
    assert!(final_err <= 1e-8, "final state error {final_err}");

    let norm_drift = traj
        .states
        .iter()
        .map(|x| (x.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(norm_drift <= 1e-8, "norm drift {norm_drift}");
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    pass(
        7,
        "analytic trajectory",
        format!(
            "rk4 vs cos/sin flow: error {final_err:.3e}, norm drift {norm_drift:.3e}, {elapsed:?}"
        ),
    );
}

#[test]
fn c08_energy_conservation() {
    let s = make_structure(StructureLabel::J1, dim(1));
    let l = harmonic();
    let sys = MechanicalSystem::new(&s, &l).unwrap();

    let traj = integrate(&sys, &e0(8), 1e-3, 10_000, &Rk4).unwrap();
    let rk4_drift = diagnose(&traj, &s, &l).unwrap().max_energy_drift;
    assert!(rk4_drift <= 1e-6, "rk4 drift {rk4_drift}");

    let traj = integrate(&sys, &e0(8), 1e-3, 10_000, &ImplicitMidpoint::default()).unwrap();
    let midpoint_drift = diagnose(&traj, &s, &l).unwrap().max_energy_drift;
    assert!(midpoint_drift <= 1e-10, "midpoint drift {midpoint_drift}");
    pass(
        8,
        "energy conservation",
        format!("t = 10: rk4 drift {rk4_drift:.3e} (<= 1e-6), midpoint drift {midpoint_drift:.3e} (<= 1e-10)"),
    );
}

fn fd_gradient(l: &LagrangianField, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        (l.eval_jet(&xp).unwrap().value - l.eval_jet(&xm).unwrap().value) / (2.0 * h)
    })
}

fn fd_hessian_of_gradient(l: &LagrangianField, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let d = x.len();
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let col =
            (l.eval_jet(&xp).unwrap().gradient - l.eval_jet(&xm).unwrap().gradient) / (2.0 * h);
        m.set_column(j, &col);
    }
    m
}

fn rel_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / 1.0f64.max(b.amax())
}

fn rel_mat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max() / 1.0f64.max(b.abs().max())
}

#[test]
fn c09_autodiff_matches_finite_differences() {
    let d = dim(1);
    let backends: [(&str, LagrangianField); 2] = [
        (
            "builtin",
            LagrangianField::builtin(d, vec![1.3], 4.2, 2).unwrap(),
        ),
        (
            "expression",
            LagrangianField::from_expression(
                d,
                "sin(x0)*cos(x1) + exp(0.3*x2) + x3^3*x4 + sqrt(x5 + 3) + ln(x6 + 4) + 0.5*x7^2 + x0*x7",
            )
            .unwrap(),
        ),
    ];
    let h = 1e-5;
    for (name, l) in &backends {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut worst_grad = 0.0f64;
        let mut worst_hess = 0.0f64;
        for _ in 0..100 {
            let x = DVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
            let jet: Jet2 = l.eval_jet(&x).unwrap();
            worst_grad = worst_grad.max(rel_vec(&jet.gradient, &fd_gradient(l, &x, h)));
            worst_hess = worst_hess.max(rel_mat(&jet.hessian, &fd_hessian_of_gradient(l, &x, h)));
        }
        assert!(
            worst_grad <= 1e-6,
            "{name}: gradient rel error {worst_grad}"
        );
        assert!(worst_hess <= 1e-5, "{name}: Hessian rel error {worst_hess}");
        pass(
            9,
            "autodiff vs finite differences",
            format!("{name}: gradient rel {worst_grad:.3e} (<= 1e-6), Hessian rel {worst_hess:.3e} (<= 1e-5), 100 points"),
        );
    }
}

#[test]
fn c10_degenerate_lagrangian_is_rejected() {
    // Library surface: the solve names the singular Hessian.
    let d = dim(1);
    let s = make_structure(StructureLabel::J1, d);
    let l = LagrangianField::from_expression(d, "x0").unwrap();
    let err = solve_semispray(&s, &l, &DVector::zeros(8)).unwrap_err();
    assert!(matches!(err, DynamicsError::SingularHessian { .. }));
    assert!(err.to_string().contains("singular Hessian"));

    // CLI surface: exit code 2 with the named error.
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("degenerate.json");
    std::fs::write(
        &config_path,
        serde_json::to_string_pretty(&serde_json::json!({
            "version": 1,
            "n": 1,
            "structure": "J1",
            "lagrangian": { "expression": "x0" },
            "initial_x": [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            "integrator": "rk4",
            "dt": 0.001,
            "steps": 10
        }))
        .unwrap(),
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cliffmech"))
        .args([
            "simulate",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            tmp.path().join("t.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("singular Hessian"), "stderr: {stderr}");
    pass(
        10,
        "degenerate handling",
        "solve raises SingularHessian; CLI exits 2 naming the singular Hessian".to_string(),
    );
}

#[test]
fn c11_cli_determinism_and_golden_derive() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("harmonic.json");
    std::fs::write(
        &config_path,
        serde_json::to_string_pretty(&serde_json::json!({
            "version": 1,
            "n": 1,
            "structure": "J1",
            "lagrangian": { "builtin": { "masses": [1.0], "gravity": 0.0, "height_index": 0 } },
            "initial_x": [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            "integrator": "rk4",
            "dt": 0.001,
            "steps": 2000,
            "rng_seed": 42
        }))
        .unwrap(),
    )
    .unwrap();
    let mut csvs = Vec::new();
    for run in 0..2 {
        let out_path = tmp.path().join(format!("run{run}.csv"));
        let out = Command::new(env!("CARGO_BIN_EXE_cliffmech"))
            .args([
                "simulate",
                "--config",
                config_path.to_str().unwrap(),
                "--out",
                out_path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        csvs.push(std::fs::read(&out_path).unwrap());
    }
    assert_eq!(csvs[0], csvs[1], "repeated runs must be byte-identical");

    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut compared = 0;
    for label in ["j1", "j2", "j3"] {
        for format in ["ascii", "latex", "json"] {
            let golden = std::fs::read(golden_dir.join(format!("derive_{label}_{format}.txt")))
                .expect("golden file exists");
            let out = Command::new(env!("CARGO_BIN_EXE_cliffmech"))
                .args([
                    "derive",
                    "--structure",
                    &label.to_uppercase(),
                    "--n",
                    "1",
                    "--format",
                    format,
                ])
                .output()
                .unwrap();
            assert_eq!(out.status.code(), Some(0));
            assert_eq!(
                out.stdout, golden,
                "derive {label}/{format} drifted from its golden file"
            );
            compared += 1;
        }
    }
    assert_eq!(compared, 9);
    pass(
        11,
        "CLI determinism",
        format!(
            "byte-identical CSV over {} samples; {compared} derive outputs match goldens",
            2001
        ),
    );
}

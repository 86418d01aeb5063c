//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its pinned tolerance once the checks hold.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use otoc_sim::ensemble::{
    sample_circuit_with_seed, EnsembleSpec, GateDistribution, GridGeometry,
};
use otoc_sim::harness::{instance_seed, pearson, run_ensemble, write_records_csv};
use otoc_sim::lightcone::min_connecting_depth;
use otoc_sim::otoc::{
    mixed_state_moment, otoc_moment, otoc_moment_direct, shot_estimate, shots_for_epsilon,
    CorrelatorSpec, TraceMethod,
};
use otoc_sim::pauli::{PauliLetter, PauliString};
use otoc_sim::rng::Xoshiro256StarStar;
use otoc_sim::statevector::{dense_pauli, dense_unitary};
use otoc_sim::Circuit;

fn grid(rows: usize, cols: usize) -> GridGeometry {
    GridGeometry::new(rows, cols).unwrap()
}

fn corner_ops(g: &GridGeometry) -> (PauliString, PauliString) {
    (
        PauliString::single(g.index(g.rows(), g.cols()).unwrap(), PauliLetter::X),
        PauliString::single(g.index(1, 1).unwrap(), PauliLetter::Z),
    )
}

fn corner_spec(rows: usize, cols: usize, depth: usize, seed: u64) -> EnsembleSpec {
    let g = grid(rows, cols);
    let (b, m) = corner_ops(&g);
    EnsembleSpec::new(g, depth, GateDistribution::HaarTwoQubit, b, m, seed).unwrap()
}

#[test]
fn acceptance_01_lightcone_exactness() {
    let g = grid(4, 4);
    let (b, m) = corner_ops(&g);
    let d_star = min_connecting_depth(&g, &b, &m).unwrap().unwrap();
    for depth in 0..d_star {
        let spec = corner_spec(4, 4, depth, 1000 + depth as u64);
        for instance in 0..20 {
            let circuit =
                sample_circuit_with_seed(&spec, instance_seed(spec.master_seed, instance));
            for k in [1, 2] {
                let cspec = CorrelatorSpec::new(&circuit, b.clone(), m.clone(), k).unwrap();
                let v = otoc_moment(&cspec).unwrap();
                assert!(
                    (v - 1.0).abs() < 1e-9,
                    "depth {depth} instance {instance} k {k}: {v}"
                );
            }
        }
    }
    println!(
        "ACCEPTANCE 1 (light-cone exactness, 4x4, d* = {d_star}, 20 instances/depth, tol 1e-9): PASS"
    );
}

#[test]
fn acceptance_02_oracle_equivalence() {
    let g = grid(2, 2);
    let (b, m) = corner_ops(&g);
    let spec = corner_spec(2, 2, 8, 2000);
    for instance in 0..50 {
        let circuit = sample_circuit_with_seed(&spec, instance_seed(spec.master_seed, instance));
        let u = dense_unitary(&circuit).unwrap();
        let c = u
            .dagger()
            .matmul(&dense_pauli(&b, 4).unwrap())
            .matmul(&u)
            .matmul(&dense_pauli(&m, 4).unwrap());
        for k in [1usize, 2, 3] {
            let oracle = c.pow(2 * k).get(0, 0);
            let cspec = CorrelatorSpec::new(&circuit, b.clone(), m.clone(), k).unwrap();
            let via_measurement = otoc_moment(&cspec).unwrap();
            let direct = otoc_moment_direct(&cspec).unwrap();
            assert!(
                (via_measurement - oracle.re).abs() < 1e-10,
                "instance {instance} k {k}: measurement path {via_measurement} vs oracle {}",
                oracle.re
            );
            assert!(
                (direct - oracle).norm() < 1e-10,
                "instance {instance} k {k}: direct path {direct} vs oracle {oracle}"
            );
        }
    }
    println!("ACCEPTANCE 2 (oracle equivalence, 2x2, 50 instances, k in 1..3, tol 1e-10): PASS");
}

#[test]
fn acceptance_03_scrambled_limit() {
    let spec = corner_spec(3, 3, 20, 3000);
    let records = run_ensemble(&spec, 100, &[2], None).unwrap();
    assert_eq!(records.len(), 100);
    let mean = records.iter().map(|r| r.exact).sum::<f64>() / 100.0;
    for r in &records {
        assert!(
            (-1.0..=1.0).contains(&r.exact),
            "value {} outside [-1, 1]",
            r.exact
        );
    }
    assert!(mean.abs() < 0.05, "ensemble mean {mean} not below 0.05");
    println!(
        "ACCEPTANCE 3 (scrambled limit, 3x3 d=20 k=2, 100 instances, |mean| = {:.4} < 0.05): PASS",
        mean.abs()
    );
}

#[test]
fn acceptance_04_shot_noise_contract() {
    assert_eq!(shots_for_epsilon(0.05).unwrap(), 400);

    let spec = corner_spec(3, 3, 8, 4000);
    let circuit = sample_circuit_with_seed(&spec, instance_seed(spec.master_seed, 0));
    let (b, m) = corner_ops(&spec.geometry);
    let cspec = CorrelatorSpec::new(&circuit, b, m, 2).unwrap();
    let exact = otoc_moment(&cspec).unwrap();

    // quadrupling shots halves stderr within 20% (averaged over 100 repeats)
    let mean_stderr = |shots: u64, salt: u64| -> f64 {
        (0..100)
            .map(|i| {
                let mut rng = Xoshiro256StarStar::from_seed(salt + i);
                shot_estimate(&cspec, shots, &mut rng).unwrap().stderr
            })
            .sum::<f64>()
            / 100.0
    };
    let s1 = mean_stderr(2_500, 10);
    let s4 = mean_stderr(10_000, 500);
    let ratio = s4 / s1;
    assert!(
        (0.4..=0.6).contains(&ratio),
        "stderr ratio {ratio} outside [0.4, 0.6]"
    );

    // |estimate - exact| <= 3 stderr in >= 95% of 200 repeats at 1e4 shots
    let mut covered = 0;
    for i in 0..200u64 {
        let mut rng = Xoshiro256StarStar::from_seed(90_000 + i);
        let est = shot_estimate(&cspec, 10_000, &mut rng).unwrap();
        if (est.estimate - exact).abs() <= 3.0 * est.stderr {
            covered += 1;
        }
    }
    assert!(covered >= 190, "coverage {covered}/200 below 95%");
    println!(
        "ACCEPTANCE 4 (shot noise: ratio {ratio:.3} in [0.4,0.6], coverage {covered}/200 >= 190, eps 0.05 -> 400 shots): PASS"
    );
}

#[test]
fn acceptance_05_mixed_state_moment() {
    let g = grid(2, 3);
    let (b, m) = corner_ops(&g);
    let d_star = min_connecting_depth(&g, &b, &m).unwrap().unwrap();

    // below d*: exact trace moment is 1
    let shallow = corner_spec(2, 3, d_star - 1, 5000);
    let circuit = sample_circuit_with_seed(&shallow, instance_seed(shallow.master_seed, 0));
    let cspec = CorrelatorSpec::new(&circuit, b.clone(), m.clone(), 2).unwrap();
    let mut rng = Xoshiro256StarStar::from_seed(1);
    let exact_shallow = mixed_state_moment(&cspec, TraceMethod::Exact, &mut rng).unwrap();
    assert!(
        (exact_shallow.value - 1.0).abs() < 1e-9,
        "shallow trace moment {}",
        exact_shallow.value
    );

    // deep circuit: stochastic estimator within 5 stderr of exact
    let deep = corner_spec(2, 3, 12, 5001);
    let circuit = sample_circuit_with_seed(&deep, instance_seed(deep.master_seed, 0));
    let cspec = CorrelatorSpec::new(&circuit, b, m, 2).unwrap();
    let exact = mixed_state_moment(&cspec, TraceMethod::Exact, &mut rng).unwrap();
    let stoch =
        mixed_state_moment(&cspec, TraceMethod::Stochastic { samples: 2000 }, &mut rng).unwrap();
    let stderr = stoch.stderr.unwrap().max(1e-12);
    let pull = (stoch.value - exact.value).abs() / stderr;
    assert!(
        pull <= 5.0,
        "stochastic {} vs exact {} is {pull:.2} stderr away",
        stoch.value,
        exact.value
    );
    println!(
        "ACCEPTANCE 5 (mixed-state moment, n=6: shallow exact = 1 within 1e-9, stochastic within {pull:.2} <= 5 stderr): PASS"
    );
}

#[test]
fn acceptance_06_path_realness_identity() {
    // 50 random specs over assorted geometries with n <= 9
    let shapes = [(1usize, 2usize), (2, 2), (2, 3), (1, 7), (3, 3)];
    let mut count = 0;
    let mut seed = 6000u64;
    while count < 50 {
        let (rows, cols) = shapes[count % shapes.len()];
        let depth = 1 + (count * 7) % 24;
        let k = 1 + count % 3;
        let spec = corner_spec(rows, cols, depth, seed);
        seed += 1;
        let circuit = sample_circuit_with_seed(&spec, spec.master_seed);
        let (b, m) = corner_ops(&spec.geometry);
        let cspec = CorrelatorSpec::new(&circuit, b, m, k).unwrap();
        let direct = otoc_moment_direct(&cspec).unwrap();
        let via_measurement = otoc_moment(&cspec).unwrap();
        assert!(
            direct.im.abs() < 1e-10,
            "spec {count}: Im {}",
            direct.im
        );
        assert!(
            (via_measurement - direct.re).abs() < 1e-10,
            "spec {count}: {via_measurement} vs {}",
            direct.re
        );
        count += 1;
    }
    println!("ACCEPTANCE 6 (path realness/identity over 50 specs, n <= 9, tol 1e-10): PASS");
}

#[test]
fn acceptance_07_pearson_fidelity() {
    let spec = corner_spec(3, 3, 8, 7000);
    let records = run_ensemble(&spec, 50, &[2], Some(100_000)).unwrap();
    let exact: Vec<f64> = records.iter().map(|r| r.exact).collect();
    let estimates: Vec<f64> = records.iter().map(|r| r.estimate.unwrap()).collect();
    let rho = pearson(&exact, &estimates).unwrap();
    assert!(rho > 0.95, "Pearson correlation {rho} not above 0.95");
    println!(
        "ACCEPTANCE 7 (Pearson exact-vs-estimate, 50 instances at 1e5 shots: {rho:.4} > 0.95): PASS"
    );
}

#[test]
fn acceptance_08_haar_sampler_statistics() {
    use otoc_sim::ensemble::sample_haar_two_qubit_gate;
    let samples = 100_000;
    let mut rng = Xoshiro256StarStar::from_seed(8000);
    let mut sum2 = [[0.0f64; 4]; 4];
    let mut sum4_00 = 0.0f64;
    let mut worst_residual = 0.0f64;
    for _ in 0..samples {
        let u = sample_haar_two_qubit_gate(&mut rng);
        worst_residual = worst_residual.max(u.unitarity_residual());
        for i in 0..4 {
            for j in 0..4 {
                sum2[i][j] += u.0[i][j].norm_sqr();
            }
        }
        sum4_00 += u.0[0][0].norm_sqr().powi(2);
    }
    for (i, row) in sum2.iter().enumerate() {
        for (j, &s) in row.iter().enumerate() {
            let mean = s / samples as f64;
            assert!(
                (mean - 0.25).abs() < 0.005,
                "E|U_{i}{j}|^2 = {mean} not within 0.25 +- 0.005"
            );
        }
    }
    // Weingarten: E|U_ij|^4 = 2/(N(N+1)) = 0.1 for N = 4
    let mean4 = sum4_00 / samples as f64;
    assert!(
        (mean4 - 0.10).abs() < 0.005,
        "E|U_00|^4 = {mean4} not within 0.10 +- 0.005"
    );
    assert!(
        worst_residual < 1e-12,
        "worst unitarity residual {worst_residual}"
    );
    println!(
        "ACCEPTANCE 8 (Haar stats over 1e5 samples: E|U|^2 within 0.25+-0.005, E|U_00|^4 = {mean4:.4} within 0.10+-0.005, residual {worst_residual:.1e} < 1e-12): PASS"
    );
}

#[test]
fn acceptance_09_reproducibility_across_threads() {
    let base = corner_spec(2, 2, 2, 9000);

    let run_once = |threads: usize| -> (String, String) {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let circuit = sample_circuit_with_seed(&base, base.master_seed);
            let json = circuit.to_json().unwrap();
            let table =
                otoc_sim::harness::depth_sweep(&base, &[2, 4], 6, &[1, 2], Some(500)).unwrap();
            let mut buf = Vec::new();
            write_records_csv(&mut buf, &table.rows).unwrap();
            // drop the wall_time column (last field), the only nondeterministic one
            let csv: String = String::from_utf8(buf)
                .unwrap()
                .lines()
                .map(|line| line.rsplit_once(',').unwrap().0.to_string())
                .collect::<Vec<_>>()
                .join("\n");
            (json, csv)
        })
    };

    let (json1, csv1) = run_once(1);
    for threads in [4usize, 8] {
        let (json_t, csv_t) = run_once(threads);
        assert_eq!(json1, json_t, "circuit JSON differs at {threads} threads");
        assert_eq!(csv1, csv_t, "results CSV differs at {threads} threads");
    }
    println!("ACCEPTANCE 9 (bit-identical circuit JSON and CSV across 1/4/8 threads): PASS");
}

#[test]
fn acceptance_10_linear_cone_growth() {
    let ells: Vec<f64> = (2..=8).map(|l| l as f64).collect();
    let dstars: Vec<f64> = (2..=8)
        .map(|l| {
            let g = grid(l, l);
            let (b, m) = corner_ops(&g);
            min_connecting_depth(&g, &b, &m).unwrap().unwrap() as f64
        })
        .collect();
    // least-squares fit d* = a*ell + c
    let n = ells.len() as f64;
    let mx = ells.iter().sum::<f64>() / n;
    let my = dstars.iter().sum::<f64>() / n;
    let sxy: f64 = ells.iter().zip(&dstars).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = ells.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = ells
        .iter()
        .zip(&dstars)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let ss_tot: f64 = dstars.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    assert!(slope > 0.0, "slope {slope} not positive");
    assert!(r2 > 0.95, "R^2 = {r2} for d* = {dstars:?}");
    println!(
        "ACCEPTANCE 10 (d* vs ell linear fit: slope {slope:.3}, R^2 = {r2:.4} > 0.95, d* = {dstars:?}): PASS"
    );
}

// sanity anchor used by criterion 1's setup: a depth-0 circuit must be valid
#[test]
fn sampled_circuits_validate() {
    for depth in [0usize, 3, 9] {
        let spec = corner_spec(3, 3, depth, depth as u64);
        let circuit: Circuit = sample_circuit_with_seed(&spec, spec.master_seed);
        circuit.validate().unwrap();
    }
}

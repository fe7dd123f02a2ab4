//! Acceptance suite: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use darklattice::basis::{SubspaceBasis, SubspaceSpec};
use darklattice::darkmodes::{
    build_mode_transform, dark_mode_fock_states, equivalence_check, qr_relation, transformed_hamiltonian_check,
};
use darklattice::darkstates::{
    dark_state_count, echelon_dark_states, four_mode_closed_form, four_mode_family, four_mode_mixing_angle,
    n_mode_single_excitation_closed_form, pinned_family, solve_dark_states, three_mode_closed_form,
    three_mode_family, three_mode_mixing_angle, two_mode_closed_form, two_mode_mixing_angle, SolveOptions,
};
use darklattice::dynamics::{
    exact_propagate, lower_state, make_schedule, propagate, stirap_fidelity, IntegratorOptions, ScheduleKind,
    ScheduleParams,
};
use darklattice::hamiltonian::{assemble_blocks, BlockHamiltonian, Frame, ModelParams};
use darklattice::linalg::{
    gram_schmidt, null_space_svd, relative_annihilation, subspace_projector_distance, TolerancePolicy, VectorSet,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Paths = Vec<(&'static str, VectorSet)>;
type Criterion = (&'static str, fn() -> Check);

fn block(g: &[f64], n: u32, delta: f64) -> BlockHamiltonian {
    let basis = SubspaceBasis::new(SubspaceSpec::new(g.len(), n).unwrap()).unwrap();
    let p = ModelParams::with_detunings(0.0, &vec![delta; g.len()], g.to_vec()).unwrap();
    assemble_blocks(&basis, &p, Frame::Rotating).unwrap()
}

fn draw(rng: &mut ChaCha8Rng, modes: usize) -> Vec<f64> {
    (0..modes).map(|_| rng.random_range(0.5..2.0)).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn same_up_to_sign(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax().min((a + b).amax())
}

/// Every dark-vector path for one coupling draw.
fn all_paths(g: &[f64], n: u32, delta: f64) -> Result<(BlockHamiltonian, Paths), String> {
    let bh = block(g, n, delta);
    let pol = TolerancePolicy::default();
    let mut paths = vec![
        ("svd", solve_dark_states(&bh, &pol, SolveOptions::default()).map_err(err)?.vectors),
        ("echelon", echelon_dark_states(&bh, &pol).map_err(err)?.vectors),
        ("closed-form", pinned_family(n, g).map_err(err)?.vectors),
    ];
    match g.len() {
        2 => paths.push(("two-mode", two_mode_closed_form(n, g).map_err(err)?.vectors)),
        3 => paths.push(("three-mode", three_mode_family(n, g).map_err(err)?.vectors)),
        4 => paths.push(("four-mode", four_mode_family(n, g).map_err(err)?.vectors)),
        _ => {}
    }
    if n == 1 {
        paths.push(("single-excitation", n_mode_single_excitation_closed_form(g).map_err(err)?.vectors));
    }
    let t = build_mode_transform(g).map_err(err)?;
    paths.push(("dark-mode", dark_mode_fock_states(&t, n).map_err(err)?.vectors()));
    Ok((bh, paths))
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let table = [(2usize, [1usize, 1, 1]), (3, [2, 3, 4]), (4, [3, 6, 10])];
    let pol = TolerancePolicy::default();
    for (modes, row) in table {
        let g: Vec<f64> = (0..modes).map(|j| 0.8 + 0.3 * j as f64).collect();
        for (i, &want) in row.iter().enumerate() {
            let n = i as u32 + 1;
            let got = null_space_svd(&block(&g, n, 0.0).coupling, &pol).map_err(err)?.len();
            ensure(got == want, || format!("N = {modes}, n = {n}: nullity {got}, expected {want}"))?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok("9 cells match".into())
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let pol = TolerancePolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for modes in 2..=6usize {
        for n in 1..=6u32 {
            let want = dark_state_count(modes, n).map_err(err)?;
            let g = draw(&mut rng, modes);
            let bh = block(&g, n, 0.0);
            let svd = null_space_svd(&bh.coupling, &pol).map_err(err)?.len() as u128;
            let ech = echelon_dark_states(&bh, &pol).map_err(err)?.len() as u128;
            ensure(svd == want && ech == want, || {
                format!("N = {modes}, n = {n}: svd {svd}, echelon {ech}, expected {want}")
            })?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok("30 cells match by SVD and echelon".into())
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for modes in 2..=4usize {
        for n in 1..=3u32 {
            for _ in 0..100 {
                let g = draw(&mut rng, modes);
                let (bh, paths) = all_paths(&g, n, 0.0)?;
                for (name, set) in paths {
                    let r = relative_annihilation(&bh.coupling, &set);
                    worst = worst.max(r);
                    checked += set.len();
                    ensure(r <= 1e-10, || format!("N = {modes}, n = {n}, {name}, g = {g:?}: {r:e}"))?;
                }
            }
        }
    }
    Ok(format!("{checked} vectors, worst |Cv|/(smax |v|) = {worst:.2e}"))
}

fn criterion_4() -> Check {
    let delta = 0.7;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for modes in 2..=4usize {
        for n in 1..=3u32 {
            for _ in 0..10 {
                let g = draw(&mut rng, modes);
                let (bh, paths) = all_paths(&g, n, delta)?;
                let h = bh.full_matrix();
                let nu = bh.upper_len();
                let target = f64::from(n) * delta;
                for (name, set) in paths {
                    for i in 0..set.len() {
                        let v = set.vector(i);
                        let mut full = DVector::zeros(bh.dimension());
                        full.rows_mut(nu, v.len()).copy_from(&(&v / v.norm()));
                        let r = (&h * &full + &full * target).norm() / target;
                        worst = worst.max(r);
                        ensure(r <= 1e-9, || format!("N = {modes}, n = {n}, {name} #{i}: {r:e}"))?;
                    }
                }
            }
        }
    }
    Ok(format!("all paths at delta = {delta}, worst relative residual {worst:.2e}"))
}

fn span_distance(g: &[f64], n: u32, closed: &VectorSet) -> Result<f64, String> {
    let numeric = solve_dark_states(&block(g, n, 0.0), &TolerancePolicy::default(), SolveOptions::default())
        .map_err(err)?;
    Ok(subspace_projector_distance(&numeric.vectors, closed).map_err(err)?.spectral)
}

fn golden_lower(spec: SubspaceSpec, terms: &[(&[u32], f64)]) -> DVector<f64> {
    let basis = SubspaceBasis::new(spec).unwrap();
    let mut v = DVector::zeros(basis.lower_len());
    for (occ, c) in terms {
        v[basis.lower().position(occ).unwrap()] = *c;
    }
    v
}

fn goldens() -> Result<usize, String> {
    let mut count = 0;
    let mut check = |label: &str, got: DVector<f64>, want: DVector<f64>| {
        count += 1;
        let d = same_up_to_sign(&got, &want);
        ensure(d <= 1e-12, || format!("{label}: deviation {d:e}"))
    };
    let s2 = 2f64.sqrt();
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();

    let (g1, g2) = (0.8f64, 1.7f64);
    let n2 = g1 * g1 + g2 * g2;
    let d = two_mode_closed_form(2, &[g1, g2]).map_err(err)?.vector(0);
    check("two-mode n = 2", d, DVector::from_vec(vec![g2 * g2, -s2 * g1 * g2, g1 * g1]) / n2)?;
    let d = two_mode_closed_form(3, &[g1, g2]).map_err(err)?.vector(0);
    let want = DVector::from_vec(vec![g2.powi(3), -s3 * g2 * g2 * g1, s3 * g2 * g1 * g1, -g1.powi(3)]) / n2.powf(1.5);
    check("two-mode n = 3", d, want)?;

    let (g1, g2, g3) = (0.9f64, 1.4f64, 0.6f64);
    let spec = SubspaceSpec::new(3, 2).unwrap();
    let fam = three_mode_family(2, &[g1, g2, g3]).map_err(err)?;
    let gold: [&[(&[u32], f64)]; 3] = [
        &[(&[2, 0, 0], g2 * g2), (&[1, 1, 0], -s2 * g1 * g2), (&[0, 2, 0], g1 * g1)],
        &[(&[2, 0, 0], s2 * g2 * g3), (&[1, 1, 0], -g1 * g3), (&[1, 0, 1], -g1 * g2), (&[0, 1, 1], g1 * g1)],
        &[(&[2, 0, 0], g3 * g3), (&[1, 0, 1], -s2 * g3 * g1), (&[0, 0, 2], g1 * g1)],
    ];
    for (i, t) in gold.iter().enumerate() {
        check(&format!("three-mode n = 2, p = {}", i + 1), fam.vector(i), golden_lower(spec, t))?;
    }

    let (g1, g2, g3) = (1.3f64, 0.7f64, 1.6f64);
    let spec = SubspaceSpec::new(3, 3).unwrap();
    let fam = three_mode_family(3, &[g1, g2, g3]).map_err(err)?;
    let c = g1.powi(3);
    let gold: [&[(&[u32], f64)]; 4] = [
        &[(&[3, 0, 0], -g2.powi(3)), (&[2, 1, 0], s3 * g2 * g2 * g1), (&[1, 2, 0], -s3 * g2 * g1 * g1), (&[0, 3, 0], c)],
        &[
            (&[3, 0, 0], -s3 * g2 * g2 * g3),
            (&[2, 1, 0], 2.0 * g2 * g3 * g1),
            (&[2, 0, 1], g2 * g2 * g1),
            (&[1, 2, 0], -g3 * g1 * g1),
            (&[1, 1, 1], -s2 * g2 * g1 * g1),
            (&[0, 2, 1], c),
        ],
        &[
            (&[3, 0, 0], -s3 * g2 * g3 * g3),
            (&[2, 1, 0], g3 * g3 * g1),
            (&[2, 0, 1], 2.0 * g2 * g3 * g1),
            (&[1, 1, 1], -s2 * g3 * g1 * g1),
            (&[1, 0, 2], -g2 * g1 * g1),
            (&[0, 1, 2], c),
        ],
        &[(&[3, 0, 0], -g3.powi(3)), (&[2, 0, 1], s3 * g3 * g3 * g1), (&[1, 0, 2], -s3 * g3 * g1 * g1), (&[0, 0, 3], c)],
    ];
    for (i, t) in gold.iter().enumerate() {
        check(&format!("three-mode n = 3, p = {}", i + 1), fam.vector(i), golden_lower(spec, t))?;
    }

    let (g1, g2, g3, g4) = (1.1f64, 0.5f64, 1.7f64, 0.9f64);
    let spec = SubspaceSpec::new(4, 2).unwrap();
    let fam = four_mode_family(2, &[g1, g2, g3, g4]).map_err(err)?;
    let gold: [&[(&[u32], f64)]; 6] = [
        &[(&[2, 0, 0, 0], g2 * g2), (&[1, 1, 0, 0], -s2 * g2 * g1), (&[0, 2, 0, 0], g1 * g1)],
        &[(&[2, 0, 0, 0], s2 * g2 * g3), (&[1, 1, 0, 0], -g3 * g1), (&[1, 0, 1, 0], -g2 * g1), (&[0, 1, 1, 0], g1 * g1)],
        &[(&[2, 0, 0, 0], s2 * g2 * g4), (&[1, 1, 0, 0], -g4 * g1), (&[1, 0, 0, 1], -g2 * g1), (&[0, 1, 0, 1], g1 * g1)],
        &[(&[2, 0, 0, 0], g3 * g3), (&[1, 0, 1, 0], -s2 * g3 * g1), (&[0, 0, 2, 0], g1 * g1)],
        &[(&[2, 0, 0, 0], s2 * g3 * g4), (&[1, 0, 1, 0], -g4 * g1), (&[1, 0, 0, 1], -g3 * g1), (&[0, 0, 1, 1], g1 * g1)],
        &[(&[2, 0, 0, 0], g4 * g4), (&[1, 0, 0, 1], -s2 * g4 * g1), (&[0, 0, 0, 2], g1 * g1)],
    ];
    for (i, t) in gold.iter().enumerate() {
        check(&format!("four-mode n = 2, p = {}", i + 1), fam.vector(i), golden_lower(spec, t))?;
    }

    let (g1, g2, g3, g4) = (0.8f64, 1.2f64, 0.6f64, 1.5f64);
    let spec = SubspaceSpec::new(4, 3).unwrap();
    let fam = four_mode_family(3, &[g1, g2, g3, g4]).map_err(err)?;
    let c = g1.powi(3);
    let gold: [&[(&[u32], f64)]; 10] = [
        &[(&[3, 0, 0, 0], -g2.powi(3)), (&[2, 1, 0, 0], s3 * g2 * g2 * g1), (&[1, 2, 0, 0], -s3 * g2 * g1 * g1), (&[0, 3, 0, 0], c)],
        &[
            (&[3, 0, 0, 0], -s3 * g2 * g2 * g3),
            (&[2, 1, 0, 0], 2.0 * g2 * g3 * g1),
            (&[2, 0, 1, 0], g2 * g2 * g1),
            (&[1, 2, 0, 0], -g3 * g1 * g1),
            (&[1, 1, 1, 0], -s2 * g2 * g1 * g1),
            (&[0, 2, 1, 0], c),
        ],
        &[
            (&[3, 0, 0, 0], -s3 * g2 * g2 * g4),
            (&[2, 1, 0, 0], 2.0 * g2 * g4 * g1),
            (&[2, 0, 0, 1], g2 * g2 * g1),
            (&[1, 2, 0, 0], -g4 * g1 * g1),
            (&[1, 1, 0, 1], -s2 * g2 * g1 * g1),
            (&[0, 2, 0, 1], c),
        ],
        &[
            (&[3, 0, 0, 0], -s3 * g2 * g3 * g3),
            (&[2, 1, 0, 0], g3 * g3 * g1),
            (&[2, 0, 1, 0], 2.0 * g2 * g3 * g1),
            (&[1, 1, 1, 0], -s2 * g3 * g1 * g1),
            (&[1, 0, 2, 0], -g2 * g1 * g1),
            (&[0, 1, 2, 0], c),
        ],
        &[
            (&[3, 0, 0, 0], -s6 * g2 * g3 * g4),
            (&[2, 1, 0, 0], s2 * g3 * g4 * g1),
            (&[2, 0, 1, 0], s2 * g2 * g4 * g1),
            (&[2, 0, 0, 1], s2 * g2 * g3 * g1),
            (&[1, 1, 1, 0], -g4 * g1 * g1),
            (&[1, 1, 0, 1], -g3 * g1 * g1),
            (&[1, 0, 1, 1], -g2 * g1 * g1),
            (&[0, 1, 1, 1], c),
        ],
        &[
            (&[3, 0, 0, 0], -s3 * g2 * g4 * g4),
            (&[2, 1, 0, 0], g4 * g4 * g1),
            (&[2, 0, 0, 1], 2.0 * g2 * g4 * g1),
            (&[1, 1, 0, 1], -s2 * g4 * g1 * g1),
            (&[1, 0, 0, 2], -g2 * g1 * g1),
            (&[0, 1, 0, 2], c),
        ],
        &[(&[3, 0, 0, 0], -g3.powi(3)), (&[2, 0, 1, 0], s3 * g3 * g3 * g1), (&[1, 0, 2, 0], -s3 * g3 * g1 * g1), (&[0, 0, 3, 0], c)],
        &[
            (&[3, 0, 0, 0], -s3 * g3 * g3 * g4),
            (&[2, 0, 1, 0], 2.0 * g3 * g4 * g1),
            (&[2, 0, 0, 1], g3 * g3 * g1),
            (&[1, 0, 2, 0], -g4 * g1 * g1),
            (&[1, 0, 1, 1], -s2 * g3 * g1 * g1),
            (&[0, 0, 2, 1], c),
        ],
        &[
            (&[3, 0, 0, 0], -s3 * g3 * g4 * g4),
            (&[2, 0, 1, 0], g4 * g4 * g1),
            (&[2, 0, 0, 1], 2.0 * g3 * g4 * g1),
            (&[1, 0, 1, 1], -s2 * g4 * g1 * g1),
            (&[1, 0, 0, 2], -g3 * g1 * g1),
            (&[0, 0, 1, 2], c),
        ],
        &[(&[3, 0, 0, 0], -g4.powi(3)), (&[2, 0, 0, 1], s3 * g4 * g4 * g1), (&[1, 0, 0, 2], -s3 * g4 * g1 * g1), (&[0, 0, 0, 3], c)],
    ];
    for (i, t) in gold.iter().enumerate() {
        check(&format!("four-mode n = 3, p = {}", i + 1), fam.vector(i), golden_lower(spec, t))?;
    }
    Ok(count)
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut record = |label: String, d: f64| {
        worst = worst.max(d);
        ensure(d <= 1e-9, || format!("{label}: projector distance {d:e}"))
    };
    for n in 1..=8 {
        let g = draw(&mut rng, 2);
        record(format!("two-mode n = {n}"), span_distance(&g, n, &two_mode_closed_form(n, &g).map_err(err)?.vectors)?)?;
    }
    for n in 1..=5 {
        let g = draw(&mut rng, 3);
        record(format!("three-mode n = {n}"), span_distance(&g, n, &three_mode_family(n, &g).map_err(err)?.vectors)?)?;
    }
    for n in 1..=4 {
        let g = draw(&mut rng, 4);
        record(format!("four-mode n = {n}"), span_distance(&g, n, &four_mode_family(n, &g).map_err(err)?.vectors)?)?;
    }
    for modes in 2..=6 {
        let g = draw(&mut rng, modes);
        let set = n_mode_single_excitation_closed_form(&g).map_err(err)?.vectors;
        record(format!("single excitation N = {modes}"), span_distance(&g, 1, &set)?)?;
    }
    let goldens = goldens()?;
    Ok(format!("spans within {worst:.2e}; {goldens} golden vectors match"))
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pol = TolerancePolicy::default();
    let (mut dist, mut resid, mut triangular) = (0.0f64, 0.0f64, 0usize);
    for modes in 2..=4usize {
        for n in 1..=4u32 {
            let g = draw(&mut rng, modes);
            let bh = block(&g, n, 0.0);
            let t = build_mode_transform(&g).map_err(err)?;
            let b = dark_mode_fock_states(&t, n).map_err(err)?;
            let numeric = solve_dark_states(&bh, &pol, SolveOptions::default()).map_err(err)?;
            let d = equivalence_check(&numeric, &b).map_err(err)?.spectral;
            let a = echelon_dark_states(&bh, &pol).map_err(err)?;
            let qr = qr_relation(&a.vectors.columns, &b).map_err(err)?;
            dist = dist.max(d);
            resid = resid.max(qr.relative_residual);
            triangular += usize::from(qr.upper_triangular);
            ensure(d <= 1e-9, || format!("N = {modes}, n = {n}: projector distance {d:e}"))?;
            ensure(qr.relative_residual <= 1e-10, || {
                format!("N = {modes}, n = {n}: |A - BR|/|A| = {:e}", qr.relative_residual)
            })?;
        }
    }
    let mut worst_dark = 0.0f64;
    for modes in 2..=6usize {
        let g = draw(&mut rng, modes);
        let params = ModelParams::with_detunings(1.0, &vec![0.3; modes], g.clone()).map_err(err)?;
        let t = build_mode_transform(&g).map_err(err)?;
        let rep = transformed_hamiltonian_check(&params, &t, false).map_err(err)?;
        let bright = (rep.bright_coupling - g.iter().map(|x| x * x).sum::<f64>().sqrt()).abs();
        worst_dark = worst_dark.max(rep.dark_coupling);
        ensure(rep.dark_coupling <= 1e-12 && bright <= 1e-12, || {
            format!("N = {modes}: dark coupling {:e}, bright error {bright:e}", rep.dark_coupling)
        })?;
    }
    Ok(format!(
        "distance {dist:.2e}, residual {resid:.2e}, R triangular in {triangular}/12 cells; dark coupling {worst_dark:.2e}"
    ))
}

fn criterion_7() -> Check {
    let start = Instant::now();
    let opts = IntegratorOptions::default();
    let magnitude = 1.0;
    let duration = 200.0 / magnitude;
    let mut lines = Vec::new();
    for n in 1..=3u32 {
        let adiabatic = stirap_fidelity(n, magnitude, ScheduleKind::ThetaRamp, duration, 0.0, &opts).map_err(err)?;
        let diabatic = stirap_fidelity(n, magnitude, ScheduleKind::ThetaRamp, duration / 100.0, 0.0, &opts).map_err(err)?;
        ensure(adiabatic.fidelity >= 0.99, || format!("n = {n}: fidelity {}", adiabatic.fidelity))?;
        ensure(adiabatic.min_dark_overlap >= 0.99, || format!("n = {n}: dark overlap {}", adiabatic.min_dark_overlap))?;
        ensure(diabatic.fidelity <= 0.1, || format!("n = {n}: diabatic fidelity {}", diabatic.fidelity))?;
        lines.push(format!("n = {n}: {:.4}/{:.4}/{:.3}", adiabatic.fidelity, adiabatic.min_dark_overlap, diabatic.fidelity));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("fidelity/overlap/diabatic {}", lines.join(", ")))
}

fn criterion_8() -> Check {
    // fourth-order convergence of the propagator
    let g = vec![0.9, 0.6];
    let basis = SubspaceBasis::new(SubspaceSpec::new(2, 2).unwrap()).unwrap();
    let params = ModelParams::with_detunings(0.0, &[0.2, 0.2], g.clone()).map_err(err)?;
    let sched = make_schedule(ScheduleKind::Constant, &ScheduleParams { duration: 10.0, magnitude: 0.0, couplings: g })
        .map_err(err)?;
    let psi0 = lower_state(&basis, &[0, 2]).map_err(err)?;
    let h = assemble_blocks(&basis, &params, Frame::Rotating).map_err(err)?.full_matrix();
    let exact = exact_propagate(&h, &psi0, 10.0);
    let error = |dt: f64| -> Result<f64, String> {
        let opts = IntegratorOptions { initial_dt: Some(dt), adaptive: false, samples: 1, ..Default::default() };
        Ok((propagate(&basis, &params, &sched, &psi0, &opts).map_err(err)?.last() - &exact).norm())
    };
    let ratio = error(0.05)? / error(0.025)?;
    ensure((ratio - 16.0).abs() <= 4.0, || format!("step-halving error ratio {ratio}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut gs = 0.0f64;
    for _ in 0..20 {
        let m = DMatrix::from_fn(12, 5, |_, _| rng.random_range(-1.0..1.0));
        let q1 = gram_schmidt(&VectorSet::new(m, false)).map_err(err)?;
        let q2 = gram_schmidt(&q1).map_err(err)?;
        gs = gs.max((&q1.columns - &q2.columns).amax());
    }
    ensure(gs <= 1e-13, || format!("Gram-Schmidt idempotence {gs:e}"))?;

    let pol = TolerancePolicy::default();
    let mut scaling = 0.0f64;
    for modes in 2..=4usize {
        for n in 1..=3u32 {
            let g = draw(&mut rng, modes);
            let base = solve_dark_states(&block(&g, n, 0.0), &pol, SolveOptions::default()).map_err(err)?;
            for c in [0.1, 3.7] {
                let gc: Vec<f64> = g.iter().map(|x| x * c).collect();
                let scaled = solve_dark_states(&block(&gc, n, 0.0), &pol, SolveOptions::default()).map_err(err)?;
                scaling = scaling.max(subspace_projector_distance(&base.vectors, &scaled.vectors).map_err(err)?.spectral);
            }
        }
    }
    ensure(scaling <= 1e-12, || format!("g-scaling projector distance {scaling:e}"))?;

    let mut angle = 0.0f64;
    for _ in 0..10 {
        let g = draw(&mut rng, 4);
        let t: Vec<f64> = g[1..].iter().map(|x| (x / g[0]).atan()).collect();
        for n in 1..=4u32 {
            let a = two_mode_mixing_angle(n, t[0]).map_err(err)?;
            angle = angle.max((a - two_mode_closed_form(n, &g[..2]).map_err(err)?.vector(0)).amax());
            for s3 in 0..=n {
                let a = three_mode_mixing_angle(n, s3, t[0], t[1]).map_err(err)?;
                let b = three_mode_closed_form(n, s3, &g[..3]).map_err(err)?;
                angle = angle.max((a.vector / a.norm - b.vector / b.norm).amax());
                for s4 in 0..=s3 {
                    let a = four_mode_mixing_angle(n, s3, s4, [t[0], t[1], t[2]]).map_err(err)?;
                    let b = four_mode_closed_form(n, s3, s4, &g).map_err(err)?;
                    angle = angle.max((a.vector / a.norm - b.vector / b.norm).amax());
                }
            }
        }
    }
    ensure(angle <= 1e-12, || format!("mixing-angle forms differ by {angle:e}"))?;
    Ok(format!("RK4 ratio {ratio:.2}, GS {gs:.1e}, scaling {scaling:.1e}, angles {angle:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("table of dark-state counts", criterion_1),
        ("counting law, SVD and echelon", criterion_2),
        ("annihilation on every path", criterion_3),
        ("eigenstate property", criterion_4),
        ("closed-form spans and golden vectors", criterion_5),
        ("dark-mode equivalence", criterion_6),
        ("adiabatic transfer", criterion_7),
        ("numerical kernels", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("[PASS] {} {name}: {detail} ({elapsed:.2?})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {} {name}: {detail} ({elapsed:.2?})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}

use bhtn::hubo::{HuboPoly, QuboModel};
use bhtn::solvers::{minimize_column, solve_exact, solve_sa, Backend, SolverConfig};
use bhtn::{BitVector, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_poly(rng: &mut impl Rng, n: usize) -> HuboPoly {
    let mut p = HuboPoly::new(n);
    for _ in 0..3 * n {
        let deg = rng.random_range(0..=4.min(n));
        let mut vars: Vec<usize> = (0..n).collect();
        for i in 0..deg {
            let j = rng.random_range(i..n);
            vars.swap(i, j);
        }
        vars.truncate(deg);
        vars.sort_unstable();
        // Small integers make ties common, which exercises tie-breaking.
        p.add_term(&vars, rng.random_range(-3..=3) as f64).unwrap();
    }
    p
}

fn random_qubo(rng: &mut impl Rng, n: usize) -> QuboModel {
    let mut q = QuboModel::new(n);
    for i in 0..n {
        q.add_linear(i, rng.random_range(-1.0..1.0)).unwrap();
        for j in i + 1..n {
            q.add_quadratic(i, j, rng.random_range(-1.0..1.0)).unwrap();
        }
    }
    q
}

/// Minimum and its lowest-valued minimizer, scanning from the top down.
fn brute_force(n: usize, f: impl Fn(&BitVector) -> f64) -> (f64, u64) {
    let mut best = (f64::INFINITY, u64::MAX);
    for code in (0..1u64 << n).rev() {
        let v = f(&BitVector::from_int(code, n));
        if v <= best.0 {
            best = (v, code);
        }
    }
    best
}

#[test]
fn exact_matches_enumeration_including_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.random_range(1..=10);
        let p = random_poly(&mut rng, n);
        let report = solve_exact(&p).unwrap();
        let (energy, code) = brute_force(n, |y| p.eval(y).unwrap());
        assert_eq!(report.energy, energy);
        assert_eq!(report.best.to_int(), code, "tie broken differently for {p:?}");
        assert_eq!(report.backend, Backend::Exact);
    }
}

#[test]
fn exact_rejects_large_problems() {
    let p = HuboPoly::new(21);
    assert!(matches!(
        solve_exact(&p),
        Err(Error::TooManyVariables { vars: 21, limit: 20 })
    ));
}

#[test]
fn sa_finds_ground_states_of_small_models() {
    let mut hits = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_qubo(&mut rng, 8);
        let (min, _) = brute_force(8, |x| q.eval(x).unwrap());
        let cfg = SolverConfig::sa().with_seed(seed).with_reads(100);
        let report = solve_sa(&q, &cfg).unwrap();
        assert_eq!(report.reads_used, 100);
        assert!((report.energy - q.eval(&report.best).unwrap()).abs() < 1e-12);
        hits += usize::from((report.energy - min).abs() < 1e-9);
    }
    assert!(hits >= 95, "ground state found on {hits}/100 models");
}

#[test]
fn more_reads_never_hurt_much() {
    let mut ok = 0;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let q = random_qubo(&mut rng, 24);
        let mut cfg = SolverConfig::sa().with_seed(seed);
        cfg.sweeps = 50;
        let few = solve_sa(&q, &cfg.clone().with_reads(10)).unwrap().energy;
        let many = solve_sa(&q, &cfg.with_reads(200)).unwrap().energy;
        ok += usize::from(many <= few + 1e-12);
    }
    assert!(ok >= 45, "200 reads at least as good as 10 on {ok}/50 seeds");
}

#[test]
fn sa_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let q = random_qubo(&mut rng, 16);
    let cfg = SolverConfig::sa().with_seed(9).with_reads(20);
    let a = solve_sa(&q, &cfg).unwrap();
    let b = solve_sa(&q, &cfg).unwrap();
    assert_eq!((a.best, a.energy), (b.best, b.energy));
}

#[test]
fn minimize_column_reports_polynomial_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..30 {
        let p = random_poly(&mut rng, 6);
        let exact = minimize_column(&p, &SolverConfig::exact()).unwrap();
        let sa = minimize_column(&p, &SolverConfig::sa().with_seed(seed)).unwrap();
        assert_eq!(sa.energy, p.eval(&sa.best).unwrap());
        assert_eq!(sa.best.len(), 6);
        assert!(sa.energy >= exact.energy);
    }
}

use mrws::builders::grid_kernel_neumann;
use mrws::connectivity::is_m_connected;
use mrws::fixtures::{self, random_field, random_reversible, RandomSpec};
use mrws::geometry::{
    cheeger, cheeger_ratio, coarea_decompose, interaction, median_shift, perimeter, total_variation, CheegerMode,
};
use mrws::heat::{apply_laplacian, heat_evolve, HeatMethod};
use mrws::spectral::{dirichlet_energy, rayleigh_quotient, spectral_gap};
use mrws::{ScalarField, Space, Subset};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space_from(seed: u64, n: usize, blocks: usize) -> Space {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = RandomSpec {
        n,
        density: rng.random_range(0.2..0.9),
        loop_prob: 0.3,
        blocks,
    };
    random_reversible(&mut rng, spec)
}

fn field_from(seed: u64, n: usize) -> ScalarField {
    random_field(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

fn ergodic_fixtures() -> Vec<Space> {
    vec![
        fixtures::p3(),
        fixtures::k3(),
        fixtures::cycle(6),
        fixtures::lazy_cycle(7, 0.3),
        fixtures::linear_chain(3),
        grid_kernel_neumann(&[(0.0, 1.0)], 0.125, 0.3).unwrap(),
    ]
    .into_iter()
    .filter(is_m_connected)
    .collect()
}

fn ip(nu: &DVector<f64>, f: &DVector<f64>, g: &DVector<f64>) -> f64 {
    f.iter().zip(g.iter()).zip(nu.iter()).map(|((a, b), w)| a * b * w).sum()
}

fn pnorm(nu: &DVector<f64>, f: &DVector<f64>, p: f64) -> f64 {
    if p.is_infinite() {
        return f.amax();
    }
    f.iter().zip(nu.iter()).map(|(v, w)| w * v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Second eigenvector of `I − D^{½} P D^{−½}`, mapped back by `D^{−½}`.
fn fiedler_oracle(space: &Space) -> DVector<f64> {
    let n = space.len();
    let nu = space.measure() / space.measure().sum();
    let p = space.kernel();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let s = 0.5 * ((nu[i] / nu[j]).sqrt() * p[(i, j)] + (nu[j] / nu[i]).sqrt() * p[(j, i)]);
        if i == j {
            1.0 - s
        } else {
            -s
        }
    });
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    DVector::from_fn(n, |i, _| eig.eigenvectors[(i, order[1])] / nu[i].sqrt())
}

#[test]
fn positivity_spreads_on_connected_fixtures() {
    for s in ergodic_fixtures() {
        let u0 = ScalarField::indicator(&Subset::from_indices(s.len(), &[0]).unwrap());
        let u = heat_evolve(&s, &u0, 0.01, HeatMethod::Series, 1e-14).unwrap();
        assert!(u.as_slice().iter().all(|&v| v > 0.0), "{:?}", s.labels());
    }
}

#[test]
fn two_block_heat_never_crosses() {
    let tb = fixtures::two_block(0.2);
    let (b1, b2) = fixtures::two_block_halves(&tb);
    let u0 = ScalarField::indicator(&b1);
    for t in [0.01, 1.0, 10.0, 300.0] {
        let u = heat_evolve(&tb, &u0, t, HeatMethod::Series, 1e-12).unwrap();
        for i in b2.indices() {
            assert_eq!(u[i], 0.0);
        }
    }
}

#[test]
fn gap_ibe_matches_gap_on_fixtures() {
    for s in ergodic_fixtures() {
        let r = spectral_gap(&s);
        let ibe = r.gap_ibe.expect("integrated BE gap on small spaces");
        assert!((ibe - r.gap).abs() <= 1e-8, "{ibe} vs {}", r.gap);
    }
}

#[test]
fn isoperimetric_iff_poincare_on_fixtures() {
    let mut all = ergodic_fixtures();
    all.push(fixtures::two_block(0.25));
    all.push(fixtures::disjoint_union(&[fixtures::k3(), fixtures::cycle(4)]));
    for s in all {
        let h = cheeger(&s, CheegerMode::Exact).unwrap().upper;
        let gap = spectral_gap(&s).gap;
        assert_eq!(h > 0.0, gap > 0.0);
        assert!(h * h / 2.0 <= gap + 1e-9 && gap <= 2.0 * h + 1e-9);
    }
}

#[test]
fn half_measure_minimizer_identities() {
    let p3 = fixtures::p3();
    let a = Subset::from_indices(3, &[1]).unwrap();
    assert_eq!(cheeger_ratio(&p3, &a).unwrap(), cheeger(&p3, CheegerMode::Exact).unwrap().upper);
    let u = ScalarField::from(ScalarField::indicator(&a).values() * 2.0 - DVector::from_element(3, 1.0));
    let per = perimeter(&p3, &a).unwrap();
    assert!((total_variation(&p3, &u).unwrap() - 2.0 * per).abs() <= 1e-12);
    assert!((dirichlet_energy(&p3, &u).unwrap() - 4.0 * per).abs() <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heat_conserves_mass_and_contracts(seed in any::<u64>(), n in 1usize..=25, blocks in 1usize..=2) {
        let s = space_from(seed, n, blocks);
        let u0 = field_from(seed ^ 1, n);
        let nu = s.measure().clone();
        let scale = u0.max_abs().max(1.0);
        let (lo, hi) = (u0.values().min(), u0.values().max());
        for t in [0.1, 1.0, 10.0] {
            let u = heat_evolve(&s, &u0, t, HeatMethod::Series, 1e-12).unwrap();
            prop_assert!((u.values().dot(&nu) - u0.values().dot(&nu)).abs() <= 1e-10 * scale * nu.sum());
            prop_assert!(u.values().min() >= lo - 1e-12 * scale && u.values().max() <= hi + 1e-12 * scale);
            let prob = &nu / nu.sum();
            for p in [1.0, 2.0, f64::INFINITY] {
                prop_assert!(pnorm(&prob, u.values(), p) <= pnorm(&prob, u0.values(), p) + 1e-10 * scale);
            }
        }
    }

    #[test]
    fn heat_semigroup_law(seed in any::<u64>(), n in 1usize..=20, t in 0.0f64..3.0, r in 0.0f64..3.0) {
        let s = space_from(seed, n, 1);
        let u0 = field_from(seed ^ 2, n);
        let a = heat_evolve(&s, &heat_evolve(&s, &u0, r, HeatMethod::Spectral, 1e-12).unwrap(), t, HeatMethod::Spectral, 1e-12).unwrap();
        let b = heat_evolve(&s, &u0, t + r, HeatMethod::Series, 1e-12).unwrap();
        prop_assert!((a.values() - b.values()).amax() <= 1e-9 * u0.max_abs().max(1.0));
    }

    #[test]
    fn laplacian_is_self_adjoint(seed in any::<u64>(), n in 1usize..=25) {
        let s = space_from(seed, n, 2);
        let f = field_from(seed ^ 3, n);
        let g = field_from(seed ^ 4, n);
        let nu = s.measure();
        let lf = apply_laplacian(&s, &f).unwrap();
        let lg = apply_laplacian(&s, &g).unwrap();
        let scale = f.max_abs() * g.max_abs() * nu.sum();
        prop_assert!((ip(nu, lf.values(), g.values()) - ip(nu, f.values(), lg.values())).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn methods_agree(seed in any::<u64>(), n in 1usize..=50, t in prop::sample::select(vec![0.5, 2.0])) {
        let s = space_from(seed, n, 1);
        let u0 = field_from(seed ^ 5, n);
        let a = heat_evolve(&s, &u0, t, HeatMethod::Series, 1e-12).unwrap();
        let b = heat_evolve(&s, &u0, t, HeatMethod::Spectral, 1e-12).unwrap();
        let c = heat_evolve(&s, &u0, t, HeatMethod::Rk4, 1e-12).unwrap();
        let scale = u0.max_abs().max(1.0);
        prop_assert!((a.values() - b.values()).amax() <= 1e-8 * scale);
        prop_assert!((a.values() - c.values()).amax() <= 1e-8 * scale);
    }

    #[test]
    fn interaction_and_perimeter_symmetry(seed in any::<u64>(), n in 1usize..=16, bits in any::<u64>(), other in any::<u64>()) {
        let s = space_from(seed, n, 2);
        let a = Subset::from_bits(n, bits);
        let b = Subset::from_bits(n, other);
        prop_assert!((interaction(&s, &a, &b).unwrap() - interaction(&s, &b, &a).unwrap()).abs() <= 1e-12);
        prop_assert!((perimeter(&s, &a).unwrap() - perimeter(&s, &a.complement()).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn coarea_identity(seed in any::<u64>(), n in 1usize..=20) {
        let s = space_from(seed, n, 2);
        let u = field_from(seed ^ 6, n);
        let tv = total_variation(&s, &u).unwrap();
        let sum: f64 = coarea_decompose(&s, &u).unwrap().iter().map(|l| l.width * l.perimeter).sum();
        prop_assert!((tv - sum).abs() <= 1e-12 * (1.0 + tv));
    }

    #[test]
    fn cheeger_sandwich(seed in any::<u64>(), n in 2usize..=12) {
        let s = space_from(seed, n, 1);
        let h = cheeger(&s, CheegerMode::Exact).unwrap().upper;
        let gap = spectral_gap(&s).gap;
        prop_assert!(h * h / 2.0 <= gap + 1e-9);
        prop_assert!(gap <= 2.0 * h + 1e-9);
        prop_assert_eq!(h > 0.0, gap > 0.0);
    }

    #[test]
    fn median_normalized_fields_have_tv_above_h(seed in any::<u64>(), n in 2usize..=10) {
        let s = space_from(seed, n, 1);
        let c = cheeger(&s, CheegerMode::Exact).unwrap();
        let nu = &s.measure().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        for _ in 0..20 {
            let u = random_field(&mut rng, n);
            let m = median_shift(&s, &u).unwrap().shifted;
            let l1: f64 = m.as_slice().iter().zip(nu.iter()).map(|(v, w)| v.abs() * w).sum();
            if l1 < 1e-9 {
                continue;
            }
            let unit = ScalarField::from(m.values() / l1);
            prop_assert!(total_variation(&s, &unit).unwrap() >= c.upper - 1e-10);
        }
        let w = ScalarField::from(ScalarField::indicator(&c.witness).values() / c.witness.mass(nu));
        prop_assert!((total_variation(&s, &w).unwrap() - c.upper).abs() <= 1e-10);
    }

    #[test]
    fn rayleigh_quotients_bound_the_gap(seed in any::<u64>(), n in 2usize..=15) {
        let s = space_from(seed, n, 1);
        let r = spectral_gap(&s);
        prop_assert!(r.spectrum.iter().all(|&l| (-1e-12..=2.0 + 1e-12).contains(&l)));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 8);
        for _ in 0..500 {
            let f = random_field(&mut rng, n);
            if let Ok(q) = rayleigh_quotient(&s, &f) {
                prop_assert!(q >= r.gap - 1e-9);
            }
        }
        let q = rayleigh_quotient(&s, &ScalarField::from(fiedler_oracle(&s))).unwrap();
        prop_assert!((q - r.gap).abs() <= 1e-9);
    }
}

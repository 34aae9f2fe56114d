mod common;

use common::{pit, r2};
use proptest::prelude::*;
use qpot::energy::random_e0;
use qpot::envelope::{envelope, envelope_active_set, envelope_monotone_limit};
use qpot::grid::{read_grid_function, write_grid_function, Grid4, GridFunction, MeasureGrid};
use qpot::potential::{
    ma_density_signed, ma_measure, maximal_extension, project_subharmonic, solve_dirichlet, stencil_pure,
    truncate_measure,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 13;

fn ball() -> Grid4 {
    Grid4::ball(N, 1.0).unwrap()
}

fn psi(grid: &Grid4, seed: u64) -> GridFunction {
    random_e0(grid, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn lerp(a: &GridFunction, b: &GridFunction, t: f64) -> GridFunction {
    a.zip(b, |x, y| t * x + (1.0 - t) * y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn max_keeps_common_lower_bounds(seed in any::<u64>()) {
        let g = ball();
        let (u, v) = (psi(&g, seed), psi(&g, seed ^ 1));
        let (du, dv) = (ma_density_signed(&g, &u), ma_density_signed(&g, &v));
        let f: Vec<f64> = du.iter().zip(&dv).map(|(a, b)| a.min(*b)).collect();
        let dw = ma_density_signed(&g, &u.max(&v));
        for (k, &i) in g.interior().iter().enumerate() {
            let pure = stencil_pure(&g, k, |s| u.get(s) >= v.get(s))
                || stencil_pure(&g, k, |s| v.get(s) >= u.get(s));
            if pure {
                prop_assert!(dw[i] >= f[i], "node {i}: {} < {}", dw[i], f[i]);
            }
        }
    }

    #[test]
    fn larger_function_has_more_mass_on_contact(seed in any::<u64>()) {
        let g = ball();
        let v = psi(&g, seed);
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let a: [f64; 4] = std::array::from_fn(|_| r.gen_range(-0.2..0.2));
        let bowl = g.sample(|x| 2.0 * (r2(&std::array::from_fn(|k| x[k] - a[k])) - 0.25));
        let u = v.max(&v.zip(&bowl, |p, q| p + q));
        let (du, dv) = (ma_density_signed(&g, &u), ma_density_signed(&g, &v));
        let mut seen = 0;
        for (k, &i) in g.interior().iter().enumerate() {
            if stencil_pure(&g, k, |s| u.get(s) == v.get(s)) {
                seen += 1;
                prop_assert!(du[i] >= dv[i]);
            }
        }
        prop_assert!(seen > 0);
    }

    #[test]
    fn truncations_increase_to_the_full_measure(seed in any::<u64>()) {
        let g = ball();
        let u = psi(&g, seed);
        let full = ma_measure(&g, &u).unwrap().total_mass();
        let depth = u.max_abs();
        let masses: Vec<f64> = [0.2, 0.4, 0.6, 0.8, 1.0 + 1e-9]
            .iter()
            .map(|&f| truncate_measure(&g, &u, f * depth).unwrap().total_mass())
            .collect();
        prop_assert!(masses.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!((masses[4] - full).abs() <= 1e-12 * full.max(1.0), "{masses:?} vs {full}");
    }

    #[test]
    fn maximal_extension_is_harmonic_where_it_lifts(seed in any::<u64>(), r in 0.3..0.6f64) {
        let g = ball();
        let u = psi(&g, seed);
        let mask = g.node_mask(|x| r2(x) < r * r);
        let w = maximal_extension(&g, &u, &mask).unwrap();
        let d = ma_density_signed(&g, &w);
        for (k, &i) in g.interior().iter().enumerate() {
            prop_assert!(w.get(i) >= u.get(i));
            if stencil_pure(&g, k, |s| w.get(s) > u.get(s)) {
                prop_assert!(d[i].abs() <= 1e-8, "node {i}: {}", d[i]);
            }
        }
    }

    #[test]
    fn dirichlet_solve_is_order_reversing(seed in any::<u64>()) {
        let g = ball();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let c: [f64; 4] = std::array::from_fn(|_| r.gen_range(-0.4..0.4));
        let f1 = MeasureGrid::from_fn(&g, |x| 1.0 + x[0] * x[0]).unwrap();
        let f2 = MeasureGrid::from_fn(&g, |x| {
            1.0 + x[0] * x[0] + (-(r2(&std::array::from_fn(|k| x[k] - c[k]))) * 8.0).exp()
        })
        .unwrap();
        let b = g.sample(|x| 0.1 * x[1]);
        let u1 = solve_dirichlet(&g, &f1, &b).unwrap();
        let u2 = solve_dirichlet(&g, &f2, &b).unwrap();
        for &i in g.interior() {
            prop_assert!(u1.get(i) >= u2.get(i) - 1e-10);
        }
    }

    #[test]
    fn more_mass_means_lower_potential(seed in any::<u64>()) {
        // Equal zero boundary data and MA(u) >= MA(v) force u <= v.
        let g = ball();
        let v = psi(&g, seed);
        let mu = ma_measure(&g, &v).unwrap();
        let extra = MeasureGrid::from_fn(&g, |x| 2.0 * (-4.0 * r2(x)).exp()).unwrap();
        let bigger: Vec<f64> = mu.density().iter().zip(extra.density()).map(|(a, b)| a + b).collect();
        let u = solve_dirichlet(&g, &MeasureGrid::new(&g, bigger).unwrap(), &g.zeros()).unwrap();
        for &i in g.interior() {
            prop_assert!(u.get(i) <= v.get(i) + 1e-10);
        }
    }

    #[test]
    fn projection_dominates_competitors(seed in any::<u64>()) {
        let g = ball();
        let f = pit(&g, [0.2, 0.0, -0.1, 0.0], 0.5).min(&pit(&g, [-0.3, 0.1, 0.0, 0.0], 0.4));
        let p = project_subharmonic(&g, &f).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let q = random_e0(&g, &mut r).unwrap();
            // Largest multiple of q lying below f.
            let s = g
                .interior()
                .iter()
                .filter(|&&i| q.get(i) < 0.0)
                .map(|&i| f.get(i) / q.get(i))
                .fold(0.0f64, f64::max);
            let competitor = q.scaled(s);
            for &i in g.interior() {
                prop_assert!(competitor.get(i) <= f.get(i) + 1e-12);
                prop_assert!(competitor.get(i) <= p.get(i) + 1e-8);
            }
        }
    }

    #[test]
    fn envelope_is_idempotent_and_concave(seed in any::<u64>(), t in 0.0..1.0f64) {
        let g = ball();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let obstacle = |r: &mut ChaCha8Rng| {
            let c: [f64; 4] = std::array::from_fn(|_| r.gen_range(-0.2..0.2));
            pit(&g, c, r.gen_range(0.2..0.5))
        };
        let (f, h) = (obstacle(&mut r), obstacle(&mut r));
        let zero = g.zeros();
        let pf = envelope(&g, &f, &zero).unwrap().envelope;
        let ph = envelope(&g, &h, &zero).unwrap().envelope;
        let again = envelope(&g, &pf, &zero).unwrap().envelope;
        prop_assert!(g.max_interior_diff(&again, &pf) <= 1e-12);
        let mix = envelope(&g, &lerp(&f, &h, t), &zero).unwrap().envelope;
        let chord = lerp(&pf, &ph, t);
        let both = envelope(&g, &f.min(&h), &zero).unwrap().envelope;
        for &i in g.interior() {
            prop_assert!(mix.get(i) >= chord.get(i) - 1e-8);
            prop_assert!(both.get(i) <= pf.get(i).min(ph.get(i)) + 1e-8);
            prop_assert!(pf.get(i) <= f.get(i) + 1e-12);
        }
        let d = ma_density_signed(&g, &pf);
        prop_assert!(g.interior().iter().all(|&i| 4.0 * d[i] >= -1e-10));
    }
}

#[test]
fn envelope_algorithms_agree() {
    let g = ball();
    let f = pit(&g, [0.1, 0.2, 0.0, -0.1], 0.45).min(&g.constant(-0.05));
    let b = g.constant(-0.05);
    let a = envelope(&g, &f, &b).unwrap();
    let c = envelope_active_set(&g, &f, &b).unwrap();
    assert!(g.max_interior_diff(&a.envelope, &c.envelope) <= 1e-8);
    assert!(a.residual <= 1e-8, "{}", a.residual);
}

#[test]
fn constant_obstacle_is_its_own_envelope() {
    let g = ball();
    let f = g.constant(-0.3);
    let res = envelope(&g, &f, &f).unwrap();
    assert!(g.max_interior_diff(&res.envelope, &f) <= 1e-12);
}

#[test]
fn truncated_pits_decrease_to_the_pit_envelope() {
    let g = ball();
    let f = pit(&g, [0.0; 4], 0.6).scaled(3.0);
    let seq: Vec<GridFunction> = [0.2, 0.4, 0.6, 0.8, 1.2]
        .iter()
        .map(|&j| f.map(|v| v.max(-j)))
        .collect();
    let rep = envelope_monotone_limit(&g, &seq, &f, &g.zeros()).unwrap();
    assert!(rep.pass && rep.final_gap <= 1e-8, "{rep:?}");
    assert!(rep.gaps.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn grid_files_round_trip() {
    for g in [Grid4::unit_box(9).unwrap(), Grid4::ball(9, 0.8).unwrap()] {
        let u = g.sample(|x| x[0] - 2.0 * x[3] * x[1]);
        let mut buf = Vec::new();
        write_grid_function(&mut buf, &g, &u).unwrap();
        let (g2, u2) = read_grid_function(&mut buf.as_slice()).unwrap();
        assert_eq!(g2.n(), g.n());
        assert_eq!(g2.h().to_bits(), g.h().to_bits());
        assert_eq!(u2.values(), u.values());
        assert!(read_grid_function(&mut &buf[..buf.len() - 3]).is_err());
    }
}

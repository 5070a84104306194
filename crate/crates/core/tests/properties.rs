mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use trajopt_core::conserved::{build_generalized, commutator_defect, GeneralizedInstance};
use trajopt_core::cooling::{coherent_instance, qubit_gradient, subspace_passive, thermal_populations, SystemSpec};
use trajopt_core::lift::lift_point;
use trajopt_core::oracle::{induced_polygon, monte_carlo_audit, product_vertices};
use trajopt_core::polytope::{enumerate_vertices, is_edge, majorizes, DEFAULT_MAX_ENUM_DIM};
use trajopt_core::problem::preferred_order;
use trajopt_core::trajectory::{build, maximal_vertex, state_at};
use trajopt_core::{validate, ProblemInstance};

use common::{av_neighbors, dot, multinomial_reference, random_instance, random_lambda, rng};

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn vertex_set_is_permutation_invariant(seed in any::<u64>(), d in 2usize..7) {
        let mut r = rng(seed);
        let lambda = random_lambda(&mut r, d, seed % 2 == 0);
        let mut shuffled = lambda.clone();
        shuffled.rotate_left(seed as usize % d);
        shuffled.swap(0, d - 1);
        let a = enumerate_vertices(&lambda, 1e-12, DEFAULT_MAX_ENUM_DIM).unwrap();
        let b = enumerate_vertices(&shuffled, 1e-12, DEFAULT_MAX_ENUM_DIM).unwrap();
        let sa: HashSet<_> = a.vertices.iter().map(|v| bits(v)).collect();
        let sb: HashSet<_> = b.vertices.iter().map(|v| bits(v)).collect();
        prop_assert_eq!(sa, sb);
        prop_assert_eq!(a.count as u128, multinomial_reference(&lambda));
    }

    #[test]
    fn omega_is_convex_and_vertices_are_permutations(seed in any::<u64>(), d in 2usize..9) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, d, seed % 3 == 0);
        let t = build(&inst).unwrap();
        let slopes = t.minimal_cost_function().slopes();
        prop_assert!(slopes.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{:?}", slopes);
        let mut sorted_lambda = inst.lambda.clone();
        sorted_lambda.sort_by(f64::total_cmp);
        for i in 0..t.vertices.len() {
            let mut v = t.vertex_original(i);
            v.sort_by(f64::total_cmp);
            prop_assert_eq!(bits(&v), bits(&sorted_lambda));
        }
        for s in &t.steps {
            prop_assert!((s.gradient - (t.cost()[s.k] - t.cost()[s.l]) / (t.target()[s.k] - t.target()[s.l])).abs() < 1e-12);
        }
    }

    #[test]
    fn steps_are_polytope_edges(seed in any::<u64>(), d in 2usize..6) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, d, seed % 2 == 0);
        let t = build(&inst).unwrap();
        let vset = enumerate_vertices(&inst.lambda, inst.eps_pop, DEFAULT_MAX_ENUM_DIM).unwrap();
        for i in 0..t.steps.len() {
            prop_assert!(is_edge(&t.vertex_original(i), &t.vertex_original(i + 1), &vset, 1e-12).unwrap());
        }
    }

    #[test]
    fn states_are_majorized_by_the_spectrum(seed in any::<u64>(), d in 2usize..9, x in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, d, seed % 2 == 0);
        let t = build(&inst).unwrap();
        let (lo, hi) = t.alpha_range();
        let alpha = lo + x * (hi - lo);
        let p = state_at(&t, alpha).unwrap();
        prop_assert!(majorizes(&inst.lambda, &p.population, 1e-12));
        prop_assert!((dot(t.target(), &p.population) - alpha).abs() < 1e-9);
    }

    #[test]
    fn no_sampled_state_beats_the_trajectory(seed in any::<u64>(), d in 2usize..8) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, d, seed % 2 == 1);
        let t = build(&inst).unwrap();
        let report = monte_carlo_audit(&inst, &t, 300, seed).unwrap();
        prop_assert_eq!(report.violations, 0, "{:?}", report);
    }

    #[test]
    fn lifted_points_are_consistent(seed in any::<u64>(), d in 2usize..9, x in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, d, seed % 2 == 0);
        let t = build(&inst).unwrap();
        let (lo, hi) = t.alpha_range();
        let lifted = lift_point(&t, lo + x * (hi - lo)).unwrap();
        prop_assert!(lifted.unitary.orthogonality_defect() <= 1e-12);
        prop_assert!(lifted.doubly_stochastic.is_doubly_stochastic(1e-12));
        let via_d = lifted.doubly_stochastic.mul_vec(t.reference());
        for (a, b) in via_d.iter().zip(&lifted.density_diagonal) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn lifting_at_alpha_max_reaches_the_maximal_vertex(seed in any::<u64>(), d in 2usize..8) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, d, false);
        let t = build(&inst).unwrap();
        let lifted = lift_point(&t, t.alpha_range().1).unwrap();
        let want = t.order.to_original(&maximal_vertex(&inst, &t.order));
        for (a, b) in lifted.density_diagonal.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-12, "{:?} vs {:?}", lifted.density_diagonal, want);
        }
    }

    #[test]
    fn polygon_hull_and_envelopes(seed in any::<u64>(), d in 2usize..7) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, d, seed % 2 == 0);
        let vset = enumerate_vertices(&inst.lambda, inst.eps_pop, DEFAULT_MAX_ENUM_DIM).unwrap();
        let poly = induced_polygon(&vset, &inst.target, &inst.cost).unwrap();
        prop_assert!(poly.upper_is_concave(1e-9));
        prop_assert!(poly.lower_is_convex(1e-9));
        for h in &poly.hull {
            prop_assert!(poly.points.contains(h));
        }
    }

    #[test]
    fn thermal_weights_decrease_with_energy(
        energies in prop::collection::vec(-2.0f64..2.0, 1..8),
        beta in 0.01f64..20.0,
    ) {
        let p = thermal_populations(&energies, beta);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..energies.len() {
            for j in 0..energies.len() {
                if energies[i] < energies[j] {
                    prop_assert!(p[i] >= p[j]);
                }
            }
        }
    }

    #[test]
    fn qubit_cooling_vertices_are_subspace_passive(
        gaps in prop::collection::vec(0.05f64..1.0, 1..5),
        e_s in 0.05f64..1.0,
        beta in 0.2f64..3.0,
        excited in 0.1f64..0.9,
    ) {
        let mut m = vec![0.0];
        for g in &gaps {
            m.push(m[m.len() - 1] + g);
        }
        let sys = SystemSpec::new(vec![0.0, e_s]).with_populations(vec![1.0 - excited, excited]);
        let c = coherent_instance(&sys, &SystemSpec::new(m.clone()), beta).unwrap();
        let t = build(&c.instance).unwrap();
        for i in 0..t.vertices.len() {
            prop_assert!(subspace_passive(&t.vertex_original(i), &c, 1e-12).unwrap());
        }
        // every gradient is a machine gap minus the system gap, and E_S does not steer the swaps
        let sys2 = SystemSpec::new(vec![0.0, e_s + 0.37]).with_populations(vec![1.0 - excited, excited]);
        let c2 = coherent_instance(&sys2, &SystemSpec::new(m), beta).unwrap();
        let t2 = build(&c2.instance).unwrap();
        prop_assert_eq!(t.steps.len(), t2.steps.len());
        for (s, s2) in t.steps.iter().zip(&t2.steps) {
            let (k, l) = s.original_pair(&t.order);
            let (ground, excited) = if c.levels(k).0 == 0 { (k, l) } else { (l, k) };
            let g = qubit_gradient(&c, c.levels(ground).1, c.levels(excited).1).unwrap();
            prop_assert!((g - s.gradient).abs() < 1e-12);
            prop_assert_eq!(s.original_pair(&t.order), s2.original_pair(&t2.order));
            prop_assert!((s.gradient - s2.gradient - 0.37).abs() < 1e-12);
        }
    }
}

fn block_instance(seed: u64, sizes: &[usize]) -> GeneralizedInstance {
    let mut r = rng(seed);
    let d: usize = sizes.iter().sum();
    let base = random_instance(&mut r, d, seed.is_multiple_of(2));
    let conserved: Vec<f64> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &n)| std::iter::repeat_n(b as f64, n))
        .collect();
    GeneralizedInstance::new(base.with_conserved(conserved)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generalized_trajectories_respect_blocks(seed in any::<u64>(), x in 0.0f64..=1.0) {
        let g = block_instance(seed, &[2, 3, 2]);
        let t = build_generalized(&g).unwrap();
        let slopes = t.minimal_cost_function().slopes();
        prop_assert!(slopes.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        let (lo, hi) = t.alpha_range();
        let u = lift_point(&t, lo + x * (hi - lo)).unwrap();
        let c = g.base.conserved.clone().unwrap();
        prop_assert!(commutator_defect(&u.unitary, &c) <= 1e-12);
        let report = monte_carlo_audit(&g.base, &t, 200, seed).unwrap();
        prop_assert_eq!(report.violations, 0);
    }

    /// Edges of a product of two polytopes change one factor along one of its own edges.
    #[test]
    fn product_edges_are_single_block_av_swaps(seed in any::<u64>()) {
        let g = block_instance(seed, &[2, 3]);
        let vset = product_vertices(&g, DEFAULT_MAX_ENUM_DIM).unwrap();
        let blocks = &g.structure.blocks;
        let eps = g.base.eps_pop;
        for v in &vset.vertices {
            let mut predicted: HashSet<Vec<u64>> = HashSet::new();
            for block in blocks {
                let part: Vec<f64> = block.iter().map(|&i| v[i]).collect();
                for w_part in av_neighbors(&part, eps) {
                    let mut w = v.clone();
                    for (&i, &x) in block.iter().zip(&w_part) {
                        w[i] = x;
                    }
                    predicted.insert(bits(&w));
                }
            }
            for w in &vset.vertices {
                if w == v {
                    continue;
                }
                let edge = is_edge(v, w, &vset, eps).unwrap();
                prop_assert_eq!(edge, predicted.contains(&bits(w)), "{:?} {:?}", v, w);
            }
        }
    }
}

#[test]
fn preferred_order_of_sorted_input_is_identity() {
    let inst = validate(ProblemInstance::new(
        vec![0.4, 0.3, 0.2, 0.1],
        vec![0.0, 0.0, 1.0, 2.0],
        vec![0.5, 0.7, 0.1, 0.0],
    ))
    .unwrap();
    assert!(preferred_order(&inst.target, &inst.cost, 1e-12).is_identity());
}

use levy_bridge::feynman_kac::*;
use levy_bridge::kernels::step_kernel;
use levy_bridge::numerics::{Grid1D, GridFn, LineFn, RandomStream};
use levy_bridge::schroedinger::{marginal_residuals, solve_system, BaseKernel, BoundaryData, KernelSpec, TOL_SERIES};
use levy_bridge::Error;

fn box_v() -> Potential {
    Potential::Box {
        a: -1.0,
        b: 1.0,
        height: 1.0,
    }
}

fn edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect()
}

fn indicator(grid: Grid1D, a: f64, b: f64) -> GridFn {
    let v = grid
        .points()
        .map(|x| if (a..=b).contains(&x) { 1.0 } else { 0.0 })
        .collect();
    GridFn::new(grid, v, 0.0).unwrap()
}

#[test]
fn zero_potential_recovers_the_free_kernel() {
    let (eps, t) = (0.1, 1.0);
    let e = edges(-4.0, 4.0, 16);
    let est = fk_kernel_mc(eps, 0.0, t, &Potential::zero(), &e, 200_000, RandomStream::new(5, 0)).unwrap();
    let k = step_kernel(eps, t, Grid1D::new(-30.0, 30.0, 6001).unwrap(), TOL_SERIES).unwrap();
    for (i, w) in e.windows(2).enumerate() {
        // bins are half-open, so the atom at 0 belongs to [0, 0.5) only
        let exact = k.bin_mass(w[0], w[1]) - if w[1] == 0.0 { k.atom_weight } else { 0.0 };
        let (m, s) = (est.weights_mean[i], est.weights_stderr[i]);
        assert!((m - exact).abs() <= 3.0 * s + 1e-5, "bin {i}: {m} vs {exact} ± {s}");
    }
    assert_eq!(est.total_mean, 1.0);
    assert!(est.to_csv().starts_with("bin_lo,bin_hi,mean,stderr\n-4,-3.5,"));
}

#[test]
fn constant_potential_discounts_every_path() {
    let c = 0.7;
    let v = Potential::Constant { c };
    let est = fk_kernel_mc(0.1, 0.3, 1.5, &v, &edges(-2.0, 2.0, 4), 20_000, RandomStream::new(6, 0)).unwrap();
    assert!((est.total_mean - (-c * 1.5f64).exp()).abs() < 1e-13);
    assert!(est.total_stderr < 1e-12);
    let p = levy_bridge::stepsim::sample_free_path(0.1, 0.3, (0.0, 1.5), RandomStream::new(6, 1)).unwrap();
    assert!((path_fk_weight(&p, &v).unwrap() - (-c * 1.5f64).exp()).abs() < 1e-15);
}

#[test]
fn weights_are_multiplicative_over_splits() {
    let v = Potential::TruncatedHarmonic { cap: 4.0 };
    for i in 0..50 {
        let p = levy_bridge::stepsim::sample_free_path(0.2, 0.0, (0.0, 2.0), RandomStream::new(8, 0).path(i)).unwrap();
        let whole = path_fk_weight(&p, &v).unwrap();
        let split = path_fk_weight(&p.restrict(0.0, 0.7).unwrap(), &v).unwrap()
            * path_fk_weight(&p.restrict(0.7, 2.0).unwrap(), &v).unwrap();
        assert!((whole - split).abs() <= 1e-14 * whole.max(1e-300));
        assert!(whole > 0.0 && whole <= 1.0);
    }
}

#[test]
fn symmetry_of_the_perturbed_semigroup() {
    let g = Grid1D::new(-5.0, 5.0, 1001).unwrap();
    let (f, h) = (indicator(g, 0.0, 1.0), indicator(g, 2.0, 3.0));
    let r = fk_symmetry_check(0.05, 1.0, &box_v(), &f, &h, 100_000, RandomStream::new(11, 0)).unwrap();
    assert!(r.passes(3.0), "{r:?}");
    assert!(r.lhs > 0.0);
}

#[test]
fn lower_bound_for_the_box_potential() {
    let r = fk_lower_bound_check(
        0.05,
        0.0,
        &edges(-2.0, 2.0, 8),
        1.0,
        &box_v(),
        None,
        50_000,
        RandomStream::new(12, 0),
    )
    .unwrap();
    assert_eq!(r.c_n, 1.0);
    assert!(r.all_pass(), "{}", r.to_csv());
    let err = fk_lower_bound_check(
        0.05,
        0.0,
        &[0.0, 1.0],
        1.0,
        &box_v(),
        Some(2.0),
        10,
        RandomStream::new(1, 0),
    );
    assert!(matches!(err, Err(Error::WindowTooSmall { .. })));
}

#[test]
fn strang_splitting_is_second_order() {
    let g = Grid1D::new(-15.0, 15.0, 601).unwrap();
    let v = Potential::TruncatedHarmonic { cap: 3.0 };
    let e = edges(-3.0, 3.0, 12);
    let at = |dt| fk_kernel_grid(0.1, 0.0, 1.0, &v, &e, g, dt).unwrap();
    let (a, b, c) = (at(0.05), at(0.025), at(0.0125));
    let d1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let d2: f64 = b.iter().zip(&c).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let ratio = d1 / d2;
    assert!(ratio > 3.5 && ratio < 4.5, "{d1} {d2} {ratio}");
}

#[test]
fn grid_splitting_agrees_with_monte_carlo() {
    let g = Grid1D::new(-20.0, 20.0, 1601).unwrap();
    let e = edges(-3.0, 3.0, 12);
    let mc = fk_kernel_mc(0.05, 0.0, 1.0, &box_v(), &e, 200_000, RandomStream::new(13, 0)).unwrap();
    let coarse = fk_kernel_grid(0.05, 0.0, 1.0, &box_v(), &e, g, 0.02).unwrap();
    let fine = fk_kernel_grid(0.05, 0.0, 1.0, &box_v(), &e, g, 0.01).unwrap();
    for i in 0..fine.len() {
        let bias = 4.0 / 3.0 * (coarse[i] - fine[i]).abs();
        let gap = (mc.weights_mean[i] - fine[i]).abs();
        assert!(
            gap <= 3.5 * mc.weights_stderr[i] + bias + 1e-4,
            "bin {i}: {gap} > {}",
            mc.weights_stderr[i]
        );
    }
}

#[test]
fn perturbed_kernel_is_symmetric_positive_and_contracting() {
    let g = Grid1D::new(-10.0, 10.0, 401).unwrap();
    let spec = KernelSpec::Perturbed {
        potential: box_v(),
        base: BaseKernel::TruncatedStep { epsilon: 0.2 },
        dt: 0.02,
    };
    let prop = spec.propagator(g, TOL_SERIES).unwrap();
    let (i, j) = (180, 230);
    let ci = prop.column(0.8, i).unwrap();
    let cj = prop.column(0.8, j).unwrap();
    // symmetric up to the window truncation of the free kernel
    assert!((ci.density[j] - cj.density[i]).abs() < 1e-4 * ci.density[j]);
    assert!(ci.density.iter().all(|&v| v > 0.0));
    let one = LineFn::flat(g, vec![1.0; g.n()]).unwrap();
    let out = prop.propagate(&one, 0.8).unwrap();
    assert!(out
        .values
        .iter()
        .all(|&v| v <= 1.0 + 1e-12 && v > (-0.8f64).exp() - 1e-12));
}

#[test]
fn evolution_reduces_to_the_free_case() {
    let g = Grid1D::new(-10.0, 10.0, 401).unwrap();
    let data = LineFn::flat(g, g.points().map(|x| (-x * x).exp()).collect()).unwrap();
    let times = [0.0, 0.25, 0.5, 1.0];
    let base = BaseKernel::TruncatedStep { epsilon: 0.2 };
    let c = 0.6;
    let free = evolve_theta_perturbed(
        &data,
        g,
        base.clone(),
        &Potential::zero(),
        &times,
        Direction::Backward,
        0.05,
    )
    .unwrap();
    let disc = evolve_theta_perturbed(
        &data,
        g,
        base.clone(),
        &Potential::Constant { c },
        &times,
        Direction::Backward,
        0.05,
    )
    .unwrap();
    let fwd = evolve_theta_perturbed(
        &data,
        g,
        base,
        &Potential::Constant { c },
        &times,
        Direction::Forward,
        0.05,
    )
    .unwrap();
    assert_eq!(free[3].values, data.values);
    assert_eq!(fwd[0].values, data.values);
    for (k, &t) in times.iter().enumerate() {
        let back = (-c * (1.0 - t)).exp();
        for i in 0..g.n() {
            assert!((disc[k].values[i] - back * free[k].values[i]).abs() < 1e-12);
            // forward over t equals backward over the same elapsed time
            let m = times.iter().position(|&s| (1.0 - s - t).abs() < 1e-12);
            if let Some(m) = m {
                assert!((fwd[k].values[i] - disc[m].values[i]).abs() < 1e-10);
            }
        }
    }
    let err = evolve_theta_perturbed(
        &data,
        g,
        BaseKernel::TruncatedStep { epsilon: 0.2 },
        &Potential::zero(),
        &times,
        Direction::Forward,
        1.0,
    );
    assert!(matches!(err, Err(Error::Stability { .. })));
}

#[test]
fn perturbed_boundary_problem() {
    // the per-step tail refit limits the fit; it shrinks as the window grows
    let g = Grid1D::new(-60.0, 60.0, 2401).unwrap();
    let b = BoundaryData::bimodal(g, 1.0).unwrap();
    let base = BaseKernel::TruncatedStep { epsilon: 0.2 };
    let sol = solve_perturbed_schroedinger(&b, base, &box_v(), 0.1, 1e-4, 200).unwrap();
    let (r0, r1) = marginal_residuals(&sol).unwrap();
    assert!(r0 < 1e-4 && r1 < 1e-4, "{r0} {r1}");
    let p = perturbed_transition_density(&sol, 0.0, 0.2, 1.0, 0.7).unwrap();
    assert!(p > 0.0);
    let free = solve_system(&b, &KernelSpec::TruncatedStep { epsilon: 0.2 }, 1e-8, 500).unwrap();
    assert!(matches!(
        perturbed_transition_density(&free, 0.0, 0.2, 1.0, 0.7),
        Err(Error::Unsupported(_))
    ));
}

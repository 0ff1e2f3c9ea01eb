//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs as a plain binary (`harness = false`): `cargo test --test acceptance`.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use levy_bridge::feynman_kac::{
    fk_kernel_grid, fk_kernel_mc, fk_lower_bound_check, fk_symmetry_check, path_fk_weight, Potential,
};
use levy_bridge::kernels::{
    cauchy_kernel, char_fn_cauchy, char_fn_step, nabla_eps_apply, step_kernel, Propagator, StepPropagator,
};
use levy_bridge::numerics::quad::half_line;
use levy_bridge::numerics::{cauchy_cdf, convolve, integrate, CauchyMixture, Grid1D, GridFn, LineFn, RandomStream};
use levy_bridge::schroedinger::{
    bridge_density, interpolating_density, marginal_residuals, solve_system, transition_density, BoundaryData,
    KernelSpec, SchroedingerSolution, SolveOptions, TOL_SERIES,
};
use levy_bridge::stepsim::{
    conditioned_occupation, convergence_report, kolmogorov_residual, maximal_inequality_check, sample_free_path,
    solve_family, transition_mass, Histogram, JumpIntensity, Probe,
};

type Check = Result<(bool, String), Box<dyn std::error::Error>>;
type Criterion = (&'static str, u64, fn() -> Check);

fn sup_abs(it: impl Iterator<Item = f64>) -> f64 {
    it.map(f64::abs).fold(0.0, f64::max)
}

fn edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect()
}

fn cauchy_kernel_checks() -> Check {
    let g = Grid1D::new(-50.0, 50.0, 4001)?;
    assert!(g.dx() <= 0.025);

    let f = GridFn::from_fn(g, |x| cauchy_kernel(0.0, 0.0, x, 1.0).unwrap());
    let norm = integrate(&f) + 2.0 * (1.0 - cauchy_cdf(50.0, 0.0, 1.0));
    let norm_err = (norm - 1.0).abs();

    // ∫k(0,0,z,s)k(z,s,x,t)dz on the window, plus the part beyond |z| = 50
    let mut ck: f64 = 0.0;
    for (s, t) in [(0.25, 1.0), (0.5, 1.0), (1.0, 2.0)] {
        let a = GridFn::from_fn(g, |z| cauchy_kernel(0.0, 0.0, z, s).unwrap());
        let b = GridFn::from_fn(g, |z| cauchy_kernel(0.0, s, z, t).unwrap());
        let c = convolve(&a, &b)?;
        for (i, x) in g.points().enumerate() {
            let outer = |z: f64| {
                cauchy_kernel(0.0, 0.0, z, s).unwrap()
                    * (cauchy_kernel(z, s, x, t).unwrap() + cauchy_kernel(-z, s, x, t).unwrap())
            };
            let exact = cauchy_kernel(0.0, 0.0, x, t)?;
            ck = ck.max((c.values[i] + half_line(&outer, 50.0, 0.5) - exact).abs());
        }
    }
    let values = cauchy_kernel(0.0, 0.0, 0.0, 1.0)? == 1.0 / PI && cauchy_kernel(0.0, 0.0, 1.0, 1.0)? == 0.5 / PI;
    Ok((
        norm_err <= 1e-6 && ck <= 1e-4 && values,
        format!("normalisation err {norm_err:.1e}, Chapman-Kolmogorov sup {ck:.1e}, exact values {values}"),
    ))
}

/// Sup over `|x| ≤ 5` of the centred-difference residual of
/// `∂_t u = sign·|∇|_ε u` where `u(t) = K_{tau(t)} data`.
fn pde_residual(
    prop: &StepPropagator,
    eps: f64,
    data: &LineFn,
    tau: f64,
    dt: f64,
    sign: f64,
) -> Result<f64, Box<dyn std::error::Error>> {
    let g = prop.grid();
    let mid = prop.propagate(data, tau)?;
    let later = prop.propagate(data, tau + dt)?;
    let earlier = prop.propagate(data, tau - dt)?;
    let gen = nabla_eps_apply(eps, &mid.to_gridfn())?;
    Ok(g.points()
        .enumerate()
        .filter(|(_, x)| x.abs() <= 5.0)
        .map(|(i, _)| {
            // tau runs with t forward, against t backward
            let dudt = sign * (later.values[i] - earlier.values[i]) / (2.0 * dt);
            (dudt + sign * gen.values[i]).abs()
        })
        .fold(0.0, f64::max))
}

fn step_kernel_checks() -> Check {
    let g = Grid1D::new(-20.0, 20.0, 2001)?;
    let mut atom_exact = true;
    let mut mass_err: f64 = 0.0;
    for (eps, t) in [(1.0, PI / 2.0), (0.2, 1.0), (0.5, 0.3), (0.1, 1.0)] {
        let k = step_kernel(eps, t, g, TOL_SERIES)?;
        atom_exact &= k.atom_weight == (-2.0 * t / (PI * eps)).exp();
        mass_err = mass_err.max((k.total_mass() - 1.0).abs());
    }
    atom_exact &= step_kernel(1.0, PI / 2.0, g, TOL_SERIES)?.atom_weight == (-1.0f64).exp();

    let (eps, dt) = (0.2, 1e-3);
    let pg = Grid1D::new(-20.0, 20.0, 2001)?;
    assert!((pg.dx() - 0.02).abs() < 1e-12);
    let prop = StepPropagator::new(pg, eps, TOL_SERIES)?;
    // forward density θ* and backward solution θ of the conjugate pair
    let f = LineFn::flat(pg, pg.points().map(|x| (-0.5 * (x - 0.5) * (x - 0.5)).exp()).collect())?;
    let h = LineFn::flat(pg, pg.points().map(|x| (-(x + 1.0) * (x + 1.0) / 3.0).exp()).collect())?;
    let forward = pde_residual(&prop, eps, &f, 0.5, dt, 1.0)?;
    let backward = pde_residual(&prop, eps, &h, 0.5, dt, -1.0)?;
    let pde = forward.max(backward);
    Ok((
        atom_exact && mass_err <= 1e-4 && pde <= 1e-3,
        format!("atom exact {atom_exact}, mass err {mass_err:.1e}, PDE residual fwd {forward:.1e} bwd {backward:.1e}"),
    ))
}

fn char_fn_checks() -> Check {
    let ps: Vec<f64> = (0..=200).map(|k| -5.0 + 0.05 * k as f64).collect();
    let ts: Vec<f64> = (0..=100).map(|k| 0.01 * k as f64).collect();
    let mut col = Vec::new();
    let mut within = true;
    for eps in [1.0, 0.3, 0.1, 0.03, 0.01] {
        let mut sup: f64 = 0.0;
        for &p in &ps {
            for &t in &ts {
                sup = sup.max((char_fn_step(eps, p, t)? - char_fn_cauchy(p, t)?).abs());
            }
        }
        within &= sup <= 25.0 * eps / PI;
        col.push(sup);
    }
    let mono = col.windows(2).all(|w| w[1] <= w[0]);
    let shown: Vec<String> = col.iter().map(|v| format!("{v:.2e}")).collect();
    Ok((
        within && mono,
        format!("sup gaps [{}], monotone {mono}", shown.join(", ")),
    ))
}

fn solver_checks() -> Check {
    let g = Grid1D::new(-60.0, 60.0, 8192)?;
    let free = solve_system(&BoundaryData::free(g, 1.0)?, &KernelSpec::ExactCauchy, 1e-10, 50)?;
    let g_var = (free.g.max_value() - free.g.min_value()) / free.g.max_value();
    let mut rho_err: f64 = 0.0;
    for k in 0..=10 {
        let t = 0.1 * k as f64;
        let rho = interpolating_density(&free, t)?;
        let exact = CauchyMixture::single(0.0, 1.0 + t)?;
        rho_err = rho_err.max(sup_abs(g.points().zip(&rho.values).map(|(x, v)| v - exact.pdf(x))));
    }

    let gb = Grid1D::new(-60.0, 60.0, 4096)?;
    let bimodal = solve_system(&BoundaryData::bimodal(gb, 1.0)?, &KernelSpec::ExactCauchy, 1e-6, 200)?;
    let (r0, rt) = marginal_residuals(&bimodal)?;
    let fit = r0 <= 1e-6 && rt <= 1e-6 && bimodal.iterations <= 200;

    let gauge = gauge_gap(&bimodal, 3.7)?.max(gauge_gap(&free, 0.01)?);
    Ok((
        g_var <= 1e-8 && rho_err <= 1e-4 && fit && gauge <= 1e-12,
        format!(
            "free: g variation {g_var:.1e}, rho sup err {rho_err:.1e}; bimodal: L1 {r0:.1e}/{rt:.1e} in {} iterations; gauge {gauge:.1e}",
            bimodal.iterations
        ),
    ))
}

/// Largest relative change of `p` and `ρ` under `(f, g) → (c f, g/c)`.
fn gauge_gap(s: &SchroedingerSolution, c: f64) -> Result<f64, Box<dyn std::error::Error>> {
    let r = s.rescaled(c)?;
    let mut gap: f64 = 0.0;
    for (y, sx, x, t) in [(0.0, 0.2, 0.5, 0.7), (-2.0, 0.0, 3.0, 1.0), (1.0, 0.5, -1.0, 0.6)] {
        let a = transition_density(s, y, sx, x, t)?;
        let b = transition_density(&r, y, sx, x, t)?;
        gap = gap.max((a - b).abs() / a.abs());
    }
    for t in [0.0, 0.4, 1.0] {
        let a = interpolating_density(s, t)?;
        let b = interpolating_density(&r, t)?;
        for (u, v) in a.values.iter().zip(&b.values) {
            gap = gap.max((u - v).abs() / u.abs().max(1e-300));
        }
    }
    Ok(gap)
}

fn bridge_checks() -> Check {
    let direct = sup_abs(
        (0..=2000)
            .map(|k| -20.0 + 0.02 * k as f64)
            .map(|x| bridge_density(0.0, 0.0, 0.0, 2.0, x, 1.0).unwrap() - (2.0 / PI) / (1.0 + x * x).powi(2)),
    );
    let g = Grid1D::new(-20.0, 20.0, 16_001)?;
    let b = BoundaryData::pinned(g, 0.0, 0.0, 2.0, 0.01)?;
    let s = solve_system(&b, &KernelSpec::ExactCauchy, 1e-8, 200)?;
    let rho = interpolating_density(&s, 1.0)?;
    let solved = sup_abs(
        g.points()
            .zip(&rho.values)
            .map(|(x, v)| v - (2.0 / PI) / (1.0 + x * x).powi(2)),
    );
    Ok((
        direct <= 1e-6 && solved <= 5e-2,
        format!("closed form sup err {direct:.1e}, solver with 0.01 spikes {solved:.2e}"),
    ))
}

fn bimodal_step(eps: f64) -> Result<SchroedingerSolution, Box<dyn std::error::Error>> {
    let g = Grid1D::new(-40.0, 40.0, 1601)?;
    Ok(solve_system(
        &BoundaryData::bimodal(g, 1.0)?,
        &KernelSpec::TruncatedStep { epsilon: eps },
        1e-8,
        500,
    )?)
}

fn conditioned_checks() -> Check {
    let sol = bimodal_step(0.2)?;
    let r: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&ds| kolmogorov_residual(&sol, 0.0, 0.4, 0.9, ds).map(|k| k.sup))
        .collect::<Result<_, _>>()?;
    let ratios = [r[0] / r[1], r[1] / r[2]];
    let kolmogorov = r[0] <= 1e-3 && ratios.iter().all(|q| (3.0..=5.0).contains(q));

    let mut mass_err: f64 = 0.0;
    for (y, s, t) in [(0.0, 0.4, 0.9), (2.0, 0.0, 1.0), (-3.0, 0.5, 0.75)] {
        mass_err = mass_err.max((transition_mass(&sol, y, s, t)? - 1.0).abs());
    }

    let h = JumpIntensity::from_solution(&sol, 101)?;
    let start = sol
        .boundary
        .rho0_mixture
        .clone()
        .ok_or("bimodal boundary is a mixture")?;
    let tmpl = Histogram::new(-8.0, 8.0, 100)?;
    let mut l1: f64 = 0.0;
    for t in [0.5, 1.0] {
        let occ = conditioned_occupation(&h, &start, t, &tmpl, 100_000, RandomStream::new(12, 0))?;
        let expected = occ.masses_from_density(&interpolating_density(&sol, t)?);
        l1 = l1.max(occ.l1_distance(&expected)?);
    }
    Ok((
        kolmogorov && mass_err <= 1e-4 && l1 <= 0.05,
        format!(
            "Kolmogorov residual {:.1e} (ratios {:.2}, {:.2}), mass err {mass_err:.1e}, occupation L1 {l1:.3}",
            r[0], ratios[0], ratios[1]
        ),
    ))
}

fn convergence_checks() -> Check {
    let g = Grid1D::new(-30.0, 30.0, 4001)?;
    let b = BoundaryData::free(g, 1.0)?;
    let opts = SolveOptions {
        tol_fit: 1e-8,
        max_iter: 500,
        tol_series: TOL_SERIES,
    };
    let reference = solve_system(&b, &KernelSpec::ExactCauchy, 1e-8, 500)?;
    let family = solve_family(&b, &[1.0, 0.3, 0.1, 0.03], opts)?;
    let p_grid: Vec<f64> = (0..=20).map(|k| -5.0 + 0.5 * k as f64).collect();
    let t_grid: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
    let probes: Vec<Probe> = [(0.0, 0.0), (0.0, 1.0), (1.0, -1.0), (-2.0, 0.5), (0.5, 3.0)]
        .into_iter()
        .map(|(y, x)| Probe { y, s: 0.0, x, t: 1.0 })
        .collect();
    let report = convergence_report(&reference, &family, &p_grid, &t_grid, &probes)?;
    let last = report.rows.last().ok_or("empty report")?;
    let [_, rho_mono, p_mono] = report.monotone(0.1);
    Ok((
        last.rho_l1_sup < 1e-2 && last.p_max_err < 1e-2 && rho_mono && p_mono,
        format!(
            "at eps 0.03: rho L1 {:.1e}, p err {:.1e}; monotone rho {rho_mono}, p {p_mono}",
            last.rho_l1_sup, last.p_max_err
        ),
    ))
}

const FK_PATHS: usize = 1_000_000;

fn feynman_kac_checks() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;

    let (eps, t) = (0.1, 1.0);
    let e = edges(-4.0, 4.0, 16);
    let est = fk_kernel_mc(eps, 0.0, t, &Potential::zero(), &e, FK_PATHS, RandomStream::new(5, 0))?;
    let k = step_kernel(eps, t, Grid1D::new(-30.0, 30.0, 12_001)?, TOL_SERIES)?;
    let mut worst: f64 = 0.0;
    for (i, w) in e.windows(2).enumerate() {
        // half-open bins: the atom at 0 belongs to [0, 0.5)
        let exact = k.bin_mass(w[0], w[1]) - if w[1] == 0.0 { k.atom_weight } else { 0.0 };
        worst = worst.max((est.weights_mean[i] - exact).abs() / est.weights_stderr[i]);
    }
    ok &= worst <= 3.0;
    notes.push(format!("V=0 worst bin {worst:.2}σ"));

    let c = 0.7;
    let v = Potential::Constant { c };
    let est = fk_kernel_mc(eps, 0.3, 1.5, &v, &e, FK_PATHS, RandomStream::new(6, 0))?;
    let target = (-c * 1.5f64).exp();
    let mut per_path: f64 = 0.0;
    for i in 0..1000 {
        let p = sample_free_path(eps, 0.3, (0.0, 1.5), RandomStream::new(6, 1).path(i))?;
        per_path = per_path.max((path_fk_weight(&p, &v)? - target).abs());
    }
    ok &= (est.total_mean - target).abs() <= 3.0 * est.total_stderr + 1e-12 && per_path <= 1e-15;
    notes.push(format!(
        "V=c mass err {:.1e}, per-path {per_path:.0e}",
        (est.total_mean - target).abs()
    ));

    let box_v = Potential::Box {
        a: -1.0,
        b: 1.0,
        height: 1.0,
    };
    let g = Grid1D::new(-5.0, 5.0, 1001)?;
    let ind = |a: f64, b: f64| {
        let v = g
            .points()
            .map(|x| if (a..=b).contains(&x) { 1.0 } else { 0.0 })
            .collect();
        GridFn::new(g, v, 0.0)
    };
    let r = fk_symmetry_check(
        0.05,
        1.0,
        &box_v,
        &ind(0.0, 1.0)?,
        &ind(2.0, 3.0)?,
        FK_PATHS,
        RandomStream::new(11, 0),
    )?;
    ok &= r.passes(3.0);
    notes.push(format!("symmetry {:.2}σ", (r.lhs - r.rhs).abs() / r.stderr));

    let lb = fk_lower_bound_check(
        0.05,
        0.0,
        &edges(-2.0, 2.0, 8),
        1.0,
        &box_v,
        None,
        FK_PATHS,
        RandomStream::new(12, 0),
    )?;
    ok &= lb.all_pass();
    notes.push(format!("floor holds {} (c_n {})", lb.all_pass(), lb.c_n));

    let gg = Grid1D::new(-20.0, 20.0, 3201)?;
    let e = edges(-3.0, 3.0, 12);
    let mc = fk_kernel_mc(0.05, 0.0, 1.0, &box_v, &e, FK_PATHS, RandomStream::new(13, 0))?;
    let coarse = fk_kernel_grid(0.05, 0.0, 1.0, &box_v, &e, gg, 0.02)?;
    let fine = fk_kernel_grid(0.05, 0.0, 1.0, &box_v, &e, gg, 0.01)?;
    let mut excess: f64 = f64::NEG_INFINITY;
    for i in 0..fine.len() {
        let bias = 4.0 / 3.0 * (coarse[i] - fine[i]).abs();
        excess = excess.max((mc.weights_mean[i] - fine[i]).abs() - 3.0 * mc.weights_stderr[i] - bias);
    }
    ok &= excess <= 0.0;
    notes.push(format!("grid vs MC margin {:.1e}", -excess));
    Ok((ok, notes.join(", ")))
}

fn maximal_checks() -> Check {
    let r = maximal_inequality_check(&[3.0, 10.0, 30.0, 100.0], 1.0, 1e-3, 100_000, RandomStream::new(3, 3))?;
    let rows: Vec<String> = r
        .rows
        .iter()
        .map(|w| format!("n={}: {:.4} <= {:.4}", w.n, w.empirical, w.bound))
        .collect();
    Ok((r.all_pass(), rows.join(", ")))
}

/// Data rows of every CSV/JSON output in `dir`, without `#` header lines.
fn snapshot(dir: &Path) -> Vec<(String, Vec<String>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv" || e == "json"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let rows = fs::read_to_string(&p)
                .unwrap()
                .lines()
                .filter(|l| !l.starts_with('#'))
                .map(str::to_owned)
                .collect();
            (p.file_name().unwrap().to_string_lossy().into_owned(), rows)
        })
        .collect()
}

fn cli_determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_levy-bridge");
    let runs: [&[&str]; 3] = [
        &[
            "simulate", "--free", "--eps", "0.1", "--paths", "20000", "--seed", "11", "--quiet",
        ],
        &[
            "simulate",
            "--conditioned",
            "--eps",
            "0.5",
            "--paths",
            "5000",
            "--seed",
            "11",
            "--quiet",
        ],
        &[
            "fk",
            "--potential",
            "box:-1,1,1",
            "--symmetry",
            "--lower-bound",
            "--paths",
            "20000",
            "--seed",
            "11",
            "--quiet",
        ],
    ];
    let mut files = 0;
    for args in runs {
        let dirs = [tempfile::tempdir()?, tempfile::tempdir()?];
        for (d, threads) in dirs.iter().zip(["", "1"]) {
            let mut cmd = Command::new(bin);
            cmd.args(args).arg("--out").arg(d.path());
            if !threads.is_empty() {
                cmd.env("LEVY_BRIDGE_THREADS", threads);
            }
            let o = cmd.output()?;
            if o.status.code() == Some(2) {
                return Ok((
                    false,
                    format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr)),
                ));
            }
        }
        let (a, b) = (snapshot(dirs[0].path()), snapshot(dirs[1].path()));
        if a.is_empty() || a != b {
            return Ok((false, format!("{args:?}: outputs differ")));
        }
        files += a.len();
    }
    Ok((true, format!("{files} output files identical across reruns")))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("Cauchy kernel", 10, cauchy_kernel_checks),
        ("step kernel", 60, step_kernel_checks),
        ("characteristic-function gap", 10, char_fn_checks),
        ("Schroedinger solver", 120, solver_checks),
        ("bridge midpoint", 120, bridge_checks),
        ("conditioned step process", 300, conditioned_checks),
        ("convergence as eps -> 0", 300, convergence_checks),
        ("Feynman-Kac", 600, feynman_kac_checks),
        ("maximal inequality", 300, maximal_checks),
        ("CLI determinism", 600, cli_determinism),
    ];
    let mut failed = 0;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(*limit);
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        let tag = if pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {} {name}: {detail} ({:.1} s, limit {limit} s)",
            k + 1,
            took.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

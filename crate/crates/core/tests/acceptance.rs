//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use schwarz_coupler::assembly::{
    assemble_pair_integral, assemble_system, AssembledSystem, AssemblyOptions, BasisFunction,
    FeSpace,
};
use schwarz_coupler::geometry::{build_uniform_mesh, Interval, Partition1D};
use schwarz_coupler::kernel::KernelSpec;
use schwarz_coupler::quadrature::GaussRule;
use schwarz_coupler::schwarz::{
    check_monotone, estimate_rate_from_errors, run_monolithic, run_multidomain_nonlocal,
    run_schwarz, verify_discrete_subsolution, DiscreteField, MonotoneDirection, Reference,
    SchwarzConfig, Variant,
};

type Outcome = (bool, String);

fn source(x: f64) -> f64 {
    (1.0 - x).powi(4)
}

fn two_domain_partition() -> Partition1D {
    Partition1D::new(
        vec![Interval::new(0.0, 1.0).unwrap()],
        vec![Interval::new(-1.0, 0.0).unwrap()],
        0.5,
    )
    .unwrap()
}

/// Two-subdomain configuration with hat kernel d = 0.5 and f = (1 - x)^4.
fn two_domain(h: f64, lumped: bool) -> AssembledSystem {
    let p = two_domain_partition();
    let k = KernelSpec::hat(0.5).unwrap();
    let m = build_uniform_mesh(&p, h).unwrap();
    let opts = AssemblyOptions {
        lumped,
        ..Default::default()
    };
    assemble_system(&p, &k, &m, &opts, &source).unwrap()
}

// 100 nodes over (-1, 1)
const H_100: f64 = 2.0 / 99.0;

fn fixed_point_run(s: &AssembledSystem) -> schwarz_coupler::schwarz::SchwarzResult {
    let cfg = SchwarzConfig {
        tol: 1e-12,
        reference: Reference::Monolithic,
        store_iterates: true,
        ..Default::default()
    };
    run_schwarz(s, &cfg).unwrap()
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let s = two_domain(H_100, false);
    let r = fixed_point_run(&s);
    let elapsed = t.elapsed().as_secs_f64();
    let mono = r.reference.as_ref().unwrap();
    let du: Vec<f64> = r.u.free_values().iter().zip(mono.u.free_values()).map(|(a, b)| a - b).collect();
    let dv: Vec<f64> = r.v.free_values().iter().zip(mono.v.free_values()).map(|(a, b)| a - b).collect();
    let err = s.h_norm(&du, &dv);
    (
        r.converged && err <= 1e-9 && elapsed < 5.0,
        format!(
            "H-norm gap {err:.3e} after {} iterations, {elapsed:.2} s",
            r.history.records.len()
        ),
    )
}

fn criterion_2() -> Outcome {
    let s = two_domain(H_100, false);
    let r = fixed_point_run(&s);
    let errs: Vec<f64> = r.history.records.iter().map(|x| x.err_h.unwrap()).collect();
    let size = s.h_norm(
        &r.reference.as_ref().unwrap().u.free_values(),
        &r.reference.as_ref().unwrap().v.free_values(),
    );
    // errors at the round-off level of the reference carry no rate information
    let floor = 1e-12 * size;
    let usable: Vec<f64> = errs.iter().copied().take_while(|&e| e > floor).collect();
    let est = estimate_rate_from_errors(&usable, 2);
    let Some(rate) = est.rate else {
        return (false, format!("too few usable errors ({})", usable.len()));
    };
    let ratios_ok = est.ratios.iter().all(|&q| q > 0.0 && q <= 0.999);
    (
        ratios_ok && est.spread < 0.15,
        format!(
            "rate {rate:.4}, ratios in [{:.4}, {:.4}], spread {:.2}% over {} steps",
            est.ratios.iter().copied().fold(f64::INFINITY, f64::min),
            est.ratios.iter().copied().fold(0.0, f64::max),
            100.0 * est.spread,
            est.ratios.len()
        ),
    )
}

fn criterion_3() -> Outcome {
    let s = two_domain(H_100, false);
    let r = fixed_point_run(&s);
    let mono = r.reference.as_ref().unwrap();
    let size = s.h_norm(&mono.u.free_values(), &mono.v.free_values());
    match r
        .history
        .records
        .iter()
        .find(|x| x.err_h.unwrap() <= 1e-8 * size)
    {
        Some(rec) => (rec.n <= 60, format!("error below 1e-8 relative at iteration {}", rec.n)),
        None => (false, "error never reached 1e-8 relative".into()),
    }
}

fn criterion_4() -> Outcome {
    let s = two_domain(H_100, true);
    let (u0, v0) = (vec![0.0; s.num_local()], vec![0.0; s.num_nonlocal()]);
    let sub = verify_discrete_subsolution(&s, &u0, &v0);
    let r = fixed_point_run(&s);
    let mono = r.reference.as_ref().unwrap();
    let (ub, vb) = (mono.u.free_values(), mono.v.free_values());
    let rep = check_monotone(&r.iterates, Some((&ub, &vb)), MonotoneDirection::Increasing);
    (
        sub.is_subsolution && rep.passed(),
        format!(
            "subsolution {}, {} iterates, {} ordering and {} bound violations",
            sub.is_subsolution,
            r.iterates.len(),
            rep.violations,
            rep.bound_violations
        ),
    )
}

fn criterion_5() -> Outcome {
    let s = two_domain(H_100, false);
    let m = run_monolithic(&s).unwrap();
    let u0 = m.u.eval(0, 0.0).unwrap();
    let v0 = m.v.eval(0, 0.0).unwrap();
    let max = m
        .u
        .coeffs()
        .iter()
        .chain(m.v.coeffs())
        .fold(0.0f64, |a, b| a.max(b.abs()));
    let jump = (u0 - v0).abs();
    (
        jump > 1e-3 * max,
        format!("u(0) = {u0:.6}, v(0) = {v0:.6}, jump/max = {:.3e}", jump / max),
    )
}

fn criterion_6() -> Outcome {
    let s = two_domain(H_100, false);
    let base = SchwarzConfig {
        tol: 1e-12,
        store_iterates: true,
        ..Default::default()
    };
    let alt = run_schwarz(&s, &base).unwrap();
    let par = run_schwarz(
        &s,
        &SchwarzConfig {
            variant: Variant::Parallel,
            ..base
        },
    )
    .unwrap();
    let k_max = (alt.iterates.len() - 1).min((par.iterates.len() - 1) / 2);
    let mismatches = (0..=k_max)
        .filter(|&k| alt.iterates[k].0 != par.iterates[2 * k].0)
        .count();
    (
        mismatches == 0 && k_max >= 3,
        format!("{} step pairs compared, {mismatches} differ", k_max + 1),
    )
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let parts = Interval::new(-1.0, 0.0).unwrap().split_uniform(3).unwrap();
    let disjoint = parts.windows(2).all(|w| w[0].hi <= w[1].lo);
    let p = Partition1D::new(vec![], parts, 0.3).unwrap();
    let k = KernelSpec::hat(0.3).unwrap();
    let m = build_uniform_mesh(&p, 1.0 / 99.0).unwrap();
    let s = assemble_system(&p, &k, &m, &AssemblyOptions::default(), &|_| 1.0).unwrap();
    let mut details = Vec::new();
    let mut ok = disjoint;
    for variant in [Variant::Alternating, Variant::Parallel] {
        let cfg = SchwarzConfig {
            variant,
            tol: 1e-12,
            reference: Reference::Monolithic,
            ..Default::default()
        };
        let r = run_multidomain_nonlocal(&s, &cfg).unwrap();
        let e = r.history.records.last().unwrap().err_l2_nonlocal.unwrap();
        ok &= r.converged && e <= 1e-9;
        details.push(format!(
            "{}: L2 error {e:.3e} in {} iterations",
            variant.as_str(),
            r.history.records.len()
        ));
    }
    let elapsed = t.elapsed().as_secs_f64();
    ok &= elapsed < 5.0;
    (ok, format!("{}, {elapsed:.2} s", details.join("; ")))
}

/// Midpoint rule on an `n x n` grid for the pair integrand, with the basis
/// values tabulated once per axis.
fn midpoint_pair(
    k: &KernelSpec,
    tm: (f64, f64),
    tn: (f64, f64),
    pi: &BasisFunction,
    pj: &BasisFunction,
    n: usize,
) -> f64 {
    let (hx, hy) = ((tm.1 - tm.0) / n as f64, (tn.1 - tn.0) / n as f64);
    let xs: Vec<f64> = (0..n).map(|a| tm.0 + (a as f64 + 0.5) * hx).collect();
    let ys: Vec<f64> = (0..n).map(|b| tn.0 + (b as f64 + 0.5) * hy).collect();
    let (ix, jx): (Vec<f64>, Vec<f64>) = xs.iter().map(|&x| (pi.eval(x), pj.eval(x))).unzip();
    let (iy, jy): (Vec<f64>, Vec<f64>) = ys.iter().map(|&y| (pi.eval(y), pj.eval(y))).unzip();
    let mut total = 0.0;
    for a in 0..n {
        let mut row = 0.0;
        for b in 0..n {
            row += k.eval(xs[a] - ys[b]) * (ix[a] - iy[b]) * (jx[a] - jy[b]);
        }
        total += row;
    }
    total * hx * hy
}

fn criterion_8() -> Outcome {
    let k = KernelSpec::hat(0.5).unwrap();
    let p = two_domain_partition();
    let m = build_uniform_mesh(&p, H_100).unwrap();
    let space = FeSpace::new(
        &m,
        &p,
        schwarz_coupler::geometry::Component::Nonlocal,
        schwarz_coupler::assembly::Degree::P1,
    )
    .unwrap();
    let elems = space.elements();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut samples = Vec::new();
    while samples.len() < 500 {
        let a = rng.random_range(0..elems.len());
        let b = rng.random_range(0..elems.len());
        let (ea, eb) = (elems[a], elems[b]);
        if (eb.a - ea.b).max(ea.a - eb.b) >= 0.5 {
            continue;
        }
        let mut dofs: Vec<usize> = space.element_dofs(a).to_vec();
        dofs.extend_from_slice(space.element_dofs(b));
        let i = dofs[rng.random_range(0..dofs.len())];
        let j = dofs[rng.random_range(0..dofs.len())];
        samples.push(((ea.a, ea.b), (eb.a, eb.b), i, j));
    }
    let rule = GaussRule::new(4);
    let floor = 1e-14 * H_100 * H_100 * k.eval(0.0);
    let worst = samples
        .par_iter()
        .map(|&(tm, tn, i, j)| {
            let (pi, pj) = (space.basis_function(i), space.basis_function(j));
            let got = assemble_pair_integral(&k, tm, tn, &pi, &pj, &rule);
            // Richardson extrapolation of the 2000^2 and 1000^2 midpoint sums
            let fine = midpoint_pair(&k, tm, tn, &pi, &pj, 2000);
            let coarse = midpoint_pair(&k, tm, tn, &pi, &pj, 1000);
            let oracle = (4.0 * fine - coarse) / 3.0;
            // pairs grazing the kernel support have values near 1e-60; a
            // floor far below any entry that matters keeps them meaningful
            (got - oracle).abs() / oracle.abs().max(floor)
        })
        .reduce(|| 0.0, f64::max);
    (worst <= 1e-7, format!("500 pairs, worst relative error {worst:.3e}"))
}

fn criterion_9() -> Outcome {
    let s = two_domain(H_100, false);
    let n = s.a_nn.nrows();
    let dense = nalgebra::DMatrix::from_row_slice(n, n, &s.a_nn.to_dense());
    let min_eig = dense.symmetric_eigen().eigenvalues.min();
    let kc = s.nonlocal_form.matvec(&vec![1.0; n]);
    let defect = kc.iter().fold(0.0f64, |a, b| a.max(b.abs())) / s.nonlocal_form.max_abs();
    (
        n <= 200 && min_eig > 0.0 && defect <= 1e-12,
        format!("{n} dofs, min eigenvalue {min_eig:.3e}, |K 1|/|K| = {defect:.2e}"),
    )
}

fn criterion_10() -> Outcome {
    let hs = [0.04, 0.02, 0.01];
    let systems: Vec<AssembledSystem> = hs.iter().map(|&h| two_domain(h, false)).collect();
    let sols: Vec<_> = systems.iter().map(|s| run_monolithic(s).unwrap()).collect();
    let finest = &systems[2];
    // nested meshes: P1 interpolation onto the finest mesh is exact
    let prolong = |f: &DiscreteField, target: &FeSpace| -> Vec<f64> {
        target
            .free_dofs()
            .iter()
            .map(|&d| {
                let dof = target.dofs()[d];
                f.eval(dof.subdomain, dof.x).unwrap()
            })
            .collect()
    };
    let on_finest: Vec<(Vec<f64>, Vec<f64>)> = sols
        .iter()
        .map(|m| {
            (
                prolong(&m.u, &finest.local_space),
                prolong(&m.v, &finest.nonlocal_space),
            )
        })
        .collect();
    let dist = |a: usize, b: usize| {
        let du: Vec<f64> = on_finest[a].0.iter().zip(&on_finest[b].0).map(|(x, y)| x - y).collect();
        let dv: Vec<f64> = on_finest[a].1.iter().zip(&on_finest[b].1).map(|(x, y)| x - y).collect();
        finest.h_norm(&du, &dv)
    };
    let (d01, d12) = (dist(0, 1), dist(1, 2));
    let ratio = d01 / d12;
    (
        ratio >= 1.8,
        format!("|e_h - e_h/2| = {d01:.3e}, |e_h/2 - e_h/4| = {d12:.3e}, ratio {ratio:.3}"),
    )
}

fn criterion_11() -> Outcome {
    let s = two_domain(H_100, false);
    let m = run_monolithic(&s).unwrap();
    let (u, v) = (m.u.free_values(), m.v.free_values());
    let e0 = s.energy(&u, &v);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut below = 0;
    let mut min_gain = f64::INFINITY;
    for _ in 0..200 {
        let up: Vec<f64> = u.iter().map(|x| x + rng.random_range(-1e-3..1e-3)).collect();
        let vp: Vec<f64> = v.iter().map(|x| x + rng.random_range(-1e-3..1e-3)).collect();
        let gain = s.energy(&up, &vp) - e0;
        min_gain = min_gain.min(gain);
        if gain < 0.0 {
            below += 1;
        }
    }
    (
        below == 0,
        format!("E(mono) = {e0:.10e}, smallest increase {min_gain:.3e}, {below} lower"),
    )
}

fn main() {
    // respect `cargo test -- --list` style probes
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("fixed point equals Galerkin solution", criterion_1),
        ("geometric convergence", criterion_2),
        ("few iterations", criterion_3),
        ("monotone increasing from subsolution", criterion_4),
        ("visible interface jump", criterion_5),
        ("parallel even steps equal alternating", criterion_6),
        ("three-subdomain nonlocal iteration", criterion_7),
        ("pair integral oracle", criterion_8),
        ("positive definiteness and constants in kernel", criterion_9),
        ("mesh refinement is Cauchy", criterion_10),
        ("energy minimality", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = run();
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} ({name}): {detail}",
            if ok { "PASS" } else { "FAIL" },
            i + 1
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

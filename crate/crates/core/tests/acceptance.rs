//! Acceptance criteria, one line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use foilmesh::config::RunConfig;
use foilmesh::forces::{
    critical_damping, elastic_forces, pressure_forces, spring_energy, total_forces, MaterialParams, RestState,
};
use foilmesh::geometry::{watertight_check, Adjacency, Edge, TriMesh, Vec3};
use foilmesh::hull::convex_hull;
use foilmesh::integrator::{euler_step, CflMode, SimConfig, SimState, Simulation, Termination};
use foilmesh::io::{format_diagnostics, format_mesh, MeshFormat};
use foilmesh::pipeline;
use foilmesh::refine::{subdivide, DEGENERATE_ANGLE_DEG};
use foilmesh::seed::fibonacci_lattice;
use foilmesh::snap::{affected_neighbors, radius_of_effectiveness, snap_pass, SnapConfig};
use foilmesh::spatial::SpatialIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn criterion_1() -> Outcome {
    let mut notes = Vec::new();
    for n in [50, 200, 1000] {
        let t = Instant::now();
        let mesh = convex_hull(&fibonacci_lattice(n, 1.0, Vec3::zeros())).map_err(|e| e.to_string())?;
        let report = watertight_check(&mesh);
        let elapsed = t.elapsed();
        check(report.is_closed, format!("N={n}: not closed"))?;
        check(
            report.euler_characteristic == 2,
            format!("N={n}: chi = {}", report.euler_characteristic),
        )?;
        check(
            mesh.face_count() == 2 * n - 4,
            format!("N={n}: F = {} != 2V - 4", mesh.face_count()),
        )?;
        check(elapsed < Duration::from_secs(1), format!("N={n}: took {elapsed:?}"))?;
        notes.push(format!("N={n} {:.0?}", elapsed));
    }
    Ok(notes.join(", "))
}

fn criterion_2() -> Outcome {
    let p = -0.7;
    let params = MaterialParams {
        pressure_p: p,
        ..MaterialParams::default()
    };
    let mut worst: f64 = 0.0;
    for n in [50, 200, 1000] {
        let mesh = convex_hull(&fibonacci_lattice(n, 1.0, Vec3::zeros())).map_err(|e| e.to_string())?;
        let area: f64 = (0..mesh.face_count())
            .map(|f| {
                let [a, b, c] = mesh.triangle(f);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum();
        let pf = pressure_forces(&mesh, &params);
        let net = pf.forces.iter().fold(Vec3::zeros(), |acc, f| acc + f).norm();
        let ratio = net / (p.abs() * area);
        check(ratio < 1e-10, format!("N={n}: |sum| / (|p| A) = {ratio:e}"))?;
        worst = worst.max(ratio);
    }
    Ok(format!("worst ratio {worst:.1e}"))
}

fn criterion_3() -> Outcome {
    let base = convex_hull(&fibonacci_lattice(50, 1.0, Vec3::zeros())).map_err(|e| e.to_string())?;
    let rest = RestState::capture(&base).map_err(|e| e.to_string())?;
    let params = MaterialParams {
        k_base: 1.7,
        ..MaterialParams::default()
    };
    let d = 1.0;
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mesh = base.clone();
        for p in &mut mesh.positions {
            *p += Vec3::new(rng.random(), rng.random(), rng.random()).map(|x: f64| (x - 0.5) * 0.1);
        }
        let f = elastic_forces(&mesh, &rest, &params, d).map_err(|e| e.to_string())?;
        let scale = f.iter().map(|v| v.amax()).fold(0.0, f64::max);
        let mut err: f64 = 0.0;
        for (i, fi) in f.iter().enumerate() {
            for a in 0..3 {
                let mut plus = mesh.clone();
                plus.positions[i][a] += h;
                let mut minus = mesh.clone();
                minus.positions[i][a] -= h;
                let ep = spring_energy(&plus, &rest, &params, d).map_err(|e| e.to_string())?;
                let em = spring_energy(&minus, &rest, &params, d).map_err(|e| e.to_string())?;
                let g = -(ep - em) / (2.0 * h);
                err = err.max((g - fi[a]).abs() / scale);
            }
        }
        check(err < 1e-5, format!("seed {seed}: relative error {err:e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("worst relative error {worst:.1e} over 20 seeds"))
}

/// Vertex 0 pinned at the origin, vertex 1 free at `1 + amplitude` on a unit spring.
fn single_spring(amplitude: f64) -> (SimState, RestState) {
    let mut mesh = TriMesh::new(vec![Vec3::zeros(), Vec3::new(1.0 + amplitude, 0.0, 0.0)], vec![]).unwrap();
    mesh.fixed[0] = true;
    let rest = RestState::from_lengths([(Edge(0, 1), 1.0)]).unwrap();
    (SimState::at_rest(mesh), rest)
}

fn oscillator_trajectory(c: f64, dt: f64, steps: usize, amplitude: f64) -> Vec<f64> {
    let params = MaterialParams {
        k_base: 1.0,
        damping_c: c,
        pressure_p: 0.0,
        mass_m: 1.0,
        distance_factor_strength: 0.0,
    };
    let cfg = SimConfig {
        dt,
        ..SimConfig::default()
    };
    let (mut state, rest) = single_spring(amplitude);
    let mut xs = Vec::with_capacity(steps);
    for _ in 0..steps {
        let f = total_forces(&state.mesh, &rest, &params, 1.0, &state.velocities).unwrap();
        let step = euler_step(&state, &f, &params, &cfg).unwrap();
        state.mesh.positions = step.positions;
        state.velocities = step.velocities;
        xs.push(state.mesh.positions[1].x - 1.0);
    }
    xs
}

fn criterion_4() -> Outcome {
    let (c, dt, a): (f64, f64, f64) = (0.5, 1e-3, 0.1);
    let omega_d = (1.0 - (c / 2.0) * (c / 2.0)).sqrt();
    let period = 2.0 * std::f64::consts::PI / omega_d;
    let steps = (10.0 * period / dt).ceil() as usize;
    let xs = oscillator_trajectory(c, dt, steps, a);
    let mut worst: f64 = 0.0;
    for (n, x) in xs.iter().enumerate() {
        let t = (n + 1) as f64 * dt;
        let envelope = a * (-c * t / 2.0).exp();
        let exact = envelope * ((omega_d * t).cos() + c / (2.0 * omega_d) * (omega_d * t).sin());
        worst = worst.max((x - exact).abs() / envelope);
    }
    check(worst < 0.01, format!("underdamped deviation {worst:.4} of envelope"))?;

    let crit = critical_damping(&MaterialParams {
        k_base: 1.0,
        mass_m: 1.0,
        ..MaterialParams::default()
    });
    check(crit == 2.0, format!("c_crit = {crit}"))?;
    let xs = oscillator_trajectory(crit, dt, steps, a);
    let mut changes = 0;
    for w in xs.windows(2) {
        if w[0].signum() != w[1].signum() && w[0] != 0.0 && w[1] != 0.0 {
            changes += 1;
        }
    }
    check(
        changes <= 1,
        format!("critically damped run changed sign {changes} times"),
    )?;
    Ok(format!(
        "underdamped max deviation {:.2}% of envelope, critical: {changes} sign changes",
        worst * 100.0
    ))
}

/// Two free unit masses on a unit spring, stretched by `AMPLITUDE`.
const AMPLITUDE: f64 = 0.1;

struct TwoMassRun {
    termination: Termination,
    /// |l - L| after each step, from the spring energy k (l - L)^2 / 2L with k = L = 1.
    extension: Vec<f64>,
}

fn two_mass(dt_factor: f64, mode: CflMode, steps: usize) -> foilmesh::Result<TwoMassRun> {
    let mesh = TriMesh::new(
        vec![
            Vec3::new(-AMPLITUDE / 2.0, 0.0, 0.0),
            Vec3::new(1.0 + AMPLITUDE / 2.0, 0.0, 0.0),
        ],
        vec![],
    )?;
    let rest = RestState::from_lengths([(Edge(0, 1), 1.0)])?;
    let params = MaterialParams {
        k_base: 1.0,
        damping_c: 0.0,
        pressure_p: 0.0,
        mass_m: 1.0,
        distance_factor_strength: 0.0,
    };
    let omega = (2.0 * params.k_base / params.mass_m).sqrt();
    let cfg = SimConfig {
        dt: dt_factor / omega,
        epsilon: 1e-300,
        max_iterations: steps,
        cfl_mode: mode,
        ..SimConfig::default()
    };
    let out = Simulation::new(SimState::at_rest(mesh), params, rest, SnapConfig::default(), cfg)?.run(&mut ())?;
    let extension = out
        .state
        .stats_history
        .iter()
        .map(|s| (2.0 * s.spring_energy).sqrt())
        .collect();
    Ok(TwoMassRun {
        termination: out.termination,
        extension,
    })
}

fn criterion_5() -> Outcome {
    let stable = two_mass(1.9, CflMode::Enforce, 10_000).map_err(|e| e.to_string())?;
    check(
        stable.termination == Termination::MaxIterations && stable.extension.len() == 10_000,
        format!("stable run ended {:?}", stable.termination),
    )?;
    let peak = stable.extension.iter().cloned().fold(0.0, f64::max);
    check(
        peak < 10.0 * AMPLITUDE,
        format!("extension reached {peak} against amplitude {AMPLITUDE}"),
    )?;

    let unstable = two_mass(2.2, CflMode::Warn, 10_000).map_err(|e| e.to_string())?;
    let last = unstable.extension.last().copied().unwrap_or(f64::INFINITY);
    let grew = unstable.termination == Termination::Diverged || last.is_nan() || last >= 10.0 * AMPLITUDE;
    check(
        grew,
        format!(
            "warn-mode run above the bound stayed bounded ({:?})",
            unstable.termination
        ),
    )?;

    match two_mass(2.2, CflMode::Enforce, 10) {
        Err(foilmesh::FoilError::CflViolation { .. }) => {}
        Err(e) => return Err(format!("enforce mode failed with the wrong error: {e}")),
        Ok(_) => return Err("enforce mode started above the bound".into()),
    }
    Ok(format!(
        "1.9/w peak extension {:.2}x amplitude over 1e4 steps, 2.2/w {} after {} steps, enforce refused",
        peak / AMPLITUDE,
        unstable.termination.as_str(),
        unstable.extension.len()
    ))
}

fn criterion_6() -> Outcome {
    let params = MaterialParams {
        distance_factor_strength: 10.0,
        ..MaterialParams::default()
    };
    let snap = SnapConfig {
        snapping_tolerance: 0.5,
        ..SnapConfig::default()
    };
    let r = radius_of_effectiveness(&params, 0.1, &snap).map_err(|e| e.to_string())?;
    let n = affected_neighbors(&params, 0.1, &snap).map_err(|e| e.to_string())?;
    check(r == 0.5, format!("R_e = {r}"))?;
    check(n == 5.0, format!("N_e = {n}"))?;
    Ok(format!("R_e = {r}, N_e = {n}"))
}

struct BoxRun {
    outcome: pipeline::RunOutcome,
    elapsed: Duration,
}

fn box_run() -> foilmesh::Result<BoxRun> {
    let t = Instant::now();
    let outcome = pipeline::run(&RunConfig::default(), &mut ())?;
    Ok(BoxRun {
        outcome,
        elapsed: t.elapsed(),
    })
}

fn quartile_means(xs: &[f64]) -> (f64, f64) {
    let q = (xs.len() / 4).max(1);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    (mean(&xs[..q]), mean(&xs[xs.len() - q..]))
}

fn criterion_7(run: &BoxRun) -> Outcome {
    let out = &run.outcome;
    let cfg = RunConfig::default();
    check(
        out.termination == Termination::Converged,
        format!("terminated {}", out.termination.as_str()),
    )?;
    check(out.history.len() <= 200, format!("{} iterations", out.history.len()))?;
    let last = out.final_max_displacement().unwrap_or(f64::INFINITY);
    check(last < cfg.sim.epsilon, format!("final displacement {last:e}"))?;
    let w = watertight_check(&out.mesh);
    check(
        w.is_closed && w.euler_characteristic == 2,
        format!("not watertight: {w:?}"),
    )?;
    let slivers = (0..out.mesh.face_count())
        .filter(|&f| foilmesh::refine::face_min_angle(&out.mesh, f) < DEGENERATE_ANGLE_DEG)
        .count();
    check(
        slivers == 0,
        format!("{slivers} faces under {DEGENERATE_ANGLE_DEG} deg"),
    )?;
    for (k, c) in out.constraints.iter().enumerate() {
        let v = out.constraint_vertices[k].ok_or_else(|| format!("constraint {k} not in mesh"))?;
        check(
            (out.mesh.positions[v] - c).norm() == 0.0,
            format!("constraint {k} off by {}", (out.mesh.positions[v] - c).norm()),
        )?;
    }
    check(out.constraints.len() == 4, "expected 4 constraints")?;
    let disp: Vec<f64> = out.history.iter().map(|s| s.max_displacement).collect();
    let (first, last_q) = quartile_means(&disp);
    check(last_q < first, format!("quartile means {first:e} -> {last_q:e}"))?;
    let nn: Vec<f64> = out.history.iter().map(|s| s.mean_nn_distance).collect();
    for t in 20..nn.len() {
        if t + 10 < nn.len() {
            check(
                nn[t + 10] <= 1.05 * nn[t],
                format!("nn grew from {} at {} to {} at {}", nn[t], t + 1, nn[t + 10], t + 11),
            )?;
        }
    }
    check(run.elapsed < Duration::from_secs(60), format!("took {:?}", run.elapsed))?;
    Ok(format!(
        "converged in {} iterations, {} faces, quartile means {:.2e} -> {:.2e}, {:.1?}",
        out.history.len(),
        out.mesh.face_count(),
        first,
        last_q,
        run.elapsed
    ))
}

fn run_bytes(threads: usize) -> foilmesh::Result<(String, String)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    pool.install(|| {
        let out = pipeline::run(&RunConfig::default(), &mut ())?;
        Ok((
            format_mesh(&out.mesh, MeshFormat::Obj),
            format_diagnostics(&out.history),
        ))
    })
}

fn criterion_8(reference: &BoxRun) -> Outcome {
    let base = (
        format_mesh(&reference.outcome.mesh, MeshFormat::Obj),
        format_diagnostics(&reference.outcome.history),
    );
    for threads in [1, 4] {
        let other = run_bytes(threads).map_err(|e| e.to_string())?;
        check(other.0 == base.0, format!("OBJ differs with {threads} threads"))?;
        check(other.1 == base.1, format!("CSV differs with {threads} threads"))?;
    }
    Ok(format!(
        "OBJ ({} bytes) and CSV ({} bytes) identical at 1 and 4 threads",
        base.0.len(),
        base.1.len()
    ))
}

fn criterion_9() -> Outcome {
    let mesh = convex_hull(&fibonacci_lattice(200, 1.0, Vec3::zeros())).map_err(|e| e.to_string())?;
    let e = Adjacency::build(&mesh).map_err(|e| e.to_string())?.edges.len();
    let (fine, _) = subdivide(&mesh).map_err(|e| e.to_string())?;
    check(fine.vertex_count() == mesh.vertex_count() + e, "V' != V + E")?;
    check(fine.face_count() == 4 * mesh.face_count(), "F' != 4F")?;
    let w = watertight_check(&fine);
    check(
        w.is_closed && w.euler_characteristic == 2,
        format!("refined mesh: {w:?}"),
    )?;
    let same = mesh
        .positions
        .iter()
        .zip(&fine.positions)
        .all(|(a, b)| a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    check(same, "original positions moved")?;
    Ok(format!(
        "V {} -> {}, F {} -> {}",
        mesh.vertex_count(),
        fine.vertex_count(),
        mesh.face_count(),
        fine.face_count()
    ))
}

fn criterion_10() -> Outcome {
    let cfg = RunConfig::default();
    let prepared = pipeline::prepare(&cfg).map_err(|e| e.to_string())?;
    let fixed_before: Vec<(usize, Vec3)> = prepared
        .mesh
        .fixed_indices()
        .into_iter()
        .map(|i| (i, prepared.mesh.positions[i]))
        .collect();
    let sim = Simulation::new(
        SimState::at_rest(prepared.mesh),
        cfg.material,
        prepared.rest,
        cfg.snap,
        cfg.sim,
    )
    .map_err(|e| e.to_string())?;
    let out = sim.run(&mut ()).map_err(|e| e.to_string())?;
    let mut mesh = out.state.mesh;
    for (k, (i, p)) in fixed_before.iter().enumerate() {
        let q = mesh.positions[*i];
        let exact = p.iter().zip(q.iter()).all(|(a, b)| a.to_bits() == b.to_bits());
        check(exact, format!("fixed vertex {i} moved from {p:?} to {q:?}"))?;
        check(
            q.iter()
                .zip(prepared.constraints[k].iter())
                .all(|(a, b)| a.to_bits() == b.to_bits()),
            format!("fixed vertex {i} differs from its input coordinates"),
        )?;
    }
    let index = SpatialIndex::build(fixed_before.clone());
    let report = snap_pass(&mut mesh, &index, &cfg.snap).map_err(|e| e.to_string())?;
    check(
        report.snapped_this_pass.is_empty(),
        format!("post-run pass snapped {:?}", report.snapped_this_pass),
    )?;
    Ok(format!(
        "{} fixed vertices bitwise unchanged, post-run snap pass idle",
        fixed_before.len()
    ))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |n: usize, outcome: Outcome| match outcome {
        Ok(detail) => println!("criterion {n:>2}: PASS  {detail}"),
        Err(why) => {
            failures += 1;
            println!("criterion {n:>2}: FAIL  {why}");
        }
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    report(4, criterion_4());
    report(5, criterion_5());
    report(6, criterion_6());
    match box_run() {
        Ok(run) => {
            report(7, criterion_7(&run));
            report(8, criterion_8(&run));
        }
        Err(e) => {
            report(7, Err(e.to_string()));
            report(8, Err("reference run failed".into()));
        }
    }
    report(9, criterion_9());
    report(10, criterion_10());
    if failures == 0 {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failures} acceptance criteria failed");
        ExitCode::FAILURE
    }
}

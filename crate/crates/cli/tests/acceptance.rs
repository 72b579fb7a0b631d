//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs with a custom harness so the report lines always reach the test
//! output. `ARMLOOP_FUZZ_SECS` shortens the parser fuzz (default 60).

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use armloop::control_loop::{replay, EpisodeTrace, Event, ViolationKind};
use armloop::controller::{
    catalog, catalog_with, pre_execution_filter, ContextAblation, ExampleCategory, FilterConfig, MockScripted, RejectReason,
};
use armloop::exec::Execution;
use armloop::frame::{parse_controller_text, serialize_frame, CommandFrame, ParseError, ParseMode};
use armloop::geometry::{Point2, Rect};
use armloop::harness::{aggregate, builtin_tasks, oracle_backend, run_tasks, HarnessConfig, Metrics, TrialResult};
use armloop::preprocess::build_plan;
use armloop::robot::{forward_kinematics, inverse_kinematics, is_reachable, Pose, RobotSpec};
use armloop::scene::{project_to_robot, render_detections, unproject_to_image, CameraModel};
use armloop_cli::{cmd_bench, parse_task_selection, RunConfig};

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    check(took < limit, format!("{what} took {took:.1?}, limit {limit:?}"))
}

// 1 ------------------------------------------------------------------------

fn pooled(tallies: &[usize], first_id: u32) -> Result<Metrics, String> {
    let rows: Vec<(u32, usize, usize, Option<f64>)> =
        tallies.iter().enumerate().map(|(i, &s)| (first_id + i as u32, s, 25, None)).collect();
    Metrics::from_tallies(&rows).map_err(|e| e.to_string())
}

fn metrics_arithmetic() -> Outcome {
    let start = Instant::now();
    let cases: [(&str, &[usize], u32, &str); 4] = [
        ("SCARA static", &[23, 25, 22, 24, 23, 24, 21], 1, "92.6"),
        ("DELTA static", &[18, 22, 18, 19, 20, 21, 19], 1, "78.3"),
        ("SCARA dynamic", &[24, 20, 19, 20, 21], 8, "83.2"),
        ("DELTA dynamic", &[19, 15, 16, 15, 17], 8, "65.6"),
    ];
    let mut got = Vec::new();
    for (name, tallies, first, want) in cases {
        let m = pooled(tallies, first)?;
        let shown = format!("{:.1}", m.overall_sr_percent);
        check(shown == want, format!("{name}: {shown}% != {want}%"))?;
        got.push(shown);
    }
    within(start, Duration::from_secs(1), "aggregation")?;
    Ok(format!("overall {}%", got.join("% / ")))
}

// 2 ------------------------------------------------------------------------

/// Field-level ground truth for one generated reply.
struct GridCase {
    fields: Vec<String>,
    x: f64,
    y: f64,
    z: f64,
    rot: f64,
    grip_a: i64,
    grip_b: i64,
}

/// Expected rejection, derived from the fields without going through the
/// parser or the kinematics module.
fn oracle_reason(c: &GridCase, spec: &RobotSpec, prev: Option<(f64, f64, f64, i64, i64)>) -> RejectReason {
    if c.fields.len() != 7 || !(0..=1).contains(&c.grip_a) || !(0..=1).contains(&c.grip_b) {
        return RejectReason::MalformedStructure;
    }
    let r = spec.workspace_radius;
    let in_box = c.x.abs() <= r && c.y.abs() <= r && (spec.z_min..=spec.z_max).contains(&c.z) && c.rot.abs() <= 360.0;
    // Linear envelope: full radius at mid-height, edge radius at the ends.
    let half = (spec.z_max - spec.z_min) / 2.0;
    let t = ((c.z - (spec.z_min + half)).abs() / half).min(1.0);
    let envelope = spec.workspace_radius - (spec.workspace_radius - spec.edge_radius) * t;
    if !in_box || c.x.hypot(c.y) > envelope {
        return RejectReason::HardwareLimit;
    }
    if let Some((px, py, pz, pa, pb)) = prev {
        let far = (c.x - px).abs() > 100.0 || (c.y - py).abs() > 100.0 || (c.z - pz).abs() > 100.0;
        let toggles = i64::from(c.grip_a != pa) + i64::from(c.grip_b != pb);
        if far || toggles > 1 {
            return RejectReason::ExcessiveDelta;
        }
    }
    RejectReason::None
}

fn filter_grid() -> Outcome {
    let start = Instant::now();
    let mut combos = 0usize;
    let robots = [
        (
            RobotSpec::scara(),
            vec![
                (250.0, 0.0, 120.0),
                (0.0, 399.0, 90.0),
                (283.0, 283.0, 10.0),
                (400.0, 0.0, 0.0),
                (400.0, 0.0, 180.0),
                (400.0, 0.0, 180.5),
                (100.0, 100.0, -1.0),
                (-350.0, -150.0, 50.0),
                (500.0, 0.0, 50.0),
                (180.0, 60.0, 70.0),
            ],
        ),
        (
            RobotSpec::delta(),
            vec![
                (0.0, 0.0, 150.0),
                (250.0, 0.0, 100.0),
                (250.0, 0.0, 190.0),
                (0.0, -190.0, 5.0),
                (0.0, -215.0, 5.0),
                (120.0, 120.0, 60.0),
                (0.0, 0.0, 201.0),
                (300.0, 0.0, 100.0),
            ],
        ),
    ];
    for (spec, positions) in &robots {
        let config = FilterConfig { parse_mode: ParseMode::Strict, ..FilterConfig::for_spec(spec) };
        let home = spec.home;
        let previous = [None, Some((home[0], home[1], home[2], 0, 0)), Some((150.0, 50.0, 60.0, 1, 0))];
        for &(x, y, z) in positions {
            for rot in [0.0, 359.0, 361.0] {
                for grip_a in [0, 1, 2] {
                    for grip_b in [0, 1] {
                        for arity in [6, 7, 8] {
                            let mut fields: Vec<String> = vec![1.to_string(), x.to_string(), y.to_string(), z.to_string(), rot.to_string(), grip_a.to_string(), grip_b.to_string()];
                            fields.truncate(arity.min(7));
                            if arity == 8 {
                                fields.push("0".into());
                            }
                            let case = GridCase { fields, x, y, z, rot, grip_a, grip_b };
                            let raw = format!("[{}]", case.fields.join(", "));
                            for prev in previous {
                                let prev_frame = prev.map(|(px, py, pz, pa, pb)| CommandFrame { frame_type: 1, x: px, y: py, z: pz, rotation: 0.0, grip_a: pa, grip_b: pb });
                                let got = pre_execution_filter(&raw, spec, prev_frame.as_ref(), &config).reason;
                                let want = oracle_reason(&case, spec, prev);
                                check(got == want, format!("{:?} {raw} prev {prev:?}: filter {got:?}, oracle {want:?}", spec.kind))?;
                                combos += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    check(combos >= 500, format!("only {combos} combinations"))?;
    within(start, Duration::from_secs(5), "filter grid")?;
    Ok(format!("{combos}/{combos} verdicts agree"))
}

// 3 ------------------------------------------------------------------------

fn random_real(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..4) {
        0 => f64::from(rng.random_range(-500i32..=500)),
        1 => f64::from(rng.random_range(-500_000i32..=500_000)) / 1000.0,
        2 => rng.random_range(-1.0e3..1.0e3),
        _ => rng.random_range(-1.0e12..1.0e12),
    }
}

const FUZZ_ALPHABET: &[&str] = &[
    "[", "]", ",", " ", ".", "-", "+", "e", "E", "0", "1", "2", "9", "\n", "(", ")", "x", "é", "∞", "NaN", "inf",
    "Execution Step:", "[1]", "[0]", "[1, 200, 0, 90, 0, 1, 0]",
];

fn mutate(rng: &mut ChaCha8Rng, seed_text: &str) -> String {
    let mut chars: Vec<String> = seed_text.chars().map(String::from).collect();
    for _ in 0..rng.random_range(1..8) {
        let token = FUZZ_ALPHABET[rng.random_range(0..FUZZ_ALPHABET.len())].to_string();
        match rng.random_range(0..3) {
            0 if !chars.is_empty() => {
                let i = rng.random_range(0..chars.len());
                chars.remove(i);
            }
            1 if !chars.is_empty() => {
                let i = rng.random_range(0..chars.len());
                chars[i] = token;
            }
            _ => {
                let i = rng.random_range(0..=chars.len());
                chars.insert(i, token);
            }
        }
    }
    chars.concat()
}

fn parser_round_trip_and_fuzz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..10_000 {
        let f = CommandFrame {
            frame_type: rng.random_range(0..3),
            x: random_real(&mut rng),
            y: random_real(&mut rng),
            z: random_real(&mut rng),
            rotation: random_real(&mut rng),
            grip_a: rng.random_range(0..2),
            grip_b: rng.random_range(0..2),
        };
        let text = serialize_frame(&f);
        let parsed = parse_controller_text(&text, ParseMode::Strict).map_err(|e| format!("frame {i} {text}: {e}"))?;
        check(parsed.frames == vec![f] && !parsed.halt, format!("frame {i} {text} came back as {:?}", parsed.frames))?;
    }

    let secs: u64 = std::env::var("ARMLOOP_FUZZ_SECS").ok().and_then(|s| s.parse().ok()).unwrap_or(60);
    let deadline = Instant::now() + Duration::from_secs(secs);
    let seeds = ["[1, 250, 0, 120, 0, 0, 0]", "Execution Step: [1, 10.5, -3, 7e1, 0, 1, 0] [1]", "[1]", "Input: red block at [(1, 2), (3, 4)]", ""];
    let (mut runs, mut malformed, mut empty, mut ok) = (0u64, 0u64, 0u64, 0u64);
    while Instant::now() < deadline {
        for _ in 0..1000 {
            let base = seeds[rng.random_range(0..seeds.len())];
            let text = if rng.random_bool(0.1) {
                (0..rng.random_range(0..64)).map(|_| char::from_u32(rng.random_range(0..0x2FFF)).unwrap_or('?')).collect()
            } else {
                mutate(&mut rng, base)
            };
            for mode in [ParseMode::Strict, ParseMode::Permissive] {
                match catch_unwind(AssertUnwindSafe(|| parse_controller_text(&text, mode))) {
                    Err(_) => return Err(format!("parser panicked on {text:?}")),
                    Ok(Ok(_)) => ok += 1,
                    Ok(Err(ParseError::MalformedFrame(_))) => malformed += 1,
                    Ok(Err(ParseError::EmptyOutput)) => empty += 1,
                }
                runs += 1;
            }
        }
    }
    Ok(format!("10000 frames round-trip; {runs} fuzz inputs in {secs} s ({ok} ok, {malformed} malformed, {empty} empty, 0 panics)"))
}

// 4 ------------------------------------------------------------------------

fn kinematics() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for spec in [RobotSpec::scara(), RobotSpec::delta()] {
        for _ in 0..10_000 {
            let z = rng.random_range(spec.z_min..=spec.z_max);
            let r = spec.envelope_radius(z) * rng.random::<f64>().sqrt();
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            let target = Pose::new(r * a.cos(), r * a.sin(), z, rng.random_range(-180.0..180.0));
            let joints = inverse_kinematics(&spec, &target).map_err(|e| format!("{:?}: {e}", spec.kind))?;
            let err = forward_kinematics(&spec, &joints).distance(&target);
            worst = worst.max(err);
            check(err < 1e-6, format!("{:?} {target:?}: FK(IK) error {err:e} mm", spec.kind))?;
        }
    }

    let scara = RobotSpec::scara();
    for k in 0..360 {
        let a = f64::from(k).to_radians();
        let (c, s) = (a.cos(), a.sin());
        check(is_reachable(&scara, [400.0 * c, 400.0 * s, 90.0]), format!("SCARA r=400 at {k} deg unreachable"))?;
        check(!is_reachable(&scara, [400.001 * c, 400.001 * s, 90.0]), format!("SCARA r=400.001 at {k} deg reachable"))?;
    }
    for (z, want) in [(0.0, true), (180.0, true), (-1e-9, false), (180.000_001, false)] {
        check(is_reachable(&scara, [200.0, 0.0, z]) == want, format!("SCARA z={z} reachability != {want}"))?;
    }

    let delta = RobotSpec::delta();
    let mid = delta.z_mid().round() as i64;
    let mut previous = delta.envelope_radius(mid as f64);
    for dz in 1..=((delta.z_max - delta.z_min) / 2.0) as i64 {
        let up = delta.envelope_radius((mid + dz) as f64);
        let down = delta.envelope_radius((mid - dz) as f64);
        check(up <= previous && down <= previous, format!("DELTA radius grows {dz} mm from mid-height"))?;
        for z in [mid + dz, mid - dz] {
            let r = delta.envelope_radius(z as f64);
            check(is_reachable(&delta, [r * 0.999, 0.0, z as f64]) && !is_reachable(&delta, [r * 1.001, 0.0, z as f64]), format!("DELTA envelope mismatch at z={z}"))?;
        }
        previous = up.max(down);
    }
    within(start, Duration::from_secs(30), "kinematics")?;
    Ok(format!("20000 FK(IK) round trips, worst {worst:.1e} mm; SCARA boundary exact; DELTA envelope monotone"))
}

// 5 ------------------------------------------------------------------------

fn projection() -> Outcome {
    let cam = CameraModel::overhead(Rect::new(Point2::new(100.0, 50.0), Point2::new(400.0, 350.0)), 1.0);
    let worked = project_to_robot(Point2::new(10.0, 20.0), &cam);
    check(worked == Point2::new(110.0, 70.0), format!("worked case gave {worked:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let fov = Rect::from_center(Point2::new(rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0)), rng.random_range(20.0..400.0), rng.random_range(20.0..400.0));
        let cam = CameraModel::overhead(fov, rng.random_range(0.25..4.0));
        let p = Point2::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0));
        let back = project_to_robot(unproject_to_image(p, &cam), &cam);
        worst = worst.max(back.distance(p));
    }
    check(worst < 1e-9, format!("round trip error {worst:e}"))?;
    Ok(format!("(10,20)+(100,50)=(110,70); 1000 round trips, worst {worst:.1e}"))
}

// 6, 7, 9 share the harness runs --------------------------------------------

struct HarnessRuns {
    clean: Vec<(String, Vec<TrialResult>)>,
    noisy: Vec<(String, Vec<TrialResult>)>,
    clean_wall: Duration,
}

fn harness_runs() -> Result<HarnessRuns, String> {
    let tasks = builtin_tasks();
    let clean_config = HarnessConfig { execution: Execution::Parallel(0), ..HarnessConfig::default() }.noiseless();
    let noisy_config = HarnessConfig { execution: Execution::Parallel(0), ..HarnessConfig::default() };
    let start = Instant::now();
    let mut clean = Vec::new();
    for spec in [RobotSpec::scara(), RobotSpec::delta()] {
        let r = run_tasks(&tasks, 5, &spec, &oracle_backend, &clean_config).map_err(|e| e.to_string())?;
        clean.push((spec.kind.name().to_string(), r));
    }
    let clean_wall = start.elapsed();
    let mut noisy = Vec::new();
    for spec in [RobotSpec::scara(), RobotSpec::delta()] {
        let r = run_tasks(&tasks, 5, &spec, &oracle_backend, &noisy_config).map_err(|e| e.to_string())?;
        noisy.push((spec.kind.name().to_string(), r));
    }
    Ok(HarnessRuns { clean, noisy, clean_wall })
}

fn all_traces(runs: &HarnessRuns) -> impl Iterator<Item = &EpisodeTrace> {
    runs.clean.iter().chain(&runs.noisy).flat_map(|(_, rs)| rs.iter().filter_map(|r| r.trace.as_ref()))
}

fn perception(runs: &HarnessRuns) -> Outcome {
    let dynamic: Vec<u32> = builtin_tasks().iter().filter(|t| t.dynamic).map(|t| t.id).collect();
    let mut scenarios = 0;
    let mut tracklets = 0usize;
    for (_, results) in &runs.noisy {
        for r in results.iter().filter(|r| dynamic.contains(&r.task_id)) {
            let trace = r.trace.as_ref().ok_or("missing trace")?;
            scenarios += 1;
            for (tick, s) in trace.snapshots() {
                for t in &s.tracklets {
                    check(t.points.len() == 4, format!("task {} tick {tick}: tracklet with {} points", r.task_id, t.points.len()))?;
                    tracklets += 1;
                }
            }
        }
    }
    check(scenarios >= 10, format!("only {scenarios} dynamic scenarios"))?;

    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let spec = RobotSpec::scara();
    let layout = armloop::harness::TableLayout::for_spec(&spec);
    for task in builtin_tasks() {
        let inst = task.generate(&layout, 60 + u64::from(task.id));
        let cam = layout.overhead.clone();
        for d in render_detections(&inst.scenario.world, &cam, &mut rng) {
            let o = inst.scenario.world.object(d.object_id).ok_or("unknown detection")?;
            if !cam.fov_rect.contains_rect(&o.footprint_bbox()) {
                continue;
            }
            worst = worst.max(project_to_robot(d.bbox.center(), &cam).distance(o.center()));
        }
    }
    check(worst < 1e-9, format!("zero-noise centroid error {worst:e} mm"))?;

    let mut fov = 0;
    let mut traces = 0;
    for t in all_traces(runs) {
        let report = replay(t).map_err(|e| e.to_string())?;
        fov += report.count(ViolationKind::FovSoundness);
        traces += 1;
    }
    check(fov == 0, format!("{fov} FOV soundness violations"))?;
    Ok(format!("{tracklets} tracklets over {scenarios} dynamic scenarios all 4 points; centroid error {worst:.1e} mm; 0 FOV violations in {traces} traces"))
}

fn oracle_ceiling(runs: &HarnessRuns) -> Outcome {
    let mut parts = Vec::new();
    for (robot, results) in &runs.clean {
        let m = aggregate(results).map_err(|e| e.to_string())?;
        let failures: Vec<String> = results.iter().filter(|r| !r.success).map(|r| format!("task {} trial {}", r.task_id, r.trial_index)).collect();
        check(m.successes == 60 && m.trials == 60, format!("{robot}: {}/{} ({})", m.successes, m.trials, failures.join(", ")))?;
        parts.push(format!("{robot} 60/60"));
    }
    check(runs.clean_wall < Duration::from_secs(120), format!("ceiling runs took {:.1?}", runs.clean_wall))?;
    for (robot, results) in &runs.noisy {
        let m = aggregate(results).map_err(|e| e.to_string())?;
        parts.push(format!("{robot} noisy {}", m.overall_line()));
    }
    Ok(format!("{} in {:.1?}", parts.join("; "), runs.clean_wall))
}

fn replay_soundness(runs: &HarnessRuns) -> Outcome {
    let mut traces = 0;
    let mut victim = None;
    for t in all_traces(runs) {
        let report = replay(t).map_err(|e| e.to_string())?;
        check(report.violations.is_empty(), format!("generated trace has violations:\n{report}"))?;
        traces += 1;
        if victim.is_none() && t.dispatched_frames().next().is_some() {
            victim = Some(t.clone());
        }
    }
    let mut corrupted = victim.ok_or("no trace dispatched a frame")?;
    let spec = corrupted.header().ok_or("missing header")?.0.clone();
    let event = corrupted
        .events
        .iter_mut()
        .find(|e| matches!(e.event, Event::FrameDispatched { .. }))
        .ok_or("no dispatched frame")?;
    if let Event::FrameDispatched { frame } = &mut event.event {
        frame.x = spec.workspace_radius + 100.0;
    }
    let report = replay(&corrupted).map_err(|e| e.to_string())?;
    let filter = report.count(ViolationKind::FilterSoundness);
    check(filter == 1 && report.violations.len() == 1, format!("corrupted trace gave {filter} filter-soundness of {} violations", report.violations.len()))?;
    Ok(format!("0 violations in {traces} traces; injected out-of-limit frame gives exactly 1 filter-soundness violation"))
}

// 8 ------------------------------------------------------------------------

fn files_under(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap_or(&p).display().to_string();
                out.push((rel, fs::read(&p).unwrap_or_default()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let tasks = parse_task_selection("all").map_err(|e| e.to_string())?;
    let config = RunConfig { seed: 11, trials: 2, workers: Some(0), ..RunConfig::default() };
    let mut sink = Vec::new();
    for run in ["a", "b"] {
        cmd_bench(&config, &tasks, &dir.path().join(run), &mut sink).map_err(|e| e.to_string())?;
    }
    let (a, b) = (files_under(&dir.path().join("a")), files_under(&dir.path().join("b")));
    check(a.len() == 26, format!("expected 24 traces plus CSV and JSON, found {} files", a.len()))?;
    check(a.len() == b.len(), "file sets differ")?;
    for ((na, ba), (nb, bb)) in a.iter().zip(&b) {
        check(na == nb && ba == bb, format!("{na} differs between runs"))?;
    }
    Ok(format!("{} files byte-identical across two bench runs", a.len()))
}

// 10 -----------------------------------------------------------------------

fn context_structure() -> Outcome {
    let full = catalog();
    let count = |v: &[armloop::controller::ContextExample], c: ExampleCategory| v.iter().filter(|e| e.category == c).count();
    let split = (count(&full, ExampleCategory::BasicMovement), count(&full, ExampleCategory::PickMove), count(&full, ExampleCategory::Interaction));
    check(full.len() == 11 && split == (5, 3, 3), format!("catalog has {} examples split {split:?}", full.len()))?;
    let ablations = [
        ("A", ContextAblation { drop_basic_movement: true, ..ContextAblation::default() }, 5),
        ("B", ContextAblation { drop_pick_move: true, ..ContextAblation::default() }, 3),
        ("C", ContextAblation { drop_interaction: true, ..ContextAblation::default() }, 3),
    ];
    for (name, ablation, removed) in ablations {
        let kept = catalog_with(ablation).len();
        check(full.len() - kept == removed, format!("ablation {name} removed {} examples", full.len() - kept))?;
    }
    let mut backend = MockScripted::sequence(vec!["1. pick up the block\n2. done".into(), "block".into()]);
    build_plan("Pick up the block", &mut backend).map_err(|e| e.to_string())?;
    check(backend.call_count() == 2, format!("build_plan made {} backend calls", backend.call_count()))?;
    Ok("11 examples (5/3/3); ablations A/B/C remove 5/3/3; build_plan makes 2 backend calls".into())
}

fn main() {
    let suite_start = Instant::now();
    let runs = harness_runs();
    let shared = |f: fn(&HarnessRuns) -> Outcome| -> Outcome {
        match &runs {
            Ok(r) => f(r),
            Err(e) => Err(format!("harness runs failed: {e}")),
        }
    };
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "metrics arithmetic", metrics_arithmetic()),
        (2, "filter oracle equivalence", filter_grid()),
        (3, "parser round-trip and fuzz", parser_round_trip_and_fuzz()),
        (4, "kinematics", kinematics()),
        (5, "projection", projection()),
        (6, "perception contracts", shared(perception)),
        (7, "oracle end-to-end ceiling", shared(oracle_ceiling)),
        (8, "determinism", determinism()),
        (9, "replay soundness", shared(replay_soundness)),
        (10, "context and ablation structure", context_structure()),
    ];
    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {}/{} criteria passed in {:.1?}", results.len() - failed, results.len(), suite_start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}

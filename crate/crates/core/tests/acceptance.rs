//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::process::Command;
use std::time::Instant;

use kinform::analysis::{
    balance_analyze, compare_full, performance_score, rom_analyze, rom_standard, JointPair,
    JointRegion, MotionType, ScoreWeights,
};
use kinform::io::{parse_stream, write_stream_to};
use kinform::kinematics::{joint_angle, smooth_series, AdjacencyMap, FilterConfig};
use kinform::normalization::{normalize_pair, NormalizationConfig};
use kinform::skeleton::{Frame, JointId, MotionStream, Position3};
use kinform::synthgen::{defect_ladder, generate, DefectKind, DefectSpec, ExerciseTemplate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

trait WithNoise {
    fn with_noise(self, sigma: f64) -> Self;
}

impl WithNoise for DefectSpec {
    fn with_noise(self, sigma: f64) -> Self {
        DefectSpec {
            noise_sigma_m: sigma,
            ..self
        }
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn templates() -> [ExerciseTemplate; 3] {
    [
        ExerciseTemplate::bicep_curl(),
        ExerciseTemplate::push_press(),
        ExerciseTemplate::bench_press(),
    ]
}

fn all_joints() -> BTreeSet<JointId> {
    JointId::ALL.into_iter().collect()
}

fn ps_of(
    reference: &MotionStream,
    test: &MotionStream,
    joints: &BTreeSet<JointId>,
) -> kinform::Result<f64> {
    let cmp = compare_full(
        reference,
        test,
        joints,
        &NormalizationConfig::default(),
        FilterConfig::default(),
    )?;
    Ok(performance_score(&cmp.errors, &cmp.balance, ScoreWeights::default())?.ps)
}

fn ac1_self_comparison() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let template = templates()[(i % 3) as usize].clone();
        let kind = DefectKind::ALL[(i % 4) as usize];
        let defects = DefectSpec::none()
            .with(kind, 0.02 * (i % 5) as f64)
            .with_noise(if i % 2 == 0 {
                DefectSpec::DEFAULT_NOISE_SIGMA_M
            } else {
                0.0
            });
        let s = generate(&template, &defects, 1000 + i).map_err(|e| e.to_string())?;
        let ps = ps_of(&s, &s, &template.kind.relevant_joints()).map_err(|e| e.to_string())?;
        worst = worst.max(ps);
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-9 && secs < 5.0,
        format!("max ps {worst:e} (<= 1e-9), {secs:.3} s (< 5 s)"),
    )
}

fn ac2_normalization_invariance() -> Outcome {
    let mut worst = 0.0f64;
    for (k, template) in templates().into_iter().enumerate() {
        let defects = DefectSpec::none().with_noise(DefectSpec::DEFAULT_NOISE_SIGMA_M);
        let reference = generate(&template, &defects, 7 + k as u64).map_err(|e| e.to_string())?;
        let shift = Position3::new(0.5, 0.0, 0.3);
        let mut test = reference.clone();
        test.frames = reference
            .frames
            .iter()
            .map(|f| f.map_positions(|p| p * (1.0 / 1.2) + shift))
            .collect();
        test.meta.height_m = Some(1.5);
        if reference.meta.height_m != Some(1.8) {
            return Err("reference height is not 1.8 m".into());
        }
        let ps = ps_of(&reference, &test, &template.kind.relevant_joints())
            .map_err(|e| e.to_string())?;
        worst = worst.max(ps);
    }
    check(worst <= 1e-6, format!("max ps {worst:e} (<= 1e-6)"))
}

/// Doubles the frame count by inserting the linear midpoint between
/// neighboring frames.
fn with_midpoints(s: &MotionStream) -> MotionStream {
    let mut frames = Vec::with_capacity(2 * s.len());
    for w in s.frames.windows(2) {
        frames.push(w[0].clone());
        let mut mid = Frame::new(0.5 * (w[0].t + w[1].t));
        for (j, a) in w[0].iter() {
            let b = w[1].get(j).expect("joint present in both frames");
            mid.set(j, (a + b) * 0.5);
        }
        frames.push(mid);
    }
    frames.push(s.frames[s.len() - 1].clone());
    let mut meta = s.meta.clone();
    meta.frame_rate_hz *= 2.0;
    MotionStream::new(meta, frames)
}

fn ac3_resampling_invariance() -> Outcome {
    let mut worst = 0.0f64;
    for (k, template) in templates().into_iter().enumerate() {
        let defects = DefectSpec::none().with_noise(DefectSpec::DEFAULT_NOISE_SIGMA_M);
        let reference = generate(&template, &defects, 40 + k as u64).map_err(|e| e.to_string())?;
        let test = with_midpoints(&reference);
        if test.len() != 2 * reference.len() - 1 {
            return Err("midpoint insertion produced the wrong frame count".into());
        }
        let (r, t) = normalize_pair(&reference, &test, &NormalizationConfig::default())
            .map_err(|e| e.to_string())?;
        if r.len() != t.len() {
            return Err(format!(
                "normalized lengths differ: {} vs {}",
                r.len(),
                t.len()
            ));
        }
        for j in JointId::ALL {
            let total: f64 = r
                .frames
                .iter()
                .zip(&t.frames)
                .map(|(a, b)| {
                    let d = a.get(j).unwrap() - b.get(j).unwrap();
                    d.x.abs() + d.y.abs() + d.z.abs()
                })
                .sum();
            worst = worst.max(total / r.len() as f64);
        }
    }
    check(
        worst <= 1e-9,
        format!("max per-joint mean position error {worst:e} m (<= 1e-9)"),
    )
}

fn oracle_smooth(values: &[f64], n: usize, passes: usize) -> Vec<f64> {
    let mut cur = values.to_vec();
    for _ in 0..passes {
        let prev = cur.clone();
        for (t, out) in cur.iter_mut().enumerate() {
            let lo = t.saturating_sub(n);
            let hi = (t + n).min(prev.len() - 1);
            let mut acc = 0.0;
            for v in &prev[lo..=hi] {
                acc += *v;
            }
            *out = acc / (hi - lo + 1) as f64;
        }
    }
    cur
}

fn ac4_filter_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let len = rng.random_range(1..=200);
        let n = rng.random_range(0..=5);
        let passes = rng.random_range(1..=3);
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
        let got = smooth_series(
            &values,
            FilterConfig::new(n, passes).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        let want = oracle_smooth(&values, n, passes);
        if got.len() != want.len() {
            return Err(format!("length {} != {}", got.len(), want.len()));
        }
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
    }
    check(
        worst <= 1e-12,
        format!("1000 series, max |diff| {worst:e} (<= 1e-12)"),
    )
}

fn elbow_frame(shoulder: Position3, elbow: Position3, wrist: Position3) -> Frame {
    Frame::with_joints(
        0.0,
        [
            (JointId::ShoulderLeft, shoulder),
            (JointId::ElbowLeft, elbow),
            (JointId::WristLeft, wrist),
        ],
    )
}

fn oracle_angle(u: Position3, v: Position3) -> f64 {
    let c = (u.x * v.x + u.y * v.y + u.z * v.z)
        / ((u.x * u.x + u.y * u.y + u.z * u.z).sqrt() * (v.x * v.x + v.y * v.y + v.z * v.z).sqrt());
    c.clamp(-1.0, 1.0).acos().to_degrees()
}

fn rotate(q: [f64; 4], p: Position3) -> Position3 {
    let [w, x, y, z] = q;
    Position3::new(
        (1.0 - 2.0 * (y * y + z * z)) * p.x
            + 2.0 * (x * y - w * z) * p.y
            + 2.0 * (x * z + w * y) * p.z,
        2.0 * (x * y + w * z) * p.x
            + (1.0 - 2.0 * (x * x + z * z)) * p.y
            + 2.0 * (y * z - w * x) * p.z,
        2.0 * (x * z - w * y) * p.x
            + 2.0 * (y * z + w * x) * p.y
            + (1.0 - 2.0 * (x * x + y * y)) * p.z,
    )
}

fn ac5_angle_oracle() -> Outcome {
    let adj = AdjacencyMap::default();
    let o = Position3::ORIGIN;
    let up = Position3::new(0.0, 1.0, 0.0);
    let v120 = Position3::new(3f64.sqrt() / 2.0, -0.5, 0.0);
    let cases = [
        (Position3::new(1.0, 0.0, 0.0), 90.0),
        (Position3::new(0.0, -1.0, 0.0), 180.0),
        (v120, oracle_angle(up, v120)),
    ];
    let mut worst_case = 0.0f64;
    for (wrist, want) in cases {
        let got = joint_angle(&elbow_frame(up, o, wrist), JointId::ElbowLeft, &adj)
            .map_err(|e| e.to_string())?;
        worst_case = worst_case.max((got - want).abs());
    }
    if (cases[2].1 - 120.0).abs() > 1e-9 {
        return Err(format!(
            "oracle for the 120 degree case gave {}",
            cases[2].1
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let point = |rng: &mut ChaCha8Rng| {
        Position3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
    };
    let mut worst_inv = 0.0f64;
    let mut checks = 0;
    while checks < 1000 {
        let (s, e, w) = (point(&mut rng), point(&mut rng), point(&mut rng));
        if (s - e).norm() < 0.05 || (w - e).norm() < 0.05 {
            continue;
        }
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let qn = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        let q = q.map(|c| c / qn);
        let scale = 10f64.powf(rng.random_range(-1.0..1.0));
        let shift = point(&mut rng) * 5.0;
        let f = |p: Position3| rotate(q, p) * scale + shift;
        let a = joint_angle(&elbow_frame(s, e, w), JointId::ElbowLeft, &adj)
            .map_err(|e| e.to_string())?;
        let b = joint_angle(&elbow_frame(f(s), f(e), f(w)), JointId::ElbowLeft, &adj)
            .map_err(|e| e.to_string())?;
        worst_inv = worst_inv.max((a - b).abs());
        checks += 1;
    }
    check(
        worst_case <= 1e-6 && worst_inv <= 1e-6,
        format!("cases max err {worst_case:e} deg, 1000 invariance checks max {worst_inv:e} deg (<= 1e-6)"),
    )
}

fn ac6_rom() -> Outcome {
    let standard =
        rom_standard(JointRegion::Elbow, MotionType::Flexion).ok_or("no elbow flexion standard")?;
    let adj = AdjacencyMap::default();
    let run = |max_deg: f64| -> kinform::Result<f64> {
        let template = ExerciseTemplate {
            max_deg,
            ..ExerciseTemplate::bicep_curl()
        };
        let s = generate(&template, &DefectSpec::none(), 0)?;
        Ok(rom_analyze(
            &s,
            JointId::ElbowLeft,
            standard,
            &adj,
            FilterConfig::default(),
        )?
        .deviation_deg)
    };
    let full = run(150.0).map_err(|e| e.to_string())?;
    let truncated = run(100.0).map_err(|e| e.to_string())?;
    check(
        full < 1.0 && (truncated - 50.0).abs() <= 1.0,
        format!(
            "10->150 deviation {full:.4} (< 1), 10->100 deviation {truncated:.4} (50 +/- 1), standard {}",
            standard.standard_deg
        ),
    )
}

fn ac7_discrimination() -> Outcome {
    let magnitudes = [0.0, 0.05, 0.1, 0.2];
    let mut lines = Vec::new();
    let mut ok = true;
    for template in templates() {
        for kind in DefectKind::ALL {
            let ladder = defect_ladder(&template, &DefectSpec::none(), kind, &magnitudes, 9)
                .map_err(|e| e.to_string())?;
            let joints = template.kind.relevant_joints();
            let scores = ladder
                .iter()
                .map(|s| ps_of(&ladder[0], s, &joints))
                .collect::<kinform::Result<Vec<_>>>()
                .map_err(|e| e.to_string())?;
            let increasing = scores.windows(2).all(|w| w[0] < w[1]);
            ok &= increasing;
            if !increasing {
                lines.push(format!("{}/{kind:?}: {scores:?}", template.kind.tag()));
            }
        }
    }
    let detail = if ok {
        "ps strictly increasing for 3 templates x 4 defect kinds".to_string()
    } else {
        format!("not increasing: {}", lines.join("; "))
    };
    check(ok, detail)
}

fn ac8_balance() -> Outcome {
    let template = ExerciseTemplate::bicep_curl();
    let s = generate(
        &template,
        &DefectSpec::none().with(DefectKind::Asymmetry, 0.05),
        0,
    )
    .map_err(|e| e.to_string())?;
    let report = balance_analyze(&s, template.subject_height_m).map_err(|e| e.to_string())?;
    let v = report
        .pair(JointPair::Shoulders)
        .ok_or("no shoulder pair")?
        .vertical_imbalance_m;
    let mut sym = 0.0f64;
    for template in templates() {
        let s = generate(&template, &DefectSpec::none(), 0).map_err(|e| e.to_string())?;
        let report = balance_analyze(&s, template.subject_height_m).map_err(|e| e.to_string())?;
        for p in &report.pairs {
            sym = sym.max(p.vertical_imbalance_m).max(p.depth_imbalance_m);
        }
        sym = sym.max(report.e_b);
    }
    check(
        (v - 0.05).abs() <= 1e-9 && sym <= 1e-12,
        format!("shoulder vertical imbalance {v} (0.05 +/- 1e-9), symmetric max {sym:e}"),
    )
}

fn ac9_round_trip() -> Outcome {
    for i in 0..50u64 {
        let template = templates()[(i % 3) as usize].clone();
        let defects = DefectSpec::none()
            .with(DefectKind::ALL[(i % 4) as usize], 0.01 * i as f64 / 50.0)
            .with_noise(0.01);
        let s = generate(&template, &defects, i).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_stream_to(&s, &mut buf).map_err(|e| e.to_string())?;
        let back = parse_stream(buf.as_slice()).map_err(|e| e.to_string())?;
        if back != s {
            return Err(format!("stream {i} changed after write/read"));
        }
    }

    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let p = dir.path();
    let bin = env!("CARGO_BIN_EXE_kinform");
    let run = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(bin)
            .args(args)
            .current_dir(p)
            .env_remove("KINFORM_CONFIG")
            .output()
            .map_err(|e| e.to_string())?;
        if out.status.success() {
            Ok(())
        } else {
            Err(format!(
                "{args:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            ))
        }
    };
    run(&[
        "gen", "--noise", "0.005", "--seed", "1", "--out", "r.ndjson",
    ])?;
    run(&[
        "gen", "--noise", "0.005", "--seed", "2", "--drift", "0.05", "--out", "t.ndjson",
    ])?;
    let mut outputs = Vec::new();
    for k in 0..2 {
        let (csv, svg) = (format!("e{k}.csv"), format!("e{k}.svg"));
        run(&[
            "compare",
            "--ref",
            "r.ndjson",
            "--test",
            "t.ndjson",
            "--out-csv",
            &csv,
            "--out-svg",
            &svg,
        ])?;
        outputs.push((
            fs::read(p.join(&csv)).map_err(|e| e.to_string())?,
            fs::read(p.join(&svg)).map_err(|e| e.to_string())?,
        ));
    }
    check(
        outputs[0] == outputs[1],
        "50 streams round-trip exactly; repeated CLI runs give byte-identical CSV and SVG"
            .to_string(),
    )
}

fn ac10_throughput() -> Outcome {
    let template = ExerciseTemplate {
        duration_s: 10_000.0 / 30.0,
        ..ExerciseTemplate::bicep_curl()
    };
    let reference =
        generate(&template, &DefectSpec::none().with_noise(0.005), 1).map_err(|e| e.to_string())?;
    let test = generate(
        &ExerciseTemplate {
            subject_height_m: 1.65,
            ..template.clone()
        },
        &DefectSpec::none()
            .with(DefectKind::LateralDrift, 0.05)
            .with_noise(0.005),
        2,
    )
    .map_err(|e| e.to_string())?;
    if reference.len() != 10_000 || test.len() != 10_000 {
        return Err(format!("frame counts {} / {}", reference.len(), test.len()));
    }
    let joints = all_joints();
    let start = Instant::now();
    let ps = ps_of(&reference, &test, &joints).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let profile = if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    };
    check(
        secs < 1.0 && ps.is_finite(),
        format!("10000 frames x 25 joints in {secs:.3} s (< 1 s, {profile} build), ps {ps:.4}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1", "self-comparison zero", ac1_self_comparison),
        (
            "AC2",
            "normalization invariance",
            ac2_normalization_invariance,
        ),
        ("AC3", "resampling invariance", ac3_resampling_invariance),
        ("AC4", "filter oracle", ac4_filter_oracle),
        ("AC5", "angle oracle", ac5_angle_oracle),
        ("AC6", "range of motion", ac6_rom),
        ("AC7", "score discrimination", ac7_discrimination),
        ("AC8", "balance ground truth", ac8_balance),
        ("AC9", "round-trip and determinism", ac9_round_trip),
        ("AC10", "throughput", ac10_throughput),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        match run() {
            Ok(detail) => println!("[PASS] {id} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {id} {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::anyhow;
use rand_distr::{Distribution, Normal};
use robomag::alignment::{
    amplitude_schedule, calibrate_offsets, replace_forbidden_pose, sphere_segment_scan,
    synthetic_arc, AlignmentError, CalibrationGeometry, CalibrationMeasurement, DisplacementAxis,
    DistanceRange, ReplacementOptions, ReplacementStatus, ScanGrid, ScanPoint,
};
use robomag::environment::{partition_pose_dictionary, Environment, FeasibilityStatus};
use robomag::kinematics::{forward_kinematics, unit_normal, JOINT_COUNT};
use robomag::magnetostatics::cylinder_field;
use robomag::nvspin::{
    cubic_resonances, field_nv_angle, fit_orientation, fit_resonances, linear_grid,
    normalize_splittings, odmr_spectrum, polar_angle_from_resonances, world_to_nv_frame,
    OdmrSpectrum, SpinError, TrajectoryPoint,
};
use robomag::seed::{stream_rng, Stream};
use robomag::{FieldVector, JointConfig, Pose, ReplacementPlan, UnitVector};
use serde_json::{json, Value};

use crate::output::{
    csv_document, emit, json_document, num, read_csv, runtime, usage, CmdResult, Provenance, Units,
};
use crate::{
    AxisArg, CalibrateArgs, Command, FitNvArgs, OdmrArgs, PartitionArgs, ReplaceArgs, ScanArgs,
    ScheduleArgs,
};

pub fn run(command: &Command, prov: &Provenance, out: Option<&Path>) -> CmdResult<()> {
    match command {
        Command::Scan(a) => scan(a, prov, out),
        Command::Calibrate(a) => calibrate(a, prov, out),
        Command::Schedule(a) => schedule(a, prov, out),
        Command::Partition(a) => partition(a, prov, out),
        Command::Replace(a) => replace(a, prov, out),
        Command::Odmr(a) => odmr(a, prov, out),
        Command::FitNv(a) => fit_nv(a, prov, out),
    }
}

fn field_columns(u: Units) -> Vec<String> {
    let f = u.field();
    vec![f.column("Bx"), f.column("By"), f.column("Bz")]
}

fn field_cells(u: Units, b: &FieldVector) -> Vec<String> {
    let f = u.field();
    vec![
        num(f.in_unit(b.bx)),
        num(f.in_unit(b.by)),
        num(f.in_unit(b.bz)),
    ]
}

fn field_json(u: Units, b: &FieldVector) -> Value {
    let f = u.field();
    json!([f.in_unit(b.bx), f.in_unit(b.by), f.in_unit(b.bz)])
}

fn pose_json(u: Units, p: &Pose) -> Value {
    let (l, a) = (u.length(), u.angle());
    let mut m = serde_json::Map::new();
    m.insert(
        l.column("position"),
        json!([l.in_unit(p.x), l.in_unit(p.y), l.in_unit(p.z)]),
    );
    m.insert(
        a.column("angles"),
        json!([
            a.in_unit(p.alpha_x),
            a.in_unit(p.alpha_y),
            a.in_unit(p.alpha_z)
        ]),
    );
    Value::Object(m)
}

fn non_negative(name: &str, v: f64) -> CmdResult<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(usage(anyhow!("--{name} must be a finite value >= 0")))
    }
}

fn load_environment(prov: &Provenance) -> CmdResult<Environment> {
    prov.config.environment().map_err(usage)
}

fn scan(a: &ScanArgs, prov: &Provenance, out: Option<&Path>) -> CmdResult<()> {
    let cfg = &prov.config;
    let u = prov.units;
    non_negative("hall-noise", a.hall_noise)?;
    let mut points = match &a.taught {
        Some(path) => taught_points(path, prov)?,
        None => {
            if a.grid == 0 {
                return Err(usage(anyhow!("--grid must be >= 1")));
            }
            let snap = a.snap.then_some(cfg.resolution_m);
            sphere_segment_scan(
                cfg.sample(),
                &ScanGrid::one_eighth(a.grid),
                cfg.standoff_m,
                &cfg.magnet,
                snap,
            )
            .map_err(runtime)?
        }
    };
    if a.hall_noise > 0.0 {
        let mut rng = stream_rng(cfg.seed, Stream::HallNoise);
        let noise = Normal::new(0.0, u.field().to_si(a.hall_noise)).map_err(usage)?;
        for p in &mut points {
            let base = p.measured_field.unwrap_or(p.predicted_field);
            let n = FieldVector::new(
                noise.sample(&mut rng),
                noise.sample(&mut rng),
                noise.sample(&mut rng),
            );
            p.measured_field = Some(base + n);
        }
    }

    let ang = u.angle();
    let mut columns = vec![ang.column("alpha_y"), ang.column("alpha_z")];
    columns.extend(field_columns(u));
    columns.push(ang.column("angular_error"));
    columns.push("order_index".into());
    let mut rows = Vec::with_capacity(points.len());
    let mut errors = Vec::with_capacity(points.len());
    for p in &points {
        let err = ang.in_unit(p.angular_error().map_err(runtime)?);
        errors.push(err);
        let mut row = vec![num(ang.in_unit(p.alpha_y)), num(ang.in_unit(p.alpha_z))];
        row.extend(field_cells(
            u,
            &p.measured_field.unwrap_or(p.predicted_field),
        ));
        row.push(num(err));
        row.push(p.order_index.to_string());
        rows.push(row);
    }
    emit(out, &csv_document(prov, &columns, &rows))?;

    let mean = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
    let bin = ang.in_unit(0.1_f64.to_radians());
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for e in &errors {
        *counts.entry((e / bin).floor() as i64).or_default() += 1;
    }
    let mode_bin = counts
        .iter()
        .max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(x.0)))
        .map(|(k, _)| *k)
        .unwrap_or(0);
    let mode = (mode_bin as f64 + 0.5) * bin;
    eprintln!(
        "scan: {} poses, mean angular error {mean} {}, mode {mode} {} (bin width {bin})",
        errors.len(),
        ang.name,
        ang.name
    );
    Ok(())
}

/// Taught poses: FK gives the magnet pose, the model predicts the field, and
/// the angular error is measured against the recorded field direction.
fn taught_points(path: &Path, prov: &Provenance) -> CmdResult<Vec<ScanPoint>> {
    let cfg = &prov.config;
    let u = prov.units;
    let mut expected: Vec<String> = (1..=JOINT_COUNT).map(|i| format!("q{i}_rad")).collect();
    expected.extend(field_columns(u));
    let rows = read_csv(path, &expected)?;
    if rows.is_empty() {
        return Err(usage(anyhow!("{}: no taught poses", path.display())));
    }
    let f = u.field();
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let mut q = [0.0; JOINT_COUNT];
            q.copy_from_slice(&r[..JOINT_COUNT]);
            let pose = forward_kinematics(&cfg.dh, &JointConfig(q))
                .map_err(|e| usage(anyhow!("row {}: {e}", i + 1)))?;
            let measured = FieldVector::new(f.to_si(r[6]), f.to_si(r[7]), f.to_si(r[8]));
            let dir = UnitVector::new(measured.as_vec())
                .ok_or_else(|| usage(anyhow!("row {}: measured field is zero", i + 1)))?;
            let (alpha_y, alpha_z) = dir.angles();
            let predicted = cylinder_field(&cfg.magnet, &pose, cfg.sample()).map_err(runtime)?;
            // the designed direction is the measured one, so report the model's deviation from it
            Ok(ScanPoint {
                order_index: i,
                row: i,
                col: 0,
                alpha_y,
                alpha_z,
                pose,
                predicted_field: predicted,
                measured_field: None,
            })
        })
        .collect()
}

fn alignment_failure(e: AlignmentError) -> crate::output::Failure {
    match e {
        AlignmentError::InsufficientData { .. } | AlignmentError::InvalidArgument(_) => usage(e),
        other => runtime(other),
    }
}

fn calibrate(a: &CalibrateArgs, prov: &Provenance, out: Option<&Path>) -> CmdResult<()> {
    let cfg = &prov.config;
    let u = prov.units;
    let (ang, fld) = (u.angle(), u.field());
    let mut columns = vec![
        ang.column("alpha_y"),
        ang.column("alpha_z"),
        "mass_index".to_string(),
    ];
    columns.extend(field_columns(u));

    if a.synthesize {
        non_negative("noise", a.noise)?;
        let delta_y = ang.to_si(a.delta_y.expect("clap enforces --delta-y"));
        let delta_z: Vec<f64> = a.delta_z.iter().map(|&d| ang.to_si(d)).collect();
        if delta_z.is_empty() {
            return Err(usage(anyhow!("--delta-z needs at least one value")));
        }
        let geometry = CalibrationGeometry::stacked(cfg.sample(), cfg.standoff_m, delta_z.len());
        let mut rng = stream_rng(cfg.seed, Stream::HallNoise);
        let data = synthetic_arc(
            &geometry,
            delta_y,
            &delta_z,
            a.points,
            fld.to_si(a.noise),
            &mut rng,
        )
        .map_err(alignment_failure)?;
        let rows: Vec<Vec<String>> = data
            .iter()
            .map(|m| {
                let mut row = vec![
                    num(ang.in_unit(m.alpha_y)),
                    num(ang.in_unit(m.alpha_z)),
                    m.mass_index.to_string(),
                ];
                row.extend(field_cells(u, &m.field));
                row
            })
            .collect();
        return emit(out, &csv_document(prov, &columns, &rows));
    }

    let path = a.input.as_ref().expect("clap enforces --input");
    let rows = read_csv(path, &columns)?;
    let mut data = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r[2] < 0.0 || r[2].fract() != 0.0 {
            return Err(usage(anyhow!(
                "{}: row {}: mass_index must be a non-negative integer",
                path.display(),
                i + 1
            )));
        }
        data.push(CalibrationMeasurement {
            alpha_y: ang.to_si(r[0]),
            alpha_z: ang.to_si(r[1]),
            mass_index: r[2] as usize,
            field: FieldVector::new(fld.to_si(r[3]), fld.to_si(r[4]), fld.to_si(r[5])),
        });
    }
    let masses = data.iter().map(|m| m.mass_index + 1).max().unwrap_or(0);
    if masses == 0 {
        return Err(usage(anyhow!("{}: no measurements", path.display())));
    }
    let geometry = CalibrationGeometry::stacked(cfg.sample(), cfg.standoff_m, masses);
    let fit = calibrate_offsets(&data, &geometry).map_err(alignment_failure)?;
    let mut body = serde_json::Map::new();
    body.insert("masses".into(), json!(masses));
    body.insert(
        ang.column("delta_alpha_y"),
        json!(ang.in_unit(fit.delta_alpha_y)),
    );
    body.insert(
        ang.column("sigma_alpha_y"),
        json!(ang.in_unit(fit.sigma_alpha_y)),
    );
    body.insert(
        ang.column("delta_alpha_z"),
        json!(fit
            .delta_alpha_z
            .iter()
            .map(|v| ang.in_unit(*v))
            .collect::<Vec<_>>()),
    );
    body.insert(
        ang.column("sigma_alpha_z"),
        json!(fit
            .sigma_alpha_z
            .iter()
            .map(|v| ang.in_unit(*v))
            .collect::<Vec<_>>()),
    );
    body.insert(
        fld.column("residual_rms"),
        json!(fld.in_unit(fit.residual_rms)),
    );
    body.insert("iterations".into(), json!(fit.iterations));
    emit(out, &json_document(prov, Value::Object(body)))
}

fn schedule(a: &ScheduleArgs, prov: &Provenance, out: Option<&Path>) -> CmdResult<()> {
    let cfg = &prov.config;
    let u = prov.units;
    let (ang, fld, len) = (u.angle(), u.field(), u.length());
    if a.count == 0 {
        return Err(usage(anyhow!("--count must be >= 1")));
    }
    if !(a.from > 0.0 && a.to > 0.0) {
        return Err(usage(anyhow!("--from and --to must be > 0")));
    }
    let targets: Vec<f64> = if a.count == 1 {
        vec![fld.to_si(a.from)]
    } else {
        (0..a.count)
            .map(|i| fld.to_si(a.from + (a.to - a.from) * i as f64 / (a.count - 1) as f64))
            .collect()
    };
    let dir = unit_normal(ang.to_si(a.alpha_y), ang.to_si(a.alpha_z));
    let range = DistanceRange::for_magnet(&cfg.magnet);
    let s = amplitude_schedule(
        &targets,
        &cfg.magnet,
        &dir,
        cfg.sample(),
        cfg.resolution_m,
        &range,
    )
    .map_err(alignment_failure)?;
    let columns = vec![
        fld.column("target"),
        len.column("distance"),
        fld.column("achieved"),
        fld.column("error"),
        fld.column("error_bound"),
    ];
    let rows: Vec<Vec<String>> = (0..s.targets.len())
        .map(|i| {
            vec![
                num(fld.in_unit(s.targets[i])),
                num(len.in_unit(s.distances[i])),
                num(fld.in_unit(s.achieved[i])),
                num(fld.in_unit(s.errors[i])),
                num(fld.in_unit(s.error_bounds[i])),
            ]
        })
        .collect();
    emit(out, &csv_document(prov, &columns, &rows))
}

fn partition(a: &PartitionArgs, prov: &Provenance, out: Option<&Path>) -> CmdResult<()> {
    let cfg = &prov.config;
    let u = prov.units;
    let (ang, len) = (u.angle(), u.length());
    if a.grid == 0 {
        return Err(usage(anyhow!("--grid must be >= 1")));
    }
    let env = load_environment(prov)?;
    let points = sphere_segment_scan(
        cfg.sample(),
        &ScanGrid::one_eighth(a.grid),
        cfg.standoff_m,
        &cfg.magnet,
        None,
    )
    .map_err(runtime)?;
    let poses: Vec<Pose> = points.iter().map(|p| p.pose).collect();
    let part = partition_pose_dictionary(&poses, &cfg.dh, &cfg.body, &env, &cfg.dh.home());

    let mut columns = vec![
        ang.column("alpha_y"),
        ang.column("alpha_z"),
        "order_index".to_string(),
        "status".to_string(),
        len.column("min_distance"),
    ];
    columns.extend((1..=JOINT_COUNT).map(|i| format!("q{i}_rad")));
    let mut counts = [0usize; 3];
    let rows: Vec<Vec<String>> = points
        .iter()
        .zip(&part)
        .map(|(p, f)| {
            counts[match f.status {
                FeasibilityStatus::Reachable => 0,
                FeasibilityStatus::IkFailure => 1,
                FeasibilityStatus::Collision => 2,
            }] += 1;
            let mut row = vec![
                num(ang.in_unit(p.alpha_y)),
                num(ang.in_unit(p.alpha_z)),
                p.order_index.to_string(),
                f.status.as_str().to_string(),
                f.min_distance
                    .map(|d| num(len.in_unit(d)))
                    .unwrap_or_default(),
            ];
            match &f.joints {
                Some(q) => row.extend(q.0.iter().map(|v| num(*v))),
                None => row.extend(std::iter::repeat_n(String::new(), JOINT_COUNT)),
            }
            row
        })
        .collect();
    emit(out, &csv_document(prov, &columns, &rows))?;
    eprintln!(
        "partition: {} reachable, {} ik_failure, {} collision",
        counts[0], counts[1], counts[2]
    );
    Ok(())
}

fn plan_json(u: Units, plan: &ReplacementPlan) -> Value {
    let (ang, len) = (u.angle(), u.length());
    let mut m = serde_json::Map::new();
    m.insert(
        "status".into(),
        json!(match plan.status {
            ReplacementStatus::Identity => "Identity",
            ReplacementStatus::Replaced => "Replaced",
        }),
    );
    m.insert("similarity".into(), json!(plan.similarity));
    m.insert("far_field_violated".into(), json!(plan.far_field_violated));
    m.insert(
        len.column("displacement"),
        json!(len.in_unit(plan.displacement)),
    );
    m.insert(
        ang.column("rotation_angle"),
        json!(ang.in_unit(plan.rotation_angle)),
    );
    m.insert(
        ang.column("angular_error"),
        json!(ang.in_unit(plan.angular_error)),
    );
    m.insert(
        u.field().column("target_field"),
        field_json(u, &plan.target_field),
    );
    m.insert(
        u.field().column("achieved_field"),
        field_json(u, &plan.achieved_field),
    );
    m.insert("original_pose".into(), pose_json(u, &plan.original_pose));
    m.insert("displaced_pose".into(), pose_json(u, &plan.displaced_pose));
    m.insert("rotated_pose".into(), pose_json(u, &plan.rotated_pose));
    m.insert("final_pose".into(), pose_json(u, &plan.final_pose));
    m.insert(
        "final_joints_rad".into(),
        json!(plan.final_joints.map(|q| q.0.to_vec())),
    );
    Value::Object(m)
}

fn failure_status(e: &AlignmentError) -> &'static str {
    match e {
        AlignmentError::NoReachableDisplacement => "NoReachableDisplacement",
        AlignmentError::FinalPoseForbidden => "FinalPoseForbidden",
        _ => "Error",
    }
}

fn replace(a: &ReplaceArgs, prov: &Provenance, out: Option<&Path>) -> CmdResult<()> {
    let cfg = &prov.config;
    let u = prov.units;
    let ang = u.angle();
    let env = load_environment(prov)?;
    let mut opts = ReplacementOptions {
        axis: match a.axis {
            AxisArg::Y => DisplacementAxis::Y,
            AxisArg::Z => DisplacementAxis::Z,
        },
        max_steps: a.max_steps,
        similarity_d_mt: cfg.similarity_d_mt,
        ..ReplacementOptions::default()
    };
    if let Some(step) = a.step {
        opts.step = u.length().to_si(step);
    }
    if !(opts.step > 0.0) || opts.max_steps == 0 {
        return Err(usage(anyhow!("--step must be > 0 and --max-steps >= 1")));
    }
    let home = cfg.dh.home();
    let attempt = |pose: &Pose| {
        replace_forbidden_pose(
            pose,
            cfg.sample(),
            &cfg.magnet,
            &env,
            &cfg.dh,
            &cfg.body,
            &home,
            &opts,
        )
    };

    if let Some(grid) = a.grid {
        if grid == 0 {
            return Err(usage(anyhow!("--grid must be >= 1")));
        }
        let points = sphere_segment_scan(
            cfg.sample(),
            &ScanGrid::one_eighth(grid),
            cfg.standoff_m,
            &cfg.magnet,
            None,
        )
        .map_err(runtime)?;
        let poses: Vec<Pose> = points.iter().map(|p| p.pose).collect();
        let part = partition_pose_dictionary(&poses, &cfg.dh, &cfg.body, &env, &home);
        let mut entries = Vec::new();
        let (mut forbidden, mut eligible, mut good) = (0usize, 0usize, 0usize);
        for (p, f) in points.iter().zip(&part) {
            if f.status != FeasibilityStatus::Collision {
                continue;
            }
            forbidden += 1;
            let mut entry = serde_json::Map::new();
            entry.insert(ang.column("alpha_y"), json!(ang.in_unit(p.alpha_y)));
            entry.insert(ang.column("alpha_z"), json!(ang.in_unit(p.alpha_z)));
            entry.insert("order_index".into(), json!(p.order_index));
            match attempt(&p.pose) {
                Ok(plan) => {
                    if !plan.far_field_violated {
                        eligible += 1;
                        if plan.similarity >= 0.95 {
                            good += 1;
                        }
                    }
                    entry.insert("plan".into(), plan_json(u, &plan));
                }
                Err(e) => {
                    eligible += 1;
                    entry.insert("status".into(), json!(failure_status(&e)));
                    entry.insert("error".into(), json!(e.to_string()));
                }
            }
            entries.push(Value::Object(entry));
        }
        let body = json!({
            "summary": {
                "forbidden": forbidden,
                "far_field_satisfied_or_failed": eligible,
                "similarity_at_least_0_95": good,
            },
            "replacements": entries,
        });
        emit(out, &json_document(prov, body))?;
        eprintln!("replace: {good}/{eligible} forbidden poses replaced with similarity >= 0.95 ({forbidden} forbidden)");
        return Ok(());
    }

    let (ay, az) = (
        ang.to_si(a.alpha_y.expect("clap enforces")),
        ang.to_si(a.alpha_z.expect("clap enforces")),
    );
    let pose =
        robomag::kinematics::magnet_pose_for_field_direction(cfg.sample(), ay, az, cfg.standoff_m);
    match attempt(&pose) {
        Ok(plan) => {
            if plan.status == ReplacementStatus::Replaced && plan.far_field_violated {
                eprintln!("warning: displaced position is closer than the far-field threshold; dipole reorientation may be inaccurate");
            }
            emit(out, &json_document(prov, plan_json(u, &plan)))
        }
        Err(e) => {
            let status = failure_status(&e);
            emit(
                out,
                &json_document(prov, json!({ "status": status, "error": e.to_string() })),
            )?;
            Err(alignment_failure(e))
        }
    }
}

fn spin_failure(e: SpinError) -> crate::output::Failure {
    match e {
        SpinError::InsufficientData { .. }
        | SpinError::InvalidParameter(_)
        | SpinError::ZeroMagnitude => usage(e),
        other => runtime(other),
    }
}

fn odmr(a: &OdmrArgs, prov: &Provenance, out: Option<&Path>) -> CmdResult<()> {
    let cfg = &prov.config;
    let u = prov.units;
    let (frq, fld, ang) = (u.frequency(), u.field(), u.angle());
    let freq_col = frq.column("freq");
    let columns = vec![freq_col.clone(), "contrast".to_string()];

    if let Some(path) = &a.fit {
        let rows = read_csv(path, &columns)?;
        let spectrum = OdmrSpectrum {
            frequencies: rows.iter().map(|r| frq.to_si(r[0])).collect(),
            contrast: rows.iter().map(|r| r[1]).collect(),
            noise_sigma: 0.0,
        };
        let fit = fit_resonances(&spectrum).map_err(spin_failure)?;
        let mut m = serde_json::Map::new();
        m.insert(frq.column("f_minus"), json!(frq.in_unit(fit.pair.f_minus)));
        m.insert(frq.column("f_plus"), json!(frq.in_unit(fit.pair.f_plus)));
        m.insert(
            frq.column("splitting"),
            json!(frq.in_unit(fit.pair.splitting)),
        );
        m.insert(
            frq.column("sigma_minus"),
            json!(frq.in_unit(fit.sigma_minus)),
        );
        m.insert(frq.column("sigma_plus"), json!(frq.in_unit(fit.sigma_plus)));
        m.insert(frq.column("linewidth"), json!(frq.in_unit(fit.linewidth)));
        m.insert("merged".into(), json!(fit.merged));
        m.insert("depths".into(), json!(fit.depths));
        m.insert("baseline".into(), json!(fit.baseline));
        m.insert("residual_rms".into(), json!(fit.residual_rms));
        let polar = polar_angle_from_resonances(
            fit.pair.f_minus,
            fit.pair.f_plus,
            cfg.nv.d,
            cfg.nv.pi,
            cfg.nv.gamma_e,
        );
        m.insert(
            "polar".into(),
            match polar {
                Ok(p) => json!({ fld.column("b"): fld.in_unit(p.b_magnitude), ang.column("theta"): ang.in_unit(p.theta) }),
                Err(e) => json!({ "error": e.to_string() }),
            },
        );
        return emit(out, &json_document(prov, Value::Object(m)));
    }

    non_negative("noise", a.noise)?;
    let start = a.start.map(|v| frq.to_si(v)).unwrap_or(2.80e9);
    let stop = a.stop.map(|v| frq.to_si(v)).unwrap_or(2.94e9);
    let linewidth = a.linewidth.map(|v| frq.to_si(v)).unwrap_or(1e6);
    if !(stop > start) || a.points < 8 {
        return Err(usage(anyhow!(
            "sweep needs stop > start and at least 8 points"
        )));
    }
    let b_world = FieldVector::new(fld.to_si(a.bx), fld.to_si(a.by), fld.to_si(a.bz));
    let b_nv = world_to_nv_frame(&b_world, &cfg.nv);
    let grid = linear_grid(start, stop, a.points);
    let mut rng = stream_rng(cfg.seed, Stream::SpectrumNoise);
    let s = odmr_spectrum(&cfg.nv, &b_nv, linewidth, a.depth, &grid, a.noise, &mut rng)
        .map_err(spin_failure)?;
    let rows: Vec<Vec<String>> = s
        .frequencies
        .iter()
        .zip(&s.contrast)
        .map(|(f, c)| vec![num(frq.in_unit(*f)), num(*c)])
        .collect();
    emit(out, &csv_document(prov, &columns, &rows))
}

/// Default trajectory: field direction starts at (α_y, α_z) = (20°, 45°).
const TRAJECTORY_START_DEG: (f64, f64) = (20.0, 45.0);
const TRAJECTORY_STEP_DEG: (f64, f64) = (10.0, 5.0);

fn fit_nv(a: &FitNvArgs, prov: &Provenance, out: Option<&Path>) -> CmdResult<()> {
    let cfg = &prov.config;
    let nv = &cfg.nv;
    let u = prov.units;
    let (ang, frq, fld) = (u.angle(), u.frequency(), u.field());
    let columns = vec![
        ang.column("alpha_yB"),
        ang.column("alpha_zB"),
        frq.column("f_minus"),
        frq.column("f_plus"),
        fld.column("B_hall"),
    ];

    if a.synthesize {
        non_negative("noise", a.noise)?;
        if a.rows == 0 {
            return Err(usage(anyhow!("--rows must be >= 1")));
        }
        let (step_y, step_z) = match a.step.as_slice() {
            [] => (
                TRAJECTORY_STEP_DEG.0.to_radians(),
                TRAJECTORY_STEP_DEG.1.to_radians(),
            ),
            [y, z] => (ang.to_si(*y), ang.to_si(*z)),
            _ => {
                return Err(usage(anyhow!(
                    "--step takes two values: d_alpha_y,d_alpha_z"
                )))
            }
        };
        let axis_y = ang.to_si(a.axis_alpha_y.expect("clap enforces"));
        let axis_z = ang.to_si(a.axis_alpha_z.expect("clap enforces"));
        let b = fld.to_si(a.field.expect("clap enforces"));
        if !(b > 0.0) {
            return Err(usage(anyhow!("--field must be > 0")));
        }
        let noise = Normal::new(0.0, frq.to_si(a.noise)).map_err(usage)?;
        let mut rng = stream_rng(cfg.seed, Stream::SplittingNoise);
        let mut rows = Vec::with_capacity(a.rows);
        for i in 0..a.rows {
            let ay = TRAJECTORY_START_DEG.0.to_radians() + step_y * i as f64;
            let az = TRAJECTORY_START_DEG.1.to_radians() + step_z * i as f64;
            let gamma = field_nv_angle(ay, az, axis_y, axis_z);
            let r = cubic_resonances(nv.d, nv.pi, nv.gamma_e * b, gamma).map_err(spin_failure)?;
            let (fm, fp) = if a.noise > 0.0 {
                (
                    r.f_minus + noise.sample(&mut rng),
                    r.f_plus + noise.sample(&mut rng),
                )
            } else {
                (r.f_minus, r.f_plus)
            };
            rows.push(vec![
                num(ang.in_unit(ay)),
                num(ang.in_unit(az)),
                num(frq.in_unit(fm)),
                num(frq.in_unit(fp)),
                num(fld.in_unit(b)),
            ]);
        }
        return emit(out, &csv_document(prov, &columns, &rows));
    }

    let path = a.input.as_ref().expect("clap enforces --input");
    let rows = read_csv(path, &columns)?;
    let splittings: Vec<f64> = rows
        .iter()
        .map(|r| frq.to_si(r[3]) - frq.to_si(r[2]))
        .collect();
    let magnitudes: Vec<f64> = rows.iter().map(|r| fld.to_si(r[4])).collect();
    let normalised = normalize_splittings(&splittings, &magnitudes).map_err(spin_failure)?;
    let points: Vec<TrajectoryPoint> = rows
        .iter()
        .zip(&normalised)
        .map(|(r, s)| TrajectoryPoint {
            alpha_y_b: ang.to_si(r[0]),
            alpha_z_b: ang.to_si(r[1]),
            splitting: *s,
        })
        .collect();
    let fit = fit_orientation(&points, nv.d, nv.pi, nv.gamma_e).map_err(spin_failure)?;

    let per_row: Vec<Value> = rows
        .iter()
        .map(|r| {
            let (lo, hi) = (frq.to_si(r[2]).min(frq.to_si(r[3])), frq.to_si(r[2]).max(frq.to_si(r[3])));
            match polar_angle_from_resonances(lo, hi, nv.d, nv.pi, nv.gamma_e) {
                Ok(p) => json!({ ang.column("theta"): ang.in_unit(p.theta), fld.column("b"): fld.in_unit(p.b_magnitude) }),
                Err(e) => json!({ "error": e.to_string() }),
            }
        })
        .collect();
    let mut m = serde_json::Map::new();
    m.insert(ang.column("alpha_y_nv"), json!(ang.in_unit(fit.alpha_y_nv)));
    m.insert(ang.column("alpha_z_nv"), json!(ang.in_unit(fit.alpha_z_nv)));
    m.insert(
        ang.column("sigma_alpha_y"),
        json!(ang.in_unit(fit.sigma_alpha_y)),
    );
    m.insert(
        ang.column("sigma_alpha_z"),
        json!(ang.in_unit(fit.sigma_alpha_z)),
    );
    m.insert(fld.column("b_fit"), json!(fld.in_unit(fit.b_fit)));
    m.insert(fld.column("sigma_b"), json!(fld.in_unit(fit.sigma_b)));
    m.insert(
        frq.column("residual_rms"),
        json!(frq.in_unit(fit.residual_rms)),
    );
    m.insert("notes".into(), json!(fit.notes));
    m.insert("rows".into(), Value::Array(per_row));
    emit(out, &json_document(prov, Value::Object(m)))
}

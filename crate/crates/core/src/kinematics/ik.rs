use nalgebra::{Matrix6, Vector6};

use super::dh::JOINT_COUNT;
use super::{DhTable, JointConfig, KinematicsError, Pose};

/// Damped least-squares IK settings.
#[derive(Clone, Debug)]
pub struct IkOptions {
    /// Damping factor λ; the normal equations use λ².
    pub damping: f64,
    pub max_iterations: usize,
    pub position_tolerance: f64,
    pub orientation_tolerance: f64,
    /// Extra deterministic starting points tried after the caller's seed fails.
    pub restarts: usize,
    /// Per-iteration cap on the task-space error fed to the solver (m, rad).
    pub max_position_step: f64,
    pub max_orientation_step: f64,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            damping: 0.01,
            max_iterations: 500,
            position_tolerance: 1e-4,
            orientation_tolerance: 1e-3,
            restarts: 24,
            max_position_step: 0.05,
            max_orientation_step: 0.4,
        }
    }
}

/// IK with default options.
pub fn inverse_kinematics(
    dh: &DhTable,
    target: &Pose,
    seed: &JointConfig,
) -> Result<JointConfig, KinematicsError> {
    inverse_kinematics_with(dh, target, seed, &IkOptions::default())
}

pub fn inverse_kinematics_with(
    dh: &DhTable,
    target: &Pose,
    seed: &JointConfig,
    opts: &IkOptions,
) -> Result<JointConfig, KinematicsError> {
    dh.check_limits(seed)?;
    if target.position().norm() > dh.reach_bound() {
        return Err(KinematicsError::NoSolution);
    }
    let starts = std::iter::once(*seed).chain((0..opts.restarts).map(|k| halton_config(dh, k + 1)));
    for start in starts {
        if let Some(q) = solve_from(dh, target, &start, opts) {
            return Ok(q);
        }
    }
    Err(KinematicsError::NoSolution)
}

fn solve_from(
    dh: &DhTable,
    target: &Pose,
    start: &JointConfig,
    opts: &IkOptions,
) -> Option<JointConfig> {
    let target_iso = target.to_isometry();
    let target_rot = target_iso.rotation;
    let target_pos = target_iso.translation.vector;
    let lambda2 = opts.damping * opts.damping;

    let mut q = *start;
    let mut best = f64::INFINITY;
    let mut stall = 0usize;
    for _ in 0..opts.max_iterations {
        let frames = dh.frames(&q);
        let tcp = frames[JOINT_COUNT + 1];
        let p = tcp.translation.vector;
        let mut e_pos = target_pos - p;
        let mut e_rot = (target_rot * tcp.rotation.inverse()).scaled_axis();
        let (np, nr) = (e_pos.norm(), e_rot.norm());
        if np <= 1e-2 * opts.position_tolerance && nr <= 1e-2 * opts.orientation_tolerance {
            return Some(q);
        }
        let err = np + nr * 0.1;
        if err < best * 0.999 {
            best = err;
            stall = 0;
        } else {
            stall += 1;
            if stall > 40 {
                break;
            }
        }
        if np > opts.max_position_step {
            e_pos *= opts.max_position_step / np;
        }
        if nr > opts.max_orientation_step {
            e_rot *= opts.max_orientation_step / nr;
        }

        let mut jac = Matrix6::zeros();
        for i in 0..JOINT_COUNT {
            let axis = frames[i].rotation * nalgebra::Vector3::z();
            let origin = frames[i].translation.vector;
            let lin = axis.cross(&(p - origin));
            for r in 0..3 {
                jac[(r, i)] = lin[r];
                jac[(r + 3, i)] = axis[r];
            }
        }
        let e = Vector6::new(e_pos.x, e_pos.y, e_pos.z, e_rot.x, e_rot.y, e_rot.z);
        let jjt = jac * jac.transpose() + Matrix6::identity() * lambda2;
        let y = jjt.cholesky()?.solve(&e);
        let dq = jac.transpose() * y;
        let mut next = q.0;
        for i in 0..JOINT_COUNT {
            next[i] += dq[i];
        }
        q = dh.clamp(&JointConfig(next));
    }

    let (dp, dr) = Pose::from_isometry(&dh.tcp_isometry(&q)).distance_to(target);
    (dp <= opts.position_tolerance && dr <= opts.orientation_tolerance).then_some(q)
}

fn radical_inverse(mut index: usize, base: usize) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    result
}

/// Deterministic quasi-random configuration inside the joint limits.
fn halton_config(dh: &DhTable, index: usize) -> JointConfig {
    const BASES: [usize; JOINT_COUNT] = [2, 3, 5, 7, 11, 13];
    let mut q = [0.0; JOINT_COUNT];
    for i in 0..JOINT_COUNT {
        let r = &dh.joints[i];
        // shrink towards the middle of the range; the extremes are rarely useful starts
        let u = 0.1 + 0.8 * radical_inverse(index, BASES[i]);
        q[i] = r.q_min_rad + u * (r.q_max_rad - r.q_min_rad);
    }
    JointConfig(q)
}

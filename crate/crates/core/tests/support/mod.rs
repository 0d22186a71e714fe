//! Independent reference implementations shared by the integration tests.
//!
//! Nothing here calls into the field or kinematics code under test; the
//! oracles are built from first principles with plain arrays.

#![allow(dead_code, clippy::excessive_precision)]

use std::f64::consts::PI;

const MU_0: f64 = 4.0e-7 * PI;

// Gauss-Kronrod 15-point nodes (non-negative half) and weights.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<const N: usize>(f: &dyn Fn(f64) -> [f64; N], a: f64, b: f64) -> ([f64; N], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    let fc = f(c);
    for k in 0..N {
        kron[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
    }
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        for k in 0..N {
            kron[k] += WGK[j] * (f1[k] + f2[k]);
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * (f1[k] + f2[k]);
            }
        }
    }
    let mut err = 0.0_f64;
    for k in 0..N {
        kron[k] *= h;
        gauss[k] *= h;
        err = err.max((kron[k] - gauss[k]).abs());
    }
    (kron, err)
}

/// Adaptive Gauss-Kronrod integration of a vector-valued function.
pub fn integrate<const N: usize>(
    f: &dyn Fn(f64) -> [f64; N],
    a: f64,
    b: f64,
    abs_tol: f64,
) -> [f64; N] {
    fn rec<const N: usize>(
        f: &dyn Fn(f64) -> [f64; N],
        a: f64,
        b: f64,
        tol: f64,
        depth: u32,
    ) -> [f64; N] {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth >= 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        let l = rec(f, a, m, 0.5 * tol, depth + 1);
        let r = rec(f, m, b, 0.5 * tol, depth + 1);
        let mut out = [0.0; N];
        for k in 0..N {
            out[k] = l[k] + r[k];
        }
        out
    }
    rec(f, a, b, abs_tol, 0)
}

/// Field (T) of an axially magnetised hollow cylinder from the magnetic
/// surface charge on its two annular end faces, by nested quadrature.
///
/// Coordinates are local: the axis is +x, the magnet is centred at the
/// origin, and `p` must lie outside the material.
pub fn end_face_charge_field(
    outer_radius: f64,
    inner_radius: f64,
    length: f64,
    magnetisation: f64,
    p: [f64; 3],
    abs_tol: f64,
) -> [f64; 3] {
    let mut h = [0.0; 3];
    for (face_x, sigma) in [
        (0.5 * length, magnetisation),
        (-0.5 * length, -magnetisation),
    ] {
        let over_phi = |phi: f64| -> [f64; 3] {
            let (s, c) = phi.sin_cos();
            let over_rho = |rho: f64| -> [f64; 3] {
                let d = [p[0] - face_x, p[1] - rho * c, p[2] - rho * s];
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                let w = rho / (r2 * r2.sqrt());
                [d[0] * w, d[1] * w, d[2] * w]
            };
            integrate(&over_rho, inner_radius, outer_radius, abs_tol)
        };
        let v = integrate(&over_phi, 0.0, 2.0 * PI, abs_tol * 2.0 * PI);
        for k in 0..3 {
            h[k] += sigma * v[k] / (4.0 * PI);
        }
    }
    [MU_0 * h[0], MU_0 * h[1], MU_0 * h[2]]
}

pub type Mat4 = [[f64; 4]; 4];

pub fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn identity() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

/// Textbook standard D-H link matrix.
pub fn dh_matrix(theta: f64, d: f64, a: f64, alpha: f64) -> Mat4 {
    let (st, ct) = theta.sin_cos();
    let (sa, ca) = alpha.sin_cos();
    [
        [ct, -st * ca, st * sa, a * ct],
        [st, ct * ca, -ct * sa, a * st],
        [0.0, sa, ca, d],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

/// TCP transform by explicit matrix chain. Rows are
/// `(a, alpha, d, theta_offset)`. The end-effector x-axis is the flange z,
/// y is flange x, z is flange y; the TCP sits `tool_offset` along that x.
pub fn fk_chain(rows: &[(f64, f64, f64, f64)], q: &[f64], tool_offset: f64) -> Mat4 {
    let mut t = identity();
    for (row, qi) in rows.iter().zip(q) {
        t = mat_mul(&t, &dh_matrix(qi + row.3, row.2, row.0, row.1));
    }
    let relabel: Mat4 = [
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];
    let mut tool = identity();
    tool[0][3] = tool_offset;
    mat_mul(&mat_mul(&t, &relabel), &tool)
}

//! Small fixed-size vector and rotation helpers generic over [`Scalar`].

use crate::autodiff::Scalar;

pub type Vec3<S> = [S; 3];
/// Row-major 3x3 matrix.
pub type Mat3<S> = [[S; 3]; 3];

pub fn lift3<S: Scalar>(v: [f64; 3]) -> Vec3<S> {
    [S::constant(v[0]), S::constant(v[1]), S::constant(v[2])]
}

pub fn lift33<S: Scalar>(m: [[f64; 3]; 3]) -> Mat3<S> {
    [lift3(m[0]), lift3(m[1]), lift3(m[2])]
}

pub fn value3<S: Scalar>(v: Vec3<S>) -> [f64; 3] {
    [v[0].value(), v[1].value(), v[2].value()]
}

pub fn add<S: Scalar>(a: Vec3<S>, b: Vec3<S>) -> Vec3<S> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub<S: Scalar>(a: Vec3<S>, b: Vec3<S>) -> Vec3<S> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale<S: Scalar>(a: Vec3<S>, s: S) -> Vec3<S> {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot<S: Scalar>(a: Vec3<S>, b: Vec3<S>) -> S {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross<S: Scalar>(a: Vec3<S>, b: Vec3<S>) -> Vec3<S> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm<S: Scalar>(a: Vec3<S>) -> S {
    dot(a, a).sqrt()
}

pub fn mat_vec<S: Scalar>(m: &Mat3<S>, v: Vec3<S>) -> Vec3<S> {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

pub fn mat_mul<S: Scalar>(a: &Mat3<S>, b: &Mat3<S>) -> Mat3<S> {
    let mut out = [[S::zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn identity<S: Scalar>() -> Mat3<S> {
    let (o, z) = (S::constant(1.0), S::zero());
    [[o, z, z], [z, o, z], [z, z, o]]
}

/// Rotation about the world up axis (z).
pub fn rot_z<S: Scalar>(angle: S) -> Mat3<S> {
    let (c, s) = (angle.cos(), angle.sin());
    let (o, z) = (S::constant(1.0), S::zero());
    [[c, -s, z], [s, c, z], [z, z, o]]
}

/// Rodrigues' formula. Small angles use a Taylor expansion in the squared
/// angle so the map stays differentiable at the origin.
pub fn exp_map<S: Scalar>(v: Vec3<S>) -> Mat3<S> {
    let t2 = dot(v, v);
    let (a, b) = if t2.value() < 1e-8 {
        (
            S::constant(1.0) - t2 / 6.0 + t2 * t2 / 120.0,
            S::constant(0.5) - t2 / 24.0 + t2 * t2 / 720.0,
        )
    } else {
        let t = t2.sqrt();
        (t.sin() / t, (S::constant(1.0) - t.cos()) / t2)
    };
    let [x, y, z] = v;
    let one = S::constant(1.0);
    [
        [
            one - b * (y * y + z * z),
            b * x * y - a * z,
            b * x * z + a * y,
        ],
        [
            b * x * y + a * z,
            one - b * (x * x + z * z),
            b * y * z - a * x,
        ],
        [
            b * x * z - a * y,
            b * y * z + a * x,
            one - b * (x * x + y * y),
        ],
    ]
}

/// Inverse of [`exp_map`] for plain matrices; angle in `[0, π]`.
pub fn log_map(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let rot = nalgebra::Rotation3::from_matrix_unchecked(nalgebra::Matrix3::from_fn(|i, j| m[i][j]));
    let v = rot.scaled_axis();
    [v.x, v.y, v.z]
}

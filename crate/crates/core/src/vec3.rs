//! Minimal fixed-size vector helpers; positions are plain `[f64; 3]`.

pub type Vec3 = [f64; 3];

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm2(a: Vec3) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    norm2(a).sqrt()
}

#[inline]
pub fn lerp(a: Vec3, b: Vec3, w: f64) -> Vec3 {
    [
        a[0] + w * (b[0] - a[0]),
        a[1] + w * (b[1] - a[1]),
        a[2] + w * (b[2] - a[2]),
    ]
}

pub fn unit(axis: usize) -> Vec3 {
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    e
}

/// Diagonal orthogonal map: each coordinate is kept or negated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Flip(pub [i8; 3]);

impl Flip {
    pub const ID: Flip = Flip([1, 1, 1]);
    /// Rotation by π about the x-axis.
    pub const RX: Flip = Flip([1, -1, -1]);
    /// Rotation by π about the z-axis.
    pub const RZ: Flip = Flip([-1, -1, 1]);
    /// Reflection through the xz-plane.
    pub const RXZ: Flip = Flip([1, -1, 1]);
    /// Reflection through the yz-plane.
    pub const RYZ: Flip = Flip([-1, 1, 1]);
    /// Reflection through the xy-plane.
    pub const RXY: Flip = Flip([1, 1, -1]);

    #[inline]
    pub fn apply(self, v: Vec3) -> Vec3 {
        [
            f64::from(self.0[0]) * v[0],
            f64::from(self.0[1]) * v[1],
            f64::from(self.0[2]) * v[2],
        ]
    }

    pub fn compose(self, other: Flip) -> Flip {
        Flip([
            self.0[0] * other.0[0],
            self.0[1] * other.0[1],
            self.0[2] * other.0[2],
        ])
    }

    pub fn all() -> impl Iterator<Item = Flip> {
        (0..8).map(|m: u8| {
            let s = |b: u8| if m & (1 << b) != 0 { -1 } else { 1 };
            Flip([s(0), s(1), s(2)])
        })
    }
}

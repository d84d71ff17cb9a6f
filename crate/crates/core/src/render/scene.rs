use nalgebra::{Matrix3, Vector3};

use crate::distraction::Rgb;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Box { half_extents: Vector3<f64> },
    Sphere { radius: f64 },
    /// Axis along local +z.
    Capsule { radius: f64, half_length: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    pub position: Vector3<f64>,
    /// Local to world.
    pub rotation: Matrix3<f64>,
    /// Index into the body color table.
    pub body: usize,
}

impl Primitive {
    pub fn new(shape: Shape, position: Vector3<f64>, body: usize) -> Self {
        Primitive { shape, position, rotation: Matrix3::identity(), body }
    }

    /// Capsule spanning the segment `a`-`b`.
    pub fn segment(a: Vector3<f64>, b: Vector3<f64>, radius: f64, body: usize) -> Self {
        let axis = b - a;
        let len = axis.norm();
        Primitive {
            shape: Shape::Capsule { radius, half_length: len / 2.0 },
            position: (a + b) / 2.0,
            rotation: rotation_from_z(axis),
            body,
        }
    }
}

/// A rotation taking local +z onto `dir`.
pub fn rotation_from_z(dir: Vector3<f64>) -> Matrix3<f64> {
    let z = match dir.try_normalize(1e-12) {
        Some(z) => z,
        None => return Matrix3::identity(),
    };
    let helper = if z.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let x = helper.cross(&z).normalize();
    let y = z.cross(&x);
    Matrix3::from_columns(&[x, y, z])
}

/// Infinite horizontal checkerboard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ground {
    pub height: f64,
    pub opacity: f64,
    pub tile: f64,
    pub colors: [Rgb; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneDescription {
    pub primitives: Vec<Primitive>,
    pub ground: Option<Ground>,
    pub skybox: [u8; 3],
    /// Direction towards the light.
    pub light: Vector3<f64>,
}

impl SceneDescription {
    pub fn max_body(&self) -> Option<usize> {
        self.primitives.iter().map(|p| p.body).max()
    }
}

pub const DEFAULT_SKYBOX: [u8; 3] = [96, 128, 168];

pub fn default_light() -> Vector3<f64> {
    Vector3::new(-0.3, -0.5, 1.0).normalize()
}

pub fn default_ground(opacity: f64) -> Ground {
    Ground { height: 0.0, opacity, tile: 0.5, colors: [[0.22, 0.27, 0.33], [0.32, 0.38, 0.45]] }
}

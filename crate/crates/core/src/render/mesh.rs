//! Triangle tessellation of scene primitives.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;

use super::scene::{Primitive, Shape};

pub type Triangle = [Vector3<f64>; 3];

const SEGMENTS: usize = 16;
const RINGS: usize = 10;

fn box_triangles(h: &Vector3<f64>) -> Vec<Triangle> {
    let corner = |i: usize| {
        Vector3::new(
            if i & 1 == 0 { -h.x } else { h.x },
            if i & 2 == 0 { -h.y } else { h.y },
            if i & 4 == 0 { -h.z } else { h.z },
        )
    };
    // Each face as a quad of corner indices.
    const FACES: [[usize; 4]; 6] = [
        [0, 1, 3, 2],
        [4, 6, 7, 5],
        [0, 4, 5, 1],
        [2, 3, 7, 6],
        [0, 2, 6, 4],
        [1, 5, 7, 3],
    ];
    FACES
        .iter()
        .flat_map(|f| {
            [
                [corner(f[0]), corner(f[1]), corner(f[2])],
                [corner(f[0]), corner(f[2]), corner(f[3])],
            ]
        })
        .collect()
}

fn sphere_point(radius: f64, polar: f64, azimuth: f64, z_offset: f64) -> Vector3<f64> {
    Vector3::new(
        radius * polar.sin() * azimuth.cos(),
        radius * polar.sin() * azimuth.sin(),
        radius * polar.cos() + z_offset,
    )
}

/// Sphere of `radius`; with `half_length > 0` the two hemispheres are pulled
/// apart along z and joined by a cylinder, giving a capsule.
fn capsule_triangles(radius: f64, half_length: f64) -> Vec<Triangle> {
    let mut tris = Vec::with_capacity(2 * SEGMENTS * (RINGS + 1));
    for ring in 0..RINGS {
        let (p0, p1) = (PI * ring as f64 / RINGS as f64, PI * (ring + 1) as f64 / RINGS as f64);
        let upper = ring < RINGS / 2;
        let off = if upper { half_length } else { -half_length };
        for seg in 0..SEGMENTS {
            let (a0, a1) = (TAU * seg as f64 / SEGMENTS as f64, TAU * (seg + 1) as f64 / SEGMENTS as f64);
            let v00 = sphere_point(radius, p0, a0, off);
            let v01 = sphere_point(radius, p0, a1, off);
            let v10 = sphere_point(radius, p1, a0, off);
            let v11 = sphere_point(radius, p1, a1, off);
            tris.push([v00, v10, v11]);
            tris.push([v00, v11, v01]);
        }
    }
    if half_length > 0.0 {
        for seg in 0..SEGMENTS {
            let (a0, a1) = (TAU * seg as f64 / SEGMENTS as f64, TAU * (seg + 1) as f64 / SEGMENTS as f64);
            let t0 = sphere_point(radius, PI / 2.0, a0, half_length);
            let t1 = sphere_point(radius, PI / 2.0, a1, half_length);
            let b0 = sphere_point(radius, PI / 2.0, a0, -half_length);
            let b1 = sphere_point(radius, PI / 2.0, a1, -half_length);
            tris.push([t0, b0, b1]);
            tris.push([t0, b1, t1]);
        }
    }
    tris
}

/// World-space triangles of a primitive.
pub fn tessellate(p: &Primitive) -> Vec<Triangle> {
    let local = match p.shape {
        Shape::Box { half_extents } => box_triangles(&half_extents),
        Shape::Sphere { radius } => capsule_triangles(radius, 0.0),
        Shape::Capsule { radius, half_length } => capsule_triangles(radius, half_length),
    };
    local
        .into_iter()
        .map(|t| t.map(|v| p.rotation * v + p.position))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_has_twelve_triangles_on_its_faces() {
        let tris = box_triangles(&Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(tris.len(), 12);
        for t in tris {
            for v in t {
                assert!(v.x.abs() == 1.0 && v.y.abs() == 2.0 && v.z.abs() == 3.0);
            }
        }
    }

    #[test]
    fn capsule_vertices_lie_on_surface() {
        let (r, h) = (0.5, 1.0);
        for t in capsule_triangles(r, h) {
            for v in t {
                let zc = v.z.clamp(-h, h);
                let d = (v - Vector3::new(0.0, 0.0, zc)).norm();
                assert!((d - r).abs() < 1e-12);
            }
        }
    }
}

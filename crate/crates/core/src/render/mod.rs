//! Software rasterizer and background compositor.
//!
//! Each pixel starts from the skybox colour, blended with the background
//! video frame by `beta_bg`. The ground plane is ray-cast per pixel and
//! alpha-blended on top with its opacity. Primitives are tessellated,
//! clipped at the near plane and z-buffered over everything else with flat
//! shading from one directional light. The video frame fills the image plane
//! in screen space.

pub mod mesh;
pub mod scene;

use nalgebra::Vector3;

use crate::config::check_beta;
use crate::distraction::{ColorState, Rgb};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::geometry::{CameraExtrinsics, NEAR};

use mesh::{tessellate, Triangle};
use scene::{Ground, SceneDescription};

const AMBIENT: f64 = 0.45;
const DIFFUSE: f64 = 0.55;

/// What produced a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layer {
    Background,
    Ground,
    Geometry,
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 255.0)).round() as u8
}

/// `(1 - beta) * sky + beta * video`, rounded per channel.
pub fn blend_background(sky: [u8; 3], video: [u8; 3], beta_bg: f64) -> [u8; 3] {
    std::array::from_fn(|c| to_u8((1.0 - beta_bg) * f64::from(sky[c]) + beta_bg * f64::from(video[c])))
}

fn ground_color(g: &Ground, p: &Vector3<f64>) -> Rgb {
    let parity = ((p.x / g.tile).floor() as i64 + (p.y / g.tile).floor() as i64).rem_euclid(2);
    g.colors[parity as usize]
}

struct Raster {
    width: usize,
    height: usize,
    color: Vec<[u8; 3]>,
    inv_depth: Vec<f64>,
    layer: Vec<Layer>,
}

impl Raster {
    fn draw_triangle(&mut self, ext: &CameraExtrinsics, tri: &Triangle, rgb: [u8; 3]) {
        let cam: Vec<Vector3<f64>> = tri.iter().map(|v| ext.to_camera(v)).collect();
        // Clip against depth >= NEAR (depth = -z).
        let mut poly: Vec<Vector3<f64>> = Vec::with_capacity(4);
        for i in 0..3 {
            let (a, b) = (cam[i], cam[(i + 1) % 3]);
            let (da, db) = (-a.z - NEAR, -b.z - NEAR);
            if da >= 0.0 {
                poly.push(a);
            }
            if (da >= 0.0) != (db >= 0.0) {
                let t = da / (da - db);
                poly.push(a + (b - a) * t);
            }
        }
        if poly.len() < 3 {
            return;
        }
        let f = ext.focal_px(self.height);
        let (cx, cy) = (self.width as f64 / 2.0, self.height as f64 / 2.0);
        let screen: Vec<(f64, f64, f64)> = poly
            .iter()
            .map(|c| {
                let depth = -c.z;
                (cx + f * c.x / depth, cy - f * c.y / depth, 1.0 / depth)
            })
            .collect();
        for i in 1..screen.len() - 1 {
            self.fill([screen[0], screen[i], screen[i + 1]], rgb);
        }
    }

    fn fill(&mut self, v: [(f64, f64, f64); 3], rgb: [u8; 3]) {
        let edge = |a: (f64, f64, f64), b: (f64, f64, f64), x: f64, y: f64| {
            (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0)
        };
        let area = edge(v[0], v[1], v[2].0, v[2].1);
        if area.abs() < 1e-12 {
            return;
        }
        let min_x = v.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let max_x = v.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let min_y = v.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let max_y = v.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        if max_x < 0.0 || max_y < 0.0 || min_x > self.width as f64 || min_y > self.height as f64 {
            return;
        }
        let x0 = (min_x - 0.5).ceil().max(0.0) as usize;
        let y0 = (min_y - 0.5).ceil().max(0.0) as usize;
        let x1 = ((max_x - 0.5).floor() as i64).min(self.width as i64 - 1);
        let y1 = ((max_y - 0.5).floor() as i64).min(self.height as i64 - 1);
        if x1 < 0 || y1 < 0 {
            return;
        }
        for y in y0..=y1 as usize {
            let py = y as f64 + 0.5;
            for x in x0..=x1 as usize {
                let px = x as f64 + 0.5;
                let w0 = edge(v[1], v[2], px, py) / area;
                let w1 = edge(v[2], v[0], px, py) / area;
                let w2 = edge(v[0], v[1], px, py) / area;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                let inv_depth = w0 * v[0].2 + w1 * v[1].2 + w2 * v[2].2;
                let i = y * self.width + x;
                if inv_depth > self.inv_depth[i] {
                    self.inv_depth[i] = inv_depth;
                    self.color[i] = rgb;
                    self.layer[i] = Layer::Geometry;
                }
            }
        }
    }
}

fn shade(rgb: Rgb, tri: &Triangle, eye: &Vector3<f64>, light: &Vector3<f64>) -> [u8; 3] {
    let mut n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let len = n.norm();
    if len > 0.0 {
        n /= len;
    }
    if n.dot(&(eye - tri[0])) < 0.0 {
        n = -n;
    }
    let intensity = AMBIENT + DIFFUSE * n.dot(light).max(0.0);
    rgb.map(|c| to_u8(255.0 * (c * intensity).clamp(0.0, 1.0)))
}

/// Renders and reports which layer produced every pixel (row-major).
pub fn render_layers(
    scene: &SceneDescription,
    ext: &CameraExtrinsics,
    colors: &ColorState,
    background: Option<&Frame>,
    beta_bg: f64,
    size: (usize, usize),
) -> Result<(Frame, Vec<Layer>)> {
    let (width, height) = size;
    if width == 0 || height == 0 {
        return Err(Error::Render(format!("cannot render a {width}x{height} image")));
    }
    check_beta("beta_bg", beta_bg)?;
    if let Some(max) = scene.max_body() {
        if max >= colors.len() {
            return Err(Error::Render(format!(
                "primitive references body {max} but only {} colors are given",
                colors.len()
            )));
        }
    }
    let resized;
    let background = match background {
        Some(f) if f.size() != size => {
            resized = f.resized(width, height);
            Some(&resized)
        }
        other => other,
    };

    let n = width * height;
    let mut raster = Raster {
        width,
        height,
        color: vec![scene.skybox; n],
        inv_depth: vec![0.0; n],
        layer: vec![Layer::Background; n],
    };

    let rot_t = ext.rotation.transpose();
    let f = ext.focal_px(height);
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            let mut px = scene.skybox;
            if let Some(frame) = background {
                px = blend_background(scene.skybox, frame.pixel(x, y), beta_bg);
            }
            if let Some(g) = scene.ground.as_ref().filter(|g| g.opacity > 0.0) {
                let dir_cam = Vector3::new(
                    (x as f64 + 0.5 - width as f64 / 2.0) / f,
                    -(y as f64 + 0.5 - height as f64 / 2.0) / f,
                    -1.0,
                );
                let dir = rot_t * dir_cam;
                let t = (g.height - ext.position.z) / dir.z;
                if dir.z != 0.0 && t > 0.0 && t.is_finite() {
                    let hit = ext.position + dir * t;
                    let gc = ground_color(g, &hit);
                    px = std::array::from_fn(|c| {
                        to_u8((1.0 - g.opacity) * f64::from(px[c]) + g.opacity * 255.0 * gc[c])
                    });
                    raster.layer[i] = Layer::Ground;
                }
            }
            raster.color[i] = px;
        }
    }

    for prim in &scene.primitives {
        let rgb = colors.current(prim.body);
        for tri in tessellate(prim) {
            let c = shade(rgb, &tri, &ext.position, &scene.light);
            raster.draw_triangle(ext, &tri, c);
        }
    }

    let data = raster.color.iter().flatten().copied().collect();
    Ok((Frame::from_raw(width, height, data)?, raster.layer))
}

pub fn render(
    scene: &SceneDescription,
    ext: &CameraExtrinsics,
    colors: &ColorState,
    background: Option<&Frame>,
    beta_bg: f64,
    size: (usize, usize),
) -> Result<Frame> {
    render_layers(scene, ext, colors, background, beta_bg, size).map(|(f, _)| f)
}

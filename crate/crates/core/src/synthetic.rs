//! Synthetic closed triangulations for tests, benchmarks and demos.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::mesh_io::Mesh;

/// Closed torus with `major * minor` vertices and `2 * major * minor` faces,
/// scaled to fit inside the unit cube.
pub fn torus(major: usize, minor: usize, ring_radius: f64, tube_radius: f64) -> Mesh {
    assert!(
        major >= 3 && minor >= 3,
        "torus needs at least 3x3 segments"
    );
    let scale = 0.95 / (ring_radius + tube_radius);
    let mut vertices = Vec::with_capacity(major * minor);
    for i in 0..major {
        let u = TAU * i as f64 / major as f64;
        for j in 0..minor {
            let v = TAU * j as f64 / minor as f64;
            let r = ring_radius + tube_radius * v.cos();
            vertices.push([
                scale * r * u.cos(),
                scale * r * u.sin(),
                scale * tube_radius * v.sin(),
            ]);
        }
    }
    let id = |i: usize, j: usize| ((i % major) * minor + (j % minor) + 1) as u32;
    let mut faces = Vec::with_capacity(2 * major * minor);
    for i in 0..major {
        for j in 0..minor {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::new(vertices, faces).expect("torus is a valid mesh")
}

/// Closed UV sphere: two poles plus `(rings - 1) * segments` vertices.
pub fn uv_sphere(rings: usize, segments: usize, radius: f64) -> Mesh {
    assert!(
        rings >= 2 && segments >= 3,
        "sphere needs rings >= 2, segments >= 3"
    );
    let mut vertices = vec![[0.0, 0.0, radius]];
    for r in 1..rings {
        let theta = std::f64::consts::PI * r as f64 / rings as f64;
        for s in 0..segments {
            let phi = TAU * s as f64 / segments as f64;
            vertices.push([
                radius * theta.sin() * phi.cos(),
                radius * theta.sin() * phi.sin(),
                radius * theta.cos(),
            ]);
        }
    }
    vertices.push([0.0, 0.0, -radius]);
    let south = vertices.len() as u32;
    let id = |r: usize, s: usize| (2 + (r - 1) * segments + s % segments) as u32;
    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push([1, id(1, s), id(1, s + 1)]);
        faces.push([south, id(rings - 1, s + 1), id(rings - 1, s)]);
    }
    for r in 1..rings - 1 {
        for s in 0..segments {
            faces.push([id(r, s), id(r + 1, s), id(r + 1, s + 1)]);
            faces.push([id(r, s), id(r + 1, s + 1), id(r, s + 1)]);
        }
    }
    Mesh::new(vertices, faces).expect("sphere is a valid mesh")
}

/// Add uniform noise of the given amplitude to every coordinate.
pub fn perturb<R: Rng>(mesh: &Mesh, amplitude: f64, rng: &mut R) -> Mesh {
    let vertices = mesh
        .vertices()
        .iter()
        .map(|v| v.map(|c| c + rng.random_range(-amplitude..=amplitude)))
        .collect();
    mesh.with_vertices(vertices).expect("same vertex count")
}

/// Relabel vertices by a random permutation (faces rewritten to match).
pub fn shuffle_vertices<R: Rng>(mesh: &Mesh, rng: &mut R) -> Mesh {
    let n = mesh.vertex_count();
    let mut new_id: Vec<u32> = (1..=n as u32).collect();
    new_id.shuffle(rng);
    let mut vertices = vec![[0.0; 3]; n];
    for (old, v) in mesh.vertices().iter().enumerate() {
        vertices[new_id[old] as usize - 1] = *v;
    }
    let faces = mesh
        .faces()
        .iter()
        .map(|f| f.map(|i| new_id[i as usize - 1]))
        .collect();
    Mesh::new(vertices, faces).expect("permutation keeps the mesh valid")
}

/// A random closed mesh with `min_vertices..=max_vertices` vertices (the
/// lower bound is raised to 9): a noisy torus or sphere, sometimes with
/// shuffled vertex order. The upper bound may be exceeded when the range is
/// narrower than one ring of vertices.
pub fn random_closed_mesh<R: Rng>(rng: &mut R, min_vertices: usize, max_vertices: usize) -> Mesh {
    let min_vertices = min_vertices.max(9);
    let target = rng.random_range(min_vertices..=max_vertices.max(min_vertices));
    let mesh = if rng.random_bool(0.5) {
        let minor = rng.random_range(3..=(target / 3).clamp(3, 40));
        let major = (target / minor).max(min_vertices.div_ceil(minor)).max(3);
        torus(
            major,
            minor,
            rng.random_range(1.0..3.0),
            rng.random_range(0.2..0.9),
        )
    } else {
        let segments = rng.random_range(3..=(target / 2).clamp(3, 48));
        let inner = ((target - 2) / segments)
            .max((min_vertices - 2).div_ceil(segments))
            .max(1);
        uv_sphere(inner + 1, segments, rng.random_range(0.3..0.95))
    };
    let noise = 10f64.powf(rng.random_range(-6.0..-2.0));
    let mesh = perturb(&mesh, noise, rng);
    if rng.random_bool(0.3) {
        shuffle_vertices(&mesh, rng)
    } else {
        mesh
    }
}

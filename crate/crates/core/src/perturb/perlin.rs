use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::PerturbError;
use crate::geometry::Point3;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub octaves: u32,
    /// Bound on the displacement magnitude.
    pub amplitude: f64,
    /// Lattice frequency of the first octave, in cycles per model unit.
    pub frequency: f64,
    pub persistence: f64,
    pub lacunarity: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { octaves: 64, amplitude: 0.001, frequency: 8.0, persistence: 0.5, lacunarity: 2.0, seed: 0 }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), PerturbError> {
        if !(self.amplitude >= 0.0) {
            return Err(PerturbError::InvalidSpec("amplitude must be non-negative"));
        }
        if self.octaves == 0 {
            return Err(PerturbError::InvalidSpec("octaves must be at least 1"));
        }
        Ok(())
    }
}

/// Gradient-lattice noise with a seeded permutation table.
#[derive(Debug, Clone)]
pub struct Perlin {
    perm: [u8; 512],
    spec: NoiseSpec,
}

fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

fn lerp(t: f64, a: f64, b: f64) -> f64 {
    a + t * (b - a)
}

fn grad(hash: u8, x: f64, y: f64, z: f64) -> f64 {
    let h = hash & 15;
    let u = if h < 8 { x } else { y };
    let v = if h < 4 {
        y
    } else if h == 12 || h == 14 {
        x
    } else {
        z
    };
    (if h & 1 == 0 { u } else { -u }) + (if h & 2 == 0 { v } else { -v })
}

fn lattice(x: f64) -> (usize, f64) {
    let f = libm::floor(x);
    ((f as i64).rem_euclid(256) as usize, x - f)
}

impl Perlin {
    pub fn new(spec: &NoiseSpec) -> Self {
        let mut table: [u8; 256] = core::array::from_fn(|i| i as u8);
        table.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
        let perm = core::array::from_fn(|i| table[i & 255]);
        Self { perm, spec: spec.clone() }
    }

    /// Single-octave noise; zero on the integer lattice.
    pub fn noise(&self, q: Point3) -> f64 {
        let p = &self.perm;
        let (xi, x) = lattice(q[0]);
        let (yi, y) = lattice(q[1]);
        let (zi, z) = lattice(q[2]);
        let (u, v, w) = (fade(x), fade(y), fade(z));
        let a = p[xi] as usize + yi;
        let aa = p[a] as usize + zi;
        let ab = p[a + 1] as usize + zi;
        let b = p[xi + 1] as usize + yi;
        let ba = p[b] as usize + zi;
        let bb = p[b + 1] as usize + zi;
        lerp(
            w,
            lerp(
                v,
                lerp(u, grad(p[aa], x, y, z), grad(p[ba], x - 1.0, y, z)),
                lerp(u, grad(p[ab], x, y - 1.0, z), grad(p[bb], x - 1.0, y - 1.0, z)),
            ),
            lerp(
                v,
                lerp(u, grad(p[aa + 1], x, y, z - 1.0), grad(p[ba + 1], x - 1.0, y, z - 1.0)),
                lerp(u, grad(p[ab + 1], x, y - 1.0, z - 1.0), grad(p[bb + 1], x - 1.0, y - 1.0, z - 1.0)),
            ),
        )
    }

    /// Octave sum normalized by the total weight and clamped to `[-1, 1]`.
    pub fn sample(&self, q: Point3) -> f64 {
        let s = &self.spec;
        let (mut sum, mut weight, mut amp, mut freq) = (0.0, 0.0, 1.0, s.frequency);
        for _ in 0..s.octaves {
            sum += amp * self.noise([q[0] * freq, q[1] * freq, q[2] * freq]);
            weight += amp;
            amp *= s.persistence;
            freq *= s.lacunarity;
        }
        if weight > 0.0 { (sum / weight).clamp(-1.0, 1.0) } else { 0.0 }
    }
}

pub fn perlin3(q: Point3, spec: &NoiseSpec) -> f64 {
    Perlin::new(spec).sample(q)
}

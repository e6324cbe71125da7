//! Deterministic sample grids, direction sets and seeded random points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finsler::finsler_eval;
use crate::geometry::{ChartDomain, MetricSpec};
use crate::phi::PhiFamily;

pub const DEFAULT_PER_AXIS: usize = 5;
pub const DEFAULT_DIRECTIONS: usize = 16;
/// Rotation of the planar direction fan away from the axes.
pub const DIRECTION_OFFSET: f64 = 0.1;

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

/// Tensor grid over `[lo, hi]` per axis, first axis slowest.
pub fn box_grid(lo: &[f64], hi: &[f64], per_axis: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = lo.iter().zip(hi).map(|(&l, &h)| linspace(l, h, per_axis)).collect();
    cartesian(&axes)
}

/// Tensor grid over the square inscribed in the disc.
pub fn disc_grid(center: &[f64], radius: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let half = radius / (center.len() as f64).sqrt();
    let lo: Vec<f64> = center.iter().map(|c| c - half).collect();
    let hi: Vec<f64> = center.iter().map(|c| c + half).collect();
    box_grid(&lo, &hi, per_axis)
}

/// Grid over the chart domain shrunk by the stencil margin.
pub fn domain_grid(domain: &ChartDomain, per_axis: usize) -> Result<Vec<Vec<f64>>> {
    let margin = domain.margin();
    let grid = match domain {
        ChartDomain::Box { lo, hi } => {
            let lo: Vec<f64> = lo.iter().map(|v| v + margin).collect();
            let hi: Vec<f64> = hi.iter().map(|v| v - margin).collect();
            if lo.iter().zip(&hi).any(|(l, h)| l > h) {
                return Err(Error::EmptyGrid);
            }
            box_grid(&lo, &hi, per_axis)
        }
        ChartDomain::Disc { center, radius } => {
            if *radius <= margin {
                return Err(Error::EmptyGrid);
            }
            disc_grid(center, radius - margin, per_axis)
        }
    };
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(grid)
}

/// Unit directions: an offset fan in the plane, a Fibonacci lattice in 3D.
pub fn directions(n: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::EmptyGrid);
    }
    match n {
        2 => Ok((0..count)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64 + DIRECTION_OFFSET;
                vec![t.cos(), t.sin()]
            })
            .collect()),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
            Ok((0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * k as f64 + DIRECTION_OFFSET;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect())
        }
        _ => Err(Error::Dimension { expected: 3, got: n }),
    }
}

/// Whether `y` stays clear of the singular band of an almost regular φ.
pub fn admissible_direction(m: &MetricSpec, f: &PhiFamily, x: &[f64], y: &[f64]) -> Result<bool> {
    if f.singular_bound().is_none() {
        return Ok(true);
    }
    let (alpha, beta) = m.alpha_beta(x, y)?;
    let s = beta / alpha;
    let b = m.b_norm(x)?;
    Ok(f.admissible(s) && s.abs() <= b * (1.0 - m.delta))
}

/// Rescales `y` to `F(x, y) = 1`.
pub fn normalize(m: &MetricSpec, f: &PhiFamily, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let fv = finsler_eval(m, f, x, y)?;
    Ok(y.iter().map(|v| v / fv).collect())
}

/// A chart point with an F-unit direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub point: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Point-major, direction-minor samples with the number of masked directions.
pub fn samples(m: &MetricSpec, f: &PhiFamily, grid: &[Vec<f64>], dirs: &[Vec<f64>]) -> Result<(Vec<Sample>, usize)> {
    let mut out = Vec::with_capacity(grid.len() * dirs.len());
    let mut masked = 0;
    for (point, x) in grid.iter().enumerate() {
        for d in dirs {
            if !admissible_direction(m, f, x, d)? {
                masked += 1;
                continue;
            }
            out.push(Sample {
                point,
                x: x.clone(),
                y: normalize(m, f, x, d)?,
            });
        }
    }
    Ok((out, masked))
}

/// Uniform random points in the shrunk chart domain.
pub fn random_points(domain: &ChartDomain, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margin = domain.margin();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p: Vec<f64> = match domain {
            ChartDomain::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| rng.gen_range((l + margin)..(h - margin)))
                .collect(),
            ChartDomain::Disc { center, radius } => {
                let r = radius - margin;
                let p: Vec<f64> = center.iter().map(|c| c + rng.gen_range(-r..r)).collect();
                let d2: f64 = p.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                if d2 >= r * r {
                    continue;
                }
                p
            }
        };
        out.push(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_grid_shape_and_order() {
        let g = box_grid(&[0.0, 10.0], &[1.0, 11.0], 3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![0.0, 10.0]);
        assert_eq!(g[1], vec![0.0, 10.5]);
        assert_eq!(g[8], vec![1.0, 11.0]);
    }

    #[test]
    fn domain_grid_respects_margin() {
        let d = ChartDomain::Box {
            lo: vec![-1.0; 2],
            hi: vec![1.0; 2],
        };
        let g = domain_grid(&d, 5).unwrap();
        assert_eq!(g.len(), 25);
        assert!(g.iter().flatten().all(|v| v.abs() <= 1.0 - d.margin() + 1e-15));
        let disc = ChartDomain::Disc {
            center: vec![0.0, 0.0],
            radius: 0.9,
        };
        let g = domain_grid(&disc, 5).unwrap();
        assert_eq!(g.len(), 25);
        assert!(g.iter().all(|p| disc.contains(p)));
    }

    #[test]
    fn directions_are_unit_and_offset() {
        let d = directions(2, 16).unwrap();
        assert_eq!(d.len(), 16);
        assert!((d[0][0] - 0.1_f64.cos()).abs() < 1e-15);
        let d3 = directions(3, 6).unwrap();
        for v in &d3 {
            let norm: f64 = v.iter().map(|c| c * c).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        assert!(directions(4, 3).is_err());
    }

    #[test]
    fn random_points_are_reproducible() {
        let d = ChartDomain::Disc {
            center: vec![0.0, 0.0],
            radius: 0.5,
        };
        let a = random_points(&d, 10, 42);
        assert_eq!(a, random_points(&d, 10, 42));
        assert!(a.iter().all(|p| d.contains(p)));
    }
}

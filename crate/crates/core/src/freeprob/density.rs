use std::f64::consts::PI;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

use super::mp::{mp_atom, mp_density, mp_edges};

/// A point mass of a spectral law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// A sampled eigenvalue law: a continuous part on a quadrature grid plus any
/// point masses.
///
/// Integrals against the continuous part are `Σ weights[i]·values[i]·g(grid[i])`.
/// Uniform grids use trapezoid weights; densities with square-root edges are
/// sampled on cosine-clustered midpoint grids whose weights absorb the
/// Jacobian of `x = c + r cos θ`, which makes the integrals spectrally
/// accurate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub support: (f64, f64),
    pub atoms: Vec<Atom>,
}

/// JSON header line of the CSV export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityHeader {
    pub support: (f64, f64),
    pub atom_at_zero: f64,
    pub atoms: Vec<Atom>,
    pub normalization_defect: f64,
    pub points: usize,
}

/// Trapezoid weights for an ascending grid.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = 0.5 * (grid[i] - grid[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}

/// Midpoint nodes in `θ ∈ (0, π)` mapped through `x = c − r cos θ` onto
/// `(lo, hi)`, ascending, with weights `(π/n)·r·sin θ`.
pub fn cosine_nodes(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo);
    let h = PI / n as f64;
    (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) * h;
            (c - r * t.cos(), h * r * t.sin())
        })
        .unzip()
}

/// Cosine nodes on `(0, 1)` pushed through `x = hi·u²`, for a support
/// `(0, hi)` whose density blows up at zero faster than `x^(-1/2)`.
pub fn graded_nodes(hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (u, wu) = cosine_nodes(0.0, 1.0, n);
    u.iter()
        .zip(&wu)
        .map(|(&u, &w)| (hi * u * u, w * 2.0 * hi * u))
        .unzip()
}

impl SpectralDensity {
    /// A law with no continuous part.
    pub fn point_mass(location: f64) -> Self {
        SpectralDensity {
            grid: Vec::new(),
            values: Vec::new(),
            weights: Vec::new(),
            support: (location, location),
            atoms: vec![Atom {
                location,
                mass: 1.0,
            }],
        }
    }

    /// Samples on an arbitrary ascending grid, integrated by the trapezoid
    /// rule. Negative samples are clamped to zero.
    pub fn from_trapezoid(grid: Vec<f64>, values: Vec<f64>, atoms: Vec<Atom>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(domain("grid and values differ in length"));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(domain("density grid must be strictly ascending"));
        }
        let weights = trapezoid_weights(&grid);
        let support = match (grid.first(), grid.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (0.0, 0.0),
        };
        let values = values.into_iter().map(|v| v.max(0.0)).collect();
        Ok(SpectralDensity {
            grid,
            values,
            weights,
            support,
            atoms,
        })
    }

    /// Marčenko–Pastur law of mean `ratio` on `points` cosine nodes.
    pub fn marchenko_pastur(ratio: f64, points: usize) -> Result<Self> {
        let (a, b) = mp_edges(ratio);
        let (grid, weights) = cosine_nodes(a, b, points);
        let values = grid
            .iter()
            .map(|&x| mp_density(x, ratio))
            .collect::<Result<Vec<_>>>()?;
        let atom = mp_atom(ratio);
        let atoms = if atom > 0.0 {
            vec![Atom {
                location: 0.0,
                mass: atom,
            }]
        } else {
            Vec::new()
        };
        Ok(SpectralDensity {
            grid,
            values,
            weights,
            support: (a, b),
            atoms,
        })
    }

    /// Mass of the continuous part.
    pub fn continuous_mass(&self) -> f64 {
        self.weights.iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn atom_at_zero(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.location == 0.0)
            .map(|a| a.mass)
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.continuous_mass() + self.atom_mass()
    }

    /// `|total mass − 1|`.
    pub fn normalization_defect(&self) -> f64 {
        (self.total_mass() - 1.0).abs()
    }

    /// `∫ g dF` over the continuous part and the atoms, as sampled.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        let cont: f64 = self
            .grid
            .iter()
            .zip(&self.values)
            .zip(&self.weights)
            .map(|((&x, &v), &w)| w * v * g(x))
            .sum();
        cont + self.atoms.iter().map(|a| a.mass * g(a.location)).sum::<f64>()
    }

    /// Like [`expect`](Self::expect) but with the continuous part rescaled so
    /// that the total mass is exactly one.
    pub fn expect_normalized(&self, g: impl Fn(f64) -> f64) -> f64 {
        let cont_mass = self.continuous_mass();
        let target = (1.0 - self.atom_mass()).max(0.0);
        let scale = if cont_mass > 0.0 { target / cont_mass } else { 0.0 };
        let cont: f64 = self
            .grid
            .iter()
            .zip(&self.values)
            .zip(&self.weights)
            .map(|((&x, &v), &w)| w * v * g(x))
            .sum();
        scale * cont + self.atoms.iter().map(|a| a.mass * g(a.location)).sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    /// Cumulative distribution at the grid nodes: mass strictly left of each
    /// node plus half its own cell, continuous part only.
    fn node_cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| {
                let m = v * w;
                let at = acc + 0.5 * m;
                acc += m;
                at
            })
            .collect()
    }

    /// Distribution function, interpolated linearly between grid nodes and
    /// including atoms at or left of `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_with(&self.node_cdf(), x)
    }

    fn cdf_with(&self, node_cdf: &[f64], x: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| a.location <= x)
            .map(|a| a.mass)
            .sum();
        let n = self.grid.len();
        if n == 0 {
            return atoms;
        }
        let cont_total = self.continuous_mass();
        let cont = if x <= self.grid[0] {
            // ramp from the left support edge up to the first node
            let lo = self.support.0.min(self.grid[0]);
            if x <= lo || self.grid[0] <= lo {
                0.0
            } else {
                node_cdf[0] * (x - lo) / (self.grid[0] - lo)
            }
        } else if x >= self.grid[n - 1] {
            let hi = self.support.1.max(self.grid[n - 1]);
            if x >= hi || hi <= self.grid[n - 1] {
                cont_total
            } else {
                let t = (x - self.grid[n - 1]) / (hi - self.grid[n - 1]);
                node_cdf[n - 1] + t * (cont_total - node_cdf[n - 1])
            }
        } else {
            let j = self.grid.partition_point(|&g| g <= x);
            let (x0, x1) = (self.grid[j - 1], self.grid[j]);
            let t = (x - x0) / (x1 - x0);
            node_cdf[j - 1] + t * (node_cdf[j] - node_cdf[j - 1])
        };
        cont + atoms
    }

    /// Kolmogorov–Smirnov distance to the empirical law of `samples`.
    pub fn ks_distance_to_samples(&self, samples: &[f64]) -> f64 {
        let mut sorted: Vec<f64> = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let node_cdf = self.node_cdf();
        let norm = self.total_mass();
        let mut worst: f64 = 0.0;
        let mut i = 0;
        while i < sorted.len() {
            let x = sorted[i];
            let mut j = i;
            while j < sorted.len() && sorted[j] == x {
                j += 1;
            }
            let model = self.cdf_with(&node_cdf, x) / norm;
            let below = i as f64 / n;
            let at = j as f64 / n;
            worst = worst.max((model - below).abs()).max((model - at).abs());
            i = j;
        }
        worst
    }

    /// Kolmogorov–Smirnov distance between two sampled laws, evaluated on the
    /// union of both grids, support edges and atoms.
    pub fn ks_distance(&self, other: &SpectralDensity) -> f64 {
        let mut pts: Vec<f64> = self.grid.iter().chain(&other.grid).copied().collect();
        for d in [self, other] {
            pts.push(d.support.0);
            pts.push(d.support.1);
            pts.extend(d.atoms.iter().map(|a| a.location));
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let (ca, cb) = (self.node_cdf(), other.node_cdf());
        let (na, nb) = (self.total_mass(), other.total_mass());
        pts.iter()
            .map(|&x| (self.cdf_with(&ca, x) / na - other.cdf_with(&cb, x) / nb).abs())
            .fold(0.0, f64::max)
    }

    pub fn header(&self) -> DensityHeader {
        DensityHeader {
            support: self.support,
            atom_at_zero: self.atom_at_zero(),
            atoms: self.atoms.clone(),
            normalization_defect: self.normalization_defect(),
            points: self.grid.len(),
        }
    }

    /// One JSON header line, then `x,density` rows.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer(&mut w, &self.header())?;
        writeln!(w)?;
        writeln!(w, "x,density")?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{x:e},{v:e}")?;
        }
        Ok(())
    }

    /// Inverse of [`write_csv`](Self::write_csv). Quadrature weights are not
    /// part of the format; the result integrates by the trapezoid rule.
    pub fn read_csv(r: impl BufRead) -> Result<(DensityHeader, SpectralDensity)> {
        let mut lines = r.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::Numerical("empty density file".into()))??;
        let header: DensityHeader = serde_json::from_str(&header_line)?;
        match lines.next() {
            Some(Ok(l)) if l.trim() == "x,density" => {}
            _ => return Err(domain("missing x,density column header")),
        }
        let (mut grid, mut values) = (Vec::new(), Vec::new());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (x, v) = line
                .split_once(',')
                .ok_or_else(|| domain(format!("malformed row {line:?}")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| domain(format!("bad number {s:?}: {e}")))
            };
            grid.push(parse(x)?);
            values.push(parse(v)?);
        }
        let mut d = SpectralDensity::from_trapezoid(grid, values, header.atoms.clone())?;
        d.support = header.support;
        Ok((header, d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_nodes_integrate_hard_edge() {
        // ∫₀¹ x^(-2/3) dx = 3
        let (x, w) = graded_nodes(1.0, 4096);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powf(-2.0 / 3.0)).sum();
        assert!((v - 3.0).abs() < 1e-3, "{v}");
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn point_mass_integrates_exactly() {
        let d = SpectralDensity::point_mass(2.5);
        assert_eq!(d.total_mass(), 1.0);
        assert_eq!(d.expect(|x| x * x), 6.25);
        assert_eq!(d.cdf(2.4), 0.0);
        assert_eq!(d.cdf(2.5), 1.0);
    }

    #[test]
    fn trapezoid_weights_sum_to_span() {
        let g = vec![0.0, 0.5, 2.0, 3.0];
        let w = trapezoid_weights(&g);
        assert_eq!(w.iter().sum::<f64>(), 3.0);
        assert!(SpectralDensity::from_trapezoid(vec![1.0, 1.0], vec![0.0, 0.0], vec![]).is_err());
    }

    #[test]
    fn cosine_nodes_are_ascending_and_interior() {
        let (g, w) = cosine_nodes(1.0, 4.0, 64);
        assert!(g.windows(2).all(|p| p[0] < p[1]));
        assert!(g[0] > 1.0 && g[63] < 4.0);
        assert!((w.iter().sum::<f64>() - 3.0).abs() < 1e-3);
    }

    #[test]
    fn marchenko_pastur_masses() {
        for ratio in [0.2, 1.0, 5.0] {
            let d = SpectralDensity::marchenko_pastur(ratio, 2048).unwrap();
            assert!(d.normalization_defect() < 1e-9, "{ratio}: {}", d.normalization_defect());
            assert!((d.mean() - ratio).abs() < 1e-9);
            assert!(d.values.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn ks_identical_is_zero_and_shifted_is_not() {
        let a = SpectralDensity::marchenko_pastur(2.0, 512).unwrap();
        assert!(a.ks_distance(&a) < 1e-12);
        let mut b = a.clone();
        b.grid.iter_mut().for_each(|x| *x += 0.5);
        b.support = (b.support.0 + 0.5, b.support.1 + 0.5);
        assert!(a.ks_distance(&b) > 0.1);
    }

    #[test]
    fn csv_round_trip_keeps_header() {
        let d = SpectralDensity::marchenko_pastur(0.5, 64).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with('{') && first.contains("\"atom_at_zero\":0.5"));
        assert_eq!(text.lines().nth(1), Some("x,density"));
        let (h, back) = SpectralDensity::read_csv(buf.as_slice()).unwrap();
        assert_eq!(h.points, 64);
        assert_eq!(back.grid, d.grid);
        assert_eq!(back.values, d.values);
        assert_eq!(back.atom_at_zero(), 0.5);
    }
}

//! Equal-area binning of points on a sphere.
//!
//! The sphere is cut into `n_bands` latitude bands. Band `k` receives
//! `round(2 n_bands sin(colat_k))` longitude bins, `colat_k` being the
//! nominal band centre `(k + 1/2) pi / n_bands`, and the band edges are then
//! placed so that every bin has exactly the same area `4 pi r^2 / M`.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Geometry of one bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinInfo {
    pub band: usize,
    pub bin: usize,
    pub colat_center: f64,
    pub lon_center: f64,
    pub area: f64,
}

/// Counts of points per equal-area bin on the sphere of a given radius.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereHistogram {
    n_bands: usize,
    radius: f64,
    bins_per_band: Vec<usize>,
    offsets: Vec<usize>,
    /// `cos(colatitude)` of the band edges, from 1 down to -1.
    cos_edges: Vec<f64>,
    counts: Vec<u64>,
}

/// L1 and KL distances between two binned probability measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionDistance {
    pub l1: f64,
    pub kl: f64,
}

impl SphereHistogram {
    /// Empty histogram with `n_bands >= 4` bands on the sphere of `radius`.
    pub fn new(n_bands: usize, radius: f64) -> Result<Self> {
        if n_bands < 4 {
            return Err(Error::param("n_bands", "must be >= 4"));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::param("radius", "must be finite and > 0"));
        }
        let nb = n_bands as f64;
        let bins_per_band: Vec<usize> = (0..n_bands)
            .map(|k| {
                let colat = (k as f64 + 0.5) * PI / nb;
                ((2.0 * nb * colat.sin()).round() as usize).max(1)
            })
            .collect();
        let total: usize = bins_per_band.iter().sum();
        let mut offsets = Vec::with_capacity(n_bands);
        let mut cos_edges = Vec::with_capacity(n_bands + 1);
        let mut cum = 0usize;
        cos_edges.push(1.0);
        for &m in &bins_per_band {
            offsets.push(cum);
            cum += m;
            cos_edges.push(1.0 - 2.0 * cum as f64 / total as f64);
        }
        *cos_edges.last_mut().unwrap() = -1.0;
        Ok(Self {
            n_bands,
            radius,
            bins_per_band,
            offsets,
            cos_edges,
            counts: vec![0; total],
        })
    }

    /// Histogram of `points` (given as `[x, y, z]`).
    pub fn from_points<I>(n_bands: usize, radius: f64, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = [f64; 3]>,
    {
        let mut h = Self::new(n_bands, radius)?;
        for p in points {
            h.add(p);
        }
        Ok(h)
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bins_per_band(&self) -> &[usize] {
        &self.bins_per_band
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Area of every bin.
    pub fn bin_area(&self) -> f64 {
        4.0 * PI * self.radius * self.radius / self.n_bins() as f64
    }

    /// Index of the bin containing the direction of `p`.
    pub fn bin_index(&self, p: [f64; 3]) -> usize {
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let u = if r > 0.0 {
            (p[2] / r).clamp(-1.0, 1.0)
        } else {
            1.0
        };
        let band = self.cos_edges[1..]
            .partition_point(|&e| e > u)
            .min(self.n_bands - 1);
        let m = self.bins_per_band[band];
        let mut phi = p[1].atan2(p[0]);
        if phi < 0.0 {
            phi += TAU;
        }
        let j = ((phi / TAU * m as f64) as usize).min(m - 1);
        self.offsets[band] + j
    }

    pub fn add(&mut self, p: [f64; 3]) {
        let i = self.bin_index(p);
        self.counts[i] += 1;
    }

    /// Sums counts of a histogram with identical layout into `self`.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.n_bands != other.n_bands || self.radius != other.radius {
            return Err(Error::param("histogram", "layouts differ"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn bin_info(&self, index: usize) -> BinInfo {
        let band = self.offsets.partition_point(|&o| o <= index) - 1;
        let bin = index - self.offsets[band];
        let m = self.bins_per_band[band];
        let u_mid = 0.5 * (self.cos_edges[band] + self.cos_edges[band + 1]);
        BinInfo {
            band,
            bin,
            colat_center: u_mid.clamp(-1.0, 1.0).acos(),
            lon_center: (bin as f64 + 0.5) * TAU / m as f64,
            area: self.bin_area(),
        }
    }

    /// Empirical probability per bin (zeros when empty).
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.total();
        if n == 0 {
            return vec![0.0; self.n_bins()];
        }
        self.counts.iter().map(|&c| c as f64 / n as f64).collect()
    }

    /// Counts normalised by bin area and total count.
    pub fn density(&self) -> Vec<f64> {
        let a = self.bin_area();
        self.probabilities().into_iter().map(|p| p / a).collect()
    }

    /// Integral of `f(x, y, z)` over every bin by the composite midpoint rule
    /// on `sub x sub` cells in `(cos colatitude, longitude)`, in which the
    /// area element is constant.
    pub fn bin_integrals<F>(&self, sub: usize, mut f: F) -> Vec<f64>
    where
        F: FnMut(f64, f64, f64) -> f64,
    {
        let sub = sub.max(1);
        let r = self.radius;
        let mut out = Vec::with_capacity(self.n_bins());
        for band in 0..self.n_bands {
            let (u_hi, u_lo) = (self.cos_edges[band], self.cos_edges[band + 1]);
            let m = self.bins_per_band[band];
            let du = (u_hi - u_lo) / sub as f64;
            let dphi = TAU / (m * sub) as f64;
            let cell = r * r * du * dphi;
            for j in 0..m {
                let mut acc = 0.0;
                for a in 0..sub {
                    let u = u_lo + (a as f64 + 0.5) * du;
                    let s = (1.0 - u * u).max(0.0).sqrt();
                    for b in 0..sub {
                        let phi = (j * sub + b) as f64 * dphi + 0.5 * dphi;
                        acc += f(r * s * phi.cos(), r * s * phi.sin(), r * u);
                    }
                }
                out.push(acc * cell);
            }
        }
        out
    }

    /// Writes `band,bin,colat_center,lon_center,area,count,density`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("band,bin,colat_center,lon_center,area,count,density\n");
        let density = self.density();
        for (i, (&count, dens)) in self.counts.iter().zip(&density).enumerate() {
            let b = self.bin_info(i);
            writeln!(
                s,
                "{},{},{:.16e},{:.16e},{:.16e},{},{:.16e}",
                b.band, b.bin, b.colat_center, b.lon_center, b.area, count, dens
            )
            .unwrap();
        }
        crate::io::write_atomic(path, s.as_bytes())
    }
}

/// Distance between an empirical measure `p` (built from `n` samples) and a
/// reference `q`. L1 uses the raw values; KL(p || q) adds `1 / (10 n)` to
/// every bin of both and renormalises so that empty bins stay finite.
pub fn distance(p: &[f64], q: &[f64], n: u64) -> DistributionDistance {
    assert_eq!(p.len(), q.len(), "bin counts differ");
    let l1 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    let eps = 1.0 / (10.0 * n.max(1) as f64);
    let norm_p = p.iter().sum::<f64>() + eps * p.len() as f64;
    let norm_q = q.iter().sum::<f64>() + eps * q.len() as f64;
    let kl = p
        .iter()
        .zip(q)
        .map(|(a, b)| {
            let ps = (a + eps) / norm_p;
            let qs = (b + eps) / norm_q;
            ps * (ps / qs).ln()
        })
        .sum::<f64>()
        .max(0.0);
    DistributionDistance { l1, kl }
}

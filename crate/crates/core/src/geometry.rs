//! Cell layout, user placement and path-loss laws.

use std::f64::consts::PI;

use rand::Rng;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rng::{normal, substream, Family};

pub type Point = [f64; 2];

/// Positions of base stations and users.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub bs: Vec<Point>,
    /// `dl_users[c][k]`
    pub dl_users: Vec<Vec<Point>>,
    /// `ul_users[c][k]`
    pub ul_users: Vec<Vec<Point>>,
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Geometry {
    pub fn n_cells(&self) -> usize {
        self.bs.len()
    }

    /// BS `b` to DL user `k` of cell `c`.
    pub fn bs_dl(&self, b: usize, c: usize, k: usize) -> f64 {
        dist(self.bs[b], self.dl_users[c][k])
    }

    /// BS `b` to UL user `k` of cell `c`.
    pub fn bs_ul(&self, b: usize, c: usize, k: usize) -> f64 {
        dist(self.bs[b], self.ul_users[c][k])
    }

    pub fn bs_bs(&self, i: usize, j: usize) -> f64 {
        dist(self.bs[i], self.bs[j])
    }

    /// DL user `(i, k_dl)` to UL user `(j, k_ul)`.
    pub fn ue_ue(&self, i: usize, k_dl: usize, j: usize, k_ul: usize) -> f64 {
        dist(self.dl_users[i][k_dl], self.ul_users[j][k_ul])
    }
}

/// Base stations on a regular polygon whose adjacent sites are `2r` apart.
pub fn bs_layout(n_cells: usize, radius: f64) -> Vec<Point> {
    if n_cells == 1 {
        return vec![[0.0, 0.0]];
    }
    let circum = radius / (PI / n_cells as f64).sin();
    (0..n_cells)
        .map(|b| {
            let phi = 2.0 * PI * b as f64 / n_cells as f64;
            [circum * phi.cos(), circum * phi.sin()]
        })
        .collect()
}

/// Drops `k_dl + k_ul` users per cell uniformly in angle and in radius over
/// `[(1 - boundary_fraction) r, r]` around their serving BS.
pub fn place_users(config: &SystemConfig, seed: u64) -> Geometry {
    let r = config.cell_radius_m;
    let inner = (1.0 - config.boundary_fraction) * r;
    let bs = bs_layout(config.n_cells, r);
    let mut rng = substream(seed, 0, Family::Geometry);
    let mut drop = |centre: Point| -> Point {
        let theta = rng.random_range(0.0..2.0 * PI);
        let rho = if inner < r { rng.random_range(inner..=r) } else { r };
        [centre[0] + rho * theta.cos(), centre[1] + rho * theta.sin()]
    };
    let mut dl_users = Vec::with_capacity(config.n_cells);
    let mut ul_users = Vec::with_capacity(config.n_cells);
    for &centre in &bs {
        dl_users.push((0..config.k_dl).map(|_| drop(centre)).collect());
        ul_users.push((0..config.k_ul).map(|_| drop(centre)).collect());
    }
    Geometry { bs, dl_users, ul_users }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    UserLink,
    BsBs,
    SelfInterference,
}

/// Power gain of a link.
///
/// User links and BS-BS links follow `z / d^v`; the self-interference path
/// is free space, `(lambda / (4 pi d))^2`, and ignores `shadow`.
pub fn pathloss_gain(distance: f64, shadow: f64, kind: LinkKind, config: &SystemConfig) -> Result<f64> {
    if !(distance.is_finite() && distance > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {distance}")));
    }
    match kind {
        LinkKind::UserLink | LinkKind::BsBs => {
            if !(shadow.is_finite() && shadow > 0.0) {
                return Err(Error::Domain(format!("shadowing factor must be positive, got {shadow}")));
            }
            Ok(shadow * distance.powf(-config.pathloss_exp))
        }
        LinkKind::SelfInterference => {
            let a = config.wavelength_m() / (4.0 * PI * distance);
            Ok(a * a)
        }
    }
}

/// Log-normal shadowing factor with `shadow_db` standard deviation.
pub fn shadow_factor<R: Rng + ?Sized>(rng: &mut R, shadow_db: f64) -> f64 {
    10f64.powf(normal(rng, shadow_db) / 10.0)
}

/// Distance between Rx antenna `l` and Tx antenna `m` of the same BS, with
/// `offset = l - m`.
///
/// Both arrays are uniform linear arrays with the configured spacing,
/// parallel and separated by `si_array_gap_m`.
pub fn si_distance(config: &SystemConfig, offset: isize) -> f64 {
    let dx = offset as f64 * config.bs_antenna_spacing_m;
    dx.hypot(config.si_array_gap_m)
}

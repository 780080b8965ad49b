//! Large-scale profiles and Rayleigh small-scale realizations.
//!
//! Index conventions used throughout the crate:
//!
//! * `d_dl[[b, c, k]]`: BS `b` to DL user `k` of cell `c`; `d_ul` likewise.
//! * `d_bs[[i, j]]`: Tx array of BS `j` to Rx array of BS `i` (`i != j`).
//! * `d_si.get(l, m)`: Tx antenna `m` to Rx antenna `l`, identical at every BS.
//! * `d_ue[[i, j, q, k]]`: UL user `(j, q)` to DL user `(i, k)`.

use std::io::{Read, Write};

use ndarray::{Array2, Array3, Array4};
use num_complex::Complex64;
use rand::Rng;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geometry::{pathloss_gain, shadow_factor, si_distance, Geometry, LinkKind};
use crate::rng::{complex_normal, substream, Family};

/// Power gains of every link in the network.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleProfile {
    pub d_dl: Array3<f64>,
    pub d_ul: Array3<f64>,
    /// Diagonal entries are unused and zero.
    pub d_bs: Array2<f64>,
    pub d_si: SiGains,
    pub d_ue: Array4<f64>,
}

/// Self-interference gains between the Tx and Rx arrays of one BS.
///
/// The arrays are parallel uniform linear arrays, so the gain depends only
/// on the index offset `l - m`; storage is linear in the array size.
#[derive(Debug, Clone, PartialEq)]
pub struct SiGains {
    m_rx: usize,
    m_tx: usize,
    /// Gain for offset `l - m`, stored at `l + m_tx - 1 - m`.
    by_offset: Vec<f64>,
}

impl SiGains {
    pub fn from_fn(m_rx: usize, m_tx: usize, mut gain: impl FnMut(isize) -> Result<f64>) -> Result<Self> {
        let by_offset = (0..m_rx + m_tx - 1)
            .map(|i| gain(i as isize - (m_tx as isize - 1)))
            .collect::<Result<_>>()?;
        Ok(SiGains { m_rx, m_tx, by_offset })
    }

    /// Same gain on every antenna pair.
    pub fn uniform(m_rx: usize, m_tx: usize, gain: f64) -> Self {
        SiGains { m_rx, m_tx, by_offset: vec![gain; m_rx + m_tx - 1] }
    }

    pub fn m_rx(&self) -> usize {
        self.m_rx
    }

    pub fn m_tx(&self) -> usize {
        self.m_tx
    }

    pub fn get(&self, l: usize, m: usize) -> f64 {
        self.by_offset[l + self.m_tx - 1 - m]
    }

    /// Gains of Rx antenna `l` from every Tx antenna, in Tx order.
    pub fn row(&self, l: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.m_tx).map(move |m| self.get(l, m))
    }

    pub fn row_sum(&self, l: usize) -> f64 {
        self.row(l).sum()
    }

    pub fn total(&self) -> f64 {
        (0..self.m_rx).map(|l| self.row_sum(l)).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SiGains { by_offset: self.by_offset.iter().map(|g| g * factor).collect(), ..self.clone() }
    }

    pub fn dense(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.m_rx, self.m_tx), |(l, m)| self.get(l, m))
    }
}

impl LargeScaleProfile {
    pub fn n_cells(&self) -> usize {
        self.d_bs.nrows()
    }
    pub fn k_dl(&self) -> usize {
        self.d_dl.shape()[2]
    }
    pub fn k_ul(&self) -> usize {
        self.d_ul.shape()[2]
    }
    pub fn m_rx(&self) -> usize {
        self.d_si.m_rx()
    }
    pub fn m_tx(&self) -> usize {
        self.d_si.m_tx()
    }

    /// Checks shapes against a configuration.
    pub fn check_shape(&self, config: &SystemConfig) -> Result<()> {
        let n = config.n_cells;
        let ok = self.d_dl.shape() == [n, n, config.k_dl]
            && self.d_ul.shape() == [n, n, config.k_ul]
            && self.d_bs.shape() == [n, n]
            && self.d_si.m_rx() == config.m_rx
            && self.d_si.m_tx() == config.m_tx
            && self.d_ue.shape() == [n, n, config.k_ul, config.k_dl];
        if ok {
            Ok(())
        } else {
            Err(Error::Contract("profile dimensions do not match the configuration".into()))
        }
    }
}

/// Self-interference gains of one BS; identical at every site.
pub fn si_gains(config: &SystemConfig) -> Result<SiGains> {
    SiGains::from_fn(config.m_rx, config.m_tx, |offset| {
        pathloss_gain(si_distance(config, offset), 1.0, LinkKind::SelfInterference, config)
    })
}

/// Computes every link gain, drawing independent log-normal shadowing for
/// user links.
pub fn build_profile(config: &SystemConfig, geometry: &Geometry, seed: u64) -> Result<LargeScaleProfile> {
    let n = config.n_cells;
    let sd = config.shadow_db;
    let mut rng = substream(seed, 0, Family::Shadowing);
    let mut user_gain = |d: f64| -> Result<f64> {
        let z = shadow_factor(&mut rng, sd);
        pathloss_gain(d, z, LinkKind::UserLink, config)
    };
    let mut d_dl = Array3::zeros((n, n, config.k_dl));
    for ((b, c, k), g) in d_dl.indexed_iter_mut() {
        *g = user_gain(geometry.bs_dl(b, c, k))?;
    }
    let mut d_ul = Array3::zeros((n, n, config.k_ul));
    for ((b, c, k), g) in d_ul.indexed_iter_mut() {
        *g = user_gain(geometry.bs_ul(b, c, k))?;
    }
    let mut d_ue = Array4::zeros((n, n, config.k_ul, config.k_dl));
    for ((i, j, q, k), g) in d_ue.indexed_iter_mut() {
        *g = user_gain(geometry.ue_ue(i, k, j, q))?;
    }
    let mut d_bs = Array2::zeros((n, n));
    for ((i, j), g) in d_bs.indexed_iter_mut() {
        if i != j {
            *g = pathloss_gain(geometry.bs_bs(i, j), 1.0, LinkKind::BsBs, config)?;
        }
    }
    Ok(LargeScaleProfile { d_dl, d_ul, d_bs, d_si: si_gains(config)?, d_ue })
}

/// Unit-variance fading of every channel family.
///
/// Matrices are stored per ordered cell pair at index `a * n_cells + b`:
/// `h_dl[b*N+c]` is `K_DL x M_t`, `h_ul[b*N+c]` is `M_r x K_UL`,
/// `h_bs[i*N+j]` is `M_r x M_t` (`i == j` is the SI channel) and
/// `h_ue[i*N+j]` is `K_DL x K_UL`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub n_cells: usize,
    pub h_dl: Vec<Array2<Complex64>>,
    pub h_ul: Vec<Array2<Complex64>>,
    pub h_bs: Vec<Array2<Complex64>>,
    pub h_ue: Vec<Array2<Complex64>>,
}

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Array2<Complex64> {
    Array2::from_shape_fn((rows, cols), |_| complex_normal(rng))
}

/// Draws i.i.d. CN(0,1) fading for all channel families.
pub fn sample_channels(profile: &LargeScaleProfile, seed: u64) -> ChannelRealization {
    let n = profile.n_cells();
    let (m_t, m_r, k_d, k_u) = (profile.m_tx(), profile.m_rx(), profile.k_dl(), profile.k_ul());
    let draw = |family: Family, rows: usize, cols: usize| -> Vec<Array2<Complex64>> {
        let mut rng = substream(seed, 0, family);
        (0..n * n).map(|_| gaussian_matrix(&mut rng, rows, cols)).collect()
    };
    ChannelRealization {
        n_cells: n,
        h_dl: draw(Family::FadingDl, k_d, m_t),
        h_ul: draw(Family::FadingUl, m_r, k_u),
        h_bs: draw(Family::FadingBs, m_r, m_t),
        h_ue: draw(Family::FadingUe, k_d, k_u),
    }
}

/// Physical channels `G = H (D)^(1/2)`, same layout as [`ChannelRealization`].
#[derive(Debug, Clone, PartialEq)]
pub struct Channels {
    pub n_cells: usize,
    pub g_dl: Vec<Array2<Complex64>>,
    pub g_ul: Vec<Array2<Complex64>>,
    pub g_bs: Vec<Array2<Complex64>>,
    pub g_ue: Vec<Array2<Complex64>>,
}

impl Channels {
    pub fn idx(&self, a: usize, b: usize) -> usize {
        a * self.n_cells + b
    }
    pub fn dl(&self, b: usize, c: usize) -> &Array2<Complex64> {
        &self.g_dl[self.idx(b, c)]
    }
    pub fn ul(&self, b: usize, c: usize) -> &Array2<Complex64> {
        &self.g_ul[self.idx(b, c)]
    }
    pub fn bs(&self, i: usize, j: usize) -> &Array2<Complex64> {
        &self.g_bs[self.idx(i, j)]
    }
    pub fn ue(&self, i: usize, j: usize) -> &Array2<Complex64> {
        &self.g_ue[self.idx(i, j)]
    }
}

impl ChannelRealization {
    /// Scales the fading by the square root of the link gains.
    pub fn compose(&self, profile: &LargeScaleProfile) -> Channels {
        let n = self.n_cells;
        let mut g_dl = self.h_dl.clone();
        let mut g_ul = self.h_ul.clone();
        let mut g_bs = self.h_bs.clone();
        let mut g_ue = self.h_ue.clone();
        let si_amp = profile.d_si.dense().mapv(f64::sqrt);
        for a in 0..n {
            for b in 0..n {
                let p = a * n + b;
                for (k, mut row) in g_dl[p].rows_mut().into_iter().enumerate() {
                    row *= Complex64::from(profile.d_dl[[a, b, k]].sqrt());
                }
                for (k, mut col) in g_ul[p].columns_mut().into_iter().enumerate() {
                    col *= Complex64::from(profile.d_ul[[a, b, k]].sqrt());
                }
                if a == b {
                    g_bs[p].zip_mut_with(&si_amp, |g, &d| *g *= d);
                } else {
                    g_bs[p] *= Complex64::from(profile.d_bs[[a, b]].sqrt());
                }
                for ((k, q), g) in g_ue[p].indexed_iter_mut() {
                    *g *= profile.d_ue[[a, b, q, k]].sqrt();
                }
            }
        }
        Channels { n_cells: n, g_dl, g_ul, g_bs, g_ue }
    }
}

const DUMP_MAGIC: &[u8; 4] = b"FDCH";
const DUMP_VERSION: u32 = 1;
const FAMILY_TAGS: [u8; 4] = *b"DUBE";

/// Writes a realization as little-endian complex64 (two `f32`) pairs.
///
/// Layout: magic `FDCH`, `u32` version, `u32` cell count, `u32` matrix
/// count, then per matrix a family tag byte (`D`, `U`, `B`, `E`), `u32`
/// pair index, `u32` rows, `u32` cols and the row-major entries.
pub fn write_dump<W: Write>(realization: &ChannelRealization, mut w: W) -> Result<()> {
    let families = [&realization.h_dl, &realization.h_ul, &realization.h_bs, &realization.h_ue];
    let count: usize = families.iter().map(|f| f.len()).sum();
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&DUMP_VERSION.to_le_bytes())?;
    w.write_all(&(realization.n_cells as u32).to_le_bytes())?;
    w.write_all(&(count as u32).to_le_bytes())?;
    for (tag, family) in FAMILY_TAGS.iter().zip(families) {
        for (p, m) in family.iter().enumerate() {
            w.write_all(&[*tag])?;
            for v in [p, m.nrows(), m.ncols()] {
                w.write_all(&(v as u32).to_le_bytes())?;
            }
            for z in m.iter() {
                w.write_all(&(z.re as f32).to_le_bytes())?;
                w.write_all(&(z.im as f32).to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Reads a dump produced by [`write_dump`] (entries rounded to `f32`).
pub fn read_dump<R: Read>(mut r: R) -> Result<ChannelRealization> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC || read_u32(&mut r)? != DUMP_VERSION {
        return Err(Error::Contract("not a channel dump".into()));
    }
    let n_cells = read_u32(&mut r)? as usize;
    let count = read_u32(&mut r)? as usize;
    let mut families: [Vec<Array2<Complex64>>; 4] = Default::default();
    for _ in 0..count {
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let f = FAMILY_TAGS
            .iter()
            .position(|t| *t == tag[0])
            .ok_or_else(|| Error::Contract("unknown family tag".into()))?;
        let _pair = read_u32(&mut r)?;
        let rows = read_u32(&mut r)? as usize;
        let cols = read_u32(&mut r)? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let re = f32::from_bits(read_u32(&mut r)?);
            let im = f32::from_bits(read_u32(&mut r)?);
            data.push(Complex64::new(re as f64, im as f64));
        }
        let m = Array2::from_shape_vec((rows, cols), data).expect("shape matches data length");
        families[f].push(m);
    }
    let [h_dl, h_ul, h_bs, h_ue] = families;
    Ok(ChannelRealization { n_cells, h_dl, h_ul, h_bs, h_ue })
}

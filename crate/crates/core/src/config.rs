//! System configuration: parsing, defaults and validation.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{validation, Result};

/// Speed of light used for the carrier wavelength, m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

const MANDATORY: [&str; 7] = ["n_cells", "m_tx", "m_rx", "k_dl", "k_ul", "p_ref_dbm", "cell_radius_m"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    NonCooperative,
    Cooperative,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::NonCooperative => "non-cooperative",
            Scenario::Cooperative => "cooperative",
        }
    }
}

/// How per-node transmit powers follow from the reference power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerScaling {
    /// `P_d = P_u = P_r / sqrt(M_t)`.
    SqrtM,
    /// `P_d = P_u = P_r`.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_cells: usize,
    pub m_tx: usize,
    pub m_rx: usize,
    pub k_dl: usize,
    pub k_ul: usize,
    pub p_ref_dbm: f64,
    pub noise_floor_dbm: f64,
    pub alpha_db: f64,
    pub beta_db: f64,
    pub c_dl_bpshz: f64,
    pub c_ul_bpshz: f64,
    pub tau_si: usize,
    pub tau_uu: usize,
    pub tau_ud: usize,
    pub total_symbols: usize,
    pub symbol_duration_s: Option<f64>,
    pub carrier_hz: f64,
    pub cell_radius_m: f64,
    pub pathloss_exp: f64,
    pub shadow_db: f64,
    pub boundary_fraction: f64,
    pub bs_antenna_spacing_m: f64,
    pub si_array_gap_m: f64,
    pub scenario: Scenario,
    pub power_scaling: PowerScaling,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_cells: usize,
    m_tx: usize,
    m_rx: usize,
    k_dl: usize,
    k_ul: usize,
    p_ref_dbm: f64,
    cell_radius_m: f64,
    noise_floor_dbm: Option<f64>,
    alpha_db: Option<f64>,
    beta_db: Option<f64>,
    c_dl_bpshz: Option<f64>,
    c_ul_bpshz: Option<f64>,
    tau_si: Option<usize>,
    tau_uu: Option<usize>,
    tau_ud: Option<usize>,
    total_symbols: Option<usize>,
    symbol_duration_s: Option<f64>,
    carrier_hz: Option<f64>,
    pathloss_exp: Option<f64>,
    shadow_db: Option<f64>,
    boundary_fraction: Option<f64>,
    bs_antenna_spacing_m: Option<f64>,
    si_array_gap_m: Option<f64>,
    scenario: Option<Scenario>,
    power_scaling: Option<PowerScaling>,
}

/// Linear powers and impairment levels derived from a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    /// BS transmit power, W.
    pub p_d: f64,
    /// User transmit power, W.
    pub p_u: f64,
    /// Noise power, W.
    pub n0: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Parses a JSON configuration document and fills defaults.
pub fn load_config(text: &str) -> Result<SystemConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| validation(format!("malformed config: {e}")))?;
    load_config_value(value)
}

/// Same as [`load_config`] for an already parsed document.
pub fn load_config_value(value: Value) -> Result<SystemConfig> {
    let obj = value
        .as_object()
        .ok_or_else(|| validation("config must be a key-value object"))?;
    for key in MANDATORY {
        if obj.get(key).is_none_or(Value::is_null) {
            return Err(validation(format!("{key} missing")));
        }
    }
    let raw: RawConfig = serde_json::from_value(value).map_err(|e| validation(format!("invalid config: {e}")))?;
    let carrier_hz = raw.carrier_hz.unwrap_or(2.4e9);
    let cfg = SystemConfig {
        n_cells: raw.n_cells,
        m_tx: raw.m_tx,
        m_rx: raw.m_rx,
        k_dl: raw.k_dl,
        k_ul: raw.k_ul,
        p_ref_dbm: raw.p_ref_dbm,
        noise_floor_dbm: raw.noise_floor_dbm.unwrap_or(-90.0),
        alpha_db: raw.alpha_db.unwrap_or(-100.0),
        beta_db: raw.beta_db.unwrap_or(-100.0),
        c_dl_bpshz: raw.c_dl_bpshz.unwrap_or(20.0),
        c_ul_bpshz: raw.c_ul_bpshz.unwrap_or(20.0),
        tau_si: raw.tau_si.unwrap_or(raw.m_tx),
        tau_uu: raw.tau_uu.unwrap_or(raw.k_ul),
        tau_ud: raw.tau_ud.unwrap_or(raw.k_dl),
        total_symbols: raw.total_symbols.unwrap_or(800),
        symbol_duration_s: raw.symbol_duration_s,
        carrier_hz,
        cell_radius_m: raw.cell_radius_m,
        pathloss_exp: raw.pathloss_exp.unwrap_or(3.8),
        shadow_db: raw.shadow_db.unwrap_or(8.0),
        boundary_fraction: raw.boundary_fraction.unwrap_or(0.05),
        bs_antenna_spacing_m: raw.bs_antenna_spacing_m.unwrap_or(SPEED_OF_LIGHT / carrier_hz / 2.0),
        si_array_gap_m: raw.si_array_gap_m.unwrap_or(0.5),
        scenario: raw.scenario.unwrap_or(Scenario::NonCooperative),
        power_scaling: raw.power_scaling.unwrap_or(PowerScaling::SqrtM),
    };
    cfg.validate()?;
    Ok(cfg)
}

impl SystemConfig {
    /// Checks every documented invariant.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n_cells", self.n_cells), ("m_tx", self.m_tx), ("m_rx", self.m_rx)] {
            if v < 1 {
                return Err(validation(format!("{name} must be at least 1")));
            }
        }
        if self.tau_si < self.m_tx {
            return Err(validation("tau_si >= m_tx violated"));
        }
        if self.tau_uu < self.k_ul {
            return Err(validation("tau_uu >= k_ul violated"));
        }
        if self.tau_ud < self.k_dl {
            return Err(validation("tau_ud >= k_dl violated"));
        }
        let overhead = self.tau_si + self.tau_uu + self.tau_ud;
        if self.total_symbols <= overhead {
            return Err(validation(format!(
                "total_symbols > pilot overhead violated ({} <= {overhead})",
                self.total_symbols
            )));
        }
        if !(self.boundary_fraction > 0.0 && self.boundary_fraction <= 1.0) {
            return Err(validation("boundary_fraction in (0,1] violated"));
        }
        let positive = [
            ("cell_radius_m", self.cell_radius_m),
            ("carrier_hz", self.carrier_hz),
            ("bs_antenna_spacing_m", self.bs_antenna_spacing_m),
            ("si_array_gap_m", self.si_array_gap_m),
            ("c_dl_bpshz", self.c_dl_bpshz),
            ("c_ul_bpshz", self.c_ul_bpshz),
            ("pathloss_exp", self.pathloss_exp),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(validation(format!("{name} > 0 violated")));
            }
        }
        if let Some(ts) = self.symbol_duration_s {
            if !(ts.is_finite() && ts > 0.0) {
                return Err(validation("symbol_duration_s > 0 violated"));
            }
        }
        if !(self.shadow_db.is_finite() && self.shadow_db >= 0.0) {
            return Err(validation("shadow_db >= 0 violated"));
        }
        for (name, v) in [
            ("p_ref_dbm", self.p_ref_dbm),
            ("noise_floor_dbm", self.noise_floor_dbm),
            ("alpha_db", self.alpha_db),
            ("beta_db", self.beta_db),
        ] {
            if v.is_nan() || v == f64::INFINITY {
                return Err(validation(format!("{name} must be a finite level")));
            }
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Longest pilot slot of the simultaneous scheme.
    pub fn tau_max(&self) -> usize {
        self.tau_si.max(self.tau_uu)
    }

    pub fn budget(&self) -> Budget {
        let p_r = dbm_to_watt(self.p_ref_dbm);
        let p = match self.power_scaling {
            PowerScaling::SqrtM => p_r / (self.m_tx as f64).sqrt(),
            PowerScaling::None => p_r,
        };
        Budget {
            p_d: p,
            p_u: p,
            n0: dbm_to_watt(self.noise_floor_dbm),
            alpha: db_to_linear(self.alpha_db),
            beta: db_to_linear(self.beta_db),
        }
    }

    /// Stable identifier of the configuration, used to match reports.
    pub fn fingerprint(&self) -> u64 {
        let text = serde_json::to_string(self).expect("config serializes");
        // FNV-1a
        text.bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
    }

    /// Serializes to a JSON object, the form accepted by sweep overrides.
    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

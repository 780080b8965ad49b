//! Parameter sweeps, figure recipes and CSV/JSON emission.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::{load_config_value, Scenario, SystemConfig};
use crate::duplex::{DuplexReports, OverheadModel, Threshold};
use crate::error::{validation, Error, Result};
use crate::estimation::{nmse, Scheme};
use crate::rate::{analytic_rate, profile_for, simulate_on, AnalyticInputs, Combo, Duplex, Link, McRequest, RateReport};
use crate::transceivers::FilterKind;

/// CSV column order.
pub const CSV_HEADER: [&str; 10] =
    ["axis_value", "scenario", "scheme", "filter", "link", "metric", "value", "mc_stderr", "seed", "trials"];

/// Placeholder for columns that do not apply to a metric.
const NA: &str = "-";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    M,
    K,
    T,
    #[serde(rename = "P_r")]
    Pr,
    #[serde(rename = "cell_radius")]
    CellRadius,
    C,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.into()))
            .map_err(|_| validation(format!("unknown axis {s:?} (expected M, K, T, P_r, cell_radius or C)")))
    }
}

impl Axis {
    fn integral(self) -> bool {
        matches!(self, Axis::M | Axis::K | Axis::T)
    }

    /// Writes an axis value into a raw config document.
    ///
    /// Pilot lengths tied to the changed dimension are dropped so they take
    /// their defaults again (`tau_si = M`, `tau_uu = tau_ud = K`).
    pub fn apply(self, doc: &mut Map<String, Value>, v: f64) {
        let int = || Value::from(v as u64);
        match self {
            Axis::M => {
                doc.insert("m_tx".into(), int());
                doc.insert("m_rx".into(), int());
                doc.remove("tau_si");
            }
            Axis::K => {
                doc.insert("k_dl".into(), int());
                doc.insert("k_ul".into(), int());
                doc.remove("tau_uu");
                doc.remove("tau_ud");
            }
            Axis::T => {
                doc.insert("total_symbols".into(), int());
            }
            Axis::Pr => {
                doc.insert("p_ref_dbm".into(), Value::from(v));
            }
            Axis::CellRadius => {
                doc.insert("cell_radius_m".into(), Value::from(v));
            }
            Axis::C => {
                doc.insert("c_dl_bpshz".into(), Value::from(v));
                doc.insert("c_ul_bpshz".into(), Value::from(v));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SumRateMc,
    SumRateAnalytic,
    Nmse,
    FdHdRatio,
    CoopNoncoopRatio,
    RegionVerdict,
    RequiredPower,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::SumRateMc => "sum_rate_mc",
            Metric::SumRateAnalytic => "sum_rate_analytic",
            Metric::Nmse => "nmse",
            Metric::FdHdRatio => "fd_hd_ratio",
            Metric::CoopNoncoopRatio => "coop_noncoop_ratio",
            Metric::RegionVerdict => "region_verdict",
            Metric::RequiredPower => "required_power",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.into())).map_err(|_| validation(format!("unknown metric {s:?}")))
    }
}

fn all_scenarios() -> Vec<Scenario> {
    vec![Scenario::NonCooperative, Scenario::Cooperative]
}
fn all_filters() -> Vec<FilterKind> {
    vec![FilterKind::MF, FilterKind::ZF]
}
fn all_links() -> Vec<Link> {
    vec![Link::DL, Link::UL]
}
fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::NonSimultaneous]
}
fn default_trials() -> usize {
    2000
}
fn default_target() -> f64 {
    0.1
}

/// What to evaluate at every configuration point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub outputs: Vec<Metric>,
    #[serde(default = "all_scenarios")]
    pub scenarios: Vec<Scenario>,
    #[serde(default = "all_filters")]
    pub filters: Vec<FilterKind>,
    #[serde(default = "all_links")]
    pub links: Vec<Link>,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Overhead-adjusted sum rate, bps/Hz, that `required_power` solves for.
    #[serde(default = "default_target")]
    pub target_rate: f64,
    /// Also emit one row per user for rate metrics.
    #[serde(default)]
    pub per_user: bool,
}

impl Evaluation {
    pub fn new(outputs: Vec<Metric>) -> Self {
        Evaluation {
            outputs,
            scenarios: all_scenarios(),
            filters: all_filters(),
            links: all_links(),
            schemes: default_schemes(),
            trials: default_trials(),
            seed: 0,
            target_rate: default_target(),
            per_user: false,
        }
    }

    fn wants(&self, m: Metric) -> bool {
        self.outputs.contains(&m)
    }
}

/// Named set of config overrides evaluated alongside the base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub label: String,
    pub overrides: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    /// Config overrides applied on top of the base config.
    #[serde(default)]
    pub fixed: Map<String, Value>,
    /// When non-empty, every point is evaluated once per variant and the
    /// variant label is appended to the metric name as `metric@label`.
    #[serde(default)]
    pub variants: Vec<Variant>,
    #[serde(flatten)]
    pub eval: Evaluation,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(validation("sweep values must be non-empty"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(validation("sweep values must be finite"));
        }
        let up = self.values.windows(2).all(|w| w[1] > w[0]);
        let down = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(validation("sweep values must be strictly monotone"));
        }
        if self.axis.integral() && self.values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
            return Err(validation(format!("{:?} values must be positive integers", self.axis)));
        }
        if self.eval.outputs.is_empty() {
            return Err(validation("sweep needs at least one output metric"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| validation(format!("malformed sweep: {e}")))?;
        if let Some(map) = doc.as_object() {
            if let Some(k) = map.keys().find(|k| !SWEEP_KEYS.contains(&k.as_str())) {
                return Err(validation(format!("unknown sweep field {k:?}")));
            }
        }
        let spec: SweepSpec = serde_json::from_value(doc).map_err(|e| validation(format!("invalid sweep: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }
}

const SWEEP_KEYS: [&str; 13] = [
    "axis", "values", "fixed", "variants", "outputs", "scenarios", "filters", "links", "schemes", "trials", "seed",
    "target_rate", "per_user",
];

fn obj(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn base(n: u64, m: u64, k: u64, p_r: f64, r: f64) -> Map<String, Value> {
    obj(&[
        ("n_cells", n.into()),
        ("m_tx", m.into()),
        ("m_rx", m.into()),
        ("k_dl", k.into()),
        ("k_ul", k.into()),
        ("p_ref_dbm", p_r.into()),
        ("cell_radius_m", r.into()),
    ])
}

/// Preconfigured sweeps for the figure setups, at desk scale (M <= 128).
pub fn recipe(name: &str) -> Result<SweepSpec> {
    let m_grid = vec![16.0, 32.0, 64.0, 128.0];
    let spec = match name {
        "fig3" => SweepSpec {
            axis: Axis::M,
            values: m_grid,
            fixed: base(3, 16, 5, 40.0, 2000.0),
            variants: vec![],
            eval: Evaluation::new(vec![Metric::SumRateMc, Metric::SumRateAnalytic]),
        },
        "fig4" => SweepSpec {
            axis: Axis::M,
            values: m_grid,
            fixed: base(3, 16, 5, 40.0, 2000.0),
            variants: vec![],
            eval: Evaluation { links: vec![Link::DL], ..Evaluation::new(vec![Metric::FdHdRatio, Metric::CoopNoncoopRatio]) },
        },
        "fig5" => SweepSpec {
            axis: Axis::C,
            values: (1..=40).map(f64::from).collect(),
            fixed: base(3, 128, 5, 40.0, 2000.0),
            variants: vec![],
            eval: Evaluation::new(vec![Metric::SumRateAnalytic]),
        },
        "fig6" => {
            let mut fixed = base(3, 16, 1, 40.0, 2000.0);
            fixed.insert("total_symbols".into(), 800.into());
            fixed.insert("c_dl_bpshz".into(), 20.0.into());
            fixed.insert("c_ul_bpshz".into(), 20.0.into());
            SweepSpec {
                axis: Axis::M,
                values: m_grid,
                fixed,
                variants: vec![],
                eval: Evaluation {
                    schemes: vec![Scheme::NonSimultaneous, Scheme::Simultaneous],
                    ..Evaluation::new(vec![Metric::RequiredPower])
                },
            }
        }
        "fig7" => {
            let mut fixed = base(3, 16, 5, 0.0, 2000.0);
            fixed.insert("alpha_db".into(), (-50.0).into());
            fixed.insert("beta_db".into(), (-50.0).into());
            SweepSpec {
                axis: Axis::Pr,
                values: (0..=8).map(|i| 5.0 * f64::from(i)).collect(),
                fixed,
                variants: [500.0, 1000.0, 2000.0]
                    .iter()
                    .map(|r| Variant { label: format!("r={r}"), overrides: obj(&[("cell_radius_m", (*r).into())]) })
                    .collect(),
                eval: Evaluation {
                    schemes: vec![Scheme::NonSimultaneous, Scheme::Simultaneous],
                    ..Evaluation::new(vec![Metric::Nmse])
                },
            }
        }
        other => return Err(validation(format!("unknown recipe {other:?} (expected fig3..fig7)"))),
    };
    Ok(spec)
}

/// One output record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub axis_value: Option<f64>,
    pub scenario: String,
    pub scheme: String,
    pub filter: String,
    pub link: String,
    pub metric: String,
    pub value: f64,
    pub mc_stderr: Option<f64>,
    pub seed: u64,
    pub trials: usize,
}

struct RowCtx<'a> {
    axis_value: Option<f64>,
    suffix: &'a str,
    seed: u64,
}

impl RowCtx<'_> {
    #[allow(clippy::too_many_arguments)]
    fn row(&self, scenario: &str, scheme: &str, filter: &str, link: &str, metric: &str, value: f64, se: Option<f64>, trials: usize) -> Row {
        Row {
            axis_value: self.axis_value,
            scenario: scenario.into(),
            scheme: scheme.into(),
            filter: filter.into(),
            link: link.into(),
            metric: format!("{metric}{}", self.suffix),
            value,
            mc_stderr: se,
            seed: self.seed,
            trials,
        }
    }

    fn report_rows(&self, metric: &str, r: &RateReport, per_user: bool, out: &mut Vec<Row>) {
        let mc = r.trials > 0;
        let se = |x: f64| mc.then_some(x);
        let (sc, sch, f, l) = (r.scenario.label(), r.scheme.label(), r.filter.label(), r.link.label());
        out.push(self.row(sc, sch, f, l, metric, r.sum_rate, se(r.sum_stderr), r.trials));
        if per_user {
            for (u, (v, e)) in r.per_user_rate.iter().zip(&r.per_user_stderr).enumerate() {
                let name = metric.replacen("sum_rate", "user_rate", 1);
                out.push(self.row(sc, sch, f, l, &format!("{name}.{u}"), *v, se(*e), r.trials));
            }
        }
    }
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0).max(1.0))
}

/// Ratio `2 (sum FD) / (sum HD)` and its delta-method standard error over
/// paired trials.
pub fn paired_ratio(fd: &[&RateReport], hd: &[&RateReport]) -> (f64, f64) {
    let trials = fd[0].trial_sums.len();
    let add = |rs: &[&RateReport]| -> Vec<f64> { (0..trials).map(|t| rs.iter().map(|r| r.trial_sums[t]).sum()).collect() };
    let (a, b) = (add(fd), add(hd));
    let (ma, va) = mean_var(&a);
    let (mb, vb) = mean_var(&b);
    let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (trials as f64 - 1.0).max(1.0);
    let ratio = 2.0 * ma / mb;
    let n = trials as f64;
    let rel = (va / (ma * ma) + vb / (mb * mb) - 2.0 * cov / (ma * mb)) / n;
    (ratio, ratio * rel.max(0.0).sqrt())
}

/// Smallest reference power, dBm, at which the overhead-adjusted analytic
/// sum rate `(1 - tau_fd / T) sum R` reaches `target`; infinite when the
/// rate saturates below it.
pub fn required_power(
    config: &SystemConfig,
    profile: &crate::channel::LargeScaleProfile,
    scheme: Scheme,
    scenario: Scenario,
    link: Link,
    filter: FilterKind,
    target: f64,
) -> Result<f64> {
    let keep = 1.0 - OverheadModel::new(config, scheme)?.tau_fd as f64 / config.total_symbols as f64;
    let rate = |p: f64| -> Result<f64> {
        let cfg = SystemConfig { p_ref_dbm: p, ..config.clone() };
        let inp = AnalyticInputs::new(&cfg, profile, scheme)?;
        Ok(keep * analytic_rate(&inp, scenario, link, filter, Duplex::Full)?.sum_rate)
    };
    let (mut lo, mut hi) = (-100.0, 100.0);
    if rate(hi)? < target {
        return Ok(f64::INFINITY);
    }
    if rate(lo)? >= target {
        return Ok(lo);
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if rate(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Evaluates every requested metric at one configuration.
pub fn evaluate_point(config: &SystemConfig, eval: &Evaluation, axis_value: Option<f64>, suffix: &str) -> Result<Vec<Row>> {
    let ctx = RowCtx { axis_value, suffix, seed: eval.seed };
    let profile = profile_for(config, eval.seed)?;
    let mut out = Vec::new();
    for &scheme in &eval.schemes {
        let sch = scheme.label();
        let need_mc = eval.wants(Metric::SumRateMc) || eval.wants(Metric::FdHdRatio);
        if need_mc {
            let mut combos = Vec::new();
            for &scenario in &eval.scenarios {
                for &filter in &eval.filters {
                    let links: &[Link] = if eval.wants(Metric::FdHdRatio) { &[Link::DL, Link::UL] } else { &eval.links };
                    for &link in links {
                        combos.push(Combo { scenario, link, filter, duplex: Duplex::Full });
                        if eval.wants(Metric::FdHdRatio) {
                            combos.push(Combo { scenario, link, filter, duplex: Duplex::Half });
                        }
                    }
                }
            }
            let req = McRequest::new(config.clone(), scheme, combos.clone(), eval.trials, eval.seed);
            let reports = simulate_on(&req, &profile)?;
            let find = |s, f, l, d| {
                let c = Combo { scenario: s, link: l, filter: f, duplex: d };
                &reports[combos.iter().position(|x| *x == c).expect("combo present")]
            };
            for &scenario in &eval.scenarios {
                for &filter in &eval.filters {
                    if eval.wants(Metric::SumRateMc) {
                        for &link in &eval.links {
                            ctx.report_rows("sum_rate_mc", find(scenario, filter, link, Duplex::Full), eval.per_user, &mut out);
                        }
                    }
                    if eval.wants(Metric::FdHdRatio) {
                        let fd = [find(scenario, filter, Link::DL, Duplex::Full), find(scenario, filter, Link::UL, Duplex::Full)];
                        let hd = [find(scenario, filter, Link::DL, Duplex::Half), find(scenario, filter, Link::UL, Duplex::Half)];
                        let (ratio, se) = paired_ratio(&fd, &hd);
                        out.push(ctx.row(scenario.label(), sch, filter.label(), "DL+UL", "fd_hd_ratio", ratio, Some(se), eval.trials));
                    }
                }
            }
        }
        let analytic_needed = [Metric::SumRateAnalytic, Metric::CoopNoncoopRatio, Metric::RegionVerdict]
            .iter()
            .any(|m| eval.wants(*m));
        if analytic_needed {
            let inp = AnalyticInputs::new(config, &profile, scheme)?;
            if eval.wants(Metric::SumRateAnalytic) {
                for &scenario in &eval.scenarios {
                    for &filter in &eval.filters {
                        for &link in &eval.links {
                            let r = analytic_rate(&inp, scenario, link, filter, Duplex::Full)?;
                            ctx.report_rows("sum_rate_analytic", &r, eval.per_user, &mut out);
                        }
                    }
                }
            }
            if eval.wants(Metric::CoopNoncoopRatio) {
                for &filter in &eval.filters {
                    for &link in &eval.links {
                        let coop = analytic_rate(&inp, Scenario::Cooperative, link, filter, Duplex::Full)?.sum_rate;
                        let non = analytic_rate(&inp, Scenario::NonCooperative, link, filter, Duplex::Full)?.sum_rate;
                        out.push(ctx.row(NA, sch, filter.label(), link.label(), "coop_noncoop_ratio", coop / non, None, 0));
                    }
                }
            }
            if eval.wants(Metric::RegionVerdict) {
                let overheads = OverheadModel::new(config, scheme)?;
                for &scenario in &eval.scenarios {
                    for &filter in &eval.filters {
                        let v = DuplexReports::analytic(&inp, scenario, filter)?.verdict(&overheads)?;
                        let (sc, f) = (scenario.label(), filter.label());
                        for (link, holds) in [("DL", v.dl_holds), ("UL", v.ul_holds), ("joint", v.joint_holds)] {
                            out.push(ctx.row(sc, sch, f, link, "region_verdict", f64::from(u8::from(holds)), None, 0));
                        }
                    }
                }
            }
        }
        if eval.wants(Metric::Nmse) {
            let v = nmse(config, &profile, scheme).si_mean();
            out.push(ctx.row(NA, sch, NA, "SI", "nmse", v, None, 0));
        }
        if eval.wants(Metric::RequiredPower) {
            for &scenario in &eval.scenarios {
                for &filter in &eval.filters {
                    for &link in &eval.links {
                        let p = required_power(config, &profile, scheme, scenario, link, filter, eval.target_rate)?;
                        out.push(ctx.row(scenario.label(), sch, filter.label(), link.label(), "required_power", p, None, 0));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Region verdict details of one configuration, for JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct RegionEntry {
    pub scenario: Scenario,
    pub filter: FilterKind,
    pub scheme: Scheme,
    pub verdict: crate::duplex::RegionVerdict,
}

/// Margins and coherence thresholds as rows, plus the full verdicts.
pub fn region_rows(config: &SystemConfig, eval: &Evaluation) -> Result<(Vec<Row>, Vec<RegionEntry>)> {
    let ctx = RowCtx { axis_value: None, suffix: "", seed: eval.seed };
    let profile = profile_for(config, eval.seed)?;
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for &scheme in &eval.schemes {
        let inp = AnalyticInputs::new(config, &profile, scheme)?;
        let overheads = OverheadModel::new(config, scheme)?;
        for &scenario in &eval.scenarios {
            for &filter in &eval.filters {
                let v = DuplexReports::analytic(&inp, scenario, filter)?.verdict(&overheads)?;
                let (sc, sch, f) = (scenario.label(), scheme.label(), filter.label());
                for (link, holds, margin) in
                    [("DL", v.dl_holds, v.dl_margin), ("UL", v.ul_holds, v.ul_margin), ("joint", v.joint_holds, v.joint_margin)]
                {
                    rows.push(ctx.row(sc, sch, f, link, "region_verdict", f64::from(u8::from(holds)), None, 0));
                    rows.push(ctx.row(sc, sch, f, link, "region_margin", margin, None, 0));
                }
                let t_min = match v.t_min {
                    Threshold::Finite(t) => t,
                    Threshold::NoFiniteThreshold => f64::INFINITY,
                };
                rows.push(ctx.row(sc, sch, f, NA, "t_cohe_min_symbols", t_min, None, 0));
                if let Some(s) = v.t_cohe_min_s {
                    rows.push(ctx.row(sc, sch, f, NA, "t_cohe_min_s", s, None, 0));
                }
                entries.push(RegionEntry { scenario, filter, scheme, verdict: v });
            }
        }
    }
    Ok((rows, entries))
}

/// Config document for one sweep point.
fn point_config(base: &Map<String, Value>, spec: &SweepSpec, variant: Option<&Variant>, v: f64) -> Result<SystemConfig> {
    let mut doc = base.clone();
    doc.extend(spec.fixed.clone());
    if let Some(var) = variant {
        doc.extend(var.overrides.clone());
    }
    spec.axis.apply(&mut doc, v);
    load_config_value(Value::Object(doc))
}

/// Runs a sweep. Points are evaluated in parallel; rows come back in axis
/// order, variants in declaration order within each point.
pub fn run_sweep(base: &Map<String, Value>, spec: &SweepSpec) -> Result<Vec<Row>> {
    spec.validate()?;
    let variants: Vec<Option<&Variant>> =
        if spec.variants.is_empty() { vec![None] } else { spec.variants.iter().map(Some).collect() };
    let points: Vec<(f64, Option<&Variant>)> =
        spec.values.iter().flat_map(|&v| variants.iter().map(move |var| (v, *var))).collect();
    let chunks = points
        .par_iter()
        .map(|&(v, var)| {
            let cfg = point_config(base, spec, var, v)?;
            let suffix = var.map(|x| format!("@{}", x.label)).unwrap_or_default();
            evaluate_point(&cfg, &spec.eval, Some(v), &suffix)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Rounds to 12 significant digits and prints in plain decimal notation.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn write_csv<W: Write>(rows: &[Row], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in rows {
        out.write_record([
            r.axis_value.map(format_number).unwrap_or_default(),
            r.scenario.clone(),
            r.scheme.clone(),
            r.filter.clone(),
            r.link.clone(),
            r.metric.clone(),
            format_number(r.value),
            r.mc_stderr.map(format_number).unwrap_or_default(),
            r.seed.to_string(),
            r.trials.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

//! One function per subcommand. Each returns the rendered output and the
//! parameters recorded in the run manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use vasculink::detect::{self, LinkConfig};
use vasculink::network::parse_network;
use vasculink::{channel, flow, mcsim, metrics, spectrum, Analysis, Error, PipeId};

use crate::args::{CirArgs, Common, SerArgs, SpectrumArgs, ValidateArgs};
use crate::output::{Cell, Output};

/// Manifest parameters of one run.
pub type Params = BTreeMap<String, String>;

/// Per-molecule observation probability above which the Poisson
/// approximation is flagged.
const POISSON_WARNING_PROBABILITY: f64 = 0.1;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Parse(String),
    Model(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_parse() {
            Failure::Parse(e.to_string())
        } else {
            Failure::Model(e.to_string())
        }
    }
}

pub struct Loaded {
    pub bytes: Vec<u8>,
    pub analysis: Analysis,
    pub warnings: Vec<String>,
}

pub fn load(path: &Path, background: f64) -> Result<Loaded, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Parse(format!("cannot read `{}`: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Failure::Parse(format!("`{}` is not valid UTF-8", path.display())))?;
    let (network, placement) = parse_network(text)?;
    let analysis = Analysis::new(network, placement, background)?;
    let warnings = warnings(&analysis);
    Ok(Loaded { bytes, analysis, warnings })
}

fn warnings(a: &Analysis) -> Vec<String> {
    let mut out = Vec::new();
    if channel::uca_warning(&a.network, &a.placement) {
        out.push(format!(
            "rx window of {} m is long relative to pipe `{}`; the uniform-concentration approximation may be poor (heuristic bound l_Rx > 0.1 l_b)",
            a.placement.rx_length,
            a.network.pipe(a.placement.rx_pipe).name
        ));
    }
    let used: BTreeSet<PipeId> = a.model.ensemble.paths.iter().flat_map(|p| p.pipes.iter().copied()).collect();
    for (p, ratio) in flow::weak_advection_pipes(&a.network, &a.flow, used) {
        out.push(format!(
            "pipe `{}` is weakly advective (u*l/Deff = {ratio}, heuristic threshold {}); the first-passage model may be inaccurate",
            a.network.pipe(p).name,
            flow::ADVECTION_WARNING_RATIO
        ));
    }
    let p = a.model.max_observation_probability();
    if p > POISSON_WARNING_PROBABILITY {
        out.push(format!("per-molecule observation probability {p} is large for the Poisson approximation"));
    }
    out
}

fn pipe_list(a: &Analysis, pipes: &[PipeId]) -> String {
    pipes.iter().map(|&p| a.network.pipe(p).name.as_str()).collect::<Vec<_>>().join(">")
}

fn params(pairs: &[(&str, String)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

pub fn flow_table(a: &Analysis) -> Output {
    let rows = (0..a.network.pipe_count())
        .map(|i| {
            let p = PipeId(i);
            vec![
                Cell::Text(a.network.pipe(p).name.clone()),
                a.flow.flow(p).into(),
                a.flow.velocity(p).into(),
                a.flow.effective_diffusion(p).into(),
            ]
        })
        .collect();
    Output::Table { columns: cols(&["pipe_id", "Q_m3s", "u_ms", "Deff_m2s"]), rows }
}

pub fn paths_table(a: &Analysis) -> Output {
    let e = &a.model.ensemble;
    let rows = e
        .paths
        .iter()
        .zip(&e.weights)
        .enumerate()
        .map(|(k, (p, &w))| {
            vec![
                (k + 1).into(),
                Cell::Text(pipe_list(a, &p.pipes)),
                p.fraction.into(),
                p.mean.into(),
                p.variance.into(),
                p.scale.into(),
                w.into(),
            ]
        })
        .collect();
    Output::Table {
        columns: cols(&["path", "pipes", "gamma", "mean_s", "variance_s2", "theta_s", "weight"]),
        rows,
    }
}

pub fn cir(a: &Analysis, args: &CirArgs) -> (Output, Params) {
    let t_max = args.t_max.unwrap_or_else(|| a.model.support_end());
    let n = args.samples as usize;
    let paths = a.model.ensemble.len();
    let mut columns = cols(&["t", "h"]);
    if args.per_path {
        columns.extend((1..=paths).map(|k| format!("h_path{k}")));
    }
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = t_max * i as f64 / (n - 1) as f64;
            let mut row = vec![Cell::Float(t), a.model.cir(t).into()];
            if args.per_path {
                row.extend((0..paths).map(|g| Cell::Float(a.model.path_contribution(g, t))));
            }
            row
        })
        .collect();
    let p = params(&[
        ("t_max", t_max.to_string()),
        ("samples", n.to_string()),
        ("per_path", args.per_path.to_string()),
        ("h_unit", "1/m".to_string()),
    ]);
    (Output::Table { columns, rows }, p)
}

pub fn metrics_record(a: &Analysis) -> Output {
    let m = &a.metrics;
    Output::Record(vec![
        ("path_count".into(), a.model.ensemble.len().into()),
        ("reach_probability".into(), a.model.ensemble.reach_probability.into()),
        ("mean_excess_delay_s".into(), m.mean_excess_delay.into()),
        ("rms_delay_spread_s".into(), m.rms_delay_spread.into()),
        ("diffusion_spread_sq_s2".into(), m.diffusion_spread_sq.into()),
        ("multipath_spread_sq_s2".into(), m.multipath_spread_sq.into()),
        ("coherence_bandwidth_hz".into(), m.coherence_bandwidth.into()),
    ])
}

pub fn spectrum(a: &Analysis, args: &SpectrumArgs) -> Result<(Output, Params), Failure> {
    let f_max = args
        .f_max
        .unwrap_or(spectrum::DEFAULT_GRID_SPAN * a.metrics.coherence_bandwidth);
    if !(f_max > 0.0 && f_max.is_finite()) {
        return Err(Failure::Model(format!("frequency span {f_max} is not usable")));
    }
    let grid = spectrum::linear_grid(f_max, args.samples as usize);
    let samples = spectrum::spectrum(&a.model, &grid)?;
    let paths = &a.model.ensemble.paths;
    let mut columns = cols(&["f", "re", "im", "mag", "phase_unwrapped", "group_delay"]);
    if args.per_path {
        columns.extend((1..=paths.len()).map(|k| format!("mag_path{k}")));
    }
    let rows = samples
        .par_iter()
        .map(|s| {
            let mut row = vec![
                Cell::Float(s.frequency),
                s.response.re.into(),
                s.response.im.into(),
                s.magnitude.into(),
                s.phase.into(),
                s.group_delay.into(),
            ];
            if args.per_path {
                row.extend(paths.iter().map(|p| {
                    Cell::Float(a.model.rx_gain * p.fraction * spectrum::path_transfer(p, s.frequency).norm())
                }));
            }
            row
        })
        .collect();
    let p = params(&[
        ("f_max", f_max.to_string()),
        ("samples", args.samples.to_string()),
        ("per_path", args.per_path.to_string()),
        ("response_unit", "s/m".to_string()),
    ]);
    Ok((Output::Table { columns, rows }, p))
}

fn relative_error(empirical: f64, analytic: f64) -> f64 {
    (empirical - analytic) / analytic
}

pub fn validate(a: &Analysis, args: &ValidateArgs) -> Result<(Output, Option<Output>, Params), Failure> {
    let sim = mcsim::simulate_particles(&a.network, &a.flow, &a.placement, args.particles, args.seed)?;
    let e = &a.model.ensemble;
    let chi = e.reach_probability;
    let n = args.particles as f64;
    let reach_sigma = (chi * (1.0 - chi) / n).sqrt();
    let reach_z = if reach_sigma > 0.0 {
        (sim.reach_fraction() - chi) / reach_sigma
    } else {
        0.0
    };

    let (edges, probs) = histogram_bins(&e.paths, &e.weights, args.bins as usize, |edges| {
        metrics::pdp_bin_probabilities(e, edges)
    });
    let observed = full_histogram(&sim, &edges);
    let (stat, dof) = mcsim::chi_square(&observed, &probs);

    let mut fields = vec![
        ("particles".to_string(), Cell::Int(args.particles)),
        ("seed".into(), Cell::Int(args.seed)),
        ("reached".into(), Cell::Int(sim.reached())),
        ("reach_analytic".into(), chi.into()),
        ("reach_empirical".into(), sim.reach_fraction().into()),
        ("reach_z_score".into(), reach_z.into()),
    ];
    if sim.reached() >= 2 {
        let m = &a.metrics;
        fields.extend([
            ("mean_excess_delay_analytic".to_string(), Cell::from(m.mean_excess_delay)),
            ("mean_excess_delay_empirical".into(), sim.mean().into()),
            ("mean_excess_delay_rel_error".into(), relative_error(sim.mean(), m.mean_excess_delay).into()),
            ("rms_delay_spread_analytic".into(), m.rms_delay_spread.into()),
            ("rms_delay_spread_empirical".into(), sim.std_dev().into()),
            ("rms_delay_spread_rel_error".into(), relative_error(sim.std_dev(), m.rms_delay_spread).into()),
            ("chi_square".into(), stat.into()),
            ("chi_square_dof".into(), dof.into()),
        ]);
    }

    let histogram = args.histogram.as_ref().map(|_| {
        let reached = sim.reached() as f64;
        let rows = bin_bounds(&edges)
            .into_iter()
            .zip(observed.iter().zip(&probs))
            .map(|((lo, hi), (&o, &p))| vec![Cell::Float(lo), hi.into(), o.into(), (p * reached).into()])
            .collect();
        Output::Table { columns: cols(&["bin_lo", "bin_hi", "count", "expected"]), rows }
    });
    let p = params(&[
        ("particles", args.particles.to_string()),
        ("bins", args.bins.to_string()),
    ]);
    Ok((Output::Record(fields), histogram, p))
}

/// Uniform bins over the bulk of the arrival distribution plus an open
/// bin on either side. Returns the inner edges and the probability of
/// every bin, tails included.
pub fn histogram_bins(
    paths: &[vasculink::TxRxPath],
    weights: &[f64],
    bins: usize,
    bin_probabilities: impl Fn(&[f64]) -> Vec<f64>,
) -> (Vec<f64>, Vec<f64>) {
    let live = || paths.iter().zip(weights).filter(|(_, &w)| w > 0.0).map(|(p, _)| p);
    let lo = live().map(|p| p.mean - 6.0 * p.std_dev()).fold(f64::INFINITY, f64::min).max(0.0);
    let hi = live().map(|p| p.mean + 10.0 * p.std_dev()).fold(0.0, f64::max);
    let edges: Vec<f64> = (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect();
    let below = if lo > 0.0 { bin_probabilities(&[0.0, lo])[0] } else { 0.0 };
    let inner = bin_probabilities(&edges);
    let above = (1.0 - below - inner.iter().sum::<f64>()).max(0.0);
    let mut probs = Vec::with_capacity(bins + 2);
    probs.push(below);
    probs.extend(inner);
    probs.push(above);
    (edges, probs)
}

/// Counts for the open lower bin, the inner bins and the open upper bin.
pub fn full_histogram(sim: &mcsim::ParticleEnsemble, edges: &[f64]) -> Vec<u64> {
    let lo = edges[0];
    let hi = edges[edges.len() - 1];
    let below = sim.arrival_times.partition_point(|&t| t < lo) as u64;
    let above = (sim.arrival_times.len() - sim.arrival_times.partition_point(|&t| t < hi)) as u64;
    let mut counts = vec![below];
    counts.extend(sim.histogram(edges));
    counts.push(above);
    counts
}

fn bin_bounds(edges: &[f64]) -> Vec<(f64, f64)> {
    let mut b = vec![(0.0, edges[0])];
    b.extend(edges.windows(2).map(|w| (w[0], w[1])));
    b.push((edges[edges.len() - 1], f64::INFINITY));
    b
}

/// Seed of the `index`-th point of a sweep.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

pub fn ser(a: &Analysis, args: &SerArgs) -> Result<(Output, Params), Failure> {
    let ts = detect::min_symbol_duration(a.metrics.rms_delay_spread, args.ts_factor);
    let budgets = args.n_range.values();
    let results = budgets
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut cfg = LinkConfig::new(ts, args.memory as usize, n, args.background);
            cfg.strategy = args.strategy;
            cfg.symbol_count = args.symbols;
            cfg.seed = point_seed(args.seed, i);
            cfg.genie_aided = args.genie;
            detect::run_link(&a.model, &a.metrics, &cfg).map(|r| (n, r))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let rows = results
        .into_iter()
        .map(|(n, r)| {
            vec![
                Cell::Int(n),
                r.ser.into(),
                r.confidence_interval.0.into(),
                r.confidence_interval.1.into(),
                r.resolved_sampling_time.into(),
                ts.into(),
                r.threshold_mean.into(),
            ]
        })
        .collect();
    let p = params(&[
        ("n_range", format!("{}:{}:{}", args.n_range.lo, args.n_range.hi, args.n_range.per_decade)),
        ("ts_factor", args.ts_factor.to_string()),
        ("memory", args.memory.to_string()),
        ("strategy", args.strategy.to_string()),
        ("symbols", args.symbols.to_string()),
        ("genie", args.genie.to_string()),
        ("background", args.background.to_string()),
    ]);
    Ok((Output::Table { columns: cols(&["N", "ser", "ci_lo", "ci_hi", "t_s", "T_s", "psi_mean"]), rows }, p))
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn no_params() -> Params {
    BTreeMap::new()
}

pub fn common_params(common: &Common) -> Params {
    params(&[("format", format!("{:?}", common.format).to_lowercase())])
}

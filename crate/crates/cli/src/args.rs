use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vasculink::SamplingStrategy;

#[derive(Debug, Parser)]
#[command(name = "vasculink", version, about = "Channel analyzer and link simulator for molecular communication in vessel networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Network description (JSON).
    pub network: PathBuf,
    /// Write output here instead of stdout; a `<out>.manifest.json` is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-pipe flow rate, mean velocity and effective diffusion.
    Flow(Common),
    /// Tx→Rx paths with fractions and first-passage moments.
    Paths(Common),
    /// Channel impulse response on a uniform time grid.
    Cir(CirArgs),
    /// Delay-spread metrics and coherence bandwidth.
    Metrics(Common),
    /// Frequency response, unwrapped phase and group delay.
    Spectrum(SpectrumArgs),
    /// Compare the analytic model with a particle simulation.
    Validate(ValidateArgs),
    /// Symbol error rate sweep over the molecule budget.
    Ser(SerArgs),
}

#[derive(Debug, Args)]
pub struct CirArgs {
    #[command(flatten)]
    pub common: Common,
    /// End of the time grid in s [default: covers the whole response].
    #[arg(long, value_parser = positive_f64)]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(2..))]
    pub samples: u64,
    /// Add one column per weighted path contribution.
    #[arg(long)]
    pub per_path: bool,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    /// End of the frequency grid in Hz [default: 50 coherence bandwidths].
    #[arg(long, value_parser = positive_f64)]
    pub f_max: Option<f64>,
    #[arg(long, default_value_t = 4096, value_parser = clap::value_parser!(u64).range(2..))]
    pub samples: u64,
    /// Add one magnitude column per weighted path.
    #[arg(long)]
    pub per_path: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(2..))]
    pub particles: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Histogram bins over the arrival-time window.
    #[arg(long, default_value_t = 60, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins: u64,
    /// Also write the arrival histogram (CSV) to this file.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SerArgs {
    #[command(flatten)]
    pub common: Common,
    /// Molecule budgets `lo:hi:points-per-decade`, e.g. `1e2:1e6:1`.
    #[arg(long, default_value = "1e2:1e6:1", value_parser = parse_n_range)]
    pub n_range: NRange,
    /// Symbol duration in units of the RMS delay spread.
    #[arg(long, default_value_t = 4.0, value_parser = positive_f64)]
    pub ts_factor: f64,
    /// Detector memory L.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub memory: u64,
    #[arg(long, default_value = "strongest-path", value_parser = parse_strategy)]
    pub strategy: SamplingStrategy,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub symbols: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Feed back true past symbols instead of decisions.
    #[arg(long)]
    pub genie: bool,
    /// Expected background molecules per sample.
    #[arg(long, default_value_t = 500.0, value_parser = non_negative_f64)]
    pub background: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NRange {
    pub lo: f64,
    pub hi: f64,
    pub per_decade: u32,
}

impl NRange {
    /// `lo · 10^(k/ppd)` rounded, for every k that stays within `hi`.
    pub fn values(&self) -> Vec<u64> {
        let decades = (self.hi / self.lo).log10();
        let steps = (decades * self.per_decade as f64 + 1e-9).floor() as u32;
        (0..=steps)
            .map(|k| (self.lo * 10f64.powf(k as f64 / self.per_decade as f64)).round() as u64)
            .collect()
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` must be positive"))
    }
}

fn non_negative_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` must be non-negative"))
    }
}

fn parse_strategy(s: &str) -> Result<SamplingStrategy, String> {
    s.parse().map_err(|e: vasculink::Error| e.to_string())
}

fn parse_n_range(s: &str) -> Result<NRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, ppd] = parts[..] else {
        return Err(format!("`{s}` is not of the form lo:hi:points-per-decade"));
    };
    let lo = positive_f64(lo)?;
    let hi = positive_f64(hi)?;
    let per_decade: u32 = ppd
        .parse()
        .ok()
        .filter(|&v| v >= 1)
        .ok_or_else(|| format!("points per decade `{ppd}` must be a positive integer"))?;
    if lo < 1.0 || hi < lo {
        return Err(format!("`{s}` needs 1 <= lo <= hi"));
    }
    Ok(NRange { lo, hi, per_decade })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_range_values() {
        let r = parse_n_range("1e2:1e6:1").unwrap();
        assert_eq!(r.values(), vec![100, 1000, 10_000, 100_000, 1_000_000]);
        let r = parse_n_range("100:1000:2").unwrap();
        assert_eq!(r.values(), vec![100, 316, 1000]);
        assert!(parse_n_range("1e2:1e6").is_err());
        assert!(parse_n_range("1e6:1e2:1").is_err());
        assert!(parse_n_range("1e2:1e6:0").is_err());
    }
}

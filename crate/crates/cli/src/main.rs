//! `vasculink` command-line front end.

mod args;
mod commands;
mod manifest;
mod output;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Common};
use commands::Failure;
use manifest::RunManifest;
use output::Output;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("USAGE: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match configure_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("USAGE: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Parse(m)) => {
            eprintln!("PARSE: {}", one_line(&m));
            ExitCode::from(1)
        }
        Err(Failure::Model(m)) => {
            eprintln!("MODEL: {}", one_line(&m));
            ExitCode::from(1)
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("VASCULINK_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Failure::Usage(format!("VASCULINK_THREADS=`{v}` must be a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Flow(c) => simple("flow", &c, commands::flow_table),
        Command::Paths(c) => simple("paths", &c, commands::paths_table),
        Command::Metrics(c) => simple("metrics", &c, commands::metrics_record),
        Command::Cir(a) => {
            let l = load(&a.common, 0.0)?;
            let (out, p) = commands::cir(&l.analysis, &a);
            emit("cir", &a.common, &l.bytes, None, p, &out)
        }
        Command::Spectrum(a) => {
            let l = load(&a.common, 0.0)?;
            let (out, p) = commands::spectrum(&l.analysis, &a)?;
            emit("spectrum", &a.common, &l.bytes, None, p, &out)
        }
        Command::Validate(a) => {
            let l = load(&a.common, 0.0)?;
            let (out, histogram, p) = commands::validate(&l.analysis, &a)?;
            if let (Some(path), Some(h)) = (&a.histogram, &histogram) {
                write(path, &h.render(args::Format::Csv))?;
            }
            emit("validate", &a.common, &l.bytes, Some(a.seed), p, &out)
        }
        Command::Ser(a) => {
            let l = load(&a.common, a.background)?;
            let (out, p) = commands::ser(&l.analysis, &a)?;
            emit("ser", &a.common, &l.bytes, Some(a.seed), p, &out)
        }
    }
}

fn load(common: &Common, background: f64) -> Result<commands::Loaded, Failure> {
    let l = commands::load(&common.network, background)?;
    for w in &l.warnings {
        eprintln!("WARNING: {w}");
    }
    Ok(l)
}

fn simple(name: &str, common: &Common, f: fn(&vasculink::Analysis) -> Output) -> Result<(), Failure> {
    let l = load(common, 0.0)?;
    emit(name, common, &l.bytes, None, commands::no_params(), &f(&l.analysis))
}

fn emit(
    command: &str,
    common: &Common,
    network_bytes: &[u8],
    seed: Option<u64>,
    mut parameters: BTreeMap<String, String>,
    out: &Output,
) -> Result<(), Failure> {
    let text = out.render(common.format);
    match &common.out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => {
            write(path, &text)?;
            parameters.extend(commands::common_params(common));
            let manifest = RunManifest::new(command, network_bytes, seed, parameters);
            write(&manifest_path(path), &manifest.to_json())
        }
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write `{}`: {e}", path.display())))
}

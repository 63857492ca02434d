mod bounds;
mod kernels;
mod landscape_cmd;
mod lindyn_cmd;
mod meanfield_cmd;
mod spectrum;
mod wick_cmd;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use netcore::{Activation, NetConfig};
use serde_json::Value;

use crate::args::{Cli, Command, Global, NetArgs, ParamKind};
use crate::output::{render_value, write_out, Table};
use crate::{usage, Format};

/// Per-run settings every subcommand sees.
pub struct Ctx<'a> {
    pub seed: u64,
    pub out: Option<&'a Path>,
    pub format: Option<Format>,
    pub replicates: Option<usize>,
}

impl<'a> Ctx<'a> {
    fn new(g: &'a Global) -> Self {
        Ctx {
            seed: g.seed,
            out: g.out.as_deref(),
            format: g.format,
            replicates: g.replicates,
        }
    }

    pub fn replicates_or(&self, default: usize) -> usize {
        self.replicates.unwrap_or(default)
    }

    pub fn emit_table(&self, t: &Table) -> Result<()> {
        write_out(&t.render(self.format.unwrap_or(Format::Csv))?, self.out)
    }

    pub fn emit_value(&self, v: &Value) -> Result<()> {
        write_out(&render_value(v, self.format.unwrap_or(Format::Json))?, self.out)
    }

    /// Path of a secondary output next to `--out`, e.g. `run.csv.summary.json`.
    pub fn sibling(&self, suffix: &str) -> Option<PathBuf> {
        self.out.map(|p| {
            let mut s = p.as_os_str().to_owned();
            s.push(suffix);
            PathBuf::from(s)
        })
    }
}

pub fn parse_activation(s: &str) -> Result<Activation> {
    s.parse::<Activation>().map_err(|e| usage(format!("--act: {e}")))
}

/// σ_w that keeps the forward variance fixed: 1/√E[φ(z)²/z²] for
/// positively homogeneous activations, 1 otherwise.
pub fn critical_sigma_w(act: Activation) -> f64 {
    act.homogeneous_second_moment().map_or(1.0, |k| 1.0 / k.sqrt())
}

pub fn build_net(a: &NetArgs) -> Result<NetConfig> {
    let act = parse_activation(&a.act)?;
    let sigma_w = a.sigma_w.unwrap_or_else(|| critical_sigma_w(act));
    let cfg = match a.param {
        ParamKind::Ntk => NetConfig::ntk(a.widths.clone(), act, sigma_w),
        ParamKind::Standard => NetConfig::gaussian(a.widths.clone(), act, sigma_w),
    };
    cfg.context("network configuration")
}

pub fn read_net(path: &Path) -> Result<(NetConfig, netcore::WeightSet)> {
    netcore::read_weight_file(path).with_context(|| format!("reading weights {}", path.display()))
}

pub fn run(cli: &Cli) -> Result<()> {
    let ctx = Ctx::new(&cli.global);
    match &cli.command {
        Command::Phase { act, sigma_w2 } => meanfield_cmd::phase(&ctx, act, sigma_w2),
        Command::Lengthmap { act, sigma_w2, q } => meanfield_cmd::lengthmap(&ctx, act, *sigma_w2, q),
        c @ Command::Spectrum { .. } => spectrum::run(&ctx, c),
        c @ Command::Lindyn { .. } => lindyn_cmd::run(&ctx, c),
        c @ Command::Path { .. } => landscape_cmd::run(&ctx, c),
        c @ (Command::NtkKernel { .. } | Command::NtkTrain { .. } | Command::DuMonitor { .. } | Command::Align { .. }) => {
            kernels::run(&ctx, c)
        }
        c @ Command::Wick { .. } => wick_cmd::run(&ctx, c),
        c @ Command::Bounds { .. } => bounds::run(&ctx, c),
    }
}

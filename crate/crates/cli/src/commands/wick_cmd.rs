use anyhow::{Context, Result};
use wick::{exact_correlation, mc_correlation, ContractionSpec};

use super::Ctx;
use crate::args::Command;
use crate::output::{write_out, Table};
use crate::usage;

pub fn run(ctx: &Ctx, cmd: &Command) -> Result<()> {
    let Command::Wick {
        spec,
        depth,
        mc,
        widths,
        mc_out,
    } = cmd
    else {
        unreachable!()
    };
    let text = std::fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
    let spec: ContractionSpec =
        serde_json::from_str(&text).with_context(|| format!("parsing contraction spec {}", spec.display()))?;
    spec.validate_for_depth(*depth)?;
    let poly = exact_correlation(&spec, *depth)?;
    ctx.emit_value(&serde_json::to_value(poly.terms())?)?;

    if !*mc {
        return Ok(());
    }
    if widths.is_empty() || widths.contains(&0) {
        return Err(usage("--widths must list positive widths"));
    }
    let inputs = spec.require_inputs()?;
    let replicates = ctx.replicates_or(2000);
    let mut t = Table::new(&["n", "estimate", "std_error", "exact", "z"]);
    for &n in widths {
        let (est, se) = mc_correlation(&spec, *depth, n, replicates, ctx.seed)?;
        let exact = poly.evaluate(n as f64, inputs);
        let z = if se > 0.0 { (est - exact) / se } else { f64::NAN };
        t.push(vec![n.into(), est.into(), se.into(), exact.into(), z.into()]);
    }
    let csv = t.to_csv()?;
    match mc_out {
        Some(p) => write_out(&csv, Some(p)),
        None => {
            eprint!("{csv}");
            Ok(())
        }
    }
}


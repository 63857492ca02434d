use anyhow::{Context, Result};
use netcore::{Activation, Init, NetConfig, Parameterization};
use serde_json::json;
use spectra::{empirical_spectrum, product_wishart_spectrum};

use super::{critical_sigma_w, parse_activation, Ctx};
use crate::args::{Command, InitKind};
use crate::output::{json_text, write_out, Table};
use crate::usage;

pub fn run(ctx: &Ctx, cmd: &Command) -> Result<()> {
    let Command::Spectrum {
        analytic,
        depth,
        points,
        width,
        act,
        init,
        sigma_w,
        summary,
        ..
    } = cmd
    else {
        unreachable!()
    };
    if *analytic {
        if *points < 2 {
            return Err(usage("--points must be at least 2"));
        }
        let law = product_wishart_spectrum(*depth)?;
        let mut t = Table::new(&["phi", "lambda", "rho"]);
        for p in law.sample(*points) {
            t.push(vec![p.phi.into(), p.lambda.into(), p.rho.into()]);
        }
        return ctx.emit_table(&t);
    }

    let act = parse_activation(act)?;
    let sigma_w = sigma_w.unwrap_or_else(|| critical_sigma_w(act));
    let init = match init {
        InitKind::Gaussian => Init::Gaussian { sigma_w },
        InitKind::Orthogonal => Init::Orthogonal { sigma_w },
    };
    let cfg = NetConfig::new(vec![*width; depth + 2], act, Parameterization::Standard, init)?;
    let replicates = ctx.replicates_or(50);
    let emp = empirical_spectrum(&cfg, None, replicates, ctx.seed)?;
    let mut t = Table::new(&["eigenvalue"]);
    for &v in &emp.eigenvalues {
        t.push(vec![v.into()]);
    }
    ctx.emit_table(&t)?;

    // The product-Wishart law is the limit only for linear gaussian nets.
    let w1 = match (act, init) {
        (Activation::Linear, Init::Gaussian { .. }) if *depth >= 1 => {
            Some(emp.wasserstein_to(&product_wishart_spectrum(*depth)?))
        }
        _ => None,
    };
    let doc = json!({
        "L": depth,
        "n": width,
        "activation": act.to_string(),
        "init": match init { Init::Orthogonal { .. } => "orthogonal", _ => "gaussian" },
        "sigma_w": sigma_w,
        "replicates": replicates,
        "seed": ctx.seed,
        "eigenvalue_max": emp.max(),
        "eigenvalue_mean": emp.mean(),
        "wasserstein_to_analytic": w1,
    });
    let text = json_text(&doc)?;
    match summary.clone().or_else(|| ctx.sibling(".summary.json")) {
        Some(p) => write_out(&text, Some(&p)).context("writing spectrum summary"),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

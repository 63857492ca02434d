use anyhow::{bail, Result};
use genbounds::{bartlett_a_posteriori, margin_stats, neyshabur_bound, norm_profile, pacbayes_gaussian, GaussianPosterior};
use serde_json::{json, Map, Value};

use super::{read_net, Ctx};
use crate::args::{Command, Family};
use crate::data::read_dataset;

pub fn run(ctx: &Ctx, cmd: &Command) -> Result<()> {
    let Command::Bounds {
        weights,
        data,
        family,
        gamma,
        delta,
        input_bound,
        prior,
        log_var,
        prior_log_var,
        samples,
    } = cmd
    else {
        unreachable!()
    };
    let (cfg, w) = read_net(weights)?;
    let ds = read_dataset(data)?;
    let y: Vec<f64> = ds.scalar_targets()?.iter().copied().collect();
    let m = ds.len() as u64;
    let stats = margin_stats(&w, &cfg, &ds.x, &y, *gamma)?;

    let mut reports = Map::new();
    let want = |f: Family| *family == f || *family == Family::All;
    if want(Family::Bartlett) {
        let r = bartlett_a_posteriori(&norm_profile(&w), ds.x.norm(), *gamma, m, *delta, stats.hard_risk)?;
        reports.insert("bartlett".into(), serde_json::to_value(r)?);
    }
    if want(Family::Neyshabur) {
        let b = match input_bound {
            Some(b) => *b,
            None => ds.x.column_iter().map(|c| c.norm()).fold(0.0, f64::max),
        };
        let r = neyshabur_bound(&w, *gamma, b, m, *delta, stats.hard_risk)?;
        reports.insert("neyshabur".into(), serde_json::to_value(r)?);
    }
    if want(Family::Pacbayes) {
        let prior_w = match prior {
            Some(p) => {
                let (pc, pw) = read_net(p)?;
                if pc.widths != cfg.widths {
                    bail!("prior and posterior weight files have different widths");
                }
                pw
            }
            None => w.scaled(0.0),
        };
        let post = GaussianPosterior::around(&w, &prior_w, *log_var, *prior_log_var)?;
        let r = pacbayes_gaussian(&post, &cfg, &ds.x, &y, *delta, *samples, ctx.seed)?;
        reports.insert("pacbayes".into(), serde_json::to_value(r)?);
    }

    let doc = if *family == Family::All {
        json!({
            "margin": { "gamma": gamma, "hard_risk": stats.hard_risk, "ramp_loss": stats.ramp_loss },
            "m": m,
            "reports": Value::Object(reports),
        })
    } else {
        reports.into_iter().next().map(|(_, v)| v).expect("one family selected")
    };
    ctx.emit_value(&doc)
}

use anyhow::Result;
use lindyn::{opt_schedule, simulate_deep_linear_gd, GdConfig};

use super::Ctx;
use crate::args::Command;
use crate::output::{Cell, Table};
use crate::usage;

pub fn run(ctx: &Ctx, cmd: &Command) -> Result<()> {
    let Command::Lindyn {
        scan_depth,
        depths,
        depth,
        u0,
        uf,
        s,
        modes,
        eta,
    } = cmd
    else {
        unreachable!()
    };
    if *modes == 0 {
        return Err(usage("--modes must be positive"));
    }
    let gd = |l: usize, eta: f64| {
        let mut cfg = GdConfig::new(l, vec![*s; *modes], eta, ctx.seed);
        cfg.init_product = *u0;
        cfg
    };

    if *scan_depth {
        let mut t = Table::new(&["L", "eta_opt", "steps", "t_opt_formula"]);
        for &l in depths {
            let sched = opt_schedule(*u0, *uf, *s, l)?;
            let run = simulate_deep_linear_gd(&gd(l, sched.eta_opt))?;
            t.push(vec![l.into(), sched.eta_opt.into(), run.steps.into(), sched.t_opt.into()]);
        }
        return ctx.emit_table(&t);
    }

    let l = depth.expect("clap requires --depth without --scan-depth");
    let eta = match eta {
        Some(e) => *e,
        None => opt_schedule(*u0, *uf, *s, l)?.eta_opt,
    };
    let run = simulate_deep_linear_gd(&gd(l, eta))?;
    let mut cols = vec!["step".to_string(), "loss".to_string()];
    cols.extend((1..=*modes).map(|k| format!("u{k}")));
    let mut t = Table::new(&cols);
    for (step, (loss, u)) in run.losses.iter().zip(&run.modes).enumerate() {
        let mut row: Vec<Cell> = vec![step.into(), (*loss).into()];
        row.extend(u.iter().map(|&v| Cell::from(v)));
        t.push(row);
    }
    ctx.emit_table(&t)
}

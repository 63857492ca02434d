use anyhow::{bail, Result};
use landscape::{constant_loss_path, Loss, PathOptions};

use super::{read_net, Ctx};
use crate::args::{Command, LossKind};
use crate::data::read_dataset;
use crate::output::Table;
use crate::usage;

pub fn run(ctx: &Ctx, cmd: &Command) -> Result<()> {
    let Command::Path {
        a,
        b,
        data,
        loss,
        points,
        epsilon,
    } = cmd
    else {
        unreachable!()
    };
    if *points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let (cfg_a, wa) = read_net(a)?;
    let (cfg_b, wb) = read_net(b)?;
    if cfg_a != cfg_b {
        bail!("the two weight files describe different architectures");
    }
    let ds = read_dataset(data)?;
    let loss = match loss {
        LossKind::Square => Loss::Square,
        LossKind::Logistic => Loss::Logistic,
    };
    let opts = PathOptions {
        points_per_segment: *points,
        epsilon: *epsilon,
        seed: ctx.seed,
        ..PathOptions::default()
    };
    let trace = constant_loss_path(&cfg_a, &wa, &wb, &ds.x, &ds.y, loss, &opts)?;
    let mut t = Table::new(&["segment", "t", "loss"]);
    for (label, s, l) in trace.rows() {
        t.push(vec![label.into(), s.into(), l.into()]);
    }
    ctx.emit_table(&t)
}

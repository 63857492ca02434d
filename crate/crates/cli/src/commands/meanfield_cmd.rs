use anyhow::Result;
use meanfield::{length_map, phase_classify};

use super::{parse_activation, Ctx};
use crate::args::Range;
use crate::output::Table;

pub fn phase(ctx: &Ctx, act: &str, grid: &Range) -> Result<()> {
    let act = parse_activation(act)?;
    let mut t = Table::new(&["sigma_w2", "q_inf", "chi1", "phase"]);
    for s in grid.values() {
        let p = phase_classify(s, act)?;
        t.push(vec![s.into(), p.q_inf.into(), p.chi1.into(), p.phase.as_str().into()]);
    }
    ctx.emit_table(&t)
}

pub fn lengthmap(ctx: &Ctx, act: &str, sigma_w2: f64, grid: &Range) -> Result<()> {
    let act = parse_activation(act)?;
    let mut t = Table::new(&["q", "v", "dv_dq"]);
    for q in grid.values() {
        let r = length_map(q, sigma_w2, act, true)?;
        t.push(vec![q.into(), r.q_next.into(), r.derivative.unwrap_or(f64::NAN).into()]);
    }
    ctx.emit_table(&t)
}

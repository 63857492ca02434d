use std::path::Path;

use anyhow::{bail, Result};
use nalgebra::{DMatrix, DVector};
use netcore::{init_weights, output, rng_for, NetConfig, WeightSet};
use ntk::{
    alignment, du_convergence_monitor, du_dataset, empirical_ntk, h_infinity, limiting_ntk, log_grid, nngp_cross,
    nngp_gram, DuConfig, LinearizedSolution,
};
use rand::Rng;

use super::{build_net, Ctx};
use crate::args::{Command, KernelKind};
use crate::data::read_dataset;
use crate::output::Table;
use crate::usage;

pub fn run(ctx: &Ctx, cmd: &Command) -> Result<()> {
    match cmd {
        Command::NtkKernel { net, kind, data, points } => {
            let cfg = build_net(net)?;
            let x = match data {
                Some(p) => read_dataset(p)?.x,
                None => uniform_points(cfg.input_dim(), *points, ctx.seed),
            };
            let gram = match kind {
                KernelKind::Limiting => limiting_ntk(&x, &cfg)?.matrix,
                KernelKind::Nngp => nngp_gram(&x, &cfg)?.matrix,
                KernelKind::Empirical => empirical_ntk(&cfg, &init_weights(&cfg, ctx.seed)?, &x, 0.0)?.matrix,
            };
            let mut t = Table::new(&["i", "j", "value"]);
            for i in 0..gram.nrows() {
                for j in 0..gram.ncols() {
                    t.push(vec![i.into(), j.into(), gram[(i, j)].into()]);
                }
            }
            ctx.emit_table(&t)
        }
        Command::NtkTrain {
            net,
            data,
            query,
            eta,
            times,
            kernel,
        } => {
            let cfg = build_net(net)?;
            if cfg.output_dim() != 1 {
                return Err(usage("ntk-train needs a scalar-output network"));
            }
            let train = read_dataset(data)?;
            let y = train.scalar_targets()?;
            let xq = match query {
                Some(p) => read_dataset(p)?.x,
                None => train.x.clone(),
            };
            let w = init_weights(&cfg, ctx.seed)?;
            let (theta, cross) = tangent_kernels(&cfg, &w, &train.x, &xq, *kernel)?;
            let f0 = outputs(&cfg, &w, &train.x)?;
            let f0q = outputs(&cfg, &w, &xq)?;
            let sol = LinearizedSolution::new(theta, f0, y, *eta)?;
            let mut t = Table::new(&["t", "point", "prediction"]);
            for &time in times {
                if !(time >= 0.0) {
                    return Err(usage(format!("times must be non-negative, got {time}")));
                }
                for (k, v) in sol.predict(&cross, &f0q, time).iter().enumerate() {
                    t.push(vec![time.into(), k.into(), (*v).into()]);
                }
            }
            ctx.emit_table(&t)
        }
        Command::DuMonitor {
            data,
            points,
            dim,
            width,
            eta,
            steps,
            record_every,
            mc_samples,
        } => {
            let (x, y) = labelled(data.as_deref(), *points, *dim, ctx.seed)?;
            let mut cfg = DuConfig::new(*width, *eta, *steps, ctx.seed);
            cfg.record_every = (*record_every).max(1);
            cfg.mc_samples = *mc_samples;
            let tr = du_convergence_monitor(&x, &y, &cfg)?;
            let mut t = Table::new(&[
                "t",
                "loss",
                "loss_bound",
                "lambda_min",
                "lambda0",
                "max_displacement",
                "r_prime",
                "h_drift",
            ]);
            let l0 = tr.loss[0];
            for k in 0..tr.times.len() {
                let time = tr.times[k];
                t.push(vec![
                    time.into(),
                    tr.loss[k].into(),
                    ((-tr.lambda0 * time).exp() * l0).into(),
                    tr.lambda_min[k].into(),
                    tr.lambda0.into(),
                    tr.max_displacement[k].into(),
                    tr.r_prime.into(),
                    tr.h_drift[k].into(),
                ]);
            }
            ctx.emit_table(&t)
        }
        Command::Align {
            curve,
            curve_points,
            data,
            points,
            dim,
        } => {
            let (x, y) = labelled(data.as_deref(), *points, *dim, ctx.seed)?;
            let h = h_infinity(&x);
            let times = if *curve {
                if *curve_points < 2 {
                    return Err(usage("--curve-points must be at least 2"));
                }
                log_grid(1e-2, 1e3, *curve_points)
            } else {
                Vec::new()
            };
            let rep = alignment(&h, &y, &DVector::zeros(y.len()), &times);
            let t = if *curve {
                let mut t = Table::new(&["t", "predicted_loss"]);
                for (time, v) in rep.times.iter().zip(&rep.predicted) {
                    t.push(vec![(*time).into(), (*v).into()]);
                }
                t
            } else {
                let mut t = Table::new(&["k", "eigenvalue", "projection", "efold_time"]);
                for (k, (l, p)) in rep.eigenvalues.iter().zip(&rep.projections).enumerate() {
                    t.push(vec![k.into(), (*l).into(), (*p).into(), (1.0 / l).into()]);
                }
                t
            };
            ctx.emit_table(&t)
        }
        _ => unreachable!(),
    }
}

/// Points uniform in `[-1, 1]^d`, one per column.
fn uniform_points(d: usize, m: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_for(seed);
    DMatrix::from_fn(d, m, |_, _| rng.random_range(-1.0..1.0))
}

fn outputs(cfg: &NetConfig, w: &WeightSet, x: &DMatrix<f64>) -> Result<DVector<f64>> {
    let vals: Vec<f64> = x
        .column_iter()
        .map(|c| output(cfg, w, &c.into_owned()).map(|o| o[0]))
        .collect::<Result<_, _>>()?;
    Ok(DVector::from_vec(vals))
}

/// Train gram and query-by-train cross kernel.
fn tangent_kernels(
    cfg: &NetConfig,
    w: &WeightSet,
    x: &DMatrix<f64>,
    xq: &DMatrix<f64>,
    kind: KernelKind,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    match kind {
        KernelKind::Limiting => Ok((limiting_ntk(x, cfg)?.matrix, nngp_cross(xq, x, cfg, true)?)),
        KernelKind::Empirical => {
            let (m, q) = (x.ncols(), xq.ncols());
            let both = DMatrix::from_columns(
                &x.column_iter().chain(xq.column_iter()).map(|c| c.into_owned()).collect::<Vec<_>>(),
            );
            let g = empirical_ntk(cfg, w, &both, 0.0)?.matrix;
            Ok((g.view((0, 0), (m, m)).into_owned(), g.view((m, 0), (q, m)).into_owned()))
        }
        KernelKind::Nngp => Err(usage("--kernel must be limiting or empirical")),
    }
}

/// Dataset with scalar labels from a CSV, or the random unit-norm set.
fn labelled(data: Option<&Path>, m: usize, d: usize, seed: u64) -> Result<(DMatrix<f64>, DVector<f64>)> {
    match data {
        Some(p) => {
            let ds = read_dataset(p)?;
            let y = ds.scalar_targets()?;
            Ok((ds.x, y))
        }
        None => {
            if m == 0 || d == 0 {
                bail!("--points and --dim must be positive");
            }
            Ok(du_dataset(m, d, seed))
        }
    }
}

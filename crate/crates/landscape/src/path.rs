use nalgebra::DMatrix;
use netcore::{rng_for, NetConfig, WeightSet};
use rand_distr::{Distribution, StandardNormal};

use crate::batch::{batch_forward, Loss};
use crate::inverse::{
    inverse_map, left_inverse, pull_back, reconstruct_first_layer, require_bijective, upper_inverses,
    RANK_THRESHOLD,
};
use crate::LandscapeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// One piece of a path. Snapshots are stored in the order they were
/// built, which is always away from the segment's own endpoint (θ_A for
/// side A, θ_B for side B).
#[derive(Debug, Clone)]
pub struct PathSegment {
    pub label: String,
    pub side: Side,
    pub t: Vec<f64>,
    pub thetas: Vec<WeightSet>,
    pub losses: Vec<f64>,
    /// Whether the segment is required to be loss non-increasing. Only
    /// the full-rank repair segments are exempt.
    pub monotone: bool,
}

impl PathSegment {
    /// Largest excess of the loss over its value at the segment start.
    pub fn max_rise(&self) -> f64 {
        let start = self.losses[0];
        self.losses.iter().map(|l| l - start).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct PathTrace {
    pub segments: Vec<PathSegment>,
    /// Loss at the point where the two sides meet.
    pub meeting_loss: f64,
    /// Loss change caused by the noise repair of each endpoint (0 when no
    /// repair was needed).
    pub repair_loss_change: [f64; 2],
}

impl PathTrace {
    /// Largest rise above segment start over all monotone segments.
    pub fn max_rise(&self) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.monotone)
            .map(PathSegment::max_rise)
            .fold(0.0, f64::max)
    }

    /// `(segment label, t, loss)` rows along the concatenated path
    /// θ_A → meeting point → θ_B. Side-B segments are reversed, with
    /// `t ↦ 1 − t`, so `t` increases within every segment.
    pub fn rows(&self) -> Vec<(String, f64, f64)> {
        let mut rows = Vec::new();
        for seg in self.segments.iter().filter(|s| s.side == Side::A) {
            for (t, l) in seg.t.iter().zip(&seg.losses) {
                rows.push((seg.label.clone(), *t, *l));
            }
        }
        for seg in self.segments.iter().rev().filter(|s| s.side == Side::B) {
            for (t, l) in seg.t.iter().zip(&seg.losses).rev() {
                rows.push((seg.label.clone(), 1.0 - t, *l));
            }
        }
        rows
    }
}

#[derive(Debug, Clone)]
pub struct PathOptions {
    pub points_per_segment: usize,
    /// Loss to reach at the meeting point.
    pub epsilon: f64,
    /// Seed for the rank repair noise and for random midpoints.
    pub seed: u64,
    /// How often a rank-losing interpolation may be split.
    pub max_subdivisions: usize,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            points_per_segment: 64,
            epsilon: 1e-6,
            seed: 0,
            max_subdivisions: 6,
        }
    }
}

fn grid(points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}

fn loss_at(config: &NetConfig, w: &WeightSet, x: &DMatrix<f64>, y: &DMatrix<f64>, loss: Loss) -> Result<f64, LandscapeError> {
    let pre = batch_forward(config, w, x)?;
    Ok(loss.value(pre.last().unwrap(), y))
}

fn with_first(first: DMatrix<f64>, upper: &[DMatrix<f64>]) -> WeightSet {
    let mut m = Vec::with_capacity(upper.len() + 1);
    m.push(first);
    m.extend(upper.iter().cloned());
    WeightSet::new(m)
}

fn full_row_rank(w: &DMatrix<f64>) -> bool {
    if w.nrows() > w.ncols() {
        return false;
    }
    let s = w.singular_values();
    let max = s.max();
    max > 0.0 && s.min() > RANK_THRESHOLD * max
}

/// Path from `weights` to `(h(W_{1:L}, H_{L+1}), W_{1:L})` along which the
/// network output on `x` does not change.
///
/// At every `t` the layer inputs are `X_l(t) = W̄_l† H_{l+1}(t) +
/// (1 − t)(I − W̄_l† W̄_l) X_l`, built from the top layer down, so each
/// layer still maps onto the (unchanged) representation above it while
/// the null-space part of the original `X_l` is switched off.
pub fn constant_output_segment(
    config: &NetConfig,
    weights: &WeightSet,
    x: &DMatrix<f64>,
    points: usize,
) -> Result<(Vec<f64>, Vec<WeightSet>), LandscapeError> {
    require_bijective(config.activation)?;
    let act = config.activation;
    let depth = config.depth();
    let pre = batch_forward(config, weights, x)?;
    let upper = &weights.matrices[1..];
    let xinv = left_inverse(x, "X")?;
    let inverses = upper_inverses(config, upper)?;
    let nullparts: Vec<DMatrix<f64>> = (1..=depth)
        .map(|l| {
            let xl = pre[l - 1].map(|z| act.value(z));
            let wbar = &weights.matrices[l] * config.layer_scale(l);
            &xl - &inverses[l - 1] * (wbar * &xl)
        })
        .collect();
    let c0 = config.layer_scale(0);
    let w0bar = &weights.matrices[0] * c0;
    let null0 = &w0bar - &w0bar * x * &xinv;
    let ts = grid(points);
    let thetas = ts
        .iter()
        .map(|&t| {
            if t == 0.0 {
                // Algebraically the start point; avoid a roundoff copy.
                return weights.clone();
            }
            let mut h = pre[depth].clone();
            for l in (1..=depth).rev() {
                let xl = &inverses[l - 1] * &h + &nullparts[l - 1] * (1.0 - t);
                h = inverse_map(act, &xl);
            }
            let w0 = (h * &xinv + &null0 * (1.0 - t)) / c0;
            with_first(w0, upper)
        })
        .collect();
    Ok((ts, thetas))
}

/// Path `θ(t) = (h(W_{1:L}, (1 − t) H_start + t H_target), W_{1:L})`.
/// For a convex loss its value is bounded by the chord between the two
/// end losses.
pub fn output_segment(
    config: &NetConfig,
    upper: &[DMatrix<f64>],
    x: &DMatrix<f64>,
    start: &DMatrix<f64>,
    target: &DMatrix<f64>,
    points: usize,
) -> Result<(Vec<f64>, Vec<WeightSet>), LandscapeError> {
    require_bijective(config.activation)?;
    let xinv = left_inverse(x, "X")?;
    let inverses = upper_inverses(config, upper)?;
    let c0 = config.layer_scale(0);
    let ts = grid(points);
    let thetas = ts
        .iter()
        .map(|&t| {
            let h = start * (1.0 - t) + target * t;
            let w0 = pull_back(config.activation, &inverses, &h) * &xinv / c0;
            with_first(w0, upper)
        })
        .collect();
    Ok((ts, thetas))
}

/// Moves the upper layers from `from` to `to` in a straight line while
/// re-solving the first layer so that the output stays `h_out`. When the
/// line passes through a rank-deficient matrix it is split at a random
/// full-rank midpoint.
#[allow(clippy::too_many_arguments)]
fn interpolation_segment(
    config: &NetConfig,
    from: &[DMatrix<f64>],
    to: &[DMatrix<f64>],
    x: &DMatrix<f64>,
    h_out: &DMatrix<f64>,
    points: usize,
    budget: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<WeightSet>), LandscapeError> {
    let ts = grid(points);
    let mut thetas = Vec::with_capacity(ts.len());
    for &t in &ts {
        let upper: Vec<DMatrix<f64>> = from.iter().zip(to).map(|(a, b)| a * (1.0 - t) + b * t).collect();
        if let Some(bad) = upper.iter().position(|w| !full_row_rank(w)) {
            if budget == 0 {
                return Err(LandscapeError::RankLost { layer: bad + 1, t });
            }
            let mut rng = rng_for(seed);
            let mid: Vec<DMatrix<f64>> = from
                .iter()
                .zip(to)
                .map(|(a, b)| {
                    let scale = 0.5 * (a.norm() + b.norm()) / (a.len() as f64).sqrt();
                    DMatrix::from_fn(a.nrows(), a.ncols(), |_, _| {
                        scale * { let z: f64 = StandardNormal.sample(&mut rng); z }
                    })
                })
                .collect();
            let (t1, th1) = interpolation_segment(config, from, &mid, x, h_out, points, budget - 1, seed + 1)?;
            let (t2, th2) = interpolation_segment(config, &mid, to, x, h_out, points, budget - 1, seed + 2)?;
            let mut tt: Vec<f64> = t1.iter().map(|t| 0.5 * t).collect();
            tt.extend(t2.iter().skip(1).map(|t| 0.5 + 0.5 * t));
            let mut th = th1;
            th.extend(th2.into_iter().skip(1));
            return Ok((tt, th));
        }
        let w0 = reconstruct_first_layer(config, &upper, x, h_out)?;
        thetas.push(with_first(w0, &upper));
    }
    Ok((ts, thetas))
}

/// Adds small noise to rank-deficient upper layers until all of them have
/// full row rank.
fn repair(config: &NetConfig, weights: &WeightSet, seed: u64) -> Result<Option<WeightSet>, LandscapeError> {
    let depth = config.depth();
    if (1..=depth).all(|l| full_row_rank(&weights.matrices[l])) {
        return Ok(None);
    }
    let mut rng = rng_for(seed);
    let mut w = weights.clone();
    for _ in 0..8 {
        for l in 1..=depth {
            let m = &mut w.matrices[l];
            if full_row_rank(m) {
                continue;
            }
            let norm = m.norm();
            let scale = if norm > 0.0 { 1e-6 * norm } else { 1e-6 } / (m.len() as f64).sqrt();
            for v in m.iter_mut() {
                *v += scale * { let z: f64 = StandardNormal.sample(&mut rng); z };
            }
        }
        if (1..=depth).all(|l| full_row_rank(&w.matrices[l])) {
            return Ok(Some(w));
        }
    }
    let bad = (1..=depth).find(|&l| !full_row_rank(&w.matrices[l])).unwrap();
    let s = w.matrices[bad].singular_values();
    Err(LandscapeError::RankDeficient {
        matrix: format!("W_{bad} after repair"),
        ratio: if s.max() > 0.0 { s.min() / s.max() } else { 0.0 },
    })
}

/// Output with loss below `bound`: the targets themselves for the square
/// loss, and a growing multiple of the ±1 labels for the logistic loss.
fn low_loss_output(loss: Loss, y: &DMatrix<f64>, bound: f64) -> DMatrix<f64> {
    match loss {
        Loss::Square => y.clone(),
        Loss::Logistic => {
            let mut scale = 1.0;
            while loss.value(&(y * scale), y) >= bound && scale < 1e3 {
                scale *= 2.0;
            }
            y * scale
        }
    }
}

fn segment(
    config: &NetConfig,
    label: &str,
    side: Side,
    (t, thetas): (Vec<f64>, Vec<WeightSet>),
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    loss: Loss,
    monotone: bool,
) -> Result<PathSegment, LandscapeError> {
    let losses = thetas
        .iter()
        .map(|w| loss_at(config, w, x, y, loss))
        .collect::<Result<_, _>>()?;
    Ok(PathSegment {
        label: label.to_string(),
        side,
        t,
        thetas,
        losses,
        monotone,
    })
}

/// Connects two weight configurations of the same architecture through a
/// common low-loss point without the loss rising along the way.
///
/// Side A: reparameterize the first layer at constant output, swap the
/// upper layers for those of θ_B at constant output, then move the output
/// convexly to a low-loss target. Side B: reparameterize, then move the
/// output to the same target. Both sides end at the same point.
pub fn constant_loss_path(
    config: &NetConfig,
    theta_a: &WeightSet,
    theta_b: &WeightSet,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    loss: Loss,
    opts: &PathOptions,
) -> Result<PathTrace, LandscapeError> {
    require_bijective(config.activation)?;
    loss.check_targets(y)?;
    theta_a.check_shapes(config)?;
    theta_b.check_shapes(config)?;
    if y.nrows() != config.output_dim() || y.ncols() != x.ncols() {
        return Err(LandscapeError::Shape("targets do not match data or output width".into()));
    }
    left_inverse(x, "X")?;
    let points = opts.points_per_segment;
    if theta_a == theta_b {
        let l = loss_at(config, theta_a, x, y, loss)?;
        let seg = PathSegment {
            label: "identical".into(),
            side: Side::A,
            t: vec![0.0],
            thetas: vec![theta_a.clone()],
            losses: vec![l],
            monotone: true,
        };
        return Ok(PathTrace {
            segments: vec![seg],
            meeting_loss: l,
            repair_loss_change: [0.0; 2],
        });
    }

    let mut segments = Vec::new();
    let mut repair_loss_change = [0.0; 2];
    let mut ends = Vec::new();
    for (k, (side, theta)) in [(Side::A, theta_a), (Side::B, theta_b)].into_iter().enumerate() {
        let name = if side == Side::A { "A" } else { "B" };
        let start = match repair(config, theta, opts.seed.wrapping_add(1000 + k as u64))? {
            Some(fixed) => {
                let ts = grid(points);
                let th: Vec<WeightSet> = ts
                    .iter()
                    .map(|&t| {
                        WeightSet::new(
                            theta
                                .matrices
                                .iter()
                                .zip(&fixed.matrices)
                                .map(|(a, b)| a * (1.0 - t) + b * t)
                                .collect(),
                        )
                    })
                    .collect();
                let seg = segment(config, &format!("{name}-repair"), side, (ts, th), x, y, loss, false)?;
                repair_loss_change[k] = seg.losses.last().unwrap() - seg.losses[0];
                segments.push(seg);
                fixed
            }
            None => theta.clone(),
        };
        let reparam = constant_output_segment(config, &start, x, points)?;
        let seg = segment(config, &format!("{name}-reparam"), side, reparam, x, y, loss, true)?;
        ends.push(seg.thetas.last().unwrap().clone());
        segments.push(seg);
    }

    let out_a = batch_forward(config, &ends[0], x)?.pop().unwrap();
    let out_b = batch_forward(config, &ends[1], x)?.pop().unwrap();
    let upper_b = ends[1].matrices[1..].to_vec();
    let swap = interpolation_segment(
        config,
        &ends[0].matrices[1..],
        &upper_b,
        x,
        &out_a,
        points,
        opts.max_subdivisions,
        opts.seed.wrapping_add(2000),
    )?;
    let swap = segment(config, "A-swap", Side::A, swap, x, y, loss, true)?;
    let bound = opts
        .epsilon
        .min(loss.value(&out_a, y))
        .min(loss.value(&out_b, y));
    let target = low_loss_output(loss, y, bound);
    let out_seg_a = output_segment(config, &upper_b, x, &out_a, &target, points)?;
    let out_seg_a = segment(config, "A-descend", Side::A, out_seg_a, x, y, loss, true)?;
    let out_seg_b = output_segment(config, &upper_b, x, &out_b, &target, points)?;
    let out_seg_b = segment(config, "B-descend", Side::B, out_seg_b, x, y, loss, true)?;
    let meeting_loss = *out_seg_a.losses.last().unwrap();

    let mut ordered: Vec<PathSegment> = Vec::new();
    let (a_first, b_first): (Vec<_>, Vec<_>) = segments.into_iter().partition(|s| s.side == Side::A);
    ordered.extend(a_first);
    ordered.push(swap);
    ordered.push(out_seg_a);
    ordered.extend(b_first);
    ordered.push(out_seg_b);
    Ok(PathTrace {
        segments: ordered,
        meeting_loss,
        repair_loss_change,
    })
}

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::Format;

/// Numerical experiments on the theory of deep learning.
///
/// Results go to `--out` (stdout when absent). The same flags and seed
/// always produce byte-identical output. Set DLTL_THREADS to cap the worker
/// threads. Exit status: 0 on success, 1 on domain errors, 2 on usage errors.
#[derive(Debug, Parser)]
#[command(name = "dltl", version, propagate_version = true, allow_negative_numbers = true, args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Base seed; Monte Carlo replicate r uses seed + r.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; tables default to csv, reports to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Monte Carlo replicates (each subcommand documents its default).
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    /// JSON file of flag values, e.g. {"command":"phase","act":"tanh"}.
    /// Keys are long flag names; command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

/// Inclusive grid `lo:hi:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        // Rounding keeps grid points like 0.6 from printing as 0.6000000000000001.
        (0..n).map(|k| ((self.lo + k as f64 * self.step) * 1e12).round() / 1e12).collect()
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, step] = parts.as_slice() else {
            return Err(format!("expected lo:hi:step, got '{s}'"));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}' in '{s}'"));
        let r = Range {
            lo: num(lo)?,
            hi: num(hi)?,
            step: num(step)?,
        };
        if !(r.step > 0.0) || !(r.hi >= r.lo) || !r.lo.is_finite() || !r.hi.is_finite() {
            return Err(format!("need finite lo <= hi and step > 0, got '{s}'"));
        }
        if (r.hi - r.lo) / r.step > 1e7 {
            return Err(format!("grid '{s}' has too many points"));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParamKind {
    Standard,
    Ntk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitKind {
    Gaussian,
    Orthogonal,
}

/// Network description shared by the kernel subcommands.
#[derive(Debug, Clone, Args)]
pub struct NetArgs {
    /// Layer widths n0,...,n_{L+1}.
    #[arg(long, value_delimiter = ',', default_value = "3,64,64,1")]
    pub widths: Vec<usize>,
    /// linear, relu, tanh or leaky_relu:ALPHA.
    #[arg(long, default_value = "relu")]
    pub act: String,
    /// Weight scale σ_w; defaults to the critical value of the activation
    /// (√2 for relu, 1 otherwise).
    #[arg(long)]
    pub sigma_w: Option<f64>,
    #[arg(long, value_enum, default_value_t = ParamKind::Ntk)]
    pub param: ParamKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    /// Infinite-width tangent kernel.
    Limiting,
    /// Infinite-width output covariance.
    Nngp,
    /// Tangent kernel of the network drawn with --seed.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossKind {
    Square,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Bartlett,
    Neyshabur,
    Pacbayes,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Phase diagram: q_inf, chi1 and the phase label over a σ_w² grid.
    /// Columns: sigma_w2,q_inf,chi1,phase.
    #[command(allow_negative_numbers = true)]
    Phase {
        #[arg(long, default_value = "tanh")]
        act: String,
        /// Grid lo:hi:step of σ_w².
        #[arg(long = "sigma-w2", default_value = "0.5:4.0:0.05")]
        sigma_w2: Range,
    },
    /// Length map V(q) and its derivative on a q grid. Columns: q,v,dv_dq.
    #[command(allow_negative_numbers = true)]
    Lengthmap {
        #[arg(long, default_value = "tanh")]
        act: String,
        #[arg(long = "sigma-w2", default_value_t = 1.0)]
        sigma_w2: f64,
        /// Grid lo:hi:step of q.
        #[arg(long, default_value = "0:4:0.1")]
        q: Range,
    },
    /// Singular value spectra of the input-output Jacobian.
    ///
    /// --analytic emits the product-Wishart law as phi,lambda,rho.
    /// --empirical emits pooled eigenvalues of J Jᵀ (column: eigenvalue)
    /// and writes a summary JSON {L, n, replicates, wasserstein_to_analytic}
    /// to --summary (default: OUT.summary.json, or stderr without --out).
    /// Default replicates: 50.
    #[command(allow_negative_numbers = true)]
    Spectrum {
        #[arg(long, conflicts_with = "empirical", required_unless_present = "empirical")]
        analytic: bool,
        #[arg(long)]
        empirical: bool,
        /// Number of hidden layers L.
        #[arg(long)]
        depth: usize,
        /// Curve points for --analytic.
        #[arg(long, default_value_t = 400)]
        points: usize,
        /// Layer width n for --empirical.
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value = "linear")]
        act: String,
        #[arg(long, value_enum, default_value_t = InitKind::Gaussian)]
        init: InitKind,
        /// Weight scale σ_w (default √2 for relu, 1 otherwise).
        #[arg(long)]
        sigma_w: Option<f64>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Deep linear network training time.
    ///
    /// With --scan-depth: one row per depth with columns
    /// L,eta_opt,steps,t_opt_formula where steps is the number of gradient
    /// descent steps at eta_opt. Otherwise the loss and mode trajectory of a
    /// single run at --depth: step,loss,u1,...
    #[command(allow_negative_numbers = true)]
    Lindyn {
        #[arg(long)]
        scan_depth: bool,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
        depths: Vec<usize>,
        #[arg(long, required_unless_present = "scan_depth")]
        depth: Option<usize>,
        /// Initial per-mode product.
        #[arg(long, default_value_t = 0.1)]
        u0: f64,
        /// Mode value that counts as learned (below --s).
        #[arg(long, default_value_t = 0.99)]
        uf: f64,
        /// Target singular value shared by all modes.
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        /// Number of modes (matrix size).
        #[arg(long, default_value_t = 4)]
        modes: usize,
        /// Learning rate for single runs (default: eta_opt).
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Constant-loss path between two trained networks.
    /// Columns: segment,t,loss.
    #[command(allow_negative_numbers = true)]
    Path {
        /// First weight file.
        #[arg(long)]
        a: PathBuf,
        /// Second weight file.
        #[arg(long)]
        b: PathBuf,
        /// Dataset CSV with columns y1..yk,x1..xd.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = LossKind::Square)]
        loss: LossKind,
        #[arg(long, default_value_t = 64)]
        points: usize,
        /// Loss to reach at the meeting point.
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
    },
    /// Kernel gram matrix on a dataset. Columns: i,j,value.
    #[command(allow_negative_numbers = true)]
    NtkKernel {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, value_enum, default_value_t = KernelKind::Limiting)]
        kind: KernelKind,
        /// Dataset CSV (x columns used); random points in [-1,1]^d otherwise.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Number of random points when no --data is given.
        #[arg(long, default_value_t = 8)]
        points: usize,
    },
    /// Closed-form predictions of the linearized network trained by
    /// gradient flow on the square loss. Columns: t,point,prediction.
    #[command(allow_negative_numbers = true)]
    NtkTrain {
        #[command(flatten)]
        net: NetArgs,
        /// Training CSV with columns y,x1..xd.
        #[arg(long)]
        data: PathBuf,
        /// Query CSV (x columns used); the training inputs by default.
        #[arg(long)]
        query: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        /// Times; `inf` gives the converged predictor.
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,2,5,10,inf")]
        times: Vec<f64>,
        /// Tangent kernel used for training (limiting or empirical).
        #[arg(long, value_enum, default_value_t = KernelKind::Limiting)]
        kernel: KernelKind,
    },
    /// Two-layer ReLU training monitor. Columns:
    /// t,loss,loss_bound,lambda_min,lambda0,max_displacement,r_prime,h_drift.
    #[command(allow_negative_numbers = true)]
    DuMonitor {
        /// Dataset CSV with y,x1..xd, inputs in the unit ball and |y| < 1.
        /// Without it, m unit-norm gaussian points in dimension d are drawn.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        points: usize,
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, default_value_t = 4096)]
        width: usize,
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        #[arg(long, default_value_t = 400)]
        steps: usize,
        #[arg(long, default_value_t = 10)]
        record_every: usize,
        /// Directions for the Monte Carlo check of H^∞.
        #[arg(long, default_value_t = 20_000)]
        mc_samples: usize,
    },
    /// Kernel alignment of the labels with the eigenbasis of H^∞, starting
    /// from a zero prediction. Columns: k,eigenvalue,projection,efold_time
    /// (efold_time = 1/eigenvalue). With --curve, the predicted loss
    /// Σ_k e^{-2 λ_k t} p_k² on a log time grid instead: t,predicted_loss.
    #[command(allow_negative_numbers = true)]
    Align {
        #[arg(long)]
        curve: bool,
        /// Number of log-spaced times in [1e-2, 1e3] for --curve.
        #[arg(long, default_value_t = 61)]
        curve_points: usize,
        /// Dataset CSV with y,x1..xd; random as in du-monitor otherwise.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        points: usize,
        #[arg(long, default_value_t = 10)]
        dim: usize,
    },
    /// Exact correlator polynomial of a deep linear network from a
    /// contraction spec JSON; emits [{power_of_inv_n, coefficient, monomial}].
    /// With --mc, also writes a Monte Carlo comparison CSV
    /// (n,estimate,std_error,exact,z) to --mc-out (stderr when absent).
    /// Default replicates: 2000.
    #[command(allow_negative_numbers = true)]
    Wick {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long)]
        mc: bool,
        #[arg(long, value_delimiter = ',', default_value = "8,32,128")]
        widths: Vec<usize>,
        #[arg(long)]
        mc_out: Option<PathBuf>,
    },
    /// Generalization bounds for a scalar-output network on a labelled
    /// dataset (CSV header y,x1..xd with y = ±1).
    #[command(allow_negative_numbers = true)]
    Bounds {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = Family::All)]
        family: Family,
        /// Margin γ.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Input norm bound B (default: largest input norm in the data).
        #[arg(long)]
        input_bound: Option<f64>,
        /// Prior mean weight file for PAC-Bayes (default: zero weights).
        #[arg(long)]
        prior: Option<PathBuf>,
        /// Posterior log-variance for PAC-Bayes.
        #[arg(long, default_value_t = -6.0)]
        log_var: f64,
        /// Prior log-variance for PAC-Bayes.
        #[arg(long, default_value_t = -4.0)]
        prior_log_var: f64,
        /// Posterior samples for the PAC-Bayes empirical risk.
        #[arg(long, default_value_t = 256)]
        samples: usize,
    },
}

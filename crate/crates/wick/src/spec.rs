use serde::{Deserialize, Serialize};

use crate::WickError;

/// One derivative tensor `T_{μ…}(x)`: the input label it is evaluated at
/// and its number of derivative indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Factor {
    pub input: usize,
    #[serde(default)]
    pub derivs: usize,
}

/// A correlator `Σ_μ Δ_μ E[T(x_1) ⋯ T(x_m)]` whose contractions pair
/// derivative indices of two factors. A pair `(i, j)` uses one derivative
/// slot of factor `i` and one of factor `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionSpec {
    pub factors: Vec<Factor>,
    #[serde(default)]
    pub pairs: Vec<(usize, usize)>,
    /// Input vectors indexed by label; needed only for numeric evaluation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<Vec<f64>>>,
}

/// Even- and odd-sized connected components of the cluster graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterCounts {
    pub n_even: usize,
    pub n_odd: usize,
}

impl ContractionSpec {
    /// `m` plain evaluations `f(x_{label})`.
    pub fn moments(labels: &[usize]) -> Self {
        Self {
            factors: labels.iter().map(|&input| Factor { input, derivs: 0 }).collect(),
            pairs: Vec::new(),
            inputs: None,
        }
    }

    pub fn with_inputs(mut self, inputs: Vec<Vec<f64>>) -> Self {
        self.inputs = Some(inputs);
        self
    }

    pub fn m(&self) -> usize {
        self.factors.len()
    }

    /// Number of distinct input labels (labels are `0..count`).
    pub fn input_count(&self) -> usize {
        self.factors.iter().map(|f| f.input + 1).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), WickError> {
        let m = self.m();
        let mut used = vec![0usize; m];
        for &(i, j) in &self.pairs {
            if i >= m || j >= m {
                return Err(WickError::InvalidSpec(format!("pair ({i}, {j}) refers to a missing factor")));
            }
            used[i] += 1;
            used[j] += 1;
        }
        for (k, (f, u)) in self.factors.iter().zip(&used).enumerate() {
            if f.derivs != *u {
                return Err(WickError::InvalidSpec(format!(
                    "factor {k} has {} derivative indices but {u} contraction ends",
                    f.derivs
                )));
            }
        }
        if let Some(inputs) = &self.inputs {
            if inputs.len() < self.input_count() {
                return Err(WickError::InvalidSpec(format!(
                    "{} input vectors given but label {} is used",
                    inputs.len(),
                    self.input_count() - 1
                )));
            }
            let d = inputs.first().map_or(0, Vec::len);
            if d == 0 || inputs.iter().any(|x| x.len() != d) {
                return Err(WickError::InvalidSpec("input vectors must share a positive dimension".into()));
            }
        }
        Ok(())
    }

    /// Input vectors, or an error when the spec carries none.
    pub fn require_inputs(&self) -> Result<&[Vec<f64>], WickError> {
        self.inputs
            .as_deref()
            .ok_or_else(|| WickError::InvalidSpec("numeric evaluation needs input vectors".into()))
    }

    /// Checks `validate` plus the depth restriction: networks with more
    /// than one hidden layer only take scalar inputs.
    pub fn validate_for_depth(&self, depth: usize) -> Result<(), WickError> {
        self.validate()?;
        if depth == 0 {
            return Err(WickError::InvalidSpec("depth must be at least 1".into()));
        }
        if depth >= 2 {
            if let Some(d) = self.inputs.as_ref().and_then(|x| x.first()).map(Vec::len) {
                if d != 1 {
                    return Err(WickError::VectorInputDeep(d));
                }
            }
        }
        Ok(())
    }

    /// Same correlator with factors reordered: new factor `k` is old factor
    /// `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut position = vec![0; order.len()];
        for (k, &old) in order.iter().enumerate() {
            position[old] = k;
        }
        Self {
            factors: order.iter().map(|&o| self.factors[o]).collect(),
            pairs: self.pairs.iter().map(|&(i, j)| (position[i], position[j])).collect(),
            inputs: self.inputs.clone(),
        }
    }

    /// Connected components of the cluster graph (factor indices).
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let m = self.m();
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(p: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            p[i] = r;
            r
        }
        for &(i, j) in &self.pairs {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            parent[a] = b;
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut index = vec![usize::MAX; m];
        for i in 0..m {
            let r = find(&mut parent, i);
            if index[r] == usize::MAX {
                index[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[index[r]].push(i);
        }
        groups
    }

    pub fn cluster_counts(&self) -> ClusterCounts {
        let clusters = self.clusters();
        let n_even = clusters.iter().filter(|c| c.len() % 2 == 0).count();
        ClusterCounts {
            n_even,
            n_odd: clusters.len() - n_even,
        }
    }
}

/// `s_C = n_e + n_o/2 − m/2`.
pub fn conjecture_exponent(spec: &ContractionSpec) -> f64 {
    let c = spec.cluster_counts();
    c.n_even as f64 + c.n_odd as f64 / 2.0 - spec.m() as f64 / 2.0
}

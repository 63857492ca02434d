use std::collections::BTreeMap;

use serde::Serialize;

use crate::pairings::{pairings_of, Pairing};
use crate::{ContractionSpec, WickError};

/// Upper bound on the number of diagrams a single correlator may expand to.
const MAX_DIAGRAMS: u64 = 5_000_000;
const MAX_FACTORS: usize = 8;

/// Product of input inner products `Π (x_a · x_b)`, stored as sorted label
/// pairs.
pub type Monomial = Vec<(usize, usize)>;

/// One admissible Feynman diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagram {
    /// Weight type carried by each contraction pair of the spec.
    pub contraction_types: Vec<usize>,
    /// Full matching of the factors for each weight type `0..=L`.
    pub matchings: Vec<Pairing>,
    /// Number of closed index loops.
    pub loops: usize,
    pub monomial: Monomial,
    /// `(m′, l′)` for each connected component of the diagram.
    pub components: Vec<(usize, usize)>,
}

impl Diagram {
    /// Exponent of `1/n` contributed by this diagram.
    pub fn power_of_inv_n(&self, depth: usize) -> i64 {
        let m: usize = self.components.iter().map(|c| c.0).sum();
        (depth * m / 2) as i64 - self.loops as i64
    }
}

/// A single term `coefficient · n^{−power_of_inv_n} · monomial`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub power_of_inv_n: i64,
    pub coefficient: f64,
    pub monomial: Vec<[usize; 2]>,
}

/// Polynomial in `1/n` with monomial coefficients. Coefficients are exact
/// diagram counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Polynomial {
    terms: BTreeMap<(i64, Monomial), u64>,
}

impl Polynomial {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add(&mut self, power: i64, monomial: Monomial) {
        *self.terms.entry((power, monomial)).or_insert(0) += 1;
    }

    /// Terms ordered by power of `1/n`, then monomial.
    pub fn terms(&self) -> Vec<Term> {
        self.terms
            .iter()
            .map(|((p, mono), &c)| Term {
                power_of_inv_n: *p,
                coefficient: c as f64,
                monomial: mono.iter().map(|&(a, b)| [a, b]).collect(),
            })
            .collect()
    }

    /// Exact coefficient of `n^{−power}·monomial` (monomial pairs in any order).
    pub fn coefficient(&self, power: i64, monomial: &[(usize, usize)]) -> u64 {
        let key = normalize(monomial.to_vec());
        self.terms.get(&(power, key)).copied().unwrap_or(0)
    }

    /// Largest exponent `s` with a nonzero `n^s` term, `None` for zero.
    pub fn leading_exponent(&self) -> Option<i64> {
        self.terms.keys().map(|(p, _)| -p).max()
    }

    /// Collapses monomials at the given inputs: `(power_of_inv_n, value)`.
    pub fn coefficients_at(&self, inputs: &[Vec<f64>]) -> Vec<(i64, f64)> {
        let mut by_power: BTreeMap<i64, f64> = BTreeMap::new();
        for ((p, mono), &c) in &self.terms {
            *by_power.entry(*p).or_insert(0.0) += c as f64 * monomial_value(mono, inputs);
        }
        by_power.into_iter().collect()
    }

    pub fn evaluate(&self, n: f64, inputs: &[Vec<f64>]) -> f64 {
        self.coefficients_at(inputs)
            .into_iter()
            .map(|(p, v)| v * n.powi(-(p as i32)))
            .sum()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn monomial_value(mono: &[(usize, usize)], inputs: &[Vec<f64>]) -> f64 {
    mono.iter().map(|&(a, b)| dot(&inputs[a], &inputs[b])).product()
}

fn normalize(mut mono: Monomial) -> Monomial {
    for p in mono.iter_mut() {
        if p.0 > p.1 {
            *p = (p.1, p.0);
        }
    }
    mono.sort_unstable();
    mono
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = i;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

/// Calls `visit` on every admissible diagram of `spec` for a depth-`depth`
/// linear network.
fn for_each_diagram(spec: &ContractionSpec, depth: usize, mut visit: impl FnMut(Diagram)) -> Result<(), WickError> {
    spec.validate_for_depth(depth)?;
    let m = spec.m();
    if m > MAX_FACTORS {
        return Err(WickError::TooLarge(format!("at most {MAX_FACTORS} factors, got {m}")));
    }
    if m % 2 == 1 {
        return Ok(());
    }
    let types = depth + 1;
    let npairs = spec.pairs.len();
    let mut assignment = vec![0usize; npairs];
    loop {
        if let Some(per_type) = matchings_for(spec, &assignment, types)? {
            let mut choice = vec![0usize; types];
            'outer: loop {
                let matchings: Vec<Pairing> = (0..types)
                    .map(|t| {
                        let mut full = per_type[t].0.clone();
                        full.extend_from_slice(&per_type[t].1[choice[t]]);
                        full
                    })
                    .collect();
                visit(build_diagram(spec, depth, &assignment, matchings));
                for t in 0..types {
                    choice[t] += 1;
                    if choice[t] < per_type[t].1.len() {
                        continue 'outer;
                    }
                    choice[t] = 0;
                }
                break;
            }
        }
        // Odometer over the type of each contraction.
        let mut k = 0;
        while k < npairs {
            assignment[k] += 1;
            if assignment[k] < types {
                break;
            }
            assignment[k] = 0;
            k += 1;
        }
        if k == npairs {
            return Ok(());
        }
    }
}

type TypeMatchings = (Pairing, Vec<Pairing>);

/// For each weight type: the forced contraction edges and every Wick
/// pairing of the factors that still carry that weight. `None` when the
/// assignment contributes nothing.
fn matchings_for(
    spec: &ContractionSpec,
    assignment: &[usize],
    types: usize,
) -> Result<Option<Vec<TypeMatchings>>, WickError> {
    let m = spec.m();
    let mut removed = vec![vec![false; types]; m];
    for (&(i, j), &t) in spec.pairs.iter().zip(assignment) {
        // A multilinear function has no second derivative within one
        // weight type, so each factor may lose a type at most once.
        if removed[i][t] {
            return Ok(None);
        }
        removed[i][t] = true;
        if removed[j][t] {
            return Ok(None);
        }
        removed[j][t] = true;
    }
    let mut out = Vec::with_capacity(types);
    let mut total: u64 = 1;
    for t in 0..types {
        let forced: Pairing = spec
            .pairs
            .iter()
            .zip(assignment)
            .filter(|(_, &a)| a == t)
            .map(|(&(i, j), _)| (i.min(j), i.max(j)))
            .collect();
        let free: Vec<usize> = (0..m).filter(|&i| !removed[i][t]).collect();
        if free.len() % 2 == 1 {
            return Ok(None);
        }
        let mut wick = Vec::new();
        pairings_of(&free, &mut Vec::new(), &mut wick);
        total = total.saturating_mul(wick.len() as u64);
        if total > MAX_DIAGRAMS {
            return Err(WickError::TooLarge(format!(
                "correlator expands to more than {MAX_DIAGRAMS} diagrams"
            )));
        }
        out.push((forced, wick));
    }
    Ok(Some(out))
}

fn build_diagram(spec: &ContractionSpec, depth: usize, assignment: &[usize], matchings: Vec<Pairing>) -> Diagram {
    let m = spec.m();
    // Vertex (i, level) for levels 1..=depth; level ℓ indexes hidden layer ℓ.
    let vertex = |i: usize, level: usize| i * depth + level - 1;
    let mut lines = UnionFind::new(m * depth);
    let mut factors = UnionFind::new(m);
    let mut monomial = Vec::new();
    for (t, matching) in matchings.iter().enumerate() {
        for &(i, j) in matching {
            factors.union(i, j);
            if t == 0 {
                let (a, b) = (spec.factors[i].input, spec.factors[j].input);
                monomial.push((a.min(b), a.max(b)));
            }
            // W_t carries the indices of levels t and t + 1 when present.
            for level in [t, t + 1] {
                if (1..=depth).contains(&level) {
                    lines.union(vertex(i, level), vertex(j, level));
                }
            }
        }
    }
    let mut loop_roots = Vec::new();
    let mut comp_of = BTreeMap::new();
    for i in 0..m {
        let c = factors.find(i);
        let entry = comp_of.entry(c).or_insert((0usize, Vec::new()));
        entry.0 += 1;
        for level in 1..=depth {
            let r = lines.find(vertex(i, level));
            if !entry.1.contains(&r) {
                entry.1.push(r);
            }
            if !loop_roots.contains(&r) {
                loop_roots.push(r);
            }
        }
    }
    Diagram {
        contraction_types: assignment.to_vec(),
        matchings,
        loops: loop_roots.len(),
        monomial: normalize(monomial),
        components: comp_of.into_values().map(|(mm, roots)| (mm, roots.len())).collect(),
    }
}

/// Every admissible diagram of `spec` at depth `depth`.
pub fn diagrams(spec: &ContractionSpec, depth: usize) -> Result<Vec<Diagram>, WickError> {
    let mut out = Vec::new();
    for_each_diagram(spec, depth, |d| out.push(d))?;
    Ok(out)
}

/// Exact `C` as a polynomial in `1/n`.
pub fn exact_correlation(spec: &ContractionSpec, depth: usize) -> Result<Polynomial, WickError> {
    let mut poly = Polynomial::default();
    for_each_diagram(spec, depth, |d| {
        let p = d.power_of_inv_n(depth);
        poly.add(p, d.monomial);
    })?;
    Ok(poly)
}

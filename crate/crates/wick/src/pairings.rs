use crate::WickError;

/// An unordered perfect matching, each pair stored as `(smaller, larger)`.
pub type Pairing = Vec<(usize, usize)>;

/// `(2k − 1)!!`.
pub fn double_factorial(k: usize) -> u64 {
    (1..=k as u64).map(|j| 2 * j - 1).product()
}

/// All perfect matchings of `{0, …, 2k − 1}`, `1 ≤ k` and `2k ≤ 12`.
pub fn enumerate_pairings(k: usize) -> Result<Vec<Pairing>, WickError> {
    if k == 0 || 2 * k > 12 {
        return Err(WickError::TooLarge(format!("pairings need 1 <= k and 2k <= 12, got k = {k}")));
    }
    let items: Vec<usize> = (0..2 * k).collect();
    let mut out = Vec::new();
    pairings_of(&items, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Matchings of an arbitrary even-sized list of labels (empty list: one
/// empty matching).
pub(crate) fn pairings_of(items: &[usize], cur: &mut Pairing, out: &mut Vec<Pairing>) {
    if items.is_empty() {
        out.push(cur.clone());
        return;
    }
    let first = items[0];
    for j in 1..items.len() {
        let mut rest = Vec::with_capacity(items.len() - 2);
        rest.extend_from_slice(&items[1..j]);
        rest.extend_from_slice(&items[j + 1..]);
        let second = items[j];
        cur.push((first.min(second), first.max(second)));
        pairings_of(&rest, cur, out);
        cur.pop();
    }
}

//! Sparse layer-to-resource mapping.
//!
//! Each of the `J` layers spreads its codewords over `N` of the `K` shared
//! resources. The occupied positions of layer `j` form the binary indicator
//! `f_j`; stacking the indicators column-wise gives the `K x J` factor graph
//! matrix `F`, where layer `j` and resource `k` are connected iff
//! `F[k][j] = 1`.

use itertools::Itertools;

use crate::error::{param, Result, ScmaError};

/// Largest number of resources accepted by the graph builders.
pub const MAX_RESOURCES: usize = 16;

/// Binomial coefficient `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Binary indicator of the resources occupied by one layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerSignature {
    indicator: Vec<bool>,
    layer_index: usize,
}

impl LayerSignature {
    /// Builds a signature from a 0/1 indicator. At least one and fewer than
    /// `K` entries must be set.
    pub fn new(indicator: Vec<bool>, layer_index: usize) -> Result<Self> {
        let k = indicator.len();
        let n = indicator.iter().filter(|&&b| b).count();
        if n == 0 || n >= k {
            return param(format!(
                "signature must have 1 <= N < K nonzero entries, got N={n}, K={k}"
            ));
        }
        Ok(Self {
            indicator,
            layer_index,
        })
    }

    /// Builds a signature of length `k` with ones at `support`.
    pub fn from_support(k: usize, support: &[usize], layer_index: usize) -> Result<Self> {
        let mut indicator = vec![false; k];
        for &s in support {
            if s >= k {
                return param(format!("support index {s} out of range for K={k}"));
            }
            if indicator[s] {
                return param(format!("duplicate support index {s}"));
            }
            indicator[s] = true;
        }
        Self::new(indicator, layer_index)
    }

    pub fn indicator(&self) -> &[bool] {
        &self.indicator
    }

    pub fn layer_index(&self) -> usize {
        self.layer_index
    }

    /// Number of resources `K`.
    pub fn resources(&self) -> usize {
        self.indicator.len()
    }

    /// Number of occupied resources `N`.
    pub fn weight(&self) -> usize {
        self.indicator.iter().filter(|&&b| b).count()
    }

    /// Occupied resource indices in increasing order.
    pub fn support(&self) -> Vec<usize> {
        self.indicator
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| b.then_some(k))
            .collect()
    }

    /// Position of resource `k` within the support, if occupied.
    pub fn local_dimension(&self, k: usize) -> Option<usize> {
        if !*self.indicator.get(k)? {
            return None;
        }
        Some(self.indicator[..k].iter().filter(|&&b| b).count())
    }
}

/// Number of resources shared by two distinct signatures.
///
/// For signatures of the same weight `N` over `K` resources the result
/// lies in `[max(0, 2N - K), N - 1]`.
pub fn overlap(a: &LayerSignature, b: &LayerSignature) -> Result<usize> {
    if a.resources() != b.resources() {
        return param(format!(
            "signatures have different lengths {} and {}",
            a.resources(),
            b.resources()
        ));
    }
    if a.indicator == b.indicator {
        return Err(ScmaError::Identity);
    }
    Ok(a
        .indicator
        .iter()
        .zip(&b.indicator)
        .filter(|(&x, &y)| x && y)
        .count())
}

/// `K x N` binary matrix placing the `N` constellation dimensions on the
/// occupied resources: the identity `I_N` with `K - N` zero rows inserted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingMatrix {
    /// For each of the `K` rows, the basis column it carries (if any).
    rows: Vec<Option<usize>>,
    cols: usize,
}

impl MappingMatrix {
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry `(row, col)` as 0/1.
    pub fn entry(&self, row: usize, col: usize) -> u8 {
        u8::from(self.rows[row] == Some(col))
    }

    /// Dense 0/1 representation.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.rows())
            .map(|r| (0..self.cols).map(|c| self.entry(r, c)).collect())
            .collect()
    }

    /// Computes `V c` for an `N`-vector `c`.
    pub fn apply<T: Copy + Default>(&self, c: &[T]) -> Result<Vec<T>> {
        if c.len() != self.cols {
            return param(format!(
                "mapping matrix expects {} dimensions, got {}",
                self.cols,
                c.len()
            ));
        }
        Ok(self
            .rows
            .iter()
            .map(|r| r.map_or_else(T::default, |n| c[n]))
            .collect())
    }
}

/// Mapping matrix `V` of a layer signature.
pub fn mapping_matrix(sig: &LayerSignature) -> MappingMatrix {
    let mut next = 0;
    let rows = sig
        .indicator
        .iter()
        .map(|&b| {
            b.then(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    MappingMatrix {
        rows,
        cols: sig.weight(),
    }
}

/// Bipartite graph between `J` layer nodes and `K` resource nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorGraph {
    resources: usize,
    weight: usize,
    layers: Vec<LayerSignature>,
    degrees: Vec<usize>,
}

fn check_dims(k: usize, n: usize) -> Result<()> {
    if n < 1 || n >= k || k > MAX_RESOURCES {
        return param(format!(
            "need 1 <= N < K <= {MAX_RESOURCES}, got K={k}, N={n}"
        ));
    }
    Ok(())
}

fn lexicographic_supports(k: usize, n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..k).combinations(n)
}

/// Full-load graph: one layer per `N`-subset of the `K` resources, in
/// lexicographic order of the subsets. `J = C(K, N)` and every resource has
/// degree `C(K-1, N-1)`.
pub fn build_full_graph(k: usize, n: usize) -> Result<FactorGraph> {
    check_dims(k, n)?;
    let supports: Vec<_> = lexicographic_supports(k, n).collect();
    FactorGraph::from_supports(k, &supports)
}

/// Partially loaded graph with `J <= C(K, N)` layers.
///
/// Looks for `J` columns whose resource degrees all lie in
/// `{floor(JN/K), ceil(JN/K)}` by a depth-first search over subsets in
/// lexicographic order, capped at [`BALANCE_SEARCH_BUDGET`] nodes. If the
/// search gives up, columns are picked greedily instead: each step takes
/// the unused subset minimizing the resulting maximum degree, then the sum
/// of squared degrees, then the lexicographically first one.
///
/// The chosen columns are emitted in lexicographic order, so
/// `J = C(K, N)` reproduces [`build_full_graph`].
pub fn build_subgraph(k: usize, n: usize, j: usize) -> Result<FactorGraph> {
    check_dims(k, n)?;
    let total = binomial(k, n);
    if j == 0 || j > total {
        return param(format!("need 1 <= J <= C({k},{n}) = {total}, got J={j}"));
    }
    let candidates: Vec<_> = lexicographic_supports(k, n).collect();
    let used = balanced_selection(&candidates, k, n, j)
        .unwrap_or_else(|| greedy_selection(&candidates, k, j));
    let chosen: Vec<_> = candidates
        .into_iter()
        .zip(used)
        .filter_map(|(s, u)| u.then_some(s))
        .collect();
    FactorGraph::from_supports(k, &chosen)
}

/// Node budget of the balanced-selection search.
pub const BALANCE_SEARCH_BUDGET: usize = 200_000;

fn balanced_selection(candidates: &[Vec<usize>], k: usize, n: usize, j: usize) -> Option<Vec<bool>> {
    struct Search<'a> {
        candidates: &'a [Vec<usize>],
        lo: usize,
        hi: usize,
        n: usize,
        degrees: Vec<usize>,
        used: Vec<bool>,
        nodes: usize,
    }

    impl Search<'_> {
        fn run(&mut self, start: usize, left: usize) -> Option<bool> {
            self.nodes += 1;
            if self.nodes > BALANCE_SEARCH_BUDGET {
                return None;
            }
            if left == 0 {
                return Some(self.degrees.iter().all(|&d| d >= self.lo));
            }
            let deficit: usize = self.degrees.iter().map(|&d| self.lo.saturating_sub(d)).sum();
            if deficit > left * self.n || self.candidates.len() - start < left {
                return Some(false);
            }
            for c in start..self.candidates.len() {
                if self.candidates[c].iter().any(|&r| self.degrees[r] >= self.hi) {
                    continue;
                }
                for &r in &self.candidates[c] {
                    self.degrees[r] += 1;
                }
                self.used[c] = true;
                if self.run(c + 1, left - 1)? {
                    return Some(true);
                }
                self.used[c] = false;
                for &r in &self.candidates[c] {
                    self.degrees[r] -= 1;
                }
            }
            Some(false)
        }
    }

    let incidences = j * n;
    let mut search = Search {
        candidates,
        lo: incidences / k,
        hi: incidences.div_ceil(k),
        n,
        degrees: vec![0; k],
        used: vec![false; candidates.len()],
        nodes: 0,
    };
    match search.run(0, j) {
        Some(true) => Some(search.used),
        _ => None,
    }
}

fn greedy_selection(candidates: &[Vec<usize>], k: usize, j: usize) -> Vec<bool> {
    let mut used = vec![false; candidates.len()];
    let mut degrees = vec![0usize; k];
    for _ in 0..j {
        let mut best: Option<(usize, (usize, usize))> = None;
        for (c, support) in candidates.iter().enumerate() {
            if used[c] {
                continue;
            }
            let next = (0..k).map(|r| degrees[r] + usize::from(support.contains(&r)));
            let score = (next.clone().max().unwrap_or(0), next.map(|d| d * d).sum());
            if best.is_none_or(|(_, b)| score < b) {
                best = Some((c, score));
            }
        }
        let (c, _) = best.expect("j <= number of candidates");
        used[c] = true;
        for &r in &candidates[c] {
            degrees[r] += 1;
        }
    }
    used
}

impl FactorGraph {
    fn from_supports(k: usize, supports: &[Vec<usize>]) -> Result<Self> {
        let layers = supports
            .iter()
            .enumerate()
            .map(|(j, s)| LayerSignature::from_support(k, s, j))
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers)
    }

    fn from_layers(layers: Vec<LayerSignature>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| ScmaError::Parameter("factor graph needs at least one layer".into()))?;
        let (k, n) = (first.resources(), first.weight());
        for (j, l) in layers.iter().enumerate() {
            if l.resources() != k || l.weight() != n {
                return param(format!("layer {j} does not have K={k}, N={n}"));
            }
        }
        for (a, b) in layers.iter().tuple_combinations() {
            if a.indicator == b.indicator {
                return param(format!(
                    "layers {} and {} share the same signature",
                    a.layer_index, b.layer_index
                ));
            }
        }
        let degrees = (0..k)
            .map(|r| layers.iter().filter(|l| l.indicator[r]).count())
            .collect();
        Ok(Self {
            resources: k,
            weight: n,
            layers,
            degrees,
        })
    }

    /// Rebuilds a graph from a `K x J` 0/1 matrix.
    pub fn from_matrix(matrix: &[Vec<u8>]) -> Result<Self> {
        let k = matrix.len();
        let j = matrix.first().map_or(0, Vec::len);
        if k == 0 || j == 0 || matrix.iter().any(|row| row.len() != j) {
            return param("factor graph matrix must be a non-empty rectangle");
        }
        if matrix.iter().flatten().any(|&v| v > 1) {
            return param("factor graph matrix entries must be 0 or 1");
        }
        let layers = (0..j)
            .map(|c| LayerSignature::new(matrix.iter().map(|row| row[c] == 1).collect(), c))
            .collect::<Result<Vec<_>>>()?;
        check_dims(k, layers[0].weight())?;
        Self::from_layers(layers)
    }

    /// Number of resources `K`.
    pub fn resources(&self) -> usize {
        self.resources
    }

    /// Nonzero dimensions per layer `N`.
    pub fn weight(&self) -> usize {
        self.weight
    }

    /// Number of layers `J`.
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[LayerSignature] {
        &self.layers
    }

    pub fn layer(&self, j: usize) -> &LayerSignature {
        &self.layers[j]
    }

    /// Number of layers colliding at each resource.
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Largest resource degree `d_f`.
    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// Overloading factor `J / K`.
    pub fn overloading(&self) -> f64 {
        self.num_layers() as f64 / self.resources as f64
    }

    /// Layers connected to resource `k`, in layer order.
    pub fn layers_at(&self, k: usize) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter_map(|(j, l)| l.indicator[k].then_some(j))
            .collect()
    }

    /// Dense `K x J` representation of `F`.
    pub fn matrix(&self) -> Vec<Vec<u8>> {
        (0..self.resources)
            .map(|r| self.layers.iter().map(|l| u8::from(l.indicator[r])).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(bits: &[u8]) -> LayerSignature {
        LayerSignature::new(bits.iter().map(|&b| b == 1).collect(), 0).unwrap()
    }

    #[test]
    fn full_graph_shapes() {
        let g = build_full_graph(4, 2).unwrap();
        assert_eq!(g.num_layers(), 6);
        assert_eq!(g.degrees(), &[3, 3, 3, 3]);
        assert_eq!(g.overloading(), 1.5);
        assert_eq!(g.layer(0).support(), vec![0, 1]);
        assert_eq!(g.layer(5).support(), vec![2, 3]);

        let g = build_full_graph(2, 1).unwrap();
        assert_eq!(g.num_layers(), 2);
        assert_eq!(g.max_degree(), 1);
        assert_eq!(g.overloading(), 1.0);
    }

    #[test]
    fn full_graph_six_two_matches_enumeration() {
        // independent count: each resource appears in the 2-subsets that contain it
        let mut per_row = [0usize; 6];
        let mut count = 0;
        for a in 0..6 {
            for b in (a + 1)..6 {
                per_row[a] += 1;
                per_row[b] += 1;
                count += 1;
            }
        }
        let g = build_full_graph(6, 2).unwrap();
        assert_eq!(g.num_layers(), count);
        assert_eq!(g.num_layers(), 15);
        assert_eq!(g.degrees(), &per_row);
        assert!(per_row.iter().all(|&d| d == 5));
        assert_eq!(g.overloading(), 2.5);
    }

    #[test]
    fn invalid_dimensions() {
        assert!(matches!(build_full_graph(4, 4), Err(ScmaError::Parameter(_))));
        assert!(matches!(build_full_graph(4, 0), Err(ScmaError::Parameter(_))));
        assert!(matches!(build_full_graph(17, 2), Err(ScmaError::Parameter(_))));
        assert!(matches!(build_subgraph(4, 2, 7), Err(ScmaError::Parameter(_))));
        assert!(matches!(build_subgraph(4, 2, 0), Err(ScmaError::Parameter(_))));
    }

    #[test]
    fn subgraph_full_load_is_full_graph() {
        assert_eq!(build_subgraph(4, 2, 6).unwrap(), build_full_graph(4, 2).unwrap());
    }

    #[test]
    fn subgraph_two_layers_disjoint() {
        let g = build_subgraph(4, 2, 2).unwrap();
        assert_eq!(overlap(g.layer(0), g.layer(1)).unwrap(), 0);
        assert!(g.degrees().iter().all(|&d| d <= 1));
    }

    /// Smallest achievable max degree over all column subsets of size `j`.
    fn min_max_degree_exhaustive(k: usize, n: usize, j: usize) -> usize {
        let cols: Vec<Vec<usize>> = (0..k).combinations(n).collect();
        cols.iter()
            .combinations(j)
            .map(|pick| {
                (0..k)
                    .map(|r| pick.iter().filter(|c| c.contains(&r)).count())
                    .max()
                    .unwrap()
            })
            .min()
            .unwrap()
    }

    #[test]
    fn subgraph_four_layers_balanced() {
        assert_eq!(min_max_degree_exhaustive(4, 2, 4), 2);
        let g = build_subgraph(4, 2, 4).unwrap();
        assert_eq!(g.max_degree(), 2);
    }

    #[test]
    fn subgraph_greedy_reaches_exhaustive_optimum() {
        for (k, n) in [(4, 2), (5, 2), (5, 3), (6, 2), (6, 3)] {
            for j in 1..=binomial(k, n) {
                let g = build_subgraph(k, n, j).unwrap();
                assert_eq!(
                    g.max_degree(),
                    min_max_degree_exhaustive(k, n, j),
                    "K={k} N={n} J={j}"
                );
                let min = *g.degrees().iter().min().unwrap();
                assert!(g.max_degree() - min <= 1, "K={k} N={n} J={j} {:?}", g.degrees());
            }
        }
    }

    #[test]
    fn greedy_fallback_is_balanced_on_small_loads() {
        let cands: Vec<Vec<usize>> = (0..4).combinations(2).collect();
        let used = greedy_selection(&cands, 4, 2);
        assert_eq!(used, vec![true, false, false, false, false, true]);
    }

    #[test]
    fn large_graphs_build() {
        let g = build_subgraph(16, 8, 40).unwrap();
        assert_eq!(g.num_layers(), 40);
        assert!(g.max_degree() - g.degrees().iter().min().unwrap() <= 1);
    }

    #[test]
    fn subgraph_is_deterministic() {
        assert_eq!(build_subgraph(6, 3, 11).unwrap(), build_subgraph(6, 3, 11).unwrap());
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(overlap(&sig(&[1, 1, 0, 0]), &sig(&[0, 0, 1, 1])).unwrap(), 0);
        assert_eq!(overlap(&sig(&[1, 1, 0, 0]), &sig(&[1, 0, 1, 0])).unwrap(), 1);
        assert!(matches!(
            overlap(&sig(&[1, 1, 0, 0]), &sig(&[1, 1, 0, 0])),
            Err(ScmaError::Identity)
        ));
        let g = build_full_graph(4, 3).unwrap();
        for (a, b) in g.layers().iter().tuple_combinations() {
            assert_eq!(overlap(a, b).unwrap(), 2);
        }
    }

    #[test]
    fn mapping_matrix_examples() {
        let v = mapping_matrix(&sig(&[1, 0, 1, 0]));
        assert_eq!(v.to_dense(), vec![vec![1, 0], vec![0, 0], vec![0, 1], vec![0, 0]]);
        let v = mapping_matrix(&sig(&[0, 0, 1, 1]));
        assert_eq!(v.to_dense(), vec![vec![0, 0], vec![0, 0], vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn mapping_matrix_support_and_orthonormal_columns() {
        for k in 2..=6 {
            for n in 1..k {
                for s in build_full_graph(k, n).unwrap().layers() {
                    let v = mapping_matrix(s);
                    let c: Vec<i64> = (1..=n as i64).collect();
                    let x = v.apply(&c).unwrap();
                    let nz: Vec<usize> = (0..k).filter(|&r| x[r] != 0).collect();
                    assert_eq!(nz, s.support());
                    let d = v.to_dense();
                    for a in 0..n {
                        for b in 0..n {
                            let dot: u8 = (0..k).map(|r| d[r][a] * d[r][b]).sum();
                            assert_eq!(dot, u8::from(a == b));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn matrix_round_trip() {
        let g = build_subgraph(5, 2, 7).unwrap();
        assert_eq!(FactorGraph::from_matrix(&g.matrix()).unwrap(), g);
        assert!(FactorGraph::from_matrix(&[vec![1, 1], vec![0, 0]]).is_err());
    }

    #[test]
    fn local_dimension_follows_support_order() {
        let s = sig(&[0, 1, 0, 1]);
        assert_eq!(s.local_dimension(1), Some(0));
        assert_eq!(s.local_dimension(3), Some(1));
        assert_eq!(s.local_dimension(0), None);
    }
}

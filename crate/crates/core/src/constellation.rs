//! Multi-dimensional mother constellations.
//!
//! A mother constellation is built in three steps: take a cubic lattice
//! constellation, rotate it by an orthogonal matrix (which keeps the
//! Euclidean distance profile but changes product distance, per-dimension
//! power and projection counts), then combine two real constellations as the
//! real and imaginary parts of an `N`-dimensional complex constellation.

use std::f64::consts::{FRAC_PI_2, PI};

use itertools::Itertools;
use num_complex::Complex64;

use crate::error::{param, Result, ScmaError};
use crate::optimize::golden_section_maximize;

/// Coordinates closer than this are considered equal by product distance.
pub const COORDINATE_TOL: f64 = 1e-9;
/// Projection values closer than this are merged.
pub const PROJECTION_TOL: f64 = 1e-6;
/// Coordinates with magnitude below this carry zero power.
const ZERO_AMPLITUDE: f64 = 1e-9;

pub(crate) fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Rotation angle `atan((1 + sqrt 5) / 2)` maximizing the minimum product
/// distance of the square `{(+-1, +-1)}`.
pub fn golden_angle() -> f64 {
    ((1.0 + 5f64.sqrt()) / 2.0).atan()
}

/// A coordinate type supporting the distance computations below.
pub trait Coordinate: Copy {
    /// `|a - b|`.
    fn abs_diff(self, other: Self) -> f64;
}

impl Coordinate for f64 {
    fn abs_diff(self, other: Self) -> f64 {
        (self - other).abs()
    }
}

impl Coordinate for Complex64 {
    fn abs_diff(self, other: Self) -> f64 {
        (self - other).norm()
    }
}

fn squared_distance<T: Coordinate>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y).powi(2)).sum()
}

/// Minimum Euclidean distance over distinct pairs. Needs at least two points.
pub fn min_euclidean_distance<T: Coordinate>(points: &[Vec<T>]) -> f64 {
    points
        .iter()
        .tuple_combinations()
        .map(|(a, b)| squared_distance(a, b))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Sorted list of all pairwise Euclidean distances.
pub fn distance_profile<T: Coordinate>(points: &[Vec<T>]) -> Vec<f64> {
    let mut d: Vec<f64> = points
        .iter()
        .tuple_combinations()
        .map(|(a, b)| squared_distance(a, b).sqrt())
        .collect();
    d.sort_by(f64::total_cmp);
    d
}

/// Which coordinates enter the product of a pair's coordinate differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProductConvention {
    /// Product over every coordinate, so a pair sharing any coordinate has
    /// product distance zero. This is the design metric optimized by
    /// rotation.
    #[default]
    AllCoordinates,
    /// Product over the coordinates in which the pair differs only.
    DifferingCoordinates,
}

/// Minimum product distance over distinct pairs.
///
/// Coordinates within [`COORDINATE_TOL`] of each other count as equal.
pub fn min_product_distance<T: Coordinate>(points: &[Vec<T>], convention: ProductConvention) -> f64 {
    points
        .iter()
        .tuple_combinations()
        .map(|(a, b)| {
            a.iter().zip(b).fold(1.0, |acc, (&x, &y)| {
                let d = x.abs_diff(y);
                match convention {
                    _ if d > COORDINATE_TOL => acc * d,
                    ProductConvention::AllCoordinates => 0.0,
                    ProductConvention::DifferingCoordinates => acc,
                }
            })
        })
        .fold(f64::INFINITY, f64::min)
}

/// Merges values within `tol` of an earlier representative.
///
/// Returns the representatives in first-seen order and, for every input, the
/// index of its representative.
pub fn cluster_values(values: &[Complex64], tol: f64) -> (Vec<Complex64>, Vec<usize>) {
    let mut reps: Vec<Complex64> = Vec::new();
    let map = values
        .iter()
        .map(|&v| match reps.iter().position(|&r| (r - v).norm() <= tol) {
            Some(i) => i,
            None => {
                reps.push(v);
                reps.len() - 1
            }
        })
        .collect();
    (reps, map)
}

/// A finite set of points in `N` real dimensions with a centroid at the
/// origin. Each point carries a label used for bit mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct RealConstellation {
    dim: usize,
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl RealConstellation {
    /// Points labeled with the Gray code of their construction index.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (0..points.len()).map(gray).collect();
        Self::with_labels(points, labels)
    }

    pub fn with_labels(points: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.is_empty() || dim == 0 {
            return param("real constellation needs at least one point of dimension >= 1");
        }
        if points.iter().any(|p| p.len() != dim) {
            return param("real constellation points must share one dimension");
        }
        if labels.len() != points.len() || !labels.iter().all_unique() {
            return param("real constellation labels must be distinct, one per point");
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return param("real constellation coordinates must be finite");
        }
        if points.len() > 1 && min_euclidean_distance(&points) <= COORDINATE_TOL {
            return param("real constellation points must be distinct");
        }
        let scale = points.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        for n in 0..dim {
            let c = points.iter().map(|p| p[n]).sum::<f64>() / points.len() as f64;
            if c.abs() > 1e-12 * scale {
                return param(format!("real constellation centroid is off the origin in dimension {n}"));
            }
        }
        Ok(Self { dim, points, labels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Repeats each 1-D point in `n` dimensions, `x -> (x, ..., x)`.
    pub fn repeated(&self, n: usize) -> Result<Self> {
        if self.dim != 1 || n == 0 {
            return param("only 1-D constellations can be repeated into n >= 1 dimensions");
        }
        Self::with_labels(
            self.points.iter().map(|p| vec![p[0]; n]).collect(),
            self.labels.clone(),
        )
    }

    /// The single point at the origin of `dim` dimensions.
    pub fn origin(dim: usize) -> Self {
        Self {
            dim,
            points: vec![vec![0.0; dim]],
            labels: vec![0],
        }
    }

    fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            points: self
                .points
                .iter()
                .map(|p| p.iter().map(|v| v * s).collect())
                .collect(),
            labels: self.labels.clone(),
        }
    }
}

/// Cartesian product of `L`-PAM sets `{-(L-1), ..., -1, 1, ..., L-1}` over
/// `n_real` dimensions, with `m_r = L^n_real` points. The first coordinate
/// varies slowest.
///
/// When `L` is a power of two each coordinate index is Gray coded and the
/// per-coordinate codes are concatenated, so lattice neighbours differ in
/// one bit.
pub fn base_lattice(n_real: usize, m_r: usize) -> Result<RealConstellation> {
    if n_real == 0 {
        return param("lattice dimension must be at least 1");
    }
    let levels = (2..=m_r)
        .find(|&l| l.checked_pow(n_real as u32).is_some_and(|p| p >= m_r))
        .filter(|&l| l.pow(n_real as u32) == m_r)
        .ok_or_else(|| {
            ScmaError::Parameter(format!("{m_r} is not L^{n_real} for an integer L >= 2"))
        })?;
    let pam: Vec<f64> = (0..levels)
        .map(|i| (2 * i) as f64 - (levels - 1) as f64)
        .collect();
    let bits = levels.is_power_of_two().then(|| levels.trailing_zeros());
    let mut points = Vec::with_capacity(m_r);
    let mut labels = Vec::with_capacity(m_r);
    for idx in 0..m_r {
        let mut digits = vec![0; n_real];
        let mut rest = idx;
        for d in digits.iter_mut().rev() {
            *d = rest % levels;
            rest /= levels;
        }
        points.push(digits.iter().map(|&d| pam[d]).collect());
        labels.push(match bits {
            Some(b) => digits.iter().fold(0, |acc, &d| (acc << b) | gray(d)),
            None => idx,
        });
    }
    RealConstellation::with_labels(points, labels)
}

/// Square orthogonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    rows: Vec<Vec<f64>>,
}

impl Rotation {
    /// Checks `R^T R = I` to within `1e-10`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return param("rotation must be a non-empty square matrix");
        }
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|r| rows[r][a] * rows[r][b]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-10 {
                    return param("rotation matrix is not orthogonal");
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: (0..n)
                .map(|r| (0..n).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    /// Counter-clockwise planar rotation by `angle` radians.
    pub fn planar(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            rows: vec![vec![c, -s], vec![s, c]],
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Maps every point through `r`. Labels follow their points.
pub fn rotate(c: &RealConstellation, r: &Rotation) -> Result<RealConstellation> {
    if r.dim() != c.dim() {
        return param(format!(
            "rotation of dimension {} applied to a {}-dimensional constellation",
            r.dim(),
            c.dim()
        ));
    }
    RealConstellation::with_labels(
        c.points.iter().map(|p| r.apply(p)).collect(),
        c.labels.clone(),
    )
}

/// Real and imaginary sub-constellations of a separable mother
/// constellation, already scaled by the normalization factor. Point
/// `p * imag.len() + q` has real part `real[p]` and imaginary part `imag[q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableParts {
    pub real: RealConstellation,
    pub imag: RealConstellation,
}

/// `M` points in `N` complex dimensions with unit average energy and a bit
/// labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct MotherConstellation {
    points: Vec<Vec<Complex64>>,
    labels: Vec<usize>,
    separable: Option<SeparableParts>,
}

/// How bit patterns are attached to the points of a shuffled constellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Labeling {
    /// Real-part label in the high bits, imaginary-part label in the low bits.
    #[default]
    Gray,
    /// Label equals the point index.
    Natural,
}

impl MotherConstellation {
    /// Normalizes `points` to unit average energy. `labels[i]` is the bit
    /// pattern of point `i`; labels must be a permutation of `0..M`.
    pub fn new(points: Vec<Vec<Complex64>>, labels: Vec<usize>) -> Result<Self> {
        let scale = Self::validate(&points, &labels)?;
        let points = points
            .into_iter()
            .map(|p| p.into_iter().map(|v| v * scale).collect())
            .collect();
        Ok(Self {
            points,
            labels,
            separable: None,
        })
    }

    /// Returns the normalization factor.
    fn validate(points: &[Vec<Complex64>], labels: &[usize]) -> Result<f64> {
        let m = points.len();
        if m < 2 || !m.is_power_of_two() {
            return param(format!("constellation size must be a power of two >= 2, got {m}"));
        }
        let dim = points[0].len();
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return param("constellation points must share one dimension >= 1");
        }
        if labels.len() != m || labels.iter().any(|&l| l >= m) || !labels.iter().all_unique() {
            return param("labels must be a permutation of 0..M");
        }
        if points.iter().flatten().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return param("constellation coordinates must be finite");
        }
        let energy = points.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>() / m as f64;
        if energy <= 0.0 {
            return param("constellation has zero energy");
        }
        let scale = energy.sqrt().recip();
        if min_euclidean_distance(points) * scale <= COORDINATE_TOL {
            return param("constellation points must be distinct");
        }
        Ok(scale)
    }

    /// Repeats one square-QAM symbol in each of `n` dimensions, the
    /// low-density-signature mapping.
    pub fn repetition_qam(order: usize, n: usize) -> Result<Self> {
        let levels = (order as f64).sqrt().round() as usize;
        if levels * levels != order || !order.is_power_of_two() || order < 4 {
            return param(format!("QAM order must be an even power of two >= 4, got {order}"));
        }
        let pam = base_lattice(1, levels)?;
        shuffle_construct(&pam.repeated(n)?, &pam.repeated(n)?, Labeling::Gray)
    }

    /// Number of points `M`.
    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// Number of complex dimensions `N`.
    pub fn dims(&self) -> usize {
        self.points[0].len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.size().trailing_zeros() as usize
    }

    pub fn points(&self) -> &[Vec<Complex64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[Complex64] {
        &self.points[i]
    }

    /// Bit label of every point.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn separable(&self) -> Option<&SeparableParts> {
        self.separable.as_ref()
    }

    /// Average squared norm of the points.
    pub fn energy(&self) -> f64 {
        self.points.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>() / self.size() as f64
    }

    /// Rebuilds a constellation from already normalized parts, e.g. when
    /// reading a system file. Energy must be 1 to within `1e-9`.
    pub fn from_normalized(
        points: Vec<Vec<Complex64>>,
        labels: Vec<usize>,
        separable: Option<SeparableParts>,
    ) -> Result<Self> {
        Self::validate(&points, &labels)?;
        let c = Self {
            points,
            labels,
            separable,
        };
        if (c.energy() - 1.0).abs() > 1e-9 {
            return param("constellation is not normalized to unit energy");
        }
        if let Some(parts) = &c.separable {
            let mv = parts.imag.len();
            if parts.real.len() * mv != c.size() || parts.real.dim() != c.dims() || parts.imag.dim() != c.dims() {
                return param("separable parts do not match the constellation shape");
            }
            for (i, pt) in c.points.iter().enumerate() {
                let (u, v) = (&parts.real.points[i / mv], &parts.imag.points[i % mv]);
                if pt.iter().zip(u.iter().zip(v)).any(|(z, (&re, &im))| {
                    (z.re - re).abs() > 1e-12 || (z.im - im).abs() > 1e-12
                }) {
                    return param("separable parts disagree with the constellation points");
                }
            }
        }
        Ok(c)
    }

    /// Transformed constellation with average energy `energy`, used by
    /// layer operators.
    pub(crate) fn scaled_from(
        points: Vec<Vec<Complex64>>,
        labels: Vec<usize>,
        separable: Option<SeparableParts>,
        energy: f64,
    ) -> Result<Self> {
        Self::validate(&points, &labels)?;
        let c = Self {
            points,
            labels,
            separable,
        };
        debug_assert!((c.energy() - energy).abs() < 1e-9 * energy.max(1.0));
        Ok(c)
    }

    pub fn metrics(&self) -> ConstellationMetrics {
        let (dim_power, dim_power_spread) = dimensional_power_metrics(self);
        ConstellationMetrics {
            d_e_min: min_euclidean_distance(&self.points),
            d_p_min: min_product_distance(&self.points, ProductConvention::AllCoordinates),
            projections_per_dim: projections_per_dim(self),
            dim_power,
            dim_power_spread,
        }
    }
}

/// Design metrics of a mother constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationMetrics {
    pub d_e_min: f64,
    /// Minimum product distance with [`ProductConvention::AllCoordinates`].
    pub d_p_min: f64,
    pub projections_per_dim: Vec<usize>,
    pub dim_power: Vec<f64>,
    pub dim_power_spread: f64,
}

/// Number of distinct values taken in each complex dimension, merging
/// values within [`PROJECTION_TOL`].
pub fn projections_per_dim(mother: &MotherConstellation) -> Vec<usize> {
    (0..mother.dims())
        .map(|n| {
            let values: Vec<_> = mother.points.iter().map(|p| p[n]).collect();
            cluster_values(&values, PROJECTION_TOL).0.len()
        })
        .collect()
}

/// Smallest distance between distinct projection values over all dimensions.
pub fn min_projection_spacing(mother: &MotherConstellation) -> f64 {
    (0..mother.dims())
        .map(|n| {
            let values: Vec<_> = mother.points.iter().map(|p| p[n]).collect();
            let (reps, _) = cluster_values(&values, PROJECTION_TOL);
            reps.iter()
                .tuple_combinations()
                .map(|(a, b)| (a - b).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Per-dimension average power and the power spread
/// `max_x (max_n |x_n|^2 / min_n |x_n|^2)`.
///
/// The spread is infinite when some point has a zero coordinate next to a
/// nonzero one.
pub fn dimensional_power_metrics(mother: &MotherConstellation) -> (Vec<f64>, f64) {
    let m = mother.size() as f64;
    let dim_power = (0..mother.dims())
        .map(|n| mother.points.iter().map(|p| p[n].norm_sqr()).sum::<f64>() / m)
        .collect();
    let spread = mother
        .points
        .iter()
        .map(|p| {
            let hi = p.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
            let lo = p.iter().map(|v| v.norm_sqr()).fold(f64::INFINITY, f64::min);
            if hi <= ZERO_AMPLITUDE * ZERO_AMPLITUDE {
                1.0
            } else if lo <= ZERO_AMPLITUDE * ZERO_AMPLITUDE {
                f64::INFINITY
            } else {
                hi / lo
            }
        })
        .fold(1.0, f64::max);
    (dim_power, spread)
}

/// Largest `S` in `{8, 4, 2}` such that multiplying every coordinate by
/// `exp(2 i pi / S)` maps the constellation onto itself, or 1.
pub fn rotational_symmetry(mother: &MotherConstellation) -> usize {
    [8, 4, 2]
        .into_iter()
        .find(|&s| {
            let w = Complex64::from_polar(1.0, 2.0 * PI / s as f64);
            mother.points.iter().all(|p| {
                mother.points.iter().any(|q| {
                    p.iter().zip(q).all(|(a, b)| (a * w - b).norm() <= COORDINATE_TOL)
                })
            })
        })
        .unwrap_or(1)
}

/// Complex constellation whose point `(p, q)` has `n`-th coordinate
/// `u[p][n] + i v[q][n]`, normalized to unit energy.
///
/// With [`Labeling::Gray`] the label of point `(p, q)` is `u`'s label of `p`
/// in the high bits followed by `v`'s label of `q`.
pub fn shuffle_construct(
    u: &RealConstellation,
    v: &RealConstellation,
    labeling: Labeling,
) -> Result<MotherConstellation> {
    if u.dim() != v.dim() {
        return param(format!(
            "real and imaginary constellations differ in dimension ({} vs {})",
            u.dim(),
            v.dim()
        ));
    }
    let (mu, mv) = (u.len(), v.len());
    if !(mu * mv).is_power_of_two() || mu * mv < 2 {
        return param(format!("product size {mu} x {mv} is not a power of two >= 2"));
    }
    let energy = mean_power(u) + mean_power(v);
    if energy <= 0.0 {
        return param("shuffled constellation has zero energy");
    }
    let scale = energy.sqrt().recip();
    let (u, v) = (u.scaled(scale), v.scaled(scale));
    let v_bits = mv.trailing_zeros();
    let mut points = Vec::with_capacity(mu * mv);
    let mut labels = Vec::with_capacity(mu * mv);
    for (p, up) in u.points.iter().enumerate() {
        for (q, vq) in v.points.iter().enumerate() {
            points.push(
                up.iter()
                    .zip(vq)
                    .map(|(&re, &im)| Complex64::new(re, im))
                    .collect(),
            );
            labels.push(match labeling {
                Labeling::Gray => (u.labels[p] << v_bits) | v.labels[q],
                Labeling::Natural => p * mv + q,
            });
        }
    }
    if labels.iter().any(|&l| l >= mu * mv) {
        return param("sub-constellation labels do not fit the product bit width");
    }
    MotherConstellation::validate(&points, &labels)?;
    Ok(MotherConstellation {
        points,
        labels,
        separable: Some(SeparableParts { real: u, imag: v }),
    })
}

fn mean_power(c: &RealConstellation) -> f64 {
    c.points.iter().flatten().map(|x| x * x).sum::<f64>() / c.len() as f64
}

/// Wraps a real constellation as the real part of a complex one.
pub fn from_real_parts(u: &RealConstellation) -> Result<MotherConstellation> {
    shuffle_construct(u, &RealConstellation::origin(u.dim()), Labeling::Gray)
}

/// 16-point, 2-dimensional constellation: the square `{(+-1, +-1)}` rotated
/// by [`golden_angle`] and shuffled with itself.
pub fn t16qam() -> MotherConstellation {
    let u = rotate(&square(), &Rotation::planar(golden_angle())).expect("planar rotation of the square");
    shuffle_construct(&u, &u, Labeling::Gray).expect("16-point shuffle")
}

/// Rotation of the square that maximizes the minimum spacing between
/// per-coordinate values: `atan(1/2)`. Each coordinate then takes four
/// equally spaced values and every point pairs a large with a small one.
pub fn four_point_angle() -> f64 {
    0.5f64.atan()
}

/// 4-point, 2-dimensional constellation: the square rotated by
/// [`four_point_angle`], carried on the real axis of both dimensions.
pub fn rotated_four_point() -> MotherConstellation {
    let u = rotate(&square(), &Rotation::planar(four_point_angle())).expect("planar rotation of the square");
    from_real_parts(&u).expect("4-point constellation")
}

/// 16-point, 2-dimensional constellation with 9 projections per dimension.
pub fn low_projection_16() -> MotherConstellation {
    optimize_rotation_projections(&square(), 9, DEFAULT_GRID_STEP)
        .expect("a 9-projection rotation of the square exists")
        .mother
}

/// The 4-point square `{(+-1, +-1)}`.
pub fn square() -> RealConstellation {
    base_lattice(2, 4).expect("2x2 lattice")
}

/// Default angular grid step for rotation searches.
pub const DEFAULT_GRID_STEP: f64 = 1e-3;

/// Angles `i * (pi/2) / n` for `i` in `range`, with `n >= (pi/2) / step`
/// rounded up to an even count so the grid is symmetric about `pi/4`.
fn angle_grid(step: f64) -> Result<(usize, impl Fn(usize) -> f64)> {
    if !(step > 0.0 && step.is_finite()) {
        return param(format!("grid step must be positive, got {step}"));
    }
    let mut n = (FRAC_PI_2 / step).ceil() as usize;
    n += n % 2;
    let h = FRAC_PI_2 / n as f64;
    Ok((n, move |i: usize| i as f64 * h))
}

fn require_planar(base: &RealConstellation) -> Result<()> {
    if base.dim() != 2 {
        return param(format!(
            "rotation search needs a 2-dimensional base, got {}",
            base.dim()
        ));
    }
    Ok(())
}

/// Outcome of [`optimize_rotation_product_distance`].
#[derive(Debug, Clone, PartialEq)]
pub struct RotationSearch {
    pub angle: f64,
    pub rotation: Rotation,
    pub min_product_distance: f64,
}

/// Planar rotation angle in `(0, pi/2)` maximizing the minimum product
/// distance of `base`: best grid angle, refined by golden-section search to
/// `1e-8` rad. Ties go to the smaller angle.
pub fn optimize_rotation_product_distance(
    base: &RealConstellation,
    grid_step: f64,
) -> Result<RotationSearch> {
    require_planar(base)?;
    let (n, angle_at) = angle_grid(grid_step)?;
    let eval = |a: f64| {
        let pts: Vec<Vec<f64>> = base.points.iter().map(|p| Rotation::planar(a).apply(p)).collect();
        min_product_distance(&pts, ProductConvention::AllCoordinates)
    };
    let (mut best_angle, mut best) = (angle_at(1), eval(angle_at(1)));
    for i in 2..n {
        let v = eval(angle_at(i));
        if v > best + 1e-12 {
            (best_angle, best) = (angle_at(i), v);
        }
    }
    let h = angle_at(1);
    let (lo, hi) = ((best_angle - h).max(0.0), (best_angle + h).min(FRAC_PI_2));
    let (a, v) = golden_section_maximize(eval, lo, hi, 1e-8);
    if v > best {
        (best_angle, best) = (a, v);
    }
    Ok(RotationSearch {
        angle: best_angle,
        rotation: Rotation::planar(best_angle),
        min_product_distance: best,
    })
}

/// Outcome of [`optimize_rotation_projections`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSearch {
    pub angle: f64,
    pub rotation: Rotation,
    pub projections: Vec<usize>,
    pub min_product_distance: f64,
    pub min_projection_spacing: f64,
    /// Shuffled constellation built from the rotated base.
    pub mother: MotherConstellation,
}

/// Searches planar rotations of `base` whose shuffled constellation
/// (`base` rotated, used for both real and imaginary parts) has at most
/// `target_m` projections in every dimension.
///
/// Among admissible grid angles in `[0, pi/2)` the largest projection count
/// wins, then the widest spacing between projection values, then the
/// smaller angle.
pub fn optimize_rotation_projections(
    base: &RealConstellation,
    target_m: usize,
    grid_step: f64,
) -> Result<ProjectionSearch> {
    require_planar(base)?;
    let (n, angle_at) = angle_grid(grid_step)?;
    let mut best: Option<(usize, f64, f64, MotherConstellation)> = None;
    for i in 0..n {
        let a = angle_at(i);
        let u = rotate(base, &Rotation::planar(a))?;
        let mother = shuffle_construct(&u, &u, Labeling::Gray)?;
        let count = projections_per_dim(&mother).into_iter().max().unwrap_or(0);
        if count > target_m {
            continue;
        }
        let spacing = min_projection_spacing(&mother);
        let better = match &best {
            None => true,
            Some((c, s, _, _)) => count > *c || (count == *c && spacing > s + 1e-12),
        };
        if better {
            best = Some((count, spacing, a, mother));
        }
    }
    let (_, spacing, angle, mother) = best.ok_or_else(|| {
        ScmaError::NotFound(format!("no rotation reaches {target_m} projections per dimension"))
    })?;
    Ok(ProjectionSearch {
        angle,
        rotation: Rotation::planar(angle),
        projections: projections_per_dim(&mother),
        min_product_distance: min_product_distance(mother.points(), ProductConvention::AllCoordinates),
        min_projection_spacing: spacing,
        mother,
    })
}

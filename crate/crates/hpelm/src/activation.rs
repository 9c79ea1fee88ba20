//! Hidden-neuron transformations and hidden-layer matrix construction.
//!
//! Six neuron kinds: three random-projection activations (`linear`,
//! `sigmoid`, `tanh`) drawing weights and biases uniformly from [-1, 1], and
//! three Gaussian RBF families (`rbf_l1`, `rbf_l2`, `rbf_linf`) whose centers
//! are training rows and whose widths are drawn log-uniformly around the
//! median pairwise distance of a training subsample.
//!
//! Each neuron's randomness comes from its own `(seed, group, neuron)`
//! substream, so instantiating a larger group reproduces the smaller group's
//! neurons as a prefix (nested instantiation).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::seeding::mix;

const NEURON_TAG: u64 = 0x6e65_7572; // per-neuron parameter substream
const SCALE_TAG: u64 = 0x7363_616c; // per-group width-scale subsample

/// The activation menu. Serialized as lowercase tokens
/// (`linear|sigmoid|tanh|rbf_l1|rbf_l2|rbf_linf`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Linear,
    Sigmoid,
    Tanh,
    RbfL1,
    RbfL2,
    RbfLinf,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 6] = [
        ActivationKind::Linear,
        ActivationKind::Sigmoid,
        ActivationKind::Tanh,
        ActivationKind::RbfL1,
        ActivationKind::RbfL2,
        ActivationKind::RbfLinf,
    ];

    pub fn is_rbf(self) -> bool {
        matches!(
            self,
            ActivationKind::RbfL1 | ActivationKind::RbfL2 | ActivationKind::RbfLinf
        )
    }

    pub fn token(self) -> &'static str {
        match self {
            ActivationKind::Linear => "linear",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Tanh => "tanh",
            ActivationKind::RbfL1 => "rbf_l1",
            ActivationKind::RbfL2 => "rbf_l2",
            ActivationKind::RbfLinf => "rbf_linf",
        }
    }
}

impl std::str::FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ActivationKind::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown activation `{s}` (expected one of linear, sigmoid, tanh, rbf_l1, rbf_l2, rbf_linf)"
                ))
            })
    }
}

impl std::fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// One group in a layer description: a kind and a neuron count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub kind: ActivationKind,
    pub count: usize,
}

/// Ordered list of neuron groups; H columns follow group order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub groups: Vec<GroupSpec>,
}

impl LayerSpec {
    pub fn new(groups: Vec<GroupSpec>) -> Result<Self> {
        if groups.is_empty() || groups.iter().any(|g| g.count == 0) {
            return Err(Error::Config(
                "layer spec needs at least one group with a positive neuron count".into(),
            ));
        }
        Ok(LayerSpec { groups })
    }

    pub fn single(kind: ActivationKind, count: usize) -> Result<Self> {
        Self::new(vec![GroupSpec { kind, count }])
    }

    /// Total neuron count L.
    pub fn total(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    /// Parse a combo string such as `tanh:1000,rbf_l1:1000`.
    pub fn parse(combo: &str) -> Result<Self> {
        let mut groups = Vec::new();
        for part in combo.split(',') {
            let part = part.trim();
            if part.is_empty() {
                return Err(Error::Config(format!("empty group in combo `{combo}`")));
            }
            let (kind, count) = part.split_once(':').ok_or_else(|| {
                Error::Config(format!("group `{part}` is not of the form kind:count"))
            })?;
            let kind: ActivationKind = kind.trim().parse()?;
            let count: usize = count.trim().parse().map_err(|_| {
                Error::Config(format!("bad neuron count `{count}` in group `{part}`"))
            })?;
            groups.push(GroupSpec { kind, count });
        }
        LayerSpec::new(groups)
    }

}

impl std::fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .groups
            .iter()
            .map(|g| format!("{}:{}", g.kind, g.count))
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// An instantiated neuron group with frozen random parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NeuronGroup {
    Projection {
        kind: ActivationKind,
        /// d x count; column j feeds neuron j.
        weights: DenseMatrix,
        biases: Vec<f64>,
    },
    Rbf {
        kind: ActivationKind,
        /// count x d; row j is neuron j's center.
        centers: DenseMatrix,
        /// Strictly positive width (the denominator of exp(-d²/s)).
        widths: Vec<f64>,
    },
}

impl NeuronGroup {
    pub fn projection(
        kind: ActivationKind,
        weights: DenseMatrix,
        biases: Vec<f64>,
    ) -> Result<Self> {
        if kind.is_rbf() {
            return Err(Error::Config(format!("{kind} is not a projection kind")));
        }
        if weights.cols() != biases.len() {
            return Err(Error::shape(
                "projection group",
                format!("{} weight columns vs {} biases", weights.cols(), biases.len()),
            ));
        }
        Ok(NeuronGroup::Projection {
            kind,
            weights,
            biases,
        })
    }

    pub fn rbf(kind: ActivationKind, centers: DenseMatrix, widths: Vec<f64>) -> Result<Self> {
        if !kind.is_rbf() {
            return Err(Error::Config(format!("{kind} is not an RBF kind")));
        }
        if centers.rows() != widths.len() {
            return Err(Error::shape(
                "rbf group",
                format!("{} centers vs {} widths", centers.rows(), widths.len()),
            ));
        }
        if widths.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::Config("rbf widths must be strictly positive".into()));
        }
        Ok(NeuronGroup::Rbf {
            kind,
            centers,
            widths,
        })
    }

    pub fn kind(&self) -> ActivationKind {
        match self {
            NeuronGroup::Projection { kind, .. } | NeuronGroup::Rbf { kind, .. } => *kind,
        }
    }

    pub fn count(&self) -> usize {
        match self {
            NeuronGroup::Projection { biases, .. } => biases.len(),
            NeuronGroup::Rbf { widths, .. } => widths.len(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            NeuronGroup::Projection { weights, .. } => weights.rows(),
            NeuronGroup::Rbf { centers, .. } => centers.cols(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NeuronGroup::Projection { kind, weights, biases } => {
                Self::projection(*kind, weights.clone(), biases.clone()).map(|_| ())
            }
            NeuronGroup::Rbf { kind, centers, widths } => {
                Self::rbf(*kind, centers.clone(), widths.clone()).map(|_| ())
            }
        }
    }
}

fn dist(kind: ActivationKind, x: &[f64], c: &[f64]) -> f64 {
    match kind {
        ActivationKind::RbfL1 => x.iter().zip(c).map(|(a, b)| (a - b).abs()).sum(),
        ActivationKind::RbfL2 => x
            .iter()
            .zip(c)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
        ActivationKind::RbfLinf => x
            .iter()
            .zip(c)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
        _ => unreachable!("dist on projection kind"),
    }
}

/// Instantiate every group of a layer from the seeded substreams.
///
/// Projection groups draw weights and biases i.i.d. uniform on [-1, 1]. RBF
/// groups draw centers uniformly (with replacement) from `training_sample`
/// rows, and widths log-uniformly on [0.5s, 2s] where `s` is the median
/// pairwise distance (in the matching norm) among at most 256 sampled
/// training rows; a degenerate zero median falls back to s = 1.
pub fn instantiate(
    spec: &LayerSpec,
    input_dim: usize,
    training_sample: &DenseMatrix,
    seed: u64,
) -> Result<Vec<NeuronGroup>> {
    if input_dim == 0 {
        return Err(Error::Config("input dimension must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(spec.groups.len());
    for (g, group) in spec.groups.iter().enumerate() {
        let g = g as u64;
        if group.kind.is_rbf() {
            if training_sample.rows() == 0 {
                return Err(Error::Config(format!(
                    "group {} ({}) needs a non-empty training sample for centers",
                    g, group.kind
                )));
            }
            if training_sample.cols() != input_dim {
                return Err(Error::shape(
                    "instantiate",
                    format!(
                        "training sample has {} columns, expected {input_dim}",
                        training_sample.cols()
                    ),
                ));
            }
            let s = width_scale(group.kind, training_sample, seed, g);
            let n = training_sample.rows();
            let mut centers = DenseMatrix::zeros(group.count, input_dim);
            let mut widths = Vec::with_capacity(group.count);
            for j in 0..group.count {
                let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, NEURON_TAG, g, j as u64]));
                let row = rng.random_range(0..n);
                centers
                    .row_mut(j)
                    .copy_from_slice(training_sample.row(row));
                let u: f64 = rng.random();
                widths.push(0.5 * s * 4f64.powf(u));
            }
            out.push(NeuronGroup::rbf(group.kind, centers, widths)?);
        } else {
            let mut weights = DenseMatrix::zeros(input_dim, group.count);
            let mut biases = Vec::with_capacity(group.count);
            for j in 0..group.count {
                let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, NEURON_TAG, g, j as u64]));
                for i in 0..input_dim {
                    weights.set(i, j, rng.random::<f64>() * 2.0 - 1.0);
                }
                biases.push(rng.random::<f64>() * 2.0 - 1.0);
            }
            out.push(NeuronGroup::projection(group.kind, weights, biases)?);
        }
    }
    Ok(out)
}

/// Median pairwise distance among at most 256 sampled training rows.
fn width_scale(kind: ActivationKind, sample: &DenseMatrix, seed: u64, group: u64) -> f64 {
    let n = sample.rows();
    let rows: Vec<usize> = if n <= 256 {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, SCALE_TAG, group]));
        rand::seq::index::sample(&mut rng, n, 256).into_vec()
    };
    let mut dists = Vec::with_capacity(rows.len() * (rows.len().saturating_sub(1)) / 2);
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            dists.push(dist(kind, sample.row(i), sample.row(j)));
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = dists.len();
    let median = if k % 2 == 1 {
        dists[k / 2]
    } else {
        0.5 * (dists[k / 2 - 1] + dists[k / 2])
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

/// Evaluate one group on a block of input rows; returns `rows x count`.
pub fn apply(group: &NeuronGroup, x_block: &DenseMatrix) -> Result<DenseMatrix> {
    if x_block.cols() != group.input_dim() {
        return Err(Error::shape(
            "apply",
            format!(
                "x_block has {} columns, group expects {}",
                x_block.cols(),
                group.input_dim()
            ),
        ));
    }
    let rows = x_block.rows();
    let count = group.count();
    let mut out = DenseMatrix::zeros(rows, count);
    match group {
        NeuronGroup::Projection {
            kind,
            weights,
            biases,
        } => {
            for r in 0..rows {
                let x = x_block.row(r);
                let orow = out.row_mut(r);
                orow.copy_from_slice(biases);
                for (i, &xi) in x.iter().enumerate() {
                    let wrow = weights.row(i);
                    for (o, &w) in orow.iter_mut().zip(wrow) {
                        *o += xi * w;
                    }
                }
                match kind {
                    ActivationKind::Linear => {}
                    ActivationKind::Sigmoid => {
                        for o in orow.iter_mut() {
                            *o = 1.0 / (1.0 + (-*o).exp());
                        }
                    }
                    ActivationKind::Tanh => {
                        for o in orow.iter_mut() {
                            *o = o.tanh();
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
        NeuronGroup::Rbf {
            kind,
            centers,
            widths,
        } => {
            for r in 0..rows {
                let x = x_block.row(r);
                let orow = out.row_mut(r);
                for j in 0..count {
                    let d = dist(*kind, x, centers.row(j));
                    orow[j] = (-(d * d) / widths[j]).exp();
                }
            }
        }
    }
    Ok(out)
}

/// Hidden-layer matrix for a block of inputs: group blocks concatenated in
/// listed order, shape `rows x L`.
pub fn build_h(groups: &[NeuronGroup], x_block: &DenseMatrix) -> Result<DenseMatrix> {
    let blocks: Vec<DenseMatrix> = groups
        .iter()
        .map(|g| apply(g, x_block))
        .collect::<Result<_>>()?;
    DenseMatrix::hconcat(&blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows(n: usize, d: usize, seed: u64) -> DenseMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        DenseMatrix::from_vec(n, d, data).unwrap()
    }

    #[test]
    fn layer_spec_parses_and_displays() {
        let spec = LayerSpec::parse("tanh:1000,rbf_l1:1000").unwrap();
        assert_eq!(spec.total(), 2000);
        assert_eq!(spec.to_string(), "tanh:1000,rbf_l1:1000");
        assert!(LayerSpec::parse("tanh:0").is_err());
        assert!(LayerSpec::parse("gelu:10").is_err());
        assert!(LayerSpec::parse("tanh").is_err());
        assert!(LayerSpec::parse("").is_err());
    }

    #[test]
    fn instantiate_is_deterministic() {
        let spec = LayerSpec::parse("sigmoid:4,rbf_l2:3").unwrap();
        let sample = sample_rows(20, 3, 11);
        let a = instantiate(&spec, 3, &sample, 99).unwrap();
        let b = instantiate(&spec, 3, &sample, 99).unwrap();
        assert_eq!(a, b);
        let c = instantiate(&spec, 3, &sample, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn projection_shapes_and_range() {
        let spec = LayerSpec::single(ActivationKind::Sigmoid, 5).unwrap();
        let sample = sample_rows(4, 3, 1);
        let groups = instantiate(&spec, 3, &sample, 7).unwrap();
        match &groups[0] {
            NeuronGroup::Projection { weights, biases, .. } => {
                assert_eq!(weights.shape(), (3, 5));
                assert_eq!(biases.len(), 5);
                for &w in weights.data().iter().chain(biases.iter()) {
                    assert!((-1.0..=1.0).contains(&w));
                }
            }
            _ => panic!("expected projection group"),
        }
    }

    #[test]
    fn nested_instantiation_shares_prefix() {
        let small = LayerSpec::single(ActivationKind::Tanh, 5).unwrap();
        let large = LayerSpec::single(ActivationKind::Tanh, 9).unwrap();
        let sample = sample_rows(6, 2, 3);
        let a = instantiate(&small, 2, &sample, 42).unwrap();
        let b = instantiate(&large, 2, &sample, 42).unwrap();
        let (NeuronGroup::Projection { weights: wa, biases: ba, .. },
             NeuronGroup::Projection { weights: wb, biases: bb, .. }) = (&a[0], &b[0])
        else {
            panic!("expected projection groups");
        };
        for j in 0..5 {
            assert_eq!(ba[j], bb[j]);
            for i in 0..2 {
                assert_eq!(wa.get(i, j), wb.get(i, j));
            }
        }
    }

    #[test]
    fn degenerate_geometry_gets_unit_scale() {
        // ten copies of one point: all centers equal it, widths in [0.5, 2]
        let point = vec![1.5, -0.5];
        let sample = DenseMatrix::from_rows(&vec![point.clone(); 10]).unwrap();
        let spec = LayerSpec::single(ActivationKind::RbfL2, 4).unwrap();
        let groups = instantiate(&spec, 2, &sample, 5).unwrap();
        match &groups[0] {
            NeuronGroup::Rbf { centers, widths, .. } => {
                for j in 0..4 {
                    assert_eq!(centers.row(j), &point[..]);
                }
                for &w in widths {
                    assert!((0.5..=2.0).contains(&w), "width {w}");
                }
            }
            _ => panic!("expected rbf group"),
        }
    }

    #[test]
    fn rbf_needs_training_rows() {
        let spec = LayerSpec::single(ActivationKind::RbfL1, 2).unwrap();
        let empty = DenseMatrix::zeros(0, 2);
        assert!(instantiate(&spec, 2, &empty, 1).is_err());
    }

    #[test]
    fn sigmoid_of_zero_is_half() {
        let g = NeuronGroup::projection(
            ActivationKind::Sigmoid,
            DenseMatrix::zeros(2, 3),
            vec![0.0; 3],
        )
        .unwrap();
        let x = sample_rows(5, 2, 8);
        let h = apply(&g, &x).unwrap();
        for &v in h.data() {
            assert_eq!(v, 0.5);
        }
    }

    #[test]
    fn tanh_of_zero_is_zero() {
        let g = NeuronGroup::projection(
            ActivationKind::Tanh,
            DenseMatrix::zeros(2, 2),
            vec![0.0; 2],
        )
        .unwrap();
        let x = sample_rows(3, 2, 9);
        let h = apply(&g, &x).unwrap();
        for &v in h.data() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn rbf_at_center_is_one() {
        let center = vec![0.3, -1.2, 2.0];
        let g = NeuronGroup::rbf(
            ActivationKind::RbfLinf,
            DenseMatrix::from_rows(std::slice::from_ref(&center)).unwrap(),
            vec![0.017],
        )
        .unwrap();
        let x = DenseMatrix::from_rows(&[center]).unwrap();
        let h = apply(&g, &x).unwrap();
        assert_eq!(h.get(0, 0), 1.0);
    }

    #[test]
    fn rbf_l1_hand_value() {
        // c = [0,0], s = 1, x = [1,1]: L1 distance 2, activation exp(-4)
        let g = NeuronGroup::rbf(
            ActivationKind::RbfL1,
            DenseMatrix::from_rows(&[vec![0.0, 0.0]]).unwrap(),
            vec![1.0],
        )
        .unwrap();
        let x = DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let h = apply(&g, &x).unwrap();
        assert!((h.get(0, 0) - (-4.0f64).exp()).abs() < 1e-12);
        assert!((h.get(0, 0) - 0.018316).abs() < 1e-6);
    }

    #[test]
    fn identity_linear_projection_reproduces_input() {
        let g = NeuronGroup::projection(
            ActivationKind::Linear,
            DenseMatrix::identity(3),
            vec![0.0; 3],
        )
        .unwrap();
        let x = sample_rows(4, 3, 10);
        let h = build_h(&[g], &x).unwrap();
        assert_eq!(h, x);
    }

    #[test]
    fn build_h_concatenates_in_group_order() {
        let sample = sample_rows(10, 2, 12);
        let spec = LayerSpec::new(vec![
            GroupSpec { kind: ActivationKind::Sigmoid, count: 3 },
            GroupSpec { kind: ActivationKind::RbfL2, count: 4 },
        ])
        .unwrap();
        let groups = instantiate(&spec, 2, &sample, 21).unwrap();
        let x = sample_rows(5, 2, 13);
        let h = build_h(&groups, &x).unwrap();
        assert_eq!(h.shape(), (5, 7));
        let first = apply(&groups[0], &x).unwrap();
        for r in 0..5 {
            assert_eq!(&h.row(r)[..3], first.row(r));
        }
    }

    #[test]
    fn codomains_hold_on_random_input() {
        let sample = sample_rows(30, 4, 14);
        let spec = LayerSpec::parse("linear:3,sigmoid:3,tanh:3,rbf_l1:3,rbf_l2:3,rbf_linf:3")
            .unwrap();
        let groups = instantiate(&spec, 4, &sample, 31).unwrap();
        let x = sample_rows(40, 4, 15);
        for g in &groups {
            let h = apply(g, &x).unwrap();
            for &v in h.data() {
                assert!(v.is_finite());
                match g.kind() {
                    ActivationKind::Sigmoid => assert!(v > 0.0 && v < 1.0),
                    ActivationKind::Tanh => assert!(v > -1.0 && v < 1.0),
                    k if k.is_rbf() => assert!(v > 0.0 && v <= 1.0),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn rbf_activation_decreases_with_distance() {
        for kind in [ActivationKind::RbfL1, ActivationKind::RbfL2, ActivationKind::RbfLinf] {
            let g = NeuronGroup::rbf(
                kind,
                DenseMatrix::from_rows(&[vec![0.0, 0.0]]).unwrap(),
                vec![1.7],
            )
            .unwrap();
            let points: Vec<Vec<f64>> = (1..8).map(|k| vec![0.3 * k as f64, 0.1 * k as f64]).collect();
            let x = DenseMatrix::from_rows(&points).unwrap();
            let h = apply(&g, &x).unwrap();
            for r in 1..h.rows() {
                assert!(
                    h.get(r, 0) < h.get(r - 1, 0),
                    "{kind}: not strictly decreasing"
                );
            }
        }
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let g = NeuronGroup::projection(
            ActivationKind::Linear,
            DenseMatrix::zeros(3, 2),
            vec![0.0; 2],
        )
        .unwrap();
        let x = DenseMatrix::zeros(4, 5);
        assert!(apply(&g, &x).is_err());
    }
}

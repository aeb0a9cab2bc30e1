//! Physics-compatible layers over monomial-augmented inputs, with network
//! editing: known weight entries are frozen into a knowledge matrix K, masked
//! out of the trainable path by a 0/1 matrix M (U = M ⊙ W), and activations
//! are disabled on fully-known rows. Deeper layers carry the first-layer
//! knowledge contribution through a block pass-through and mask every
//! trainable link that could disturb a known partial derivative.
//!
//! Known derivatives are exact by construction: the edited forward pass makes
//! ∂output_i/∂m_j equal the frozen entry for every known (i, j) no matter
//! what the trainable weights are.

pub mod monomial;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::net::{Activation, Network};
pub use monomial::{augment, even_monomial_basis, full_basis_len, MonomialBasis, MonomialError};

#[derive(Debug, Error, PartialEq)]
pub enum PhynError {
    #[error(transparent)]
    Monomial(#[from] MonomialError),
    #[error("knowledge index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("duplicate knowledge entry at ({0}, {1})")]
    DuplicateEntry(usize, usize),
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// A known first-layer weight entry over the monomial basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnowledgeEntry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeSet {
    pub entries: Vec<KnowledgeEntry>,
}

impl KnowledgeSet {
    pub fn new(entries: Vec<KnowledgeEntry>) -> Result<Self, PhynError> {
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !seen.insert((e.row, e.col)) {
                return Err(PhynError::DuplicateEntry(e.row, e.col));
            }
        }
        Ok(Self { entries })
    }

    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One edited layer: output = K·m + a ⊙ act((M ⊙ W)·m) over the layer basis.
#[derive(Debug, Clone)]
pub struct PhyNLayerSpec {
    pub order: usize,
    pub basis: MonomialBasis,
    pub k: DMatrix<f64>,
    pub mask: DMatrix<f64>,
    pub a_mask: DVector<f64>,
    pub w: DMatrix<f64>,
    pub activation: Activation,
}

impl PhyNLayerSpec {
    pub fn width(&self) -> usize {
        self.k.nrows()
    }

    pub fn basis_len(&self) -> usize {
        self.basis.len()
    }

    fn validate(&self) -> Result<(), PhynError> {
        let (rows, cols) = (self.width(), self.basis_len());
        for m in [&self.k, &self.mask, &self.w] {
            if m.nrows() != rows || m.ncols() != cols {
                return Err(PhynError::DimensionMismatch(format!(
                    "layer matrices must be {rows}x{cols}"
                )));
            }
        }
        for i in 0..rows {
            for j in 0..cols {
                if self.k[(i, j)] != 0.0 && self.mask[(i, j)] != 0.0 {
                    return Err(PhynError::InvalidArchitecture(format!(
                        "knowledge entry ({i},{j}) is not masked out of the trainable path"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Per-layer forward cache used by the reverse pass.
#[derive(Debug, Default)]
pub struct PhynCache {
    batch: usize,
    /// Layer inputs (y₀ = x), then outputs per layer.
    ys: Vec<Vec<f64>>,
    /// Monomial vectors per layer.
    mus: Vec<Vec<f64>>,
    /// Pre-activations per layer.
    zs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct EditedNetwork {
    pub layers: Vec<PhyNLayerSpec>,
    pub input_dim: usize,
    pub output_dim: usize,
}

/// Builds the edited network for a knowledge set over the first layer's
/// monomial basis.
///
/// Layer 1 freezes known entries into K and zeroes them in M; its activation
/// mask disables rows whose every weight is known. Deeper layers get the
/// block pass-through K = [0 | I | 0] over their augmented input and a mask
/// that cuts, for every output row with knowledge, each monomial that could
/// carry a dependence on that row's known columns (tracked transitively
/// through the hidden rows).
pub fn build_edit(
    knowledge: &KnowledgeSet,
    input_dim: usize,
    layer_widths: &[usize],
    orders: &[usize],
    output_dim: usize,
    activations: &[Activation],
) -> Result<EditedNetwork, PhynError> {
    if layer_widths.is_empty() || orders.len() != layer_widths.len() || activations.len() != layer_widths.len() {
        return Err(PhynError::InvalidArchitecture(
            "widths, orders and activations must be non-empty and equally long".into(),
        ));
    }
    if *layer_widths.last().unwrap() != output_dim {
        return Err(PhynError::InvalidArchitecture(format!(
            "last layer width {} must equal the output dimension {output_dim}",
            layer_widths.last().unwrap()
        )));
    }
    if layer_widths.iter().any(|&w| w < output_dim) {
        return Err(PhynError::InvalidArchitecture(
            "every layer must be at least as wide as the output (pass-through rows)".into(),
        ));
    }

    let basis1 = MonomialBasis::full(input_dim, orders[0])?;
    let width1 = layer_widths[0];
    for e in &knowledge.entries {
        if e.row >= output_dim {
            return Err(PhynError::IndexOutOfRange(format!(
                "knowledge row {} exceeds the output dimension {output_dim}",
                e.row
            )));
        }
        if e.col >= basis1.len() {
            return Err(PhynError::IndexOutOfRange(format!(
                "knowledge column {} exceeds the layer-1 basis length {}",
                e.col,
                basis1.len()
            )));
        }
    }

    // ---- layer 1 ----
    let mut k1 = DMatrix::zeros(width1, basis1.len());
    let mut m1 = DMatrix::from_element(width1, basis1.len(), 1.0);
    for e in &knowledge.entries {
        k1[(e.row, e.col)] = e.value;
        m1[(e.row, e.col)] = 0.0;
    }
    let mut a1 = DVector::from_element(width1, 1.0);
    for i in 0..width1 {
        if (0..basis1.len()).all(|j| m1[(i, j)] == 0.0) {
            a1[i] = 0.0;
        }
    }

    // Columns carrying knowledge, per output row.
    let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); output_dim];
    for e in &knowledge.entries {
        row_cols[e.row].push(e.col);
    }
    let kcols: Vec<usize> = {
        let mut v: Vec<usize> = knowledge.entries.iter().map(|e| e.col).collect();
        v.sort_unstable();
        v.dedup();
        v
    };

    // taint[j][c]: output coordinate c of the current layer can depend on
    // basis column j through trainable weights or a nonzero frozen entry.
    let mut taint: Vec<Vec<bool>> = kcols
        .iter()
        .map(|&j| {
            (0..width1)
                .map(|c| m1[(c, j)] != 0.0 || k1[(c, j)] != 0.0)
                .collect()
        })
        .collect();

    let mut layers = vec![PhyNLayerSpec {
        order: orders[0],
        basis: basis1,
        k: k1,
        mask: m1,
        a_mask: a1.clone(),
        w: DMatrix::zeros(width1, full_basis_len(input_dim, orders[0])),
        activation: activations[0],
    }];
    layers[0].validate()?;

    // With no knowledge there is nothing to pass through or protect: deeper
    // layers stay plain dense layers on their augmented inputs.
    let pass_through = !knowledge.is_empty();

    for t in 1..layer_widths.len() {
        let prev_width = layer_widths[t - 1];
        let width = layer_widths[t];
        let basis = MonomialBasis::full(prev_width, orders[t])?;
        let blen = basis.len();

        let mut k = DMatrix::zeros(width, blen);
        let mut mask = DMatrix::from_element(width, blen, 1.0);
        if pass_through {
            for i in 0..output_dim {
                k[(i, 1 + i)] = 1.0; // entry 1+i is the linear monomial of coordinate i
                mask[(i, 1 + i)] = 0.0;
            }
        }
        for (ji, &_col) in kcols.iter().enumerate() {
            for row in 0..output_dim {
                if !row_cols[row].contains(&kcols[ji]) {
                    continue;
                }
                for q in 0..blen {
                    if basis.touches(q, &taint[ji]) {
                        mask[(row, q)] = 0.0;
                    }
                }
            }
        }
        let mut a_mask = DVector::from_element(width, 1.0);
        if pass_through {
            for i in 0..output_dim {
                a_mask[i] = a1[i];
            }
        }

        // propagate taint through this layer
        let mut next_taint: Vec<Vec<bool>> = Vec::with_capacity(kcols.len());
        for (ji, tprev) in taint.iter().enumerate() {
            let _ = ji;
            let mut tn = vec![false; width];
            for c in 0..width {
                let passes = c < output_dim && tprev[c];
                let residual = a_mask[c] != 0.0
                    && (0..blen).any(|q| mask[(c, q)] != 0.0 && basis.touches(q, tprev));
                tn[c] = passes || residual;
            }
            next_taint.push(tn);
        }
        taint = next_taint;

        let layer = PhyNLayerSpec {
            order: orders[t],
            basis,
            k,
            mask,
            a_mask,
            w: DMatrix::zeros(width, blen),
            activation: activations[t],
        };
        layer.validate()?;
        layers.push(layer);
    }

    Ok(EditedNetwork {
        layers,
        input_dim,
        output_dim,
    })
}

impl EditedNetwork {
    /// Uniform re-initialization of every trainable weight.
    pub fn randomize_weights(&mut self, rng: &mut impl Rng, scale: f64) {
        for layer in &mut self.layers {
            for v in layer.w.iter_mut() {
                *v = rng.gen_range(-scale..scale);
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, PhynError> {
        if x.len() != self.input_dim {
            return Err(PhynError::DimensionMismatch(format!(
                "input has length {}, expected {}",
                x.len(),
                self.input_dim
            )));
        }
        let mu0 = self.layers[0].basis.evaluate(x)?;
        Ok(self.forward_from_augmented(&mu0))
    }

    /// Forward with the first layer's monomial vector supplied directly;
    /// the compliance probe perturbs individual basis coordinates this way.
    pub fn forward_from_augmented(&self, mu0: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = Vec::new();
        for (t, layer) in self.layers.iter().enumerate() {
            let mu: Vec<f64> = if t == 0 {
                mu0.to_vec()
            } else {
                layer.basis.evaluate(&y).expect("layer widths are consistent")
            };
            y = layer_output(layer, &mu);
        }
        y
    }

    /// Checks every known partial derivative by central differences on the
    /// augmented input, under independent re-randomizations of all trainable
    /// weights.
    pub fn compliance_check(&self, knowledge: &KnowledgeSet, seed: u64) -> ComplianceReport {
        let redraws = 5;
        let probes = 20;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut max_deviation = 0.0f64;
        let blen = self.layers[0].basis_len();
        let mut net = self.clone();
        for _ in 0..redraws {
            net.randomize_weights(&mut rng, 0.8);
            for _ in 0..probes {
                let mu: Vec<f64> = (0..blen).map(|_| rng.gen_range(-1.0..1.0)).collect();
                for e in &knowledge.entries {
                    let h = 1e-4 * (1.0 + mu[e.col].abs());
                    let mut mp = mu.clone();
                    let mut mm = mu.clone();
                    mp[e.col] += h;
                    mm[e.col] -= h;
                    let fp = net.forward_from_augmented(&mp)[e.row];
                    let fm = net.forward_from_augmented(&mm)[e.row];
                    let fd = (fp - fm) / (2.0 * h);
                    max_deviation = max_deviation.max((fd - e.value).abs());
                }
            }
        }
        ComplianceReport {
            entries_checked: knowledge.entries.len(),
            redraws,
            probes,
            max_deviation,
            pass: max_deviation < 1e-7,
        }
    }

    /// Trainable parameter counts per layer, the bias being the weight on the
    /// constant monomial reported in its own column.
    pub fn count_parameters(&self) -> ParameterCount {
        let mut per_layer = Vec::with_capacity(self.layers.len());
        let mut total = 0usize;
        for layer in &self.layers {
            let cidx = layer.basis.constant_index();
            let mut weights = 0usize;
            let mut biases = 0usize;
            for i in 0..layer.width() {
                for j in 0..layer.basis_len() {
                    if layer.mask[(i, j)] == 0.0 {
                        continue;
                    }
                    if Some(j) == cidx {
                        biases += 1;
                    } else {
                        weights += 1;
                    }
                }
            }
            total += weights + biases;
            per_layer.push(LayerParameterCount { weights, biases });
        }
        ParameterCount { per_layer, total }
    }
}

fn layer_output(layer: &PhyNLayerSpec, mu: &[f64]) -> Vec<f64> {
    let width = layer.width();
    let blen = layer.basis_len();
    let mut out = vec![0.0; width];
    for i in 0..width {
        let mut known = 0.0;
        let mut z = 0.0;
        for j in 0..blen {
            known += layer.k[(i, j)] * mu[j];
            z += layer.mask[(i, j)] * layer.w[(i, j)] * mu[j];
        }
        out[i] = known + layer.a_mask[i] * layer.activation.apply(z);
    }
    out
}

#[derive(Debug, Clone)]
pub struct ComplianceReport {
    pub entries_checked: usize,
    pub redraws: usize,
    pub probes: usize,
    pub max_deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParameterCount {
    pub weights: usize,
    pub biases: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterCount {
    pub per_layer: Vec<LayerParameterCount>,
    pub total: usize,
}

/// Knowledge-edited value-network family over an 18-dimensional input:
/// a width-`n` layer on the even degree-2 basis (plus bias), a width-`n`
/// degree-2 re-augmentation layer, and a linear readout.
pub fn kn_value_network(n: usize) -> Result<EditedNetwork, PhynError> {
    if n == 0 {
        return Err(PhynError::InvalidArchitecture("width must be positive".into()));
    }
    let input_dim = 18;
    let l1_basis = MonomialBasis::even_with_constant(input_dim, 2)?;
    let l1 = PhyNLayerSpec {
        order: 2,
        basis: l1_basis.clone(),
        k: DMatrix::zeros(n, l1_basis.len()),
        mask: DMatrix::from_element(n, l1_basis.len(), 1.0),
        a_mask: DVector::from_element(n, 1.0),
        w: DMatrix::zeros(n, l1_basis.len()),
        activation: Activation::Relu,
    };
    let l2_basis = MonomialBasis::full(n, 2)?;
    let l2 = PhyNLayerSpec {
        order: 2,
        basis: l2_basis.clone(),
        k: DMatrix::zeros(n, l2_basis.len()),
        mask: DMatrix::from_element(n, l2_basis.len(), 1.0),
        a_mask: DVector::from_element(n, 1.0),
        w: DMatrix::zeros(n, l2_basis.len()),
        activation: Activation::Relu,
    };
    let l3_basis = MonomialBasis::full(n, 1)?;
    let l3 = PhyNLayerSpec {
        order: 1,
        basis: l3_basis.clone(),
        k: DMatrix::zeros(1, l3_basis.len()),
        mask: DMatrix::from_element(1, l3_basis.len(), 1.0),
        a_mask: DVector::from_element(1, 1.0),
        w: DMatrix::zeros(1, l3_basis.len()),
        activation: Activation::Linear,
    };
    Ok(EditedNetwork {
        layers: vec![l1, l2, l3],
        input_dim,
        output_dim: 1,
    })
}

// ---------------------------------------------------------------------------
// trainable-network interface
// ---------------------------------------------------------------------------

impl Network for EditedNetwork {
    type Cache = PhynCache;

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.width() * l.basis_len()).sum()
    }

    fn forward_batch(&self, x: &[f64], batch: usize, cache: &mut Self::Cache) {
        let layers = self.layers.len();
        cache.batch = batch;
        cache.ys.resize_with(layers + 1, Vec::new);
        cache.mus.resize_with(layers, Vec::new);
        cache.zs.resize_with(layers, Vec::new);
        cache.ys[0].clear();
        cache.ys[0].extend_from_slice(x);
        for (t, layer) in self.layers.iter().enumerate() {
            let width = layer.width();
            let blen = layer.basis_len();
            let (before, after) = cache.ys.split_at_mut(t + 1);
            let yin = &before[t];
            let yout = &mut after[0];
            yout.clear();
            yout.resize(batch * width, 0.0);
            let mu_all = &mut cache.mus[t];
            mu_all.clear();
            mu_all.resize(batch * blen, 0.0);
            let z_all = &mut cache.zs[t];
            z_all.clear();
            z_all.resize(batch * width, 0.0);
            let in_dim = if t == 0 { self.input_dim } else { self.layers[t - 1].width() };
            for bi in 0..batch {
                let yr = &yin[bi * in_dim..(bi + 1) * in_dim];
                let mut mu = Vec::new();
                layer.basis.evaluate_into(yr, &mut mu);
                mu_all[bi * blen..(bi + 1) * blen].copy_from_slice(&mu);
                for i in 0..width {
                    let mut known = 0.0;
                    let mut z = 0.0;
                    for j in 0..blen {
                        known += layer.k[(i, j)] * mu[j];
                        z += layer.mask[(i, j)] * layer.w[(i, j)] * mu[j];
                    }
                    z_all[bi * width + i] = z;
                    yout[bi * width + i] = known + layer.a_mask[i] * layer.activation.apply(z);
                }
            }
        }
    }

    fn output<'a>(&self, cache: &'a Self::Cache) -> &'a [f64] {
        cache.ys.last().unwrap()
    }

    fn backward_batch(
        &self,
        cache: &Self::Cache,
        dy: &[f64],
        mut grads: Option<&mut [f64]>,
        dx: Option<&mut [f64]>,
    ) {
        let batch = cache.batch;
        let mut layer_offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0usize;
        for l in &self.layers {
            layer_offsets.push(off);
            off += l.width() * l.basis_len();
        }
        let mut dout: Vec<f64> = dy.to_vec();
        for t in (0..self.layers.len()).rev() {
            let layer = &self.layers[t];
            let width = layer.width();
            let blen = layer.basis_len();
            let in_dim = if t == 0 { self.input_dim } else { self.layers[t - 1].width() };
            let mu_all = &cache.mus[t];
            let z_all = &cache.zs[t];
            let yin = &cache.ys[t];
            let mut din = vec![0.0; batch * in_dim];
            for bi in 0..batch {
                let mu = &mu_all[bi * blen..(bi + 1) * blen];
                let dor = &dout[bi * width..(bi + 1) * width];
                let mut dmu = vec![0.0; blen];
                for i in 0..width {
                    let g = dor[i];
                    if g == 0.0 {
                        continue;
                    }
                    let dz = g * layer.a_mask[i] * layer.activation.deriv(z_all[bi * width + i]);
                    for j in 0..blen {
                        let kij = layer.k[(i, j)];
                        if kij != 0.0 {
                            dmu[j] += kij * g;
                        }
                        let mij = layer.mask[(i, j)];
                        if mij != 0.0 && dz != 0.0 {
                            dmu[j] += mij * layer.w[(i, j)] * dz;
                            if let Some(gr) = grads.as_deref_mut() {
                                gr[layer_offsets[t] + i * blen + j] += dz * mu[j];
                            }
                        }
                    }
                }
                let yr = &yin[bi * in_dim..(bi + 1) * in_dim];
                layer
                    .basis
                    .backward_into(yr, &dmu, &mut din[bi * in_dim..(bi + 1) * in_dim]);
            }
            if t == 0 {
                if let Some(out) = dx {
                    out.copy_from_slice(&din);
                }
                break;
            }
            dout = din;
        }
    }

    fn collect_params(&self, out: &mut Vec<f64>) {
        out.clear();
        for layer in &self.layers {
            for i in 0..layer.width() {
                for j in 0..layer.basis_len() {
                    out.push(layer.w[(i, j)]);
                }
            }
        }
    }

    fn params_apply(&mut self, f: &mut dyn FnMut(usize, &mut f64)) {
        let mut idx = 0usize;
        for layer in &mut self.layers {
            let blen = layer.basis_len();
            for i in 0..layer.width() {
                for j in 0..blen {
                    f(idx, &mut layer.w[(i, j)]);
                    idx += 1;
                }
            }
        }
    }
}

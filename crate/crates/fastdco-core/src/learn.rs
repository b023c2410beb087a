//! Learned pruning rules: a linear classifier replaces the fixed
//! quantile-bound margin with a boundary fitted to labeled (approximate
//! distance, threshold) pairs, then gets its intercept recalibrated so the
//! rate at which true neighbors survive is an explicit knob.
//!
//! Labels come from real searches: for a set of training queries, the K
//! nearest neighbors are label 0 (must never be pruned) and a capped set of
//! other visited candidates with distance beyond the K-th neighbor are
//! label 1 (safe to prune). Training is plain logistic regression; the
//! (negated, scaled) threshold weight is folded in so the decision reduces
//! to `m1 * dis' + w_extra . extras + beta > tau`, directly comparable
//! against a search queue's current threshold.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{brute_force_knn, Dataset, DatasetError};
use crate::quant::{
    adc, build_lut, code_residual, kmeans, pq_encode, Codebook, QuantError,
};
use crate::transform::{checkpoints, make_query_context, norms2, Rotor, TransformError};
use crate::vecmath;

#[derive(Clone, Debug, PartialEq)]
pub enum LearnError {
    EmptySamples,
    /// Logistic regression needs both labels present.
    SingleClass,
    /// Samples in one training set must all carry the same extra features.
    InconsistentFeatures,
    /// The learned threshold weight must be negative for the reduced
    /// `> tau` form to preserve the decision; a non-negative weight means
    /// the features carry no usable threshold signal.
    TauWeightNotNegative,
    /// Target recall must lie in (0, 1].
    BadRecall,
    BadParam(&'static str),
    Dataset(DatasetError),
    Transform(TransformError),
    Quant(QuantError),
}

impl fmt::Display for LearnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnError::EmptySamples => write!(f, "no training samples"),
            LearnError::SingleClass => write!(f, "training samples contain a single class"),
            LearnError::InconsistentFeatures => {
                write!(f, "samples disagree on the number of extra features")
            }
            LearnError::TauWeightNotNegative => {
                write!(f, "threshold weight is not negative; cannot reduce classifier")
            }
            LearnError::BadRecall => write!(f, "target recall must lie in (0, 1]"),
            LearnError::BadParam(p) => write!(f, "bad parameter: {p}"),
            LearnError::Dataset(e) => write!(f, "{e}"),
            LearnError::Transform(e) => write!(f, "{e}"),
            LearnError::Quant(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for LearnError {}

impl From<DatasetError> for LearnError {
    fn from(e: DatasetError) -> Self {
        LearnError::Dataset(e)
    }
}

impl From<TransformError> for LearnError {
    fn from(e: TransformError) -> Self {
        LearnError::Transform(e)
    }
}

impl From<QuantError> for LearnError {
    fn from(e: QuantError) -> Self {
        LearnError::Quant(e)
    }
}

/// One training observation for the pruning classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    /// Approximate distance feature (partial decomposition or table
    /// distance).
    pub dis_prime: f32,
    /// Search threshold in force when the candidate was observed (the K-th
    /// neighbor distance of its query).
    pub tau: f32,
    /// Additional features; the quantized variant appends the candidate's
    /// quantization residual.
    pub extras: Vec<f32>,
    /// `true` = label 1 = prunable (`exact_dis > tau`); `false` = label 0.
    pub label: bool,
    /// Exact squared distance, kept for auditing and recalibration.
    pub exact_dis: f32,
}

/// Reduced-form linear pruning rule: predict label 1 (prune) iff
/// `m1 * dis' + extra_weights . extras + beta > tau`.
///
/// With `m1 = 1`, no extras and `beta = -(m * sigma)` this reproduces the
/// quantile-bound rule bit for bit: IEEE addition of a negated product is
/// exactly the subtraction `dis' - m * sigma`, and multiplication by 1.0 is
/// the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearClassifier {
    pub m1: f32,
    pub extra_weights: Vec<f32>,
    pub beta: f32,
}

impl LinearClassifier {
    /// The decision score compared against `tau`.
    #[inline]
    pub fn score(&self, dis_prime: f32, extras: &[f32]) -> f32 {
        debug_assert_eq!(extras.len(), self.extra_weights.len());
        let mut acc = self.m1 * dis_prime + self.beta;
        for (&w, &f) in self.extra_weights.iter().zip(extras) {
            acc += w * f;
        }
        acc
    }

    /// Predicts label 1 (prune) iff the score strictly exceeds `tau`.
    #[inline]
    pub fn predict(&self, dis_prime: f32, tau: f32, extras: &[f32]) -> bool {
        self.score(dis_prime, extras) > tau
    }
}

/// A stack of per-checkpoint classifiers applied during incremental
/// distance refinement. Stages sit at checkpoints strictly below the full
/// dimension; a candidate surviving every stage gets its exact distance.
#[derive(Clone, Debug, PartialEq)]
pub struct Cascade {
    /// `(checkpoint, classifier)` pairs in ascending checkpoint order.
    pub stages: Vec<(usize, LinearClassifier)>,
    /// Checkpoint stride the stages were trained for.
    pub delta_d: usize,
    /// Overall neighbor-recall target the cascade was calibrated to.
    pub target_recall: f32,
    /// Per-stage recall targets (`1 - (1 - r) / num_checkpoints`).
    pub stage_recalls: Vec<f32>,
}

/// Mean binary cross-entropy of a linear logit model.
///
/// `weights` holds the feature weights followed by the bias; `features` is
/// row-major `n x n_features`; `labels` are 0.0 or 1.0. All math is f64 so
/// analytic gradients can be checked against finite differences tightly.
pub fn bce_loss(weights: &[f64], features: &[f64], labels: &[f64], n_features: usize) -> f64 {
    assert_eq!(weights.len(), n_features + 1);
    let n = labels.len();
    assert_eq!(features.len(), n * n_features);
    let mut total = 0.0;
    for i in 0..n {
        let row = &features[i * n_features..(i + 1) * n_features];
        let mut z = weights[n_features];
        for (w, x) in weights[..n_features].iter().zip(row) {
            z += w * x;
        }
        // BCE in softplus form: log(1 + e^z) - y*z, computed stably.
        let softplus = if z > 0.0 {
            z + libm::log1p(libm::exp(-z))
        } else {
            libm::log1p(libm::exp(z))
        };
        total += softplus - labels[i] * z;
    }
    total / n as f64
}

/// Analytic gradient of [`bce_loss`] with respect to `weights` (feature
/// weights then bias).
pub fn bce_gradient(
    weights: &[f64],
    features: &[f64],
    labels: &[f64],
    n_features: usize,
) -> Vec<f64> {
    assert_eq!(weights.len(), n_features + 1);
    let n = labels.len();
    assert_eq!(features.len(), n * n_features);
    let mut grad = vec![0.0; n_features + 1];
    for i in 0..n {
        let row = &features[i * n_features..(i + 1) * n_features];
        let mut z = weights[n_features];
        for (w, x) in weights[..n_features].iter().zip(row) {
            z += w * x;
        }
        let p = sigmoid(z);
        let err = p - labels[i];
        for (g, x) in grad[..n_features].iter_mut().zip(row) {
            *g += err * x;
        }
        grad[n_features] += err;
    }
    let inv = 1.0 / n as f64;
    for g in &mut grad {
        *g *= inv;
    }
    grad
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Fits the pruning classifier by SGD on standardized features, then folds
/// the result into the reduced `> tau` form.
///
/// Features per sample are `[dis', tau, extras...]`. Training runs
/// mini-batch SGD (batch 256, step `lr / sqrt(t)`) on mean BCE; the learned
/// threshold weight must come out negative, otherwise the reduction is
/// impossible and an error is returned. Deterministic in `seed`.
pub fn train_logistic(
    samples: &[LabeledSample],
    lr: f64,
    epochs: usize,
    seed: u64,
) -> Result<LinearClassifier, LearnError> {
    if samples.is_empty() {
        return Err(LearnError::EmptySamples);
    }
    let n_extra = samples[0].extras.len();
    if samples.iter().any(|s| s.extras.len() != n_extra) {
        return Err(LearnError::InconsistentFeatures);
    }
    let n_pos = samples.iter().filter(|s| s.label).count();
    if n_pos == 0 || n_pos == samples.len() {
        return Err(LearnError::SingleClass);
    }
    let nf = 2 + n_extra;
    let n = samples.len();

    // Flatten and standardize features.
    let mut feats = vec![0.0f64; n * nf];
    let mut labels = vec![0.0f64; n];
    for (i, s) in samples.iter().enumerate() {
        let row = &mut feats[i * nf..(i + 1) * nf];
        row[0] = s.dis_prime as f64;
        row[1] = s.tau as f64;
        for (j, &e) in s.extras.iter().enumerate() {
            row[2 + j] = e as f64;
        }
        labels[i] = if s.label { 1.0 } else { 0.0 };
    }
    let mut mean = vec![0.0f64; nf];
    let mut std = vec![0.0f64; nf];
    for i in 0..n {
        for f in 0..nf {
            mean[f] += feats[i * nf + f];
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    for i in 0..n {
        for f in 0..nf {
            let d = feats[i * nf + f] - mean[f];
            std[f] += d * d;
        }
    }
    for s in &mut std {
        *s = libm::sqrt(*s / n as f64);
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    for i in 0..n {
        for f in 0..nf {
            feats[i * nf + f] = (feats[i * nf + f] - mean[f]) / std[f];
        }
    }

    // Mini-batch SGD.
    const BATCH: usize = 256;
    let mut w = vec![0.0f64; nf + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut step = 0u64;
    let mut batch_feats = Vec::with_capacity(BATCH * nf);
    let mut batch_labels = Vec::with_capacity(BATCH);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(BATCH) {
            batch_feats.clear();
            batch_labels.clear();
            for &i in chunk {
                batch_feats.extend_from_slice(&feats[i * nf..(i + 1) * nf]);
                batch_labels.push(labels[i]);
            }
            let grad = bce_gradient(&w, &batch_feats, &batch_labels, nf);
            step += 1;
            let rate = lr / libm::sqrt(step as f64);
            for (wi, gi) in w.iter_mut().zip(&grad) {
                *wi -= rate * gi;
            }
        }
    }

    // Undo the standardization: w_orig[f] = w[f]/std[f],
    // b_orig = b - sum w[f]*mean[f]/std[f].
    let mut w_orig = vec![0.0f64; nf];
    let mut b_orig = w[nf];
    for f in 0..nf {
        w_orig[f] = w[f] / std[f];
        b_orig -= w[f] * mean[f] / std[f];
    }

    // Reduce to the `> tau` form by dividing through by -w_tau (> 0).
    let w_tau = w_orig[1];
    if w_tau >= 0.0 {
        return Err(LearnError::TauWeightNotNegative);
    }
    let scale = -1.0 / w_tau;
    Ok(LinearClassifier {
        m1: (w_orig[0] * scale) as f32,
        extra_weights: w_orig[2..].iter().map(|&e| (e * scale) as f32).collect(),
        beta: (b_orig * scale) as f32,
    })
}

/// Fraction of label-0 samples the classifier keeps (predicts 0).
pub fn label0_recall(clf: &LinearClassifier, samples: &[LabeledSample]) -> f64 {
    let mut kept = 0usize;
    let mut total = 0usize;
    for s in samples {
        if !s.label {
            total += 1;
            if !clf.predict(s.dis_prime, s.tau, &s.extras) {
                kept += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        kept as f64 / total as f64
    }
}

/// Finds the largest intercept that still keeps at least `target_recall`
/// of the label-0 samples, by bisection.
///
/// Lowering `beta` makes the rule strictly more conservative, so label-0
/// recall is monotone non-increasing in `beta`; bisection therefore
/// converges to the boundary. The returned value is always feasible
/// (recall at it is >= `target_recall`).
pub fn calibrate_beta(
    clf: &LinearClassifier,
    samples: &[LabeledSample],
    target_recall: f64,
) -> Result<f32, LearnError> {
    if !(target_recall > 0.0 && target_recall <= 1.0) {
        return Err(LearnError::BadRecall);
    }
    // g_i = tau_i - (m1*dis' + extras): sample i is kept iff beta <= g_i.
    let mut gaps: Vec<f64> = Vec::new();
    let mut lo = f64::INFINITY;
    let mut taus: Vec<f32> = Vec::with_capacity(samples.len());
    for s in samples {
        let partial = clf.score(s.dis_prime, &s.extras) - clf.beta;
        let g = s.tau as f64 - partial as f64;
        if !s.label {
            gaps.push(g);
        }
        lo = lo.min(g);
        taus.push(s.tau);
    }
    if gaps.is_empty() {
        return Err(LearnError::EmptySamples);
    }
    let n0 = gaps.len() as f64;
    let recall_at = |beta: f64| gaps.iter().filter(|&&g| g >= beta).count() as f64 / n0;

    let mut lo = lo - 1.0;
    let mut hi = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    debug_assert!(recall_at(lo) >= target_recall);

    taus.sort_unstable_by(f32::total_cmp);
    let median_tau = taus[taus.len() / 2] as f64;
    let tol = (1e-6 * median_tau.abs()).max(1e-12);

    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if recall_at(mid) >= target_recall {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo as f32)
}

/// Knobs for training-set mining and SGD shared by the cascade and
/// quantized-classifier builders.
#[derive(Clone, Copy, Debug)]
pub struct TrainOpts {
    /// Training queries drawn (without replacement) from the dataset.
    pub n_queries: usize,
    /// Cap on label-1 candidates collected per query.
    pub per_query_visits: usize,
    pub lr: f64,
    pub epochs: usize,
}

impl Default for TrainOpts {
    fn default() -> Self {
        TrainOpts {
            n_queries: 1000,
            per_query_visits: 50,
            lr: 0.1,
            epochs: 20,
        }
    }
}

/// Candidate pools mined per training query: the query's exact K nearest
/// (label 0) and up to `cap` visited non-neighbors beyond the threshold
/// (label 1).
struct MinedQuery {
    q_id: usize,
    tau: f32,
    /// `(id, exact_dis, label)`.
    members: Vec<(u32, f32, bool)>,
}

/// Runs the shared mining pass: exact ground truth for thresholds and
/// label-0 members, plus an inverted-file probe (trained on a sample, for
/// speed) to enumerate realistic label-1 candidates in visit order.
fn mine_training_pools(
    data: &Dataset,
    rotor: &Rotor,
    queries: &Dataset,
    k: usize,
    cap: usize,
    seed: u64,
) -> Result<(Dataset, Vec<f32>, Vec<MinedQuery>), LearnError> {
    if cap == 0 {
        return Err(LearnError::BadParam("per_query_visits must be at least 1"));
    }
    if queries.is_empty() {
        return Err(LearnError::BadParam("no training queries"));
    }
    let gt = brute_force_knn(data, queries, k)?;
    let rotated = rotor.apply_dataset(data);
    let norms = norms2(data, rotor)?;
    let dim = data.dim();
    let n = data.len();

    // Coarse inverted file for candidate enumeration: centroids fitted on
    // a sample, every vector assigned to its nearest centroid.
    let nlist = libm::sqrt(n as f64) as usize;
    let nlist = nlist.clamp(1, 1024).min(n);
    let sample = crate::quant::sample_rows(&rotated, 16_384, seed);
    let km = kmeans(&sample, dim, nlist, 15, seed)?;
    let centroids = km.centroids;
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); nlist];
    for i in 0..n {
        let x = rotated.row(i);
        let mut best = 0usize;
        let mut best_d = f32::INFINITY;
        for c in 0..nlist {
            let d = vecmath::l2_sq_fast(x, &centroids[c * dim..(c + 1) * dim]);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        buckets[best].push(i as u32);
    }
    let nprobe = (nlist / 16).max(1);

    let mut mined = Vec::with_capacity(queries.len());
    for qi in 0..queries.len() {
        let q = queries.row(qi);
        let q_rot = rotor.apply(q);
        let tau = gt.dists_row(qi)[k - 1];

        let mut members: Vec<(u32, f32, bool)> = Vec::with_capacity(k + cap);
        let knn_ids = gt.ids_row(qi);
        for (&id, &d) in knn_ids.iter().zip(gt.dists_row(qi)) {
            members.push((id, d, false));
        }
        let mut knn_sorted: Vec<u32> = knn_ids.to_vec();
        knn_sorted.sort_unstable();

        // Probe the nearest buckets in rank order, harvesting label-1
        // candidates until the cap.
        let mut rank: Vec<(f32, usize)> = (0..nlist)
            .map(|c| {
                (
                    vecmath::l2_sq_fast(&q_rot, &centroids[c * dim..(c + 1) * dim]),
                    c,
                )
            })
            .collect();
        rank.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut negatives = 0usize;
        'probe: for &(_, c) in rank.iter().take(nprobe) {
            for &id in &buckets[c] {
                if knn_sorted.binary_search(&id).is_ok() {
                    continue;
                }
                let d = vecmath::l2_sq(data.row(id as usize), q);
                if d > tau {
                    members.push((id, d, true));
                    negatives += 1;
                    if negatives >= cap {
                        break 'probe;
                    }
                }
            }
        }

        mined.push(MinedQuery {
            q_id: qi,
            tau,
            members,
        });
    }
    Ok((rotated, norms, mined))
}

/// Collects per-checkpoint training samples for the projection-based
/// classifier: one labeled sample per (candidate, checkpoint), with the
/// partial decomposed distance at that checkpoint as the feature.
///
/// Returns one vector per checkpoint of `checkpoints(dim, delta_d)`, in
/// order (the final entry is the full dimension, where `dis'` coincides
/// with the exact distance up to rounding).
pub fn collect_training(
    data: &Dataset,
    rotor: &Rotor,
    queries: &Dataset,
    k: usize,
    per_query_visits: usize,
    delta_d: usize,
    seed: u64,
) -> Result<Vec<Vec<LabeledSample>>, LearnError> {
    let dim = data.dim();
    let cps = checkpoints(dim, delta_d).map_err(LearnError::Transform)?;
    let (rotated, norms, mined) =
        mine_training_pools(data, rotor, queries, k, per_query_visits, seed)?;

    let mut out: Vec<Vec<LabeledSample>> = vec![Vec::new(); cps.len()];
    for mq in &mined {
        let q = queries.row(mq.q_id);
        let ctx = make_query_context(rotor, q, delta_d).map_err(LearnError::Transform)?;
        for &(id, exact_dis, label) in &mq.members {
            let x = rotated.row(id as usize);
            let c1 = norms[id as usize] + ctx.q_norm2;
            let mut c2 = 0.0f32;
            let mut prev = 0usize;
            for (j, &cp) in cps.iter().enumerate() {
                c2 += 2.0 * vecmath::dot(&x[prev..cp], &ctx.q_rot[prev..cp]);
                prev = cp;
                out[j].push(LabeledSample {
                    dis_prime: c1 - c2,
                    tau: mq.tau,
                    extras: Vec::new(),
                    label,
                    exact_dis,
                });
            }
        }
    }
    Ok(out)
}

/// Collects training samples for the quantized classifier: the feature is
/// the asymmetric table distance, with the candidate's quantization
/// residual as an extra feature.
///
/// The codebook must have been trained on `rotor`-rotated data; queries are
/// rotated through the same rotor before table construction.
pub fn collect_training_quant(
    data: &Dataset,
    rotor: &Rotor,
    codebook: &Codebook,
    queries: &Dataset,
    k: usize,
    per_query_visits: usize,
    seed: u64,
) -> Result<Vec<LabeledSample>, LearnError> {
    let (rotated, _norms, mined) =
        mine_training_pools(data, rotor, queries, k, per_query_visits, seed)?;

    // Encode every referenced candidate once.
    let mut needed: Vec<u32> = mined
        .iter()
        .flat_map(|mq| mq.members.iter().map(|&(id, _, _)| id))
        .collect();
    needed.sort_unstable();
    needed.dedup();
    let mut codes: Vec<(u32, Vec<u16>, f32)> = Vec::with_capacity(needed.len());
    for &id in &needed {
        let row = rotated.row(id as usize);
        let code = pq_encode(codebook, row);
        let resid = code_residual(codebook, row, &code);
        codes.push((id, code, resid));
    }
    let code_of = |id: u32| -> &(u32, Vec<u16>, f32) {
        let pos = codes.binary_search_by_key(&id, |e| e.0).expect("encoded");
        &codes[pos]
    };

    let mut out = Vec::new();
    for mq in &mined {
        let q_rot = rotor.apply(queries.row(mq.q_id));
        let lut = build_lut(codebook, &q_rot);
        for &(id, exact_dis, label) in &mq.members {
            let (_, code, resid) = code_of(id);
            out.push(LabeledSample {
                dis_prime: adc(&lut, code),
                tau: mq.tau,
                extras: vec![*resid],
                label,
                exact_dis,
            });
        }
    }
    Ok(out)
}

fn sample_query_rows(data: &Dataset, n_queries: usize, seed: u64) -> Dataset {
    let n = data.len();
    let take = n_queries.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5175_6572_7953_6574);
    let mut idx = rand::seq::index::sample(&mut rng, n, take).into_vec();
    idx.sort_unstable();
    let mut q = Dataset::empty(data.dim());
    for i in idx {
        q.push_row(data.row(i));
    }
    q
}

/// Builds the per-checkpoint classifier cascade for projection-based
/// pruning with default training knobs (1,000 training queries, 50
/// negatives per query).
pub fn build_cascade(
    data: &Dataset,
    rotor: &Rotor,
    delta_d: usize,
    k: usize,
    target_recall: f64,
    seed: u64,
) -> Result<Cascade, LearnError> {
    build_cascade_with(data, rotor, delta_d, k, target_recall, seed, TrainOpts::default())
}

/// [`build_cascade`] with explicit training knobs.
///
/// Stages sit at every checkpoint strictly below the full dimension. Each
/// stage is trained independently and calibrated to the per-stage target
/// `1 - (1 - r) / c` where `c` counts all checkpoints, so the whole
/// cascade's false-prune budget stays within `1 - r` under a union bound.
pub fn build_cascade_with(
    data: &Dataset,
    rotor: &Rotor,
    delta_d: usize,
    k: usize,
    target_recall: f64,
    seed: u64,
    opts: TrainOpts,
) -> Result<Cascade, LearnError> {
    if !(target_recall > 0.0 && target_recall <= 1.0) {
        return Err(LearnError::BadRecall);
    }
    let dim = data.dim();
    let cps = checkpoints(dim, delta_d).map_err(LearnError::Transform)?;
    let stage_recall = 1.0 - (1.0 - target_recall) / cps.len() as f64;

    let queries = sample_query_rows(data, opts.n_queries, seed);
    let per_cp =
        collect_training(data, rotor, &queries, k, opts.per_query_visits, delta_d, seed)?;

    let mut stages = Vec::new();
    let mut stage_recalls = Vec::new();
    for (j, &cp) in cps.iter().enumerate() {
        if cp == dim {
            continue;
        }
        let samples = &per_cp[j];
        let mut clf = train_logistic(samples, opts.lr, opts.epochs, seed ^ (j as u64 + 1))?;
        clf.beta = calibrate_beta(&clf, samples, stage_recall)?;
        stages.push((cp, clf));
        stage_recalls.push(stage_recall as f32);
    }
    Ok(Cascade {
        stages,
        delta_d,
        target_recall: target_recall as f32,
        stage_recalls,
    })
}

/// Trains and calibrates the quantized pruning classifier (table distance
/// plus residual feature) with default knobs.
pub fn train_quant_classifier(
    data: &Dataset,
    rotor: &Rotor,
    codebook: &Codebook,
    k: usize,
    target_recall: f64,
    seed: u64,
) -> Result<LinearClassifier, LearnError> {
    train_quant_classifier_with(
        data,
        rotor,
        codebook,
        k,
        target_recall,
        seed,
        TrainOpts::default(),
    )
}

/// [`train_quant_classifier`] with explicit training knobs.
pub fn train_quant_classifier_with(
    data: &Dataset,
    rotor: &Rotor,
    codebook: &Codebook,
    k: usize,
    target_recall: f64,
    seed: u64,
    opts: TrainOpts,
) -> Result<LinearClassifier, LearnError> {
    if !(target_recall > 0.0 && target_recall <= 1.0) {
        return Err(LearnError::BadRecall);
    }
    let queries = sample_query_rows(data, opts.n_queries, seed);
    let samples = collect_training_quant(
        data,
        rotor,
        codebook,
        &queries,
        k,
        opts.per_query_visits,
        seed,
    )?;
    let mut clf = train_logistic(&samples, opts.lr, opts.epochs, seed)?;
    clf.beta = calibrate_beta(&clf, &samples, target_recall)?;
    Ok(clf)
}

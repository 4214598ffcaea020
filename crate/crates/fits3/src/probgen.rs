//! Seeded synthetic instances: orthonormal-row measurement matrices of
//! several kinds, group-sparse ground truths (optionally sparse within
//! groups), and noisy observations.

use std::fmt;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grouping::{GroupPartition, GroupSet};
use crate::io;
use crate::linalg::{matvec, orthonormalize_rows, DenseMatrix};

/// Distribution of the raw matrix before row orthonormalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    /// I.i.d. standard normal entries.
    Gaussian,
    /// I.i.d. entries from {-1, +1}.
    Bernoulli,
    /// Rows sampled without replacement from the Sylvester-construction
    /// Hadamard matrix; needs the column count to be a power of two.
    PartHadamard,
    /// Rows sampled without replacement from the orthogonal DCT-II matrix.
    PartFourier,
}

impl MatrixKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(MatrixKind::Gaussian),
            "bernoulli" => Ok(MatrixKind::Bernoulli),
            "parthadamard" | "hadamard" => Ok(MatrixKind::PartHadamard),
            "partfourier" | "fourier" | "dct" => Ok(MatrixKind::PartFourier),
            other => Err(Error::InvalidArgument(format!(
                "unknown matrix kind '{other}' (expected gaussian, bernoulli, parthadamard or partfourier)"
            ))),
        }
    }
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MatrixKind::Gaussian => "gaussian",
            MatrixKind::Bernoulli => "bernoulli",
            MatrixKind::PartHadamard => "parthadamard",
            MatrixKind::PartFourier => "partfourier",
        };
        f.write_str(s)
    }
}

/// Generation parameters recorded alongside an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMeta {
    pub kind: MatrixKind,
    pub seed: u64,
    pub noise_sigma: f64,
    /// Number of active groups in the ground truth.
    pub nonzero_groups: usize,
    /// Nonzeros per active group when the signal is sparse within groups.
    pub intra_group_nonzeros: Option<usize>,
}

/// A measurement matrix, observation, group structure and (optionally) the
/// signal that produced the observation.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub part: GroupPartition,
    pub ground_truth: Option<Vec<f64>>,
    pub meta: Option<InstanceMeta>,
}

impl ProblemInstance {
    /// Validates the cross-field invariants (consistent shapes, nonzero
    /// observation, finite entries).
    pub fn validate(&self) -> Result<()> {
        if self.b.len() != self.a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "observation length {} vs {} matrix rows",
                self.b.len(),
                self.a.rows()
            )));
        }
        if self.part.total_len() != self.a.cols() {
            return Err(Error::DimensionMismatch(format!(
                "partition length {} vs {} matrix columns",
                self.part.total_len(),
                self.a.cols()
            )));
        }
        if self.b.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidArgument(
                "instance has a zero observation".into(),
            ));
        }
        if self.b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "observation has non-finite entries".into(),
            ));
        }
        if let Some(x) = &self.ground_truth {
            if x.len() != self.a.cols() {
                return Err(Error::DimensionMismatch(format!(
                    "ground truth length {} vs {} matrix columns",
                    x.len(),
                    self.a.cols()
                )));
            }
        }
        Ok(())
    }
}

/// Deterministic sub-seed derivation (splitmix64 over the lane index).
pub fn mix_seed(seed: u64, lane: u64) -> u64 {
    let mut z = seed ^ lane.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Raw matrix of the requested kind before orthonormalization.
pub(crate) fn raw_matrix(kind: MatrixKind, m: usize, n: usize, seed: u64) -> Result<DenseMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "matrix shape must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        MatrixKind::Gaussian => {
            let data = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
            DenseMatrix::new(m, n, data)
        }
        MatrixKind::Bernoulli => {
            let data = (0..m * n)
                .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
                .collect();
            DenseMatrix::new(m, n, data)
        }
        MatrixKind::PartHadamard => {
            if !n.is_power_of_two() {
                return Err(Error::InvalidArgument(format!(
                    "Hadamard sampling needs a power-of-two dimension, got {n}"
                )));
            }
            let rows = sample_without_replacement(&mut rng, n, m);
            let mut data = Vec::with_capacity(m * n);
            for &i in &rows {
                for j in 0..n {
                    let sign = ((i & j).count_ones() & 1) as i32;
                    data.push(if sign == 0 { 1.0 } else { -1.0 });
                }
            }
            DenseMatrix::new(m, n, data)
        }
        MatrixKind::PartFourier => {
            let rows = sample_without_replacement(&mut rng, n, m);
            let mut data = Vec::with_capacity(m * n);
            let nf = n as f64;
            for &k in &rows {
                let scale = if k == 0 {
                    (1.0 / nf).sqrt()
                } else {
                    (2.0 / nf).sqrt()
                };
                for j in 0..n {
                    let angle =
                        std::f64::consts::PI * (k as f64) * (2.0 * j as f64 + 1.0) / (2.0 * nf);
                    data.push(scale * angle.cos());
                }
            }
            DenseMatrix::new(m, n, data)
        }
    }
}

fn sample_without_replacement(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    debug_assert!(k <= n);
    // Partial Fisher-Yates.
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

/// Measurement matrix with orthonormal rows: a raw draw of the requested
/// kind followed by row orthonormalization.
pub fn gen_matrix(kind: MatrixKind, m: usize, n: usize, seed: u64) -> Result<DenseMatrix> {
    if m >= n {
        return Err(Error::InvalidArgument(format!(
            "need an underdetermined system (m < n), got {m}x{n}"
        )));
    }
    orthonormalize_rows(&raw_matrix(kind, m, n, seed)?)
}

/// Group-sparse ground truth: `s_count` groups chosen uniformly without
/// replacement, filled with i.i.d. standard normal entries. With
/// `intra_s = Some(s)`, only `s` uniformly chosen positions per active
/// group are nonzero.
pub fn gen_ground_truth(
    part: &GroupPartition,
    s_count: usize,
    intra_s: Option<usize>,
    seed: u64,
) -> Result<Vec<f64>> {
    let r = part.num_groups();
    if s_count > r {
        return Err(Error::InvalidArgument(format!(
            "cannot pick {s_count} active groups out of {r}"
        )));
    }
    if let Some(s) = intra_s {
        if let Some(g) = (0..r).find(|&g| part.size(g) < s) {
            return Err(Error::InvalidArgument(format!(
                "intra-group nonzeros {s} exceed the size {} of group {g}",
                part.size(g)
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; part.total_len()];
    let active = sample_without_replacement(&mut rng, r, s_count);
    for &g in &active {
        let range = part.range(g);
        match intra_s {
            None => {
                for j in range {
                    x[j] = rng.sample(StandardNormal);
                }
            }
            Some(s) => {
                let offsets = sample_without_replacement(&mut rng, range.len(), s);
                for o in offsets {
                    x[range.start + o] = rng.sample(StandardNormal);
                }
            }
        }
    }
    Ok(x)
}

/// Noisy observation `b = A x + sigma * noise` with i.i.d. standard normal
/// noise. A zero observation (possible only in degenerate setups) is an
/// error asking the caller to reseed.
pub fn gen_observation(a: &DenseMatrix, x_true: &[f64], sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise level must be >= 0, got {sigma}"
        )));
    }
    let mut b = matvec(a, x_true)?;
    if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in &mut b {
            *v += sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    if b.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroObservation);
    }
    Ok(b)
}

/// Full instance from one master seed (matrix, signal and noise use
/// independent derived seeds).
#[allow(clippy::too_many_arguments)]
pub fn gen_instance(
    kind: MatrixKind,
    m: usize,
    n: usize,
    part: &GroupPartition,
    s_count: usize,
    intra_s: Option<usize>,
    sigma: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    if part.total_len() != n {
        return Err(Error::DimensionMismatch(format!(
            "partition length {} vs requested n = {n}",
            part.total_len()
        )));
    }
    let a = gen_matrix(kind, m, n, mix_seed(seed, 1))?;
    let x = gen_ground_truth(part, s_count, intra_s, mix_seed(seed, 2))?;
    let b = gen_observation(&a, &x, sigma, mix_seed(seed, 3))?;
    let inst = ProblemInstance {
        a,
        b,
        part: part.clone(),
        ground_truth: Some(x),
        meta: Some(InstanceMeta {
            kind,
            seed,
            noise_sigma: sigma,
            nonzero_groups: s_count,
            intra_group_nonzeros: intra_s,
        }),
    };
    inst.validate()?;
    Ok(inst)
}

/// Active groups of a ground truth (helper for assertions and reports).
pub fn true_support(x: &[f64], part: &GroupPartition) -> Result<GroupSet> {
    crate::grouping::group_support(x, part)
}

const FILE_MATRIX: &str = "A.csv";
const FILE_OBSERVATION: &str = "b.csv";
const FILE_TRUTH: &str = "xtrue.csv";
const FILE_META: &str = "meta";

/// Writes an instance as a directory bundle: `A.csv`, `b.csv`, optional
/// `xtrue.csv`, and a `meta` file of `key=value` lines.
pub fn save_instance(inst: &ProblemInstance, dir: &Path) -> Result<()> {
    inst.validate()?;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    io::write_matrix(&dir.join(FILE_MATRIX), &inst.a)?;
    io::write_vector(&dir.join(FILE_OBSERVATION), &inst.b)?;
    if let Some(x) = &inst.ground_truth {
        io::write_vector(&dir.join(FILE_TRUTH), x)?;
    }
    let mut meta = String::new();
    meta.push_str(&format!("m={}\n", inst.a.rows()));
    meta.push_str(&format!("n={}\n", inst.a.cols()));
    meta.push_str(&format!("group_sizes={}\n", inst.part));
    if let Some(m) = &inst.meta {
        meta.push_str(&format!("kind={}\n", m.kind));
        meta.push_str(&format!("seed={}\n", m.seed));
        meta.push_str(&format!("sigma={}\n", io::format_float(m.noise_sigma)));
        meta.push_str(&format!("S={}\n", m.nonzero_groups));
        if let Some(s) = m.intra_group_nonzeros {
            meta.push_str(&format!("s={s}\n"));
        }
    }
    io::write_atomic(&dir.join(FILE_META), meta.as_bytes())
}

/// Reads a bundle written by [`save_instance`].
pub fn load_instance(dir: &Path) -> Result<ProblemInstance> {
    let meta_path = dir.join(FILE_META);
    let text = std::fs::read_to_string(&meta_path).map_err(|source| Error::Io {
        path: meta_path.clone(),
        source,
    })?;
    let mut kv = std::collections::HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: meta_path.clone(),
            line: lineno + 1,
            msg: format!("expected key=value, got '{line}'"),
        })?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let sizes = kv.get("group_sizes").ok_or_else(|| Error::Parse {
        path: meta_path.clone(),
        line: 0,
        msg: "missing group_sizes".into(),
    })?;
    let part = GroupPartition::parse(sizes)?;
    let a = io::read_matrix(&dir.join(FILE_MATRIX))?;
    let b = io::read_vector(&dir.join(FILE_OBSERVATION))?;
    let truth_path = dir.join(FILE_TRUTH);
    let ground_truth = if truth_path.exists() {
        Some(io::read_vector(&truth_path)?)
    } else {
        None
    };
    let meta = match (kv.get("kind"), kv.get("seed")) {
        (Some(kind), Some(seed)) => Some(InstanceMeta {
            kind: MatrixKind::parse(kind)?,
            seed: seed.parse().map_err(|_| Error::Parse {
                path: meta_path.clone(),
                line: 0,
                msg: format!("bad seed '{seed}'"),
            })?,
            noise_sigma: kv
                .get("sigma")
                .map(|s| s.parse::<f64>())
                .transpose()
                .map_err(|_| Error::Parse {
                    path: meta_path.clone(),
                    line: 0,
                    msg: "bad sigma".into(),
                })?
                .unwrap_or(0.0),
            nonzero_groups: kv
                .get("S")
                .map(|s| s.parse::<usize>())
                .transpose()
                .map_err(|_| Error::Parse {
                    path: meta_path.clone(),
                    line: 0,
                    msg: "bad S".into(),
                })?
                .unwrap_or(0),
            intra_group_nonzeros: kv
                .get("s")
                .map(|s| s.parse::<usize>())
                .transpose()
                .map_err(|_| Error::Parse {
                    path: meta_path,
                    line: 0,
                    msg: "bad s".into(),
                })?,
        }),
        _ => None,
    };
    let inst = ProblemInstance {
        a,
        b,
        part,
        ground_truth,
        meta,
    };
    inst.validate()?;
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{row_gram_residual, spectral_norm_sq_default};
    use tempfile::tempdir;

    #[test]
    fn all_kinds_give_orthonormal_rows() {
        for kind in [
            MatrixKind::Gaussian,
            MatrixKind::Bernoulli,
            MatrixKind::PartHadamard,
            MatrixKind::PartFourier,
        ] {
            let a = gen_matrix(kind, 24, 64, 5).unwrap();
            assert!(
                row_gram_residual(&a) <= 1e-8,
                "{kind}: residual {}",
                row_gram_residual(&a)
            );
            let est = spectral_norm_sq_default(&a).unwrap();
            assert!((est.value - 1.0).abs() <= 1e-6, "{kind}: {}", est.value);
        }
    }

    #[test]
    fn gaussian_is_deterministic_per_seed() {
        let a = gen_matrix(MatrixKind::Gaussian, 8, 16, 42).unwrap();
        let b = gen_matrix(MatrixKind::Gaussian, 8, 16, 42).unwrap();
        assert_eq!(a, b);
        let c = gen_matrix(MatrixKind::Gaussian, 8, 16, 43).unwrap();
        assert!(a != c);
    }

    #[test]
    fn bernoulli_raw_entries_are_signs_with_balanced_mean() {
        let (m, n) = (32, 64);
        let raw = raw_matrix(MatrixKind::Bernoulli, m, n, 7).unwrap();
        assert!(raw.data().iter().all(|&v| v == 1.0 || v == -1.0));
        let mean = raw.data().iter().sum::<f64>() / (m * n) as f64;
        assert!(mean.abs() <= 3.0 / ((m * n) as f64).sqrt());
    }

    #[test]
    fn hadamard_requires_power_of_two() {
        assert!(gen_matrix(MatrixKind::PartHadamard, 8, 48, 1).is_err());
        assert!(gen_matrix(MatrixKind::PartHadamard, 8, 64, 1).is_ok());
    }

    #[test]
    fn gen_matrix_requires_underdetermined_shape() {
        assert!(gen_matrix(MatrixKind::Gaussian, 16, 16, 1).is_err());
    }

    #[test]
    fn ground_truth_support_counts() {
        let part = GroupPartition::uniform(16, 64).unwrap();
        let zero = gen_ground_truth(&part, 0, None, 1).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));

        for seed in 0..100 {
            let x = gen_ground_truth(&part, 12, None, seed).unwrap();
            let support = true_support(&x, &part).unwrap();
            assert_eq!(support.len(), 12);
        }

        let full = gen_ground_truth(&part, 64, None, 3).unwrap();
        assert_eq!(true_support(&full, &part).unwrap().len(), 64);
    }

    #[test]
    fn intra_group_sparsity_counts() {
        let part = GroupPartition::uniform(32, 32).unwrap();
        let x = gen_ground_truth(&part, 16, Some(6), 11).unwrap();
        let support = true_support(&x, &part).unwrap();
        assert_eq!(support.len(), 16);
        for g in support.iter() {
            let nz = part.slice(&x, g).iter().filter(|&&v| v != 0.0).count();
            assert_eq!(nz, 6);
        }
        assert!(gen_ground_truth(&part, 4, Some(33), 1).is_err());
        assert!(gen_ground_truth(&part, 33, None, 1).is_err());
    }

    #[test]
    fn noiseless_observation_is_exact() {
        let a = gen_matrix(MatrixKind::Gaussian, 6, 12, 2).unwrap();
        let part = GroupPartition::uniform(3, 4).unwrap();
        let x = gen_ground_truth(&part, 2, None, 3).unwrap();
        let b = gen_observation(&a, &x, 0.0, 99).unwrap();
        assert_eq!(b, matvec(&a, &x).unwrap());
    }

    #[test]
    fn noise_norm_concentrates() {
        // ||b - A x|| should sit in the +-30% band around sigma*sqrt(m)
        // essentially always at m = 512.
        let m = 512;
        let a = gen_matrix(MatrixKind::Gaussian, m, 1024, 4).unwrap();
        let part = GroupPartition::uniform(16, 64).unwrap();
        let x = gen_ground_truth(&part, 4, None, 5).unwrap();
        let ax = matvec(&a, &x).unwrap();
        let sigma = 0.001;
        let expected = sigma * (m as f64).sqrt();
        let mut in_band = 0;
        let draws = 200;
        for seed in 0..draws {
            let b = gen_observation(&a, &x, sigma, seed).unwrap();
            let noise: f64 = b
                .iter()
                .zip(&ax)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt();
            if (noise - expected).abs() <= 0.3 * expected {
                in_band += 1;
            }
        }
        assert!(in_band as f64 / draws as f64 >= 0.99);
    }

    #[test]
    fn observation_determinism_and_zero_rejection() {
        let a = gen_matrix(MatrixKind::Gaussian, 6, 12, 2).unwrap();
        let x = vec![0.5; 12];
        let b1 = gen_observation(&a, &x, 0.01, 7).unwrap();
        let b2 = gen_observation(&a, &x, 0.01, 7).unwrap();
        assert_eq!(b1, b2);
        // Zero signal and zero noise can only produce the zero observation.
        match gen_observation(&a, &[0.0; 12], 0.0, 7) {
            Err(Error::ZeroObservation) => {}
            other => panic!("expected ZeroObservation, got {other:?}"),
        }
    }

    #[test]
    fn instance_round_trips_through_bundle() {
        let part = GroupPartition::uniform(4, 8).unwrap();
        let inst = gen_instance(MatrixKind::Gaussian, 16, 32, &part, 3, None, 0.001, 123).unwrap();
        let dir = tempdir().unwrap();
        save_instance(&inst, dir.path()).unwrap();
        let back = load_instance(dir.path()).unwrap();
        assert_eq!(inst.a, back.a);
        assert_eq!(inst.b, back.b);
        assert_eq!(inst.part, back.part);
        assert_eq!(inst.ground_truth, back.ground_truth);
        assert_eq!(inst.meta, back.meta);
    }

    #[test]
    fn instance_generation_is_deterministic() {
        let part = GroupPartition::uniform(4, 8).unwrap();
        let a = gen_instance(MatrixKind::Bernoulli, 16, 32, &part, 3, None, 0.001, 9).unwrap();
        let b = gen_instance(MatrixKind::Bernoulli, 16, 32, &part, 3, None, 0.001, 9).unwrap();
        assert_eq!(a.a, b.a);
        assert_eq!(a.b, b.b);
        assert_eq!(a.ground_truth, b.ground_truth);
    }
}

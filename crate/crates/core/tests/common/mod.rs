#![allow(dead_code)]

use binaural_core::linalg::{ComplexVector, HermitianMatrix, C64};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cgauss(rng: &mut Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn cvec(rng: &mut Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| cgauss(rng)).collect()
}

pub fn cv(v: &[C64]) -> ComplexVector {
    ComplexVector::new(v.to_vec()).unwrap()
}

/// `A A^H / k + floor * I` with `A` of size `n x k`.
pub fn random_pd(rng: &mut Rng, n: usize, floor: f64) -> HermitianMatrix {
    let k = 2 * n;
    let a = DMatrix::from_fn(n, k, |_, _| cgauss(rng));
    let m = &a * a.adjoint() / C64::from(k as f64) + DMatrix::identity(n, n) * C64::from(floor);
    from_na(&m)
}

pub fn to_na(m: &HermitianMatrix) -> DMatrix<C64> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |i, j| m.get(i, j))
}

pub fn from_na(m: &DMatrix<C64>) -> HermitianMatrix {
    let n = m.nrows();
    let data: Vec<C64> = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
    HermitianMatrix::symmetrize(n, &data)
}

pub fn block_diag(r: &DMatrix<C64>) -> DMatrix<C64> {
    let n = r.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(r);
    out.view_mut((n, n), (n, n)).copy_from(r);
    out
}

/// Minimizes `w^H R w` subject to `w^H c_k = g_k` by solving the KKT system
/// `[[R, -C], [C^H, 0]] [w; mu] = [0; conj(g)]` with a dense LU.
pub fn kkt_oracle(r: &DMatrix<C64>, cols: &[Vec<C64>], g: &[C64]) -> Vec<C64> {
    let n = r.nrows();
    let k = cols.len();
    let cm = DMatrix::from_fn(n, k, |i, j| cols[j][i]);
    let mut big = DMatrix::zeros(n + k, n + k);
    big.view_mut((0, 0), (n, n)).copy_from(r);
    big.view_mut((0, n), (n, k)).copy_from(&(-&cm));
    big.view_mut((n, 0), (k, n)).copy_from(&cm.adjoint());
    let mut rhs = DVector::zeros(n + k);
    for (j, gj) in g.iter().enumerate() {
        rhs[n + j] = gj.conj();
    }
    let sol = big.lu().solve(&rhs).expect("KKT system solvable");
    sol.iter().take(n).copied().collect()
}

pub fn zeros(n: usize) -> Vec<C64> {
    vec![c(0.0, 0.0); n]
}

/// `[top; bottom]`
pub fn stack(top: &[C64], bottom: &[C64]) -> Vec<C64> {
    top.iter().chain(bottom).copied().collect()
}

pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn rel_err(x: &[C64], reference: &[C64]) -> f64 {
    let diff: f64 = x
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let norm: f64 = reference.iter().map(|z| z.norm_sqr()).sum();
    (diff / norm).sqrt()
}

/// A seeded per-bin problem: noise-like correlation matrix, a desired ATF
/// and `p` interferer ATFs, with their left/right RTFs.
pub struct Instance {
    pub m: usize,
    pub r: HermitianMatrix,
    pub a: Vec<C64>,
    pub b: Vec<Vec<C64>>,
    pub a_l: ComplexVector,
    pub a_r: ComplexVector,
    pub b_l: Vec<ComplexVector>,
    pub b_r: Vec<ComplexVector>,
}

fn rtf(v: &[C64], idx: usize) -> ComplexVector {
    cv(&v.iter().map(|z| z / v[idx]).collect::<Vec<_>>())
}

impl Instance {
    pub fn random(seed: u64, m: usize, p: usize) -> Self {
        let mut g = rng(seed);
        let n = 2 * m;
        let r = random_pd(&mut g, n, 0.1);
        let a = cvec(&mut g, n);
        let b: Vec<Vec<C64>> = (0..p).map(|_| cvec(&mut g, n)).collect();
        Self {
            m,
            a_l: rtf(&a, 0),
            a_r: rtf(&a, m),
            b_l: b.iter().map(|v| rtf(v, 0)).collect(),
            b_r: b.iter().map(|v| rtf(v, m)).collect(),
            r,
            a,
            b,
        }
    }

    pub fn p(&self) -> usize {
        self.b.len()
    }
}

/// Spearman rank correlation via statrs ranks and a Pearson coefficient.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    use statrs::statistics::{Data, OrderStatistics, RankTieBreaker};
    let rx = {
        let mut d = Data::new(x.to_vec());
        d.ranks(RankTieBreaker::Average)
    };
    let ry = {
        let mut d = Data::new(y.to_vec());
        d.ranks(RankTieBreaker::Average)
    };
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Single-bin spectral frames holding the given snapshots.
pub fn frames_of(snapshots: &[Vec<C64>]) -> Vec<binaural_core::wola::SpectralFrame> {
    snapshots
        .iter()
        .enumerate()
        .map(|(t, y)| {
            let mut f = binaural_core::wola::SpectralFrame::zeros(t, 1, y.len());
            f.bin_mut(0).copy_from_slice(y);
            f
        })
        .collect()
}

/// RTF error of covariance whitening when both `R_sn` and `R_n` are sample
/// estimates over `t_l` frames of `y = a s + R_n^{1/2} z` with `E|s|^2 = 5`.
/// `problem` fixes `R_n` and `a`; `draw` seeds the sampled frames.
pub fn sampled_rtf_error(problem: u64, draw: u64, t_l: usize) -> f64 {
    use binaural_core::estimation::{estimate_correlation, estimate_rtf_gevd};
    let mut g = rng(problem);
    let m = 2;
    let r_n = random_pd(&mut g, 2 * m, 0.1);
    let a = cvec(&mut g, 2 * m);
    let l = to_na(&r_n).cholesky().unwrap().l();
    let noise = |g: &mut Rng| -> Vec<C64> {
        let z = DVector::from_vec(cvec(g, 2 * m));
        (&l * z).iter().copied().collect()
    };
    let mut g = rng(draw.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ problem);
    let mut mix = Vec::with_capacity(t_l);
    let mut only = Vec::with_capacity(t_l);
    for _ in 0..t_l {
        let s = cgauss(&mut g) * 5f64.sqrt();
        let v = noise(&mut g);
        mix.push(
            a.iter()
                .zip(&v)
                .map(|(ai, vi)| ai * s + vi)
                .collect::<Vec<_>>(),
        );
        only.push(noise(&mut g));
    }
    let r_sn = estimate_correlation(&frames_of(&mix), 0, 0..t_l).unwrap();
    let r_nh = estimate_correlation(&frames_of(&only), 0, 0..t_l).unwrap();
    let est = estimate_rtf_gevd(&r_sn, &r_nh, m).unwrap();
    let left: Vec<C64> = a.iter().map(|z| z / a[0]).collect();
    let right: Vec<C64> = a.iter().map(|z| z / a[m]).collect();
    0.5 * (rel_err(&est.left, &left) + rel_err(&est.right, &right))
}

/// Filters designed from a scene's true RTFs and true `R_v`, one per bin;
/// DC and Nyquist get the reference selector.
pub fn exact_filters(
    truth: &binaural_core::scene::SceneTruth,
    design: impl Fn(
        &binaural_core::linalg::HermitianMatrix,
        &ExactRtfs,
    ) -> binaural_core::beamform::BeamformerPair,
) -> Vec<binaural_core::beamform::BeamformerPair> {
    let m = truth.mics_per_side();
    let bins = truth.bins.len();
    (0..bins)
        .map(|k| {
            if k == 0 || k == bins - 1 {
                return binaural_core::beamform::BeamformerPair::reference_selector(m);
            }
            let b = &truth.bins[k];
            let rtfs = ExactRtfs {
                a_l: rtf(&b.desired_atf, 0),
                a_r: rtf(&b.desired_atf, m),
                b_l: b.interferer_atfs.iter().map(|v| rtf(v, 0)).collect(),
                b_r: b.interferer_atfs.iter().map(|v| rtf(v, m)).collect(),
            };
            design(&truth.matrices(k).r_v, &rtfs)
        })
        .collect()
}

pub struct ExactRtfs {
    pub a_l: ComplexVector,
    pub a_r: ComplexVector,
    pub b_l: Vec<ComplexVector>,
    pub b_r: Vec<ComplexVector>,
}

/// Exact-model scene truth; signals are rendered only to calibrate gains.
pub fn truth_of(desired: f64, interferers: &[f64], seed: u64) -> binaural_core::scene::SceneTruth {
    use binaural_core::scene::{mix_scene, ArrayGeometry, SceneSpec};
    let spec = SceneSpec {
        active_duration: 1.0,
        ..SceneSpec::new(desired, interferers, seed)
    };
    mix_scene(
        &spec,
        &ArrayGeometry::default(),
        &binaural_core::wola::WolaConfig::default(),
    )
    .unwrap()
    .truth
}

/// BLCMV with the same real scaling `delta` for every interferer and ear.
pub fn blcmv_fixed(
    delta: f64,
) -> impl Fn(&HermitianMatrix, &ExactRtfs) -> binaural_core::beamform::BeamformerPair {
    use binaural_core::beamform::{blcmv, ScalingParameters, StackedCorrelation};
    move |r, e| {
        let d = ScalingParameters::symmetric(&vec![delta; e.b_l.len()]);
        blcmv(
            &StackedCorrelation::new(r.clone()),
            &e.a_l,
            &e.a_r,
            &e.b_l,
            &e.b_r,
            &d,
            0.0,
        )
        .unwrap()
    }
}

//! MIMO system model in its real-valued form.
//!
//! A complex `N_r × N_t` link is carried as `M = 2N_r` real observations of
//! `N = 2N_t` real symbols with `x = [Re x_c; Im x_c]` and
//! `H = [[Re H_c, −Im H_c], [Im H_c, Re H_c]]`. Each real coordinate takes
//! values in a Gray-labelled PAM alphabet of size `Q`, so the complex
//! constellation is square `Q²`-QAM with unit average power.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm_sq, Matrix};
use crate::rng::standard_normal;
use crate::scalar::Real;

/// Bits are carried as `±1`, matching the sign convention of the LLRs.
pub type Bit = i8;

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation<T> {
    alphabet: Vec<T>,
    bits_per_symbol: usize,
    /// Gray label of each alphabet index.
    labels: Vec<usize>,
    /// Alphabet index of each label.
    index_of_label: Vec<usize>,
    d_min: T,
}

impl<T: Real> Constellation<T> {
    /// Normalized `q`-PAM alphabet whose `q²`-QAM product has unit average power.
    pub fn new(q: usize) -> Result<Self> {
        if q < 2 || !q.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "alphabet size {q} is not a power of two >= 2"
            )));
        }
        // mean of (2i - q + 1)^2 over i is (q^2 - 1) / 3; scale so that it becomes 1/2
        let scale = (T::lit(3.0) / (T::lit(2.0) * (T::of_usize(q * q) - T::one()))).sqrt();
        let alphabet = (0..q)
            .map(|i| (T::of_usize(2 * i) - T::of_usize(q - 1)) * scale)
            .collect();
        let labels: Vec<usize> = (0..q).map(|i| i ^ (i >> 1)).collect();
        let mut index_of_label = vec![0; q];
        for (i, &l) in labels.iter().enumerate() {
            index_of_label[l] = i;
        }
        Ok(Self {
            alphabet,
            bits_per_symbol: q.trailing_zeros() as usize,
            labels,
            index_of_label,
            d_min: scale,
        })
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.alphabet.len()
    }

    #[inline]
    pub fn alphabet(&self) -> &[T] {
        &self.alphabet
    }

    #[inline]
    pub fn amplitude(&self, index: usize) -> T {
        self.alphabet[index]
    }

    #[inline]
    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Half the minimum distance between distinct alphabet points.
    #[inline]
    pub fn d_min(&self) -> T {
        self.d_min
    }

    #[inline]
    pub fn label(&self, index: usize) -> usize {
        self.labels[index]
    }

    #[inline]
    pub fn index_of_label(&self, label: usize) -> usize {
        self.index_of_label[label]
    }

    /// Bit `j` (most significant first) of the symbol at `index`, as `±1`.
    #[inline]
    pub fn bit(&self, index: usize, j: usize) -> Bit {
        if (self.labels[index] >> (self.bits_per_symbol - 1 - j)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    /// Alphabet index reached by forcing bit `j` of `index` to `value`.
    #[inline]
    pub fn with_bit(&self, index: usize, j: usize, value: Bit) -> usize {
        let mask = 1 << (self.bits_per_symbol - 1 - j);
        let label = if value > 0 {
            self.labels[index] | mask
        } else {
            self.labels[index] & !mask
        };
        self.index_of_label[label]
    }

    pub fn amplitudes(&self, indices: &[usize]) -> Vec<T> {
        indices.iter().map(|&i| self.alphabet[i]).collect()
    }

    /// Nearest alphabet index, with exact midpoints resolved to the lower amplitude.
    pub fn nearest_index(&self, value: T) -> usize {
        let mut best = 0;
        let mut best_dist = (value - self.alphabet[0]).abs();
        for (i, &a) in self.alphabet.iter().enumerate().skip(1) {
            let d = (value - a).abs();
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        best
    }

    /// Gray-maps groups of `±1` bits to alphabet indices.
    pub fn indices_from_bits(&self, bits: &[Bit]) -> Result<Vec<usize>> {
        let b = self.bits_per_symbol;
        if bits.len() % b != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} bits is not a multiple of {b} bits per symbol",
                bits.len()
            )));
        }
        bits.chunks(b)
            .map(|chunk| {
                let mut label = 0;
                for &bit in chunk {
                    label <<= 1;
                    match bit {
                        1 => label |= 1,
                        -1 => {}
                        other => {
                            return Err(Error::InvalidArgument(format!("bit value {other} is not ±1")))
                        }
                    }
                }
                Ok(self.index_of_label[label])
            })
            .collect()
    }

    pub fn bits_from_indices(&self, indices: &[usize]) -> Vec<Bit> {
        let b = self.bits_per_symbol;
        indices
            .iter()
            .flat_map(|&i| (0..b).map(move |j| self.bit(i, j)))
            .collect()
    }
}

/// Gray-maps a `±1` bit vector to real symbols.
pub fn map_bits<T: Real>(bits: &[Bit], constellation: &Constellation<T>) -> Result<Vec<T>> {
    Ok(constellation.amplitudes(&constellation.indices_from_bits(bits)?))
}

/// Snaps each entry to its nearest alphabet point and returns the Gray bits.
///
/// An entry farther than `d_min` from every point is treated as corrupted.
pub fn demap_bits<T: Real>(x: &[T], constellation: &Constellation<T>) -> Result<Vec<Bit>> {
    let slack = T::one() + T::epsilon() * T::lit(64.0);
    let indices = x
        .iter()
        .map(|&v| {
            let i = constellation.nearest_index(v);
            if !v.is_finite() || (v - constellation.amplitude(i)).abs() > constellation.d_min() * slack {
                Err(Error::OffConstellation {
                    value: v.to_f64_lossy(),
                })
            } else {
                Ok(i)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(constellation.bits_from_indices(&indices))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Rayleigh,
    Kronecker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    #[serde(default)]
    pub rho: f64,
    pub nt: usize,
    pub nr: usize,
}

impl ChannelSpec {
    pub fn rayleigh(nt: usize, nr: usize) -> Self {
        Self {
            kind: ChannelKind::Rayleigh,
            rho: 0.0,
            nt,
            nr,
        }
    }

    pub fn kronecker(nt: usize, nr: usize, rho: f64) -> Self {
        Self {
            kind: ChannelKind::Kronecker,
            rho,
            nt,
            nr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nt == 0 || self.nr == 0 {
            return Err(Error::InvalidArgument("antenna counts must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidArgument(format!("rho = {} outside [0, 1)", self.rho)));
        }
        Ok(())
    }
}

/// Stacks a complex matrix given by its parts into `[[Re, −Im], [Im, Re]]`.
pub fn real_decomposition<T: Real>(re: &Matrix<T>, im: &Matrix<T>) -> Result<Matrix<T>> {
    if re.rows() != im.rows() || re.cols() != im.cols() {
        return Err(Error::DimensionMismatch("real and imaginary parts differ in shape".into()));
    }
    let (r, c) = (re.rows(), re.cols());
    Ok(Matrix::from_fn(2 * r, 2 * c, |i, j| match (i < r, j < c) {
        (true, true) => re[(i, j)],
        (true, false) => -im[(i, j - c)],
        (false, true) => im[(i - r, j)],
        (false, false) => re[(i - r, j - c)],
    }))
}

/// Exponential correlation matrix `R[i][j] = ρ^|i−j|`.
pub fn exponential_correlation<T: Real>(n: usize, rho: T) -> Matrix<T> {
    Matrix::from_fn(n, n, |i, j| rho.powi(i.abs_diff(j) as i32))
}

/// Draws a real-decomposed `2N_r × 2N_t` channel.
pub fn generate_channel<T: Real, R: Rng + ?Sized>(spec: &ChannelSpec, rng: &mut R) -> Result<Matrix<T>> {
    spec.validate()?;
    let half = T::lit(0.5).sqrt();
    let mut re = Matrix::zeros(spec.nr, spec.nt);
    let mut im = Matrix::zeros(spec.nr, spec.nt);
    for i in 0..spec.nr {
        for j in 0..spec.nt {
            re[(i, j)] = standard_normal::<T, _>(rng) * half;
            im[(i, j)] = standard_normal::<T, _>(rng) * half;
        }
    }
    if spec.kind == ChannelKind::Kronecker && spec.rho > 0.0 {
        let rho = T::lit(spec.rho);
        let rr = exponential_correlation(spec.nr, rho).spd_sqrt()?;
        let rt = exponential_correlation(spec.nt, rho).spd_sqrt()?;
        // the correlation factors are real, so they act on both parts separately
        re = rr.matmul(&re)?.matmul(&rt)?;
        im = rr.matmul(&im)?.matmul(&rt)?;
    }
    real_decomposition(&re, &im)
}

/// Complex noise variance for a per-receive-antenna SNR with unit-power symbols
/// and unit-variance channel entries: `σ² = N_t / 10^(snr/10)`.
pub fn snr_to_sigma2<T: Real>(snr_db: T, nt: usize) -> T {
    T::of_usize(nt) / T::lit(10.0).powf(snr_db / T::lit(10.0))
}

/// `y = Hx + n` with i.i.d. `N(0, σ²/2)` noise; `sigma2 = 0` gives the noise-free link.
pub fn transmit<T: Real, R: Rng + ?Sized>(h: &Matrix<T>, x: &[T], sigma2: T, rng: &mut R) -> Result<Vec<T>> {
    if !(sigma2 >= T::zero()) || !sigma2.is_finite() {
        return Err(Error::InvalidArgument(format!("noise variance {sigma2} is invalid")));
    }
    let mut y = h.matvec(x)?;
    if sigma2 > T::zero() {
        let sd = (sigma2 / T::lit(2.0)).sqrt();
        for v in &mut y {
            *v = *v + sd * standard_normal::<T, _>(rng);
        }
    }
    Ok(y)
}

/// Imperfect CSI: `Ĥ = H + E`.
///
/// `E` is drawn as a complex `CN(0, nmse)` matrix and real-decomposed like
/// `H`, so `E‖E‖²_F / E‖H‖²_F = nmse` against the Rayleigh expectation
/// `E‖H‖²_F = MN/2` and the block structure of `Ĥ` is kept.
pub fn perturb_csi<T: Real, R: Rng + ?Sized>(h: &Matrix<T>, nmse: T, rng: &mut R) -> Result<Matrix<T>> {
    if !(nmse >= T::zero()) || !nmse.is_finite() {
        return Err(Error::InvalidArgument(format!("nmse {nmse} must be >= 0")));
    }
    if h.rows() % 2 != 0 || h.cols() % 2 != 0 {
        return Err(Error::DimensionMismatch("real-decomposed channel needs even dimensions".into()));
    }
    if nmse == T::zero() {
        return Ok(h.clone());
    }
    let (nr, nt) = (h.rows() / 2, h.cols() / 2);
    let sd = (nmse / T::lit(2.0)).sqrt();
    let mut re = Matrix::zeros(nr, nt);
    let mut im = Matrix::zeros(nr, nt);
    for i in 0..nr {
        for j in 0..nt {
            re[(i, j)] = sd * standard_normal::<T, _>(rng);
            im[(i, j)] = sd * standard_normal::<T, _>(rng);
        }
    }
    let e = real_decomposition(&re, &im)?;
    Ok(Matrix::from_fn(h.rows(), h.cols(), |i, j| h[(i, j)] + e[(i, j)]))
}

/// The triple `(y, H, σ²)` plus its alphabet; immutable once built.
#[derive(Debug, Clone)]
pub struct DetectionInstance<T> {
    h: Matrix<T>,
    y: Vec<T>,
    sigma2: T,
    constellation: Constellation<T>,
    true_x: Option<Vec<usize>>,
    /// ‖h_n‖² per column, used by single-coordinate updates.
    column_norms: Vec<T>,
}

impl<T: Real> DetectionInstance<T> {
    pub fn new(h: Matrix<T>, y: Vec<T>, sigma2: T, constellation: Constellation<T>) -> Result<Self> {
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma2 = {sigma2} must be positive")));
        }
        if y.len() != h.rows() {
            return Err(Error::DimensionMismatch(format!(
                "y has {} entries, H has {} rows",
                y.len(),
                h.rows()
            )));
        }
        if h.rows() % 2 != 0 || h.cols() % 2 != 0 || h.cols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "real model needs even nonzero dimensions, got {}x{}",
                h.rows(),
                h.cols()
            )));
        }
        let column_norms = (0..h.cols()).map(|j| norm_sq(&h.column(j))).collect();
        Ok(Self {
            h,
            y,
            sigma2,
            constellation,
            true_x: None,
            column_norms,
        })
    }

    pub fn with_truth(mut self, true_x: Vec<usize>) -> Result<Self> {
        if true_x.len() != self.n() || true_x.iter().any(|&i| i >= self.q()) {
            return Err(Error::DimensionMismatch("true_x does not fit the instance".into()));
        }
        self.true_x = Some(true_x);
        Ok(self)
    }

    /// Draws channel, uniform symbols and noise, in that order, from one generator.
    pub fn simulate<R: Rng + ?Sized>(spec: &ChannelSpec, q: usize, snr_db: T, rng: &mut R) -> Result<Self> {
        let constellation = Constellation::new(q)?;
        let h = generate_channel(spec, rng)?;
        let sigma2 = snr_to_sigma2(snr_db, spec.nt);
        let x: Vec<usize> = (0..h.cols()).map(|_| rng.random_range(0..q)).collect();
        let y = transmit(&h, &constellation.amplitudes(&x), sigma2, rng)?;
        Self::new(h, y, sigma2, constellation)?.with_truth(x)
    }

    /// Same transmission observed through a different channel estimate.
    pub fn with_channel(&self, h: Matrix<T>) -> Result<Self> {
        let inst = Self::new(h, self.y.clone(), self.sigma2, self.constellation.clone())?;
        match &self.true_x {
            Some(x) => inst.with_truth(x.clone()),
            None => Ok(inst),
        }
    }

    #[inline]
    pub fn h(&self) -> &Matrix<T> {
        &self.h
    }

    #[inline]
    pub fn y(&self) -> &[T] {
        &self.y
    }

    #[inline]
    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    #[inline]
    pub fn constellation(&self) -> &Constellation<T> {
        &self.constellation
    }

    #[inline]
    pub fn true_x(&self) -> Option<&[usize]> {
        self.true_x.as_deref()
    }

    /// Number of real observations `M`.
    #[inline]
    pub fn m(&self) -> usize {
        self.h.rows()
    }

    /// Number of real symbols `N`.
    #[inline]
    pub fn n(&self) -> usize {
        self.h.cols()
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.constellation.q()
    }

    #[inline]
    pub fn column_norm_sq(&self, n: usize) -> T {
        self.column_norms[n]
    }

    pub fn n_bits(&self) -> usize {
        self.n() * self.constellation.bits_per_symbol()
    }

    /// `y − H x` for a symbol-index vector.
    pub fn residual(&self, x: &[usize]) -> Vec<T> {
        let mut r = self.y.clone();
        for (j, &idx) in x.iter().enumerate() {
            let a = self.constellation.amplitude(idx);
            if a == T::zero() {
                continue;
            }
            for (i, ri) in r.iter_mut().enumerate() {
                *ri = *ri - self.h[(i, j)] * a;
            }
        }
        r
    }

    /// Untempered metric `−‖y − Hx‖²/σ²` of a symbol-index vector.
    pub fn metric(&self, x: &[usize]) -> T {
        -norm_sq(&self.residual(x)) / self.sigma2
    }

    pub fn to_record(&self, seed: u64) -> InstanceRecord {
        InstanceRecord {
            q: self.q(),
            alphabet: self.constellation.alphabet.iter().map(|a| a.to_f64_lossy()).collect(),
            rows: self.m(),
            cols: self.n(),
            h: self.h.as_slice().iter().map(|v| v.to_f64_lossy()).collect(),
            y: self.y.iter().map(|v| v.to_f64_lossy()).collect(),
            sigma2: self.sigma2.to_f64_lossy(),
            true_x: self.true_x.clone(),
            seed,
        }
    }

    pub fn from_record(record: &InstanceRecord) -> Result<Self> {
        let constellation = Constellation::new(record.q)?;
        let h = Matrix::from_row_major(
            record.rows,
            record.cols,
            record.h.iter().map(|&v| T::lit(v)).collect(),
        )?;
        let y = record.y.iter().map(|&v| T::lit(v)).collect();
        let inst = Self::new(h, y, T::lit(record.sigma2), constellation)?;
        match &record.true_x {
            Some(x) => inst.with_truth(x.clone()),
            None => Ok(inst),
        }
    }
}

/// Serialized form of an instance (`H` row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub q: usize,
    pub alphabet: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    #[serde(rename = "H")]
    pub h: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_x: Option<Vec<usize>>,
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn qpsk_alphabet() {
        let c = Constellation::<f64>::new(2).unwrap();
        let s = 0.5f64.sqrt();
        assert!((c.alphabet()[0] + s).abs() < 1e-15);
        assert!((c.alphabet()[1] - s).abs() < 1e-15);
        assert!((c.d_min() - s).abs() < 1e-15);
        assert_eq!(c.bits_per_symbol(), 1);
    }

    #[test]
    fn pam4_alphabet_and_dmin() {
        let c = Constellation::<f64>::new(4).unwrap();
        let s = 10f64.sqrt();
        let expect = [-3.0 / s, -1.0 / s, 1.0 / s, 3.0 / s];
        for (a, e) in c.alphabet().iter().zip(&expect) {
            assert!((a - e).abs() < 1e-15);
        }
        assert!((c.d_min() - 1.0 / s).abs() < 1e-15);
    }

    #[test]
    fn power_normalized_for_all_sizes() {
        for q in [2, 4, 8, 16, 32] {
            let c = Constellation::<f64>::new(q).unwrap();
            let p: f64 = c.alphabet().iter().map(|a| a * a).sum::<f64>() / q as f64;
            assert!((p - 0.5).abs() < 1e-12, "q = {q}");
            assert!(c.alphabet().windows(2).all(|w| w[0] < w[1]));
            let min_gap = c
                .alphabet()
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min);
            assert!((c.d_min() - min_gap / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        for q in [0, 1, 3, 6, 12] {
            assert!(Constellation::<f64>::new(q).is_err());
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for q in [2, 4, 8, 16] {
            let c = Constellation::<f64>::new(q).unwrap();
            for i in 1..q {
                assert_eq!((c.label(i) ^ c.label(i - 1)).count_ones(), 1);
            }
        }
    }

    #[test]
    fn qpsk_positive_bit_is_larger_amplitude() {
        let c = Constellation::<f64>::new(2).unwrap();
        let x = map_bits(&[1], &c).unwrap();
        assert!((x[0] - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(demap_bits(&[0.7071], &c).unwrap(), vec![1]);
    }

    #[test]
    fn demap_midpoint_goes_low_and_far_values_error() {
        let c = Constellation::<f64>::new(4).unwrap();
        let mid = (c.alphabet()[1] + c.alphabet()[2]) / 2.0;
        assert_eq!(c.nearest_index(mid), 1);
        assert_eq!(demap_bits(&[mid], &c).unwrap(), c.bits_from_indices(&[1]));
        assert!(matches!(
            demap_bits(&[c.alphabet()[3] + 1.5 * c.d_min()], &c),
            Err(Error::OffConstellation { .. })
        ));
    }

    #[test]
    fn map_bits_length_and_value_errors() {
        let c = Constellation::<f64>::new(4).unwrap();
        assert!(map_bits(&[1, -1, 1], &c).is_err());
        assert!(map_bits(&[1, 0], &c).is_err());
    }

    #[test]
    fn with_bit_flips_exactly_one_label_bit() {
        let c = Constellation::<f64>::new(8).unwrap();
        for i in 0..8 {
            for j in 0..3 {
                let plus = c.with_bit(i, j, 1);
                let minus = c.with_bit(i, j, -1);
                assert_eq!(c.bit(plus, j), 1);
                assert_eq!(c.bit(minus, j), -1);
                assert_eq!((c.label(plus) ^ c.label(minus)).count_ones(), 1);
                assert!(plus == i || minus == i);
            }
        }
    }

    #[test]
    fn snr_conversion() {
        assert!((snr_to_sigma2(0.0_f64, 2) - 2.0).abs() < 1e-15);
        assert!((snr_to_sigma2(8.0_f64, 2) - 0.316_978_638_492_223_8).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for k in -20..60 {
            let s = snr_to_sigma2(k as f64 * 0.5, 4);
            assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn channel_block_structure() {
        let mut rng = stream(3, &[]);
        for spec in [ChannelSpec::rayleigh(3, 2), ChannelSpec::kronecker(2, 3, 0.7)] {
            let h: Matrix<f64> = generate_channel(&spec, &mut rng).unwrap();
            let (r, c) = (spec.nr, spec.nt);
            assert_eq!((h.rows(), h.cols()), (2 * r, 2 * c));
            for i in 0..r {
                for j in 0..c {
                    assert_eq!(h[(i, j)], h[(i + r, j + c)]);
                    assert_eq!(h[(i, j + c)], -h[(i + r, j)]);
                }
            }
        }
        assert!(ChannelSpec::kronecker(2, 2, 1.0).validate().is_err());
        assert!(ChannelSpec::rayleigh(0, 2).validate().is_err());
    }

    #[test]
    fn real_decomposition_preserves_norms() {
        let mut rng = stream(11, &[]);
        for _ in 0..20 {
            let re = Matrix::from_fn(3, 2, |_, _| standard_normal::<f64, _>(&mut rng));
            let im = Matrix::from_fn(3, 2, |_, _| standard_normal::<f64, _>(&mut rng));
            let xr: Vec<f64> = (0..2).map(|_| standard_normal(&mut rng)).collect();
            let xi: Vec<f64> = (0..2).map(|_| standard_normal(&mut rng)).collect();
            // complex product by hand
            let mut complex_norm = 0.0;
            for i in 0..3 {
                let mut pr = 0.0;
                let mut pi = 0.0;
                for j in 0..2 {
                    pr += re[(i, j)] * xr[j] - im[(i, j)] * xi[j];
                    pi += re[(i, j)] * xi[j] + im[(i, j)] * xr[j];
                }
                complex_norm += pr * pr + pi * pi;
            }
            let h = real_decomposition(&re, &im).unwrap();
            let x: Vec<f64> = xr.iter().chain(&xi).copied().collect();
            let real_norm = norm_sq(&h.matvec(&x).unwrap());
            assert!((real_norm.sqrt() - complex_norm.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_free_transmit_and_determinism() {
        let mut rng = stream(5, &[]);
        let h: Matrix<f64> = generate_channel(&ChannelSpec::rayleigh(2, 2), &mut rng).unwrap();
        let x = [0.5f64.sqrt(); 4];
        assert_eq!(transmit(&h, &x, 0.0, &mut rng).unwrap(), h.matvec(&x).unwrap());
        let a = transmit(&h, &x, 0.3, &mut stream(9, &[1])).unwrap();
        let b = transmit(&h, &x, 0.3, &mut stream(9, &[1])).unwrap();
        assert_eq!(a, b);
        assert!(transmit(&h, &x, -1.0, &mut rng).is_err());
        assert!(transmit(&h, &x[..3], 0.3, &mut rng).is_err());
    }

    #[test]
    fn perturb_zero_is_identity_and_negative_errors() {
        let mut rng = stream(5, &[]);
        let h: Matrix<f64> = generate_channel(&ChannelSpec::rayleigh(2, 2), &mut rng).unwrap();
        assert_eq!(perturb_csi(&h, 0.0, &mut rng).unwrap(), h);
        assert!(perturb_csi(&h, -0.1, &mut rng).is_err());
    }

    #[test]
    fn instance_validation() {
        let c = Constellation::<f64>::new(2).unwrap();
        let h = Matrix::identity(2);
        assert!(DetectionInstance::new(h.clone(), vec![0.0; 2], 0.0, c.clone()).is_err());
        assert!(DetectionInstance::new(h.clone(), vec![0.0; 3], 1.0, c.clone()).is_err());
        assert!(DetectionInstance::new(Matrix::identity(3), vec![0.0; 3], 1.0, c.clone()).is_err());
        let inst = DetectionInstance::new(h, vec![0.0; 2], 1.0, c).unwrap();
        assert!(inst.clone().with_truth(vec![0, 2]).is_err());
    }

    #[test]
    fn record_round_trip() {
        let mut rng = stream(1, &[]);
        let inst = DetectionInstance::<f64>::simulate(&ChannelSpec::rayleigh(2, 2), 4, 10.0, &mut rng).unwrap();
        let rec = inst.to_record(42);
        let json = serde_json::to_string(&rec).unwrap();
        assert!(json.contains("\"H\""));
        let back: InstanceRecord = serde_json::from_str(&json).unwrap();
        let inst2 = DetectionInstance::<f64>::from_record(&back).unwrap();
        assert_eq!(inst2.h(), inst.h());
        assert_eq!(inst2.y(), inst.y());
        assert_eq!(inst2.true_x(), inst.true_x());
    }
}

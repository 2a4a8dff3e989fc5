//! Random linear-dispersion codes: `S(s) = [A_1 s, ..., A_M s]` with Haar
//! unitary `A_i` and BPSK symbol vectors `s`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::rng::{complex_gaussian, stream_rng};
use crate::{Error, Result, C64};

/// Largest block length for which all `2^T` codewords are enumerated.
pub const MAX_BLOCK_LEN: usize = 12;

/// A draw with `lambda_min` below this is treated as rank deficient and
/// regenerated.
const RANK_FLOOR: f64 = 1e-9;
const MAX_REDRAWS: u64 = 64;

/// Haar-distributed `n x n` unitary: QR of a complex Gaussian matrix, with
/// the phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let z = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng, 1.0));
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// BPSK symbol vector of codeword `index`: `s_t = +1` when bit `t` is 0,
/// `-1` when it is 1.
pub fn bpsk_symbols(index: usize, block_len: usize) -> DVector<C64> {
    DVector::from_fn(block_len, |t, _| {
        C64::new(if index >> t & 1 == 0 { 1.0 } else { -1.0 }, 0.0)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdCodebook {
    dispersion: Vec<DMatrix<C64>>,
    codewords: Vec<DMatrix<C64>>,
    lambda_min: f64,
}

impl LdCodebook {
    /// Code from explicit dispersion matrices (`M = T` square unitaries).
    pub fn from_dispersion(dispersion: Vec<DMatrix<C64>>) -> Result<Self> {
        let m = dispersion.len();
        if m == 0 {
            return Err(Error::Config("a code needs at least one dispersion matrix".into()));
        }
        let t = dispersion[0].nrows();
        if t > MAX_BLOCK_LEN {
            return Err(Error::Size(format!(
                "T = {t} exceeds {MAX_BLOCK_LEN}; exhaustive enumeration is infeasible, \
                 supply lambda_min externally and use a non-exhaustive decoder"
            )));
        }
        if t != m || dispersion.iter().any(|a| a.nrows() != t || a.ncols() != t) {
            return Err(Error::Config(format!(
                "dispersion matrices must be {m} x {m} (M = T)"
            )));
        }
        let codewords = (0..1usize << t)
            .map(|k| codeword_matrix(&dispersion, &bpsk_symbols(k, t)))
            .collect();
        let lambda_min = min_difference_eigenvalue(&dispersion);
        Ok(LdCodebook {
            dispersion,
            codewords,
            lambda_min,
        })
    }

    pub fn block_len(&self) -> usize {
        self.dispersion[0].nrows()
    }

    pub fn relays(&self) -> usize {
        self.dispersion.len()
    }

    pub fn dispersion(&self) -> &[DMatrix<C64>] {
        &self.dispersion
    }

    /// `T x M` codeword matrices, indexed like [`bpsk_symbols`].
    pub fn codewords(&self) -> &[DMatrix<C64>] {
        &self.codewords
    }

    /// Smallest eigenvalue of `(S_k - S_l)^H (S_k - S_l)` over all `k != l`.
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn symbols(&self, index: usize) -> DVector<C64> {
        bpsk_symbols(index, self.block_len())
    }

    /// `max_i max |A_i^H A_i - I|`.
    pub fn unitarity_residual(&self) -> f64 {
        let t = self.block_len();
        let eye = DMatrix::<C64>::identity(t, t);
        self.dispersion
            .iter()
            .map(|a| (a.adjoint() * a - &eye).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Plain-text form: a header line, then for each matrix an `A <i>` line
    /// followed by `T` rows of interleaved `re im` pairs, 17 significant
    /// digits.
    pub fn to_text(&self) -> String {
        let t = self.block_len();
        let mut out = format!("ld-codebook T={t} M={}\n", self.relays());
        for (i, a) in self.dispersion.iter().enumerate() {
            let _ = writeln!(out, "A {}", i + 1);
            for r in 0..t {
                let row: Vec<String> = (0..t)
                    .map(|c| format!("{:.16e} {:.16e}", a[(r, c)].re, a[(r, c)].im))
                    .collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Spec {
            line,
            msg: format!("codebook: {msg}"),
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty input"))?;
        let mut t = None;
        let mut m = None;
        for tok in header.split_whitespace().skip(1) {
            match tok.split_once('=') {
                Some(("T", v)) => t = v.parse::<usize>().ok(),
                Some(("M", v)) => m = v.parse::<usize>().ok(),
                _ => {}
            }
        }
        if !header.starts_with("ld-codebook") {
            return Err(bad(1, "missing ld-codebook header"));
        }
        let (t, m) = match (t, m) {
            (Some(t), Some(m)) if t > 0 && m > 0 => (t, m),
            _ => return Err(bad(1, "header needs T=<n> M=<n>")),
        };
        let mut dispersion = Vec::with_capacity(m);
        for i in 0..m {
            let (ln, tag) = lines.next().ok_or_else(|| bad(0, "truncated input"))?;
            if tag.trim() != format!("A {}", i + 1) {
                return Err(bad(ln + 1, &format!("expected 'A {}'", i + 1)));
            }
            let mut a = DMatrix::<C64>::zeros(t, t);
            for r in 0..t {
                let (ln, row) = lines.next().ok_or_else(|| bad(0, "truncated input"))?;
                let nums: Vec<f64> = row
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(ln + 1, "unparsable number"))?;
                if nums.len() != 2 * t {
                    return Err(bad(ln + 1, &format!("expected {} numbers", 2 * t)));
                }
                for c in 0..t {
                    a[(r, c)] = C64::new(nums[2 * c], nums[2 * c + 1]);
                }
            }
            dispersion.push(a);
        }
        LdCodebook::from_dispersion(dispersion)
    }
}

fn codeword_matrix(dispersion: &[DMatrix<C64>], s: &DVector<C64>) -> DMatrix<C64> {
    let t = s.len();
    let mut out = DMatrix::<C64>::zeros(t, dispersion.len());
    for (i, a) in dispersion.iter().enumerate() {
        out.set_column(i, &(a * s));
    }
    out
}

// S(s) is linear in s, so S_k - S_l = S(d) with d in {0, +-2}^T \ {0}; d and -d
// give the same Gram matrix.
fn min_difference_eigenvalue(dispersion: &[DMatrix<C64>]) -> f64 {
    let t = dispersion[0].nrows();
    let total = 3usize.pow(t as u32);
    let mut best = f64::INFINITY;
    let mut d = DVector::<C64>::zeros(t);
    for code in 1..total {
        let mut rest = code;
        let mut first_sign = 0i8;
        for k in 0..t {
            let digit = rest % 3;
            rest /= 3;
            let v: i8 = match digit {
                0 => 0,
                1 => 2,
                _ => -2,
            };
            if first_sign == 0 && v != 0 {
                first_sign = v.signum();
            }
            d[k] = C64::new(v as f64, 0.0);
        }
        if first_sign < 0 {
            continue;
        }
        let diff = codeword_matrix(dispersion, &d);
        let gram = diff.adjoint() * &diff;
        let low = gram.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        best = best.min(low);
    }
    best.max(0.0)
}

/// Random `T = M` code with Haar dispersion matrices. A rank-deficient draw
/// (probability zero) is redrawn from the next stream.
pub fn generate_codebook(block_len: usize, seed: u64) -> Result<LdCodebook> {
    if block_len == 0 {
        return Err(Error::Config("T must be at least 1".into()));
    }
    if block_len > MAX_BLOCK_LEN {
        return Err(Error::Size(format!(
            "T = {block_len} exceeds {MAX_BLOCK_LEN}; exhaustive ML and lambda_min \
             enumeration are infeasible, supply lambda_min externally"
        )));
    }
    for attempt in 0..MAX_REDRAWS {
        let mut rng = stream_rng(seed, attempt);
        let dispersion = (0..block_len).map(|_| haar_unitary(block_len, &mut rng)).collect();
        let code = LdCodebook::from_dispersion(dispersion)?;
        if code.lambda_min > RANK_FLOOR {
            return Ok(code);
        }
        log::warn!("codebook draw {attempt} is rank deficient, redrawing");
    }
    Err(Error::Domain(format!(
        "no full-rank code found in {MAX_REDRAWS} draws"
    )))
}

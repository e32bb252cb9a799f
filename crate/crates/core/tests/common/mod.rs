#![allow(dead_code)]

use chatterjee_core::model::JointPmf;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Random PMF on `{0..kx} × {0..ky}` with small integer weights (zeros allowed)
/// and at least two Y atoms of positive mass.
pub fn random_pmf(rng: &mut ChaCha8Rng, max_x: usize, max_y: usize) -> JointPmf {
    loop {
        let kx = rng.random_range(1..=max_x);
        let ky = rng.random_range(2..=max_y);
        let w: Vec<Vec<f64>> = (0..kx)
            .map(|_| (0..ky).map(|_| f64::from(rng.random_range(0u32..6))).collect())
            .collect();
        let total: f64 = w.iter().flatten().sum();
        let col_mass = (0..ky).filter(|&j| w.iter().any(|r| r[j] > 0.0)).count();
        if total == 0.0 || col_mass < 2 {
            continue;
        }
        let prob = w.iter().map(|r| r.iter().map(|v| v / total).collect()).collect();
        let sx = (0..kx).map(|i| i as f64 * 1.5 - 1.0).collect();
        let sy = (0..ky).map(|j| j as f64 * 0.75).collect();
        return JointPmf::new(sx, sy, prob).unwrap();
    }
}

/// Marginal weights that are multiples of 1/64, so sums of their products
/// are exact in binary floating point.
pub fn dyadic_weights(rng: &mut ChaCha8Rng, k: usize, min_positive: usize) -> Vec<f64> {
    loop {
        let mut cuts: Vec<u32> = (0..k - 1).map(|_| rng.random_range(0..=64)).collect();
        cuts.sort_unstable();
        let mut prev = 0;
        let mut w = Vec::with_capacity(k);
        for c in cuts.iter().chain(std::iter::once(&64)) {
            w.push(f64::from(c - prev) / 64.0);
            prev = *c;
        }
        if w.iter().filter(|&&v| v > 0.0).count() >= min_positive {
            return w;
        }
    }
}

pub fn dyadic_product_pmf(rng: &mut ChaCha8Rng, max_x: usize, max_y: usize) -> JointPmf {
    let kx = rng.random_range(1..=max_x);
    let ky = rng.random_range(2..=max_y);
    let px = dyadic_weights(rng, kx, 1);
    let py = dyadic_weights(rng, ky, 2);
    let sx = (0..kx).map(|i| i as f64).collect();
    let sy = (0..ky).map(|j| j as f64).collect();
    JointPmf::product(sx, &px, sy, &py).unwrap()
}

/// Limiting quantities computed straight from the definitions by nested
/// enumeration over (x, y₀, …, y₄), with every H value recomputed in place.
#[derive(Debug, Clone, Copy)]
pub struct NaiveSigma {
    pub mu1: f64,
    pub mu2: f64,
    pub s11: f64,
    pub s22: f64,
    pub s12: f64,
    pub sigma_sq: f64,
}

struct Law {
    px: Vec<f64>,
    cond: Vec<Vec<f64>>,
    py: Vec<f64>,
    k: usize,
}

impl Law {
    fn new(pmf: &JointPmf) -> Law {
        let p = pmf.prob();
        let k = pmf.support_y().len();
        let px: Vec<f64> = p.iter().map(|r| r.iter().sum()).collect();
        let cond = p
            .iter()
            .zip(&px)
            .map(|(r, &m)| r.iter().map(|v| if m > 0.0 { v / m } else { 0.0 }).collect())
            .collect();
        let py = (0..k).map(|j| p.iter().map(|r| r[j]).sum()).collect();
        Law { px, cond, py, k }
    }

    /// P(Y₁ = a, Y₂ = b) for two Y's sharing one x.
    fn q(&self, a: usize, b: usize) -> f64 {
        self.px.iter().zip(&self.cond).map(|(m, c)| m * c[a] * c[b]).sum()
    }

    fn h1(&self, y: usize, yp: usize) -> f64 {
        let (lo, hi) = (y.min(yp), y.max(yp));
        let mut t = 0.0;
        for c in 0..self.k {
            t += self.py[c] * ind(lo < c && c <= hi);
        }
        for a in 0..self.k {
            for b in 0..self.k {
                t += self.q(a, b) * ind(a.min(b) < y && y <= a.max(b));
            }
        }
        t
    }

    /// E h₂ with y placed in each of the three slots, the others independent Y's.
    fn h2(&self, y: usize) -> f64 {
        let mut t = 0.0;
        for a in 0..self.k {
            for b in 0..self.k {
                let w = self.py[a] * self.py[b];
                t += w * (ind(a >= y && b < y) + ind(y >= a && b < a) + ind(a >= b && y < b));
            }
        }
        t
    }

    fn h(&self, which: u8, a: usize, b: usize) -> f64 {
        if which == 1 {
            self.h1(a, b)
        } else {
            self.h2(a)
        }
    }

    fn sigma(&self, fa: u8, fb: u8) -> f64 {
        let k = self.k;
        let mut total = 0.0;
        let (mut ea_mix, mut eb_mix, mut eab_mix) = (0.0, 0.0, 0.0);
        for (x, c) in self.cond.iter().enumerate() {
            if self.px[x] == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for y0 in 0..k {
                for y1 in 0..k {
                    for y2 in 0..k {
                        for y3 in 0..k {
                            for y4 in 0..k {
                                let w = c[y0] * c[y1] * c[y2] * c[y3] * c[y4];
                                if w == 0.0 {
                                    continue;
                                }
                                let a = self.h(fa, y1, y2);
                                let base = self.h(fb, y3, y4);
                                s += w
                                    * a
                                    * ((self.h(fb, y0, y1) - base)
                                        + (self.h(fb, y1, y2) - base)
                                        + (self.h(fb, y2, y3) - base));
                            }
                        }
                    }
                }
            }
            let (mut ea, mut eb) = (0.0, 0.0);
            for a in 0..k {
                for b in 0..k {
                    ea += c[a] * c[b] * self.h(fa, a, b);
                    eb += c[a] * c[b] * self.h(fb, a, b);
                }
            }
            total += self.px[x] * s;
            ea_mix += self.px[x] * ea;
            eb_mix += self.px[x] * eb;
            eab_mix += self.px[x] * ea * eb;
        }
        total + eab_mix - ea_mix * eb_mix
    }
}

pub fn naive_sigma(pmf: &JointPmf) -> NaiveSigma {
    let law = Law::new(pmf);
    let k = law.k;
    let mut mu1 = 0.0;
    let mut mu2 = 0.0;
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                mu1 += law.q(a, b) * law.py[c] * ind(a.min(b) < c && c <= a.max(b));
                mu2 += law.py[a] * law.py[b] * law.py[c] * ind(a < b && b <= c);
            }
        }
    }
    let s11 = law.sigma(1, 1);
    let s22 = law.sigma(2, 2);
    let s12 = law.sigma(1, 2);
    let r = mu1 / mu2;
    let sigma_sq = (s11 - 2.0 * s12 * r + s22 * r * r) / (2.0 * mu2).powi(2);
    NaiveSigma { mu1, mu2, s11, s22, s12, sigma_sq }
}

/// For i.i.d. Y (product PMF) the consecutive pairs form a stationary
/// 1-dependent sequence, and the V-statistic of h₁ has limiting variance
/// r² Σₖ₌₋₁¹ Cov(g(Z₁), g(Z₁₊ₖ)), where g is the first-order projection of
/// the symmetrized kernel. Every term, including k = −1, is enumerated.
pub fn one_dependent_h1_variance(py: &[f64]) -> f64 {
    let k = py.len();
    let h = |s: (usize, usize), t: (usize, usize)| -> f64 {
        let sgn = (s.1 as f64 - s.0 as f64).signum();
        sgn * (ind(t.0 <= s.1) - ind(t.0 <= s.0))
    };
    let sym = |s: (usize, usize), t: (usize, usize)| 0.5 * (h(s, t) + h(t, s));
    let pairs: Vec<((usize, usize), f64)> =
        (0..k).flat_map(|a| (0..k).map(move |b| ((a, b), py[a] * py[b]))).collect();
    let mu: f64 = pairs
        .iter()
        .flat_map(|&(s, ws)| pairs.iter().map(move |&(t, wt)| ws * wt * sym(s, t)))
        .sum();
    let g = |s: (usize, usize)| -> f64 { pairs.iter().map(|&(t, w)| w * sym(s, t)).sum::<f64>() - mu };
    let table: Vec<Vec<f64>> = (0..k).map(|a| (0..k).map(|b| g((a, b))).collect()).collect();
    let r = 2.0;
    let mut total = 0.0;
    for y0 in 0..k {
        for y1 in 0..k {
            for y2 in 0..k {
                for y3 in 0..k {
                    let w = py[y0] * py[y1] * py[y2] * py[y3];
                    let z1 = table[y1][y2];
                    // g has mean zero, so each covariance is a plain expectation.
                    total += w * (z1 * table[y0][y1] + z1 * z1 + z1 * table[y2][y3]);
                }
            }
        }
    }
    r * r * total
}

/// Direct triple and double sums behind the kernel rewriting of ξₙ.
pub fn brute_identity_sums(y: &[f64]) -> (u128, i128, u128) {
    let n = y.len();
    let rank = |i: usize| (0..n).filter(|&j| y[j] <= y[i]).count() as i64;
    let num_direct: u128 = (0..n - 1).map(|i| (rank(i + 1) - rank(i)).unsigned_abs() as u128).sum();
    let mut num_kernel: i128 = 0;
    for i in 0..n - 1 {
        let s = (y[i + 1] - y[i]).signum() as i128;
        for j in 0..n {
            num_kernel += s * ((y[j] <= y[i + 1]) as i128 - (y[j] <= y[i]) as i128);
        }
    }
    let mut den_kernel: u128 = 0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                den_kernel += (y[j] >= y[i] && y[k] < y[i]) as u128;
            }
        }
    }
    (num_direct, num_kernel, den_kernel)
}

/// Mean and unbiased variance.
pub fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var)
}

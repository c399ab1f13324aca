// Structured (banded) applications of the model operators. The Hamiltonian
// only couples n ↔ n±2 and the jump operators shift by one level, so the
// right-hand sides cost O(D²) for ρ and O(D) for ψ instead of dense products.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent when std is in the build graph
use num_traits::Float;

use crate::model::ModelParams;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone)]
pub(crate) struct Structure {
    pub dim: usize,
    /// Δn + χn²
    pub energies: Vec<f64>,
    /// √((k+1)(k+2)), the (k+2, k) entry of a†²; length D−2.
    pub pair: Vec<f64>,
    pub sqrt_n: Vec<f64>,
    pub omega: C64,
    /// (N+1)γ
    pub decay: f64,
    /// Nγ
    pub excite: f64,
    /// Diagonal of Σ L†L on the truncated space.
    pub loss: Vec<f64>,
}

impl Structure {
    pub fn new(params: &ModelParams) -> Self {
        let d = params.dim;
        let decay = params.decay_rate();
        let excite = params.excitation_rate();
        let energies = (0..d).map(|n| {
            let n = n as f64;
            params.delta * n + params.chi * n * n
        });
        let loss = (0..d).map(|n| {
            // truncated a a† has a zero in the corner
            let aad = if n + 1 < d { (n + 1) as f64 } else { 0.0 };
            decay * n as f64 + excite * aad
        });
        Structure {
            dim: d,
            energies: energies.collect(),
            pair: (0..d.saturating_sub(2)).map(|k| (((k + 1) * (k + 2)) as f64).sqrt()).collect(),
            sqrt_n: (0..d).map(|n| (n as f64).sqrt()).collect(),
            omega: params.omega(),
            decay,
            excite,
            loss: loss.collect(),
        }
    }

    /// out = f·(Ω a†² + Ω* a²) ψ
    pub fn apply_drive(&self, f: f64, psi: &[C64], out: &mut [C64]) {
        let d = self.dim;
        let w = self.omega * f;
        let wc = w.conj();
        for m in 0..d {
            let mut s = C64::new(0.0, 0.0);
            if m >= 2 {
                s += w * self.pair[m - 2] * psi[m - 2];
            }
            if m + 2 < d {
                s += wc * self.pair[m] * psi[m + 2];
            }
            out[m] = s;
        }
    }

    /// Lindblad right-hand side without the static phase term −i[H₀, ρ]:
    /// −i f [V, ρ] + Σ D[Lᵢ]ρ.
    pub fn master_nonstiff(&self, f: f64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        let w = self.omega * f;
        let wc = w.conj();
        let at = |m: usize, n: usize| rho[m * d + n];
        for m in 0..d {
            for n in 0..d {
                // (Vρ − ρV)_{mn}
                let mut comm = C64::new(0.0, 0.0);
                if m >= 2 {
                    comm += w * self.pair[m - 2] * at(m - 2, n);
                }
                if m + 2 < d {
                    comm += wc * self.pair[m] * at(m + 2, n);
                }
                if n + 2 < d {
                    comm -= at(m, n + 2) * w * self.pair[n];
                }
                if n >= 2 {
                    comm -= at(m, n - 2) * wc * self.pair[n - 2];
                }
                let mut v = -I * comm - at(m, n) * (0.5 * (self.loss[m] + self.loss[n]));
                if m + 1 < d && n + 1 < d {
                    v += at(m + 1, n + 1) * (self.decay * self.sqrt_n[m + 1] * self.sqrt_n[n + 1]);
                }
                if self.excite != 0.0 && m >= 1 && n >= 1 {
                    v += at(m - 1, n - 1) * (self.excite * self.sqrt_n[m] * self.sqrt_n[n]);
                }
                out[m * d + n] = v;
            }
        }
    }

    /// Full Lindblad right-hand side.
    pub fn master_rhs(&self, f: f64, rho: &[C64], out: &mut [C64]) {
        self.master_nonstiff(f, rho, out);
        let d = self.dim;
        for m in 0..d {
            for n in 0..d {
                out[m * d + n] -= I * (self.energies[m] - self.energies[n]) * rho[m * d + n];
            }
        }
    }

    /// e^{−i(E_m − E_n)h} for every matrix entry.
    pub fn master_phases(&self, h: f64) -> Vec<C64> {
        let d = self.dim;
        let mut out = Vec::with_capacity(d * d);
        for m in 0..d {
            for n in 0..d {
                out.push(C64::from_polar(1.0, -(self.energies[m] - self.energies[n]) * h));
            }
        }
        out
    }

    /// e^{(−iE_n − ½ g_n) h}: exact propagator of the diagonal part of the
    /// effective non-Hermitian Hamiltonian.
    pub fn pure_phases(&self, h: f64) -> Vec<C64> {
        (0..self.dim)
            .map(|n| C64::from_polar((-0.5 * self.loss[n] * h).exp(), -self.energies[n] * h))
            .collect()
    }
}

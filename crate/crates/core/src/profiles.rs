//! Smooth cutoff profiles and the Fourier transform of the standard bump.
//!
//! Every compactly supported profile in the crate is built from the
//! mollifier `b(u) = exp(-1/(1-u²))` on `(-1, 1)`:
//!
//! * `bump_ft(ω) = ∫ b(u) cos(ωu) du / ∫ b` is the (real, even) Fourier
//!   transform of the bump normalized to 1 at the origin; both the radial
//!   profile `η` of the Knapp plates and the window profile `ρ` are
//!   rescalings of it.
//! * [`a_profile`] and [`beta_profile`] are smooth steps built from `exp(-1/t)`.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;
use std::sync::OnceLock;

/// `exp(-1/(1-u²))` on `(-1, 1)`, zero outside.
pub fn bump(u: f64) -> f64 {
    let v = 1.0 - u * u;
    if v <= 0.0 {
        0.0
    } else {
        (-1.0 / v).exp()
    }
}

fn flat_exp(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C^∞ step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = flat_exp(t);
    a / (a + flat_exp(1.0 - t))
}

/// Angular cutoff: `a(s) = 1` for `|s| ≤ 1/2`, `supp a ⊂ (-1, 1)`, `0 ≤ a ≤ 1`.
pub fn a_profile(s: f64) -> f64 {
    let s = s.abs();
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        1.0 - smooth_step(2.0 * s - 1.0)
    }
}

/// Dyadic cutoff: `β(s) = 1` on `[1/2, 2]`, `supp β ⊂ (1/4, 4)`.
pub fn beta_profile(s: f64) -> f64 {
    if s <= 0.25 || s >= 4.0 {
        0.0
    } else if s < 0.5 {
        smooth_step((s - 0.25) / 0.25)
    } else if s <= 2.0 {
        1.0
    } else {
        1.0 - smooth_step((s - 2.0) / 2.0)
    }
}

const LEVEL_MAX: usize = 1 << 16;

/// Bump samples on the finest trapezoid level over `[0, 1]`.
fn bump_nodes() -> &'static [f64] {
    static NODES: OnceLock<Vec<f64>> = OnceLock::new();
    NODES.get_or_init(|| {
        (0..=LEVEL_MAX)
            .map(|j| bump(j as f64 / LEVEL_MAX as f64))
            .collect()
    })
}

fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| trapezoid_pair(0.0).0)
}

/// Adaptive trapezoid for `(∫_{-1}^{1} b cos(ωu), -∫_{-1}^{1} u b sin(ωu))`.
///
/// The integrand vanishes to all orders at `±1`, so the trapezoid rule is
/// spectrally accurate once the oscillation is resolved; levels double until
/// two successive estimates agree to `1e-17` absolute.
fn trapezoid_pair(omega: f64) -> (f64, f64) {
    let nodes = bump_nodes();
    let eval = |j_fine: usize| -> (f64, f64) {
        let u = j_fine as f64 / LEVEL_MAX as f64;
        let b = nodes[j_fine];
        let (s, c) = (omega * u).sin_cos();
        (b * c, -u * b * s)
    };
    let mut n = (omega.abs().ceil() as usize).next_power_of_two().max(32);
    if n > LEVEL_MAX {
        n = LEVEL_MAX;
    }
    // level n: sum over j = 0..n of f(j/n), f(0)/2 weight, f(1) = 0
    let stride = LEVEL_MAX / n;
    let (mut sv, mut sd) = (0.5 * eval(0).0, 0.5 * eval(0).1);
    for j in 1..n {
        let (v, d) = eval(j * stride);
        sv += v;
        sd += d;
    }
    let mut est = (2.0 * sv / n as f64, 2.0 * sd / n as f64);
    while n < LEVEL_MAX {
        let stride = LEVEL_MAX / (2 * n);
        for j in (1..2 * n).step_by(2) {
            let (v, d) = eval(j * stride);
            sv += v;
            sd += d;
        }
        n *= 2;
        let next = (2.0 * sv / n as f64, 2.0 * sd / n as f64);
        let converged = (next.0 - est.0).abs() <= 1e-17 && (next.1 - est.1).abs() <= 1e-17;
        est = next;
        if converged {
            break;
        }
    }
    est
}

/// Normalized bump Fourier transform `B(ω)/B(0)`; real, even, equal to 1 at 0.
pub fn bump_ft(omega: f64) -> f64 {
    if omega == 0.0 {
        return 1.0;
    }
    trapezoid_pair(omega.abs()).0 / bump_mass()
}

/// `(B(ω)/B(0), B'(ω)/B(0))`.
pub fn bump_ft_with_derivative(omega: f64) -> (f64, f64) {
    let (v, d) = trapezoid_pair(omega.abs());
    let m = bump_mass();
    let sign = if omega < 0.0 { -1.0 } else { 1.0 };
    (v / m, sign * d / m)
}

/// Beyond this argument `|B(ω)/B(0)|` is at the roundoff floor (below `1e-15`); tables treat it as zero.
pub const BUMP_FT_CUTOFF: f64 = 1024.0;

/// Smallest `ω₀` such that `|B(ω)/B(0)| < threshold` for every sampled
/// `ω ∈ [ω₀, BUMP_FT_CUTOFF]` (step 1/4).
pub fn bump_ft_tail(threshold: f64) -> f64 {
    let steps = (BUMP_FT_CUTOFF * 4.0) as usize;
    for i in (0..=steps).rev() {
        let omega = i as f64 / 4.0;
        if bump_ft(omega).abs() >= threshold {
            return (omega + 0.25).min(BUMP_FT_CUTOFF);
        }
    }
    0.0
}

const SIDECAR_MAGIC: &[u8; 8] = b"SCLPROF1";
const SIDECAR_VERSION: u32 = 1;

/// Cubic-Hermite table of `τ ↦ B(scale·τ)/B(0)`.
///
/// `scale` plays the role of `c₀` for the Knapp radial profile and of `δδ₀`
/// for the window profile. Tables are persisted in a little-endian binary
/// sidecar keyed by `(scale, per_unit)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    scale: f64,
    per_unit: usize,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl ProfileTable {
    /// Tabulates on `ω = scale·|τ| ∈ [0, BUMP_FT_CUTOFF]` with `per_unit` samples per unit of `ω`.
    pub fn build(scale: f64, per_unit: usize) -> Self {
        assert!(scale > 0.0 && per_unit > 0);
        use rayon::prelude::*;
        let len = BUMP_FT_CUTOFF as usize * per_unit + 1;
        let pairs: Vec<(f64, f64)> = (0..len)
            .into_par_iter()
            .map(|i| bump_ft_with_derivative(i as f64 / per_unit as f64))
            .collect();
        let (values, derivs) = pairs.into_iter().unzip();
        Self {
            scale,
            per_unit,
            values,
            derivs,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn per_unit(&self) -> usize {
        self.per_unit
    }

    /// `B(scale·τ)/B(0)` by cubic Hermite interpolation.
    pub fn eval(&self, tau: f64) -> f64 {
        let omega = (self.scale * tau).abs();
        if omega >= BUMP_FT_CUTOFF {
            return 0.0;
        }
        let x = omega * self.per_unit as f64;
        let i = (x.floor() as usize).min(self.values.len() - 2);
        let t = x - i as f64;
        let h = 1.0 / self.per_unit as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.derivs[i] * h, self.derivs[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1
    }

    /// Canonical sidecar file name for a key.
    pub fn sidecar_name(scale: f64, per_unit: usize) -> String {
        format!("profile-{:016x}-{per_unit}.bin", scale.to_bits())
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let mut buf = Vec::with_capacity(40 + 16 * self.values.len());
        buf.extend_from_slice(SIDECAR_MAGIC);
        buf.extend_from_slice(&SIDECAR_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.scale.to_le_bytes());
        buf.extend_from_slice(&(self.per_unit as u64).to_le_bytes());
        buf.extend_from_slice(&(self.values.len() as u64).to_le_bytes());
        for v in self.values.iter().chain(&self.derivs) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let tmp = path.with_extension("bin.tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&buf)?;
            f.sync_all()?;
        }
        fs::rename(tmp, path)
    }

    /// Reads a sidecar and checks that it matches the requested key.
    pub fn load(path: &Path, scale: f64, per_unit: usize) -> io::Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
        if bytes.len() < 36 || &bytes[..8] != SIDECAR_MAGIC {
            return Err(bad("not a profile sidecar"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        if u32_at(8) != SIDECAR_VERSION {
            return Err(bad("unsupported sidecar version"));
        }
        if f64_at(12).to_bits() != scale.to_bits() || u64_at(20) as usize != per_unit {
            return Err(bad("sidecar key mismatch"));
        }
        let len = u64_at(28) as usize;
        if bytes.len() != 36 + 16 * len || len != BUMP_FT_CUTOFF as usize * per_unit + 1 {
            return Err(bad("truncated sidecar"));
        }
        let read = |k: usize| f64_at(36 + 8 * k);
        Ok(Self {
            scale,
            per_unit,
            values: (0..len).map(read).collect(),
            derivs: (len..2 * len).map(read).collect(),
        })
    }

    /// Loads the sidecar from `dir` if present and valid, otherwise builds
    /// and writes it. Returns the table and whether it was a cache hit.
    pub fn load_or_build(dir: &Path, scale: f64, per_unit: usize) -> io::Result<(Self, bool)> {
        let path = dir.join(Self::sidecar_name(scale, per_unit));
        if let Ok(table) = Self::load(&path, scale, per_unit) {
            return Ok((table, true));
        }
        let table = Self::build(scale, per_unit);
        fs::create_dir_all(dir)?;
        table.save(&path)?;
        Ok((table, false))
    }
}

//! Crank–Nicolson propagation of single orbitals and of pair wavefunctions.
//!
//! One step solves `(1 + iτH/2) ψ' = (1 − iτH/2) ψ` with `τ = dt/ħ`, the
//! three-point Laplacian and hard walls at the window edges. The potential is
//! evaluated at the midpoint `t + dt/2`.

use super::grid::{shift_values, shift_values_2d, Window};
use super::material::{MaterialParams, SawPotential};
use crate::error::{Error, Result};
use crate::C64;

/// General complex tridiagonal solve (Thomas algorithm). `sub[0]` and
/// `sup[n-1]` are ignored.
pub fn solve_tridiagonal(sub: &[C64], diag: &[C64], sup: &[C64], rhs: &[C64]) -> Result<Vec<C64>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    let mut cp = vec![C64::new(0.0, 0.0); n];
    let mut dp = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        let m = if i == 0 {
            diag[0]
        } else {
            diag[i] - sub[i] * cp[i - 1]
        };
        if m.norm() < 1e-300 {
            return Err(Error::SingularSystem { row: i });
        }
        cp[i] = sup[i] / m;
        dp[i] = if i == 0 {
            rhs[0] / m
        } else {
            (rhs[i] - sub[i] * dp[i - 1]) / m
        };
    }
    let mut x = dp;
    for i in (0..n.saturating_sub(1)).rev() {
        let next = x[i + 1];
        x[i] -= cp[i] * next;
    }
    Ok(x)
}

/// LU factors of a tridiagonal matrix with constant off-diagonal `off`,
/// reusable for many right-hand sides.
#[derive(Clone, Debug)]
pub struct ThomasFactor {
    off: C64,
    cp: Vec<C64>,
    inv_m: Vec<C64>,
}

impl ThomasFactor {
    pub fn new(diag: &[C64], off: C64) -> Result<Self> {
        let mut f = ThomasFactor {
            off,
            cp: vec![C64::new(0.0, 0.0); diag.len()],
            inv_m: vec![C64::new(0.0, 0.0); diag.len()],
        };
        f.refactor(diag)?;
        Ok(f)
    }

    pub fn refactor(&mut self, diag: &[C64]) -> Result<()> {
        let mut prev = C64::new(0.0, 0.0);
        for (i, &d) in diag.iter().enumerate() {
            let m = d - self.off * prev;
            if m.norm() < 1e-300 {
                return Err(Error::SingularSystem { row: i });
            }
            let inv = m.inv();
            self.inv_m[i] = inv;
            prev = self.off * inv;
            self.cp[i] = prev;
        }
        Ok(())
    }

    /// Solves in place.
    pub fn solve(&self, x: &mut [C64]) {
        let n = x.len();
        let mut prev = C64::new(0.0, 0.0);
        for i in 0..n {
            prev = (x[i] - self.off * prev) * self.inv_m[i];
            x[i] = prev;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let next = x[i + 1];
            x[i] -= self.cp[i] * next;
        }
    }

    /// Solves along the first axis of a row-major `n × cols` array, all
    /// columns at once.
    pub fn solve_columns(&self, x: &mut [C64], cols: usize) {
        let n = self.inv_m.len();
        for i in 0..n {
            let inv = self.inv_m[i];
            if i == 0 {
                for v in &mut x[..cols] {
                    *v *= inv;
                }
            } else {
                let (head, tail) = x.split_at_mut(i * cols);
                let prev = &head[(i - 1) * cols..];
                for (v, p) in tail[..cols].iter_mut().zip(prev) {
                    *v = (*v - self.off * p) * inv;
                }
            }
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let c = self.cp[i];
            let (head, tail) = x.split_at_mut((i + 1) * cols);
            let row = &mut head[i * cols..];
            for (v, nx) in row.iter_mut().zip(&tail[..cols]) {
                *v -= c * nx;
            }
        }
    }
}

/// How the window and the time-dependent potential behave.
#[derive(Clone, Debug, PartialEq)]
pub enum Drive {
    /// No SAW; the window stays put.
    Static,
    /// SAW potential on; the window follows minimum `minimum` of the wave.
    Saw { saw: SawPotential, minimum: i64 },
}

impl Drive {
    fn potential(&self, y: f64, t: f64) -> f64 {
        match self {
            Drive::Static => 0.0,
            Drive::Saw { saw, .. } => saw.value(y, t),
        }
    }

    /// Window shift owed at time `t`.
    pub fn shift_at(&self, window: &Window, t: f64) -> i64 {
        match self {
            Drive::Static => 0,
            Drive::Saw { saw, minimum } => window.cells_to(saw.minimum(*minimum, t)),
        }
    }

    /// Window after `steps` steps of length `dt` starting at `t0`.
    pub fn window_after(&self, window: &Window, t0: f64, dt: f64, steps: usize) -> Window {
        let mut w = *window;
        for n in 1..=steps {
            w = w.shifted(self.shift_at(&w, t0 + n as f64 * dt));
        }
        w
    }
}

/// Time-independent lab-frame potential added to the drive, meV.
pub type Profile<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

pub fn no_profile(_: f64) -> f64 {
    0.0
}

/// Shared step constants.
#[derive(Clone, Copy, Debug)]
pub struct CnParams {
    pub dt: f64,
    pub hbar: f64,
    pub kinetic: f64,
}

impl CnParams {
    pub fn new(material: &MaterialParams, spacing: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "time step must be positive, got {dt}"
            )));
        }
        Ok(CnParams {
            dt,
            hbar: material.hbar,
            kinetic: material.kinetic_prefactor / (spacing * spacing),
        })
    }

    /// `i dt / (2ħ)`
    fn f(&self) -> C64 {
        C64::new(0.0, self.dt / (2.0 * self.hbar))
    }

    fn fill_potential(
        &self,
        window: &Window,
        drive: &Drive,
        profile: Profile,
        t: f64,
        v: &mut [f64],
    ) {
        for (i, vi) in v.iter_mut().enumerate() {
            let y = window.y(i);
            *vi = drive.potential(y, t) + profile(y);
        }
    }
}

/// Advances one orbital by `steps` steps starting at `t0`. Returns the new
/// orbital and the window it lives on.
pub fn evolve_orbital(
    psi: &[C64],
    window: &Window,
    drive: &Drive,
    profile: Profile,
    params: &CnParams,
    t0: f64,
    steps: usize,
) -> Result<(Vec<C64>, Window)> {
    let n = window.points;
    if psi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: psi.len(),
        });
    }
    let f = params.f();
    let c = params.kinetic;
    let off = -f * c;
    let mut w = *window;
    let mut out = psi.to_vec();
    let mut v = vec![0.0; n];
    let mut diag = vec![C64::new(0.0, 0.0); n];
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    let mut factor = ThomasFactor::new(&vec![C64::new(1.0, 0.0); n], off)?;
    for step in 0..steps {
        let t = t0 + step as f64 * params.dt;
        params.fill_potential(&w, drive, profile, t + 0.5 * params.dt, &mut v);
        for i in 0..n {
            let h = f * (2.0 * c + v[i]);
            diag[i] = 1.0 + h;
            let mut r = (1.0 - h) * out[i];
            if i > 0 {
                r += f * c * out[i - 1];
            }
            if i + 1 < n {
                r += f * c * out[i + 1];
            }
            rhs[i] = r;
        }
        factor.refactor(&diag)?;
        factor.solve(&mut rhs);
        std::mem::swap(&mut out, &mut rhs);
        let cells = drive.shift_at(&w, t + params.dt);
        if cells != 0 {
            shift_values(&mut out, cells);
            w = w.shifted(cells);
        }
    }
    Ok((out, w))
}

/// Pair wavefunction `ψ(y_a, y_b)` on a shared window, row-major with `y_a`
/// along rows.
#[derive(Clone, Debug, PartialEq)]
pub struct PairGrid {
    pub window: Window,
    pub values: Vec<C64>,
}

impl PairGrid {
    pub fn product(a: &[C64], b: &[C64], window: Window) -> Self {
        let mut values = Vec::with_capacity(a.len() * b.len());
        for x in a {
            for y in b {
                values.push(x * y);
            }
        }
        PairGrid { window, values }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.window.spacing.powi(2)
    }

    pub fn transposed(&self) -> Self {
        let n = self.window.points;
        let mut values = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                values[j * n + i] = self.values[i * n + j];
            }
        }
        PairGrid {
            window: self.window,
            values,
        }
    }
}

/// Screened Coulomb interaction between two particles on parallel wires.
pub trait PairInteraction: Sync {
    /// Half-step phase factors `exp(−i V dt / 2ħ)` for the given window.
    fn half_phases(&self, window: &Window, params: &CnParams) -> Vec<C64>;
}

/// Advances a pair wavefunction by `steps` steps. Both particles see the
/// same drive and profile; the interaction enters through symmetric
/// half-step phases around a Peaceman–Rachford step, which factorizes
/// exactly into the 1D Crank–Nicolson propagators when the interaction
/// vanishes.
pub fn evolve_pair(
    psi: &PairGrid,
    drive: &Drive,
    interaction: &dyn PairInteraction,
    params: &CnParams,
    t0: f64,
    steps: usize,
) -> Result<PairGrid> {
    let n = psi.window.points;
    if psi.values.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: psi.values.len(),
        });
    }
    let f = params.f();
    let c = params.kinetic;
    let off = -f * c;
    let fc = f * c;
    let mut w = psi.window;
    let mut a = psi.values.clone();
    let mut b = vec![C64::new(0.0, 0.0); n * n];
    let mut v = vec![0.0; n];
    let mut diag = vec![C64::new(0.0, 0.0); n];
    let mut one_minus = vec![C64::new(0.0, 0.0); n];
    let mut factor = ThomasFactor::new(&vec![C64::new(1.0, 0.0); n], off)?;
    let mut phases = interaction.half_phases(&w, params);
    for step in 0..steps {
        let t = t0 + step as f64 * params.dt;
        params.fill_potential(&w, drive, &no_profile, t + 0.5 * params.dt, &mut v);
        for i in 0..n {
            let h = f * (2.0 * c + v[i]);
            diag[i] = 1.0 + h;
            one_minus[i] = 1.0 - h;
        }
        factor.refactor(&diag)?;
        for (x, p) in a.iter_mut().zip(&phases) {
            *x *= p;
        }
        // (1 + fH_a) ψ* = (1 − fH_b) ψ
        for i in 0..n {
            let row = &a[i * n..(i + 1) * n];
            let out = &mut b[i * n..(i + 1) * n];
            for j in 0..n {
                let mut r = one_minus[j] * row[j];
                if j > 0 {
                    r += fc * row[j - 1];
                }
                if j + 1 < n {
                    r += fc * row[j + 1];
                }
                out[j] = r;
            }
        }
        factor.solve_columns(&mut b, n);
        // (1 + fH_b) ψ' = (1 − fH_a) ψ*
        for i in 0..n {
            let om = one_minus[i];
            for j in 0..n {
                let mut r = om * b[i * n + j];
                if i > 0 {
                    r += fc * b[(i - 1) * n + j];
                }
                if i + 1 < n {
                    r += fc * b[(i + 1) * n + j];
                }
                a[i * n + j] = r;
            }
        }
        for row in a.chunks_exact_mut(n) {
            factor.solve(row);
        }
        for (x, p) in a.iter_mut().zip(&phases) {
            *x *= p;
        }
        let cells = drive.shift_at(&w, t + params.dt);
        if cells != 0 {
            shift_values_2d(&mut a, n, cells);
            w = w.shifted(cells);
            phases = interaction.half_phases(&w, params);
        }
    }
    Ok(PairGrid {
        window: w,
        values: a,
    })
}

//! Dense reference representation: one full `k`-particle grid per wire
//! configuration. Memory grows as `2^k N^k`, so it is meant for coarse
//! grids and at most three particles.

use nalgebra::{DMatrix, DMatrixView, SymmetricEigen};
use rayon::prelude::*;

use super::cn::{evolve_orbital, evolve_pair, no_profile, CnParams, Drive, PairGrid};
use super::device::{BarrierSpec, CoulombCoupling, CouplerSpec};
use super::grid::Window;
use super::settings::SimSettings;
use super::state::SEPARABLE_PHASE_BOUND;
use crate::error::{Error, Result};
use crate::qlogic::DensityMatrix;
use crate::C64;

pub const MAX_DENSE_PARTICLES: usize = 3;

/// Largest fraction of the state's squared norm dropped per configuration
/// when splitting off spectators.
const SPECTATOR_CUTOFF: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    particles: Vec<String>,
    window: Window,
    drive: Drive,
    time: f64,
    /// `comps[X]` is row-major with particle 0 slowest.
    comps: Vec<Vec<C64>>,
}

/// Single-particle propagator over a segment: column `j` is the evolved
/// basis vector `e_j`, expressed on the window reached at the segment end.
struct Propagator {
    matrix: DMatrix<C64>,
    window: Window,
}

fn propagator(
    window: &Window,
    drive: &Drive,
    barrier: Option<&BarrierSpec>,
    params: &CnParams,
    t0: f64,
    steps: usize,
) -> Result<Propagator> {
    let n = window.points;
    let cols: Vec<(Vec<C64>, Window)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            match barrier {
                Some(b) => {
                    let prof = b.profile();
                    evolve_orbital(&e, window, drive, &prof, params, t0, steps)
                }
                None => evolve_orbital(&e, window, drive, &no_profile, params, t0, steps),
            }
        })
        .collect::<Result<_>>()?;
    let out_window = cols[0].1;
    let mut matrix = DMatrix::<C64>::zeros(n, n);
    for (j, (c, _)) in cols.iter().enumerate() {
        matrix.set_column(j, &nalgebra::DVector::from_column_slice(c));
    }
    Ok(Propagator {
        matrix,
        window: out_window,
    })
}

/// Applies `u` along `axis` of a `k`-axis tensor of side `n`.
fn apply_along(data: &[C64], n: usize, k: usize, axis: usize, u: &DMatrix<C64>) -> Vec<C64> {
    let inner = n.pow((k - 1 - axis) as u32);
    let block = n * inner;
    let ut = u.transpose();
    let mut out = vec![C64::new(0.0, 0.0); data.len()];
    out.par_chunks_mut(block)
        .zip(data.par_chunks(block))
        .for_each(|(o, d)| {
            // a row-major (n, inner) block is a column-major (inner, n) matrix
            let a = DMatrixView::from_slice(d, inner, n);
            let r = a * &ut;
            o.copy_from_slice(r.as_slice());
        });
    out
}

/// Reorders tensor axes so that new axis `j` is old axis `order[j]`.
fn permute(data: &[C64], n: usize, order: &[usize]) -> Vec<C64> {
    let k = order.len();
    let strides_old: Vec<usize> = (0..k).map(|a| n.pow((k - 1 - a) as u32)).collect();
    let mut out = vec![C64::new(0.0, 0.0); data.len()];
    let mut idx = vec![0usize; k];
    for o in out.iter_mut() {
        let src: usize = (0..k).map(|j| idx[j] * strides_old[order[j]]).sum();
        *o = data[src];
        for j in (0..k).rev() {
            idx[j] += 1;
            if idx[j] < n {
                break;
            }
            idx[j] = 0;
        }
    }
    out
}

/// Indices of the largest eigenvalues whose complement carries at most
/// `cutoff × reference`.
fn leading(eigenvalues: &[f64], cutoff: f64, reference: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eigenvalues[j].total_cmp(&eigenvalues[i]));
    let mut tail: f64 = eigenvalues.iter().map(|e| e.max(0.0)).sum();
    let mut keep = Vec::new();
    for i in order {
        if tail <= cutoff * reference {
            break;
        }
        tail -= eigenvalues[i].max(0.0);
        keep.push(i);
    }
    keep
}

fn inverse(order: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; order.len()];
    for (j, &a) in order.iter().enumerate() {
        inv[a] = j;
    }
    inv
}

impl DenseState {
    /// Every particle carries `orbital`; particle `p` sits in wire `wires[p]`.
    pub fn product(
        particles: &[&str],
        wires: &[u8],
        orbital: &[C64],
        window: Window,
        drive: Drive,
        time: f64,
    ) -> Result<Self> {
        let k = particles.len();
        if k == 0 || k > MAX_DENSE_PARTICLES || wires.len() != k {
            return Err(Error::InvalidArgument(format!(
                "dense states hold 1..={MAX_DENSE_PARTICLES} particles with one wire each (got {k}, {})",
                wires.len()
            )));
        }
        if orbital.len() != window.points {
            return Err(Error::DimensionMismatch {
                expected: window.points,
                found: orbital.len(),
            });
        }
        if wires.iter().any(|&w| w > 1) {
            return Err(Error::InvalidArgument("wire index must be 0 or 1".into()));
        }
        let n = window.points;
        let mut grid = vec![C64::new(1.0, 0.0)];
        for _ in 0..k {
            grid = grid
                .iter()
                .flat_map(|a| orbital.iter().map(move |b| a * b))
                .collect();
        }
        let size = n.pow(k as u32);
        let x = wires.iter().fold(0usize, |acc, &w| (acc << 1) | w as usize);
        let comps = (0..1usize << k)
            .map(|c| {
                if c == x {
                    grid.clone()
                } else {
                    vec![C64::new(0.0, 0.0); size]
                }
            })
            .collect();
        Ok(DenseState {
            particles: particles.iter().map(|s| s.to_string()).collect(),
            window,
            drive,
            time,
            comps,
        })
    }

    pub fn particles(&self) -> &[String] {
        &self.particles
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn n_particles(&self) -> usize {
        self.particles.len()
    }

    pub fn index_of(&self, qubit: &str) -> Result<usize> {
        self.particles
            .iter()
            .position(|p| p == qubit)
            .ok_or_else(|| Error::UnknownQubit(qubit.to_string()))
    }

    fn bit(&self, p: usize) -> usize {
        self.n_particles() - 1 - p
    }

    pub fn apply_logical_rx(&self, qubit: &str, theta: f64) -> Result<Self> {
        let b = 1usize << self.bit(self.index_of(qubit)?);
        let c = C64::new((theta / 2.0).cos(), 0.0);
        let s = C64::new(0.0, (theta / 2.0).sin());
        let mut out = self.clone();
        for x0 in (0..self.comps.len()).filter(|x| x & b == 0) {
            let x1 = x0 | b;
            let (a0, a1) = (&self.comps[x0], &self.comps[x1]);
            out.comps[x0] = a0.iter().zip(a1).map(|(u, v)| c * u + s * v).collect();
            out.comps[x1] = a0.iter().zip(a1).map(|(u, v)| s * u + c * v).collect();
        }
        Ok(out)
    }

    pub fn apply_conditional_phase(&self, conditions: &[(&str, u8)], angle: f64) -> Result<Self> {
        let mut mask = 0usize;
        let mut value = 0usize;
        for &(q, w) in conditions {
            let b = 1usize << self.bit(self.index_of(q)?);
            mask |= b;
            if w == 1 {
                value |= b;
            }
        }
        let ph = C64::from_polar(1.0, angle);
        let mut out = self.clone();
        for (x, comp) in out.comps.iter_mut().enumerate() {
            if x & mask == value {
                comp.iter_mut().for_each(|a| *a *= ph);
            }
        }
        Ok(out)
    }

    /// Segment of `steps` steps in which the barrier wire of its qubit, if
    /// any, sees `barrier`.
    pub fn propagate(
        &self,
        barrier: Option<&BarrierSpec>,
        steps: usize,
        settings: &SimSettings,
    ) -> Result<Self> {
        let params = settings.cn()?;
        let n = self.window.points;
        let k = self.n_particles();
        let free = propagator(&self.window, &self.drive, None, &params, self.time, steps)?;
        let (target, barred) = match barrier {
            Some(b) if b.height > 0.0 => {
                b.validate()?;
                let p = self.index_of(&b.qubit)?;
                let u = propagator(
                    &self.window,
                    &self.drive,
                    Some(b),
                    &params,
                    self.time,
                    steps,
                )?;
                (Some((p, b.wire)), Some(u))
            }
            _ => (None, None),
        };
        let comps = self
            .comps
            .iter()
            .enumerate()
            .map(|(x, comp)| {
                let mut a = comp.clone();
                for p in 0..k {
                    let w = ((x >> self.bit(p)) & 1) as u8;
                    let u = match (&target, &barred) {
                        (Some((q, bw)), Some(u)) if *q == p && *bw == w => &u.matrix,
                        _ => &free.matrix,
                    };
                    a = apply_along(&a, n, k, p, u);
                }
                a
            })
            .collect();
        Ok(DenseState {
            particles: self.particles.clone(),
            window: free.window,
            drive: self.drive.clone(),
            time: self.time + steps as f64 * params.dt,
            comps,
        })
    }

    /// Coupler traversal. Configurations whose interaction phase bound is
    /// below [`SEPARABLE_PHASE_BOUND`] are propagated freely; the others run on
    /// the full pair grid for the whole segment, with spectators split off by
    /// an eigendecomposition of their Gram matrix and propagated freely.
    pub fn propagate_coupler(
        &self,
        coupler: &CouplerSpec,
        steps: usize,
        settings: &SimSettings,
    ) -> Result<Self> {
        coupler.validate()?;
        let params = settings.cn()?;
        let n = self.window.points;
        let k = self.n_particles();
        let pa = self.index_of(&coupler.pair.0)?;
        let pb = self.index_of(&coupler.pair.1)?;
        if k < 2 {
            return Err(Error::InvalidArgument(
                "a coupler needs two particles".into(),
            ));
        }
        let free = propagator(&self.window, &self.drive, None, &params, self.time, steps)?;
        let spectators: Vec<usize> = (0..k).filter(|&p| p != pa && p != pb).collect();
        let mut order = spectators.clone();
        order.extend([pa, pb]);
        let inv = inverse(&order);
        let s_dim = n.pow(spectators.len() as u32);
        let pair_dim = n * n;

        let reference: f64 = self.comps.iter().flatten().map(|z| z.norm_sqr()).sum();
        let mut comps = Vec::with_capacity(self.comps.len());
        for (x, comp) in self.comps.iter().enumerate() {
            let xa = ((x >> self.bit(pa)) & 1) as u8;
            let xb = ((x >> self.bit(pb)) & 1) as u8;
            let interacting = (xa, xb) == coupler.interacting_config;
            let coupling = CoulombCoupling::for_config(coupler, &settings.material, interacting);
            let duration = steps as f64 * params.dt;
            let near = interacting
                && coupling.phase_bound(true, duration, params.hbar) >= SEPARABLE_PHASE_BOUND;
            if !near && coupling.phase_bound(false, duration, params.hbar) < SEPARABLE_PHASE_BOUND {
                let mut a = comp.clone();
                for p in 0..k {
                    a = apply_along(&a, n, k, p, &free.matrix);
                }
                comps.push(a);
                continue;
            }
            let m = permute(comp, n, &order);
            // rows: spectator index, columns: pair index
            let mm = DMatrix::from_row_slice(s_dim, pair_dim, &m);
            let gram = &mm * mm.adjoint();
            let eig = SymmetricEigen::new(gram);
            let parts: Vec<(Vec<C64>, Vec<C64>)> =
                leading(eig.eigenvalues.as_slice(), SPECTATOR_CUTOFF, reference)
                    .into_iter()
                    .map(|i| {
                        let e = eig.eigenvectors.column(i).into_owned();
                        let psi = (e.adjoint() * &mm).transpose();
                        (e.as_slice().to_vec(), psi.as_slice().to_vec())
                    })
                    .collect();
            let evolved: Vec<(Vec<C64>, Vec<C64>)> = parts
                .par_iter()
                .map(|(e, psi)| {
                    let grid = PairGrid {
                        window: self.window,
                        values: psi.clone(),
                    };
                    let out =
                        evolve_pair(&grid, &self.drive, &coupling, &params, self.time, steps)?;
                    let e2 = if spectators.is_empty() {
                        e.clone()
                    } else {
                        apply_along(e, n, spectators.len(), 0, &free.matrix)
                    };
                    Ok((e2, out.values))
                })
                .collect::<Result<_>>()?;
            let mut acc = vec![C64::new(0.0, 0.0); s_dim * pair_dim];
            for (e, psi) in &evolved {
                for (i, ei) in e.iter().enumerate() {
                    for (a, p) in acc[i * pair_dim..(i + 1) * pair_dim].iter_mut().zip(psi) {
                        *a += ei * p;
                    }
                }
            }
            comps.push(permute(&acc, n, &inv));
        }
        Ok(DenseState {
            particles: self.particles.clone(),
            window: free.window,
            drive: self.drive.clone(),
            time: self.time + steps as f64 * params.dt,
            comps,
        })
    }

    pub fn logical_density_matrix(&self, keep: &[&str]) -> Result<DensityMatrix> {
        let dim = self.comps.len();
        let vol = self.window.spacing.powi(self.n_particles() as i32);
        let mut rho = DMatrix::<C64>::zeros(dim, dim);
        for x in 0..dim {
            for y in 0..dim {
                let s: C64 = self.comps[x]
                    .iter()
                    .zip(&self.comps[y])
                    .map(|(a, b)| a * b.conj())
                    .sum();
                rho[(x, y)] = s * vol;
            }
        }
        DensityMatrix::new(self.particles.clone(), rho)?.partial_trace(keep)
    }

    pub fn total_norm(&self) -> f64 {
        let vol = self.window.spacing.powi(self.n_particles() as i32);
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            * vol
    }

    /// Diagonal of the single-particle density of `qubit` in each wire.
    pub fn positional_density(&self, qubit: &str) -> Result<(Vec<f64>, Vec<f64>)> {
        let p = self.index_of(qubit)?;
        let n = self.window.points;
        let k = self.n_particles();
        let inner = n.pow((k - 1 - p) as u32);
        let vol = self.window.spacing.powi(k as i32 - 1);
        let mut curves = [vec![0.0; n], vec![0.0; n]];
        for (x, comp) in self.comps.iter().enumerate() {
            let w = (x >> self.bit(p)) & 1;
            for (idx, a) in comp.iter().enumerate() {
                curves[w][(idx / inner) % n] += a.norm_sqr() * vol;
            }
        }
        let [c0, c1] = curves;
        Ok((c0, c1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavesim::orbital::{comoving_window, init_wavepacket};
    use crate::wavesim::state::SemiOneDState;

    fn coarse_start(particles: &[&str]) -> (SemiOneDState, DenseState, SimSettings) {
        let mut s = SimSettings::coarse();
        s.grid.points = 48;
        s.grid.spacing = 5.0;
        let (w, d) = comoving_window(&s.saw, 0.0, 0.0, s.grid.spacing, s.grid.points).unwrap();
        let psi = init_wavepacket(&s.saw, &w, &s.material, 0, 0.0).unwrap();
        let wires = vec![0; particles.len()];
        let lr = SemiOneDState::product(particles, &wires, psi.clone(), w, d.clone(), 0.0).unwrap();
        let dn = DenseState::product(particles, &wires, &psi, w, d, 0.0).unwrap();
        (lr, dn, s)
    }

    #[test]
    fn permute_round_trips() {
        let data: Vec<C64> = (0..27).map(|i| C64::new(i as f64, 0.0)).collect();
        let order = [2, 0, 1];
        let p = permute(&data, 3, &order);
        // new index (i, j, l) holds old (j, l, i)
        assert_eq!(p[1 * 9 + 2 * 3], data[2 * 9 + 1]);
        assert_eq!(permute(&p, 3, &inverse(&order)), data);
    }

    #[test]
    fn free_segment_matches_low_rank_route() {
        let (lr, dn, s) = coarse_start(&["a", "b"]);
        let lr = lr
            .apply_logical_rx("a", 1.1)
            .unwrap()
            .propagate_free(200, &s)
            .unwrap();
        let dn = dn
            .apply_logical_rx("a", 1.1)
            .unwrap()
            .propagate(None, 200, &s)
            .unwrap();
        let r1 = lr.logical_density_matrix(&["a", "b"]).unwrap();
        let r2 = dn.logical_density_matrix(&["a", "b"]).unwrap();
        assert!((r1.entries() - r2.entries()).camax() < 1e-10);
        assert!((dn.total_norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn too_many_particles_rejected() {
        let w = Window::around(0.0, 10.0, 8).unwrap();
        let psi = vec![C64::new(1.0, 0.0); 8];
        assert!(
            DenseState::product(&["a", "b", "c", "d"], &[0; 4], &psi, w, Drive::Static, 0.0)
                .is_err()
        );
    }
}

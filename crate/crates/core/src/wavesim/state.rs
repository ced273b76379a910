//! Low-rank semi-1D state `Φ_X(Y) = Σ_t c_t(X) Π_p φ_{t,p,X_p}(y_p)`.
//!
//! Each term carries a configuration-amplitude map over `X ∈ {0,1}^k` and,
//! per particle, one orbital per wire. Orbitals are reference counted and
//! never mutated, so identical orbitals are shared between terms and each
//! distinct orbital is propagated once per gate.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cn::{evolve_orbital, evolve_pair, no_profile, CnParams, Drive, PairGrid};
use super::device::{BarrierSpec, CoulombCoupling, CouplerSpec};
use super::grid::{inner, Window};
use super::settings::SimSettings;
use crate::error::{Error, Result};
use crate::qlogic::DensityMatrix;
use crate::C64;

pub type Orbital = Arc<Vec<C64>>;

/// Phase bound, rad, below which a pair configuration is propagated as a product.
pub const SEPARABLE_PHASE_BOUND: f64 = 1e-10;
/// Smallest fraction of the barrier wire's population that must stay in the
/// trap for a phase-shifter traversal to count as transmitted.
pub const TRANSMISSION_THRESHOLD: f64 = 0.99;

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleOrbitals {
    pub wire0: Orbital,
    /// `None` when wire 1 carries the same orbital as wire 0.
    pub wire1: Option<Orbital>,
}

impl ParticleOrbitals {
    pub fn shared(o: Orbital) -> Self {
        ParticleOrbitals {
            wire0: o,
            wire1: None,
        }
    }

    pub fn wire(&self, w: u8) -> &Orbital {
        match (w, &self.wire1) {
            (1, Some(o)) => o,
            _ => &self.wire0,
        }
    }

    pub fn is_shared(&self) -> bool {
        self.wire1.is_none()
    }

    fn key(&self) -> (usize, usize) {
        (ptr(&self.wire0), ptr(self.wire(1)))
    }
}

fn ptr(o: &Orbital) -> usize {
    Arc::as_ptr(o) as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeffs: Vec<C64>,
    pub orbitals: Vec<ParticleOrbitals>,
}

impl Term {
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }
}

/// Diagnostics of one phase-shifter traversal.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseShifterReport {
    /// Fraction of the barrier wire's population still inside the trap.
    pub transmitted: f64,
}

/// Diagnostics of one coupler traversal.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CouplerReport {
    pub pair_runs: usize,
    pub max_rank: usize,
    pub max_discarded: f64,
    /// Steps spent on the full pair grid for the interacting configuration.
    pub coupled_steps: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CouplerOptions {
    /// Propagate every configuration of the pair on the full pair grid for
    /// the whole segment, even when its interaction is negligible.
    pub force_pair_grid: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemiOneDState {
    particles: Vec<String>,
    window: Window,
    drive: Drive,
    time: f64,
    terms: Vec<Term>,
}

impl SemiOneDState {
    /// Every particle carries `orbital`; particle `p` sits in wire `wires[p]`.
    pub fn product(
        particles: &[&str],
        wires: &[u8],
        orbital: Vec<C64>,
        window: Window,
        drive: Drive,
        time: f64,
    ) -> Result<Self> {
        let k = particles.len();
        if k == 0 || k > crate::qlogic::state::MAX_QUBITS || wires.len() != k {
            return Err(Error::InvalidArgument(format!(
                "need 1..=4 particles with one wire each (got {k}, {})",
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
        let mut coeffs = vec![C64::new(0.0, 0.0); 1 << k];
        let x = wires.iter().fold(0usize, |acc, &w| (acc << 1) | w as usize);
        coeffs[x] = C64::new(1.0, 0.0);
        let o: Orbital = Arc::new(orbital);
        Ok(SemiOneDState {
            particles: particles.iter().map(|s| s.to_string()).collect(),
            window,
            drive,
            time,
            terms: vec![Term {
                coeffs,
                orbitals: vec![ParticleOrbitals::shared(o); k],
            }],
        })
    }

    pub fn particles(&self) -> &[String] {
        &self.particles
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn drive(&self) -> &Drive {
        &self.drive
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
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

    /// Mixes the wire amplitudes of `qubit` by the beam-splitter matrix.
    /// Terms whose two wire orbitals differ are split first so that the
    /// mixed amplitudes share one orbital.
    pub fn apply_logical_rx(&self, qubit: &str, theta: f64) -> Result<Self> {
        let p = self.index_of(qubit)?;
        let bit = 1usize << self.bit(p);
        let c = C64::new((theta / 2.0).cos(), 0.0);
        let s = C64::new(0.0, (theta / 2.0).sin());
        let mut terms = Vec::with_capacity(self.terms.len());
        for term in &self.terms {
            let parts: Vec<Term> = if term.orbitals[p].is_shared() {
                vec![term.clone()]
            } else {
                (0..2u8)
                    .map(|w| {
                        let mut t = term.clone();
                        for (x, coeff) in t.coeffs.iter_mut().enumerate() {
                            if ((x & bit) != 0) != (w == 1) {
                                *coeff = C64::new(0.0, 0.0);
                            }
                        }
                        t.orbitals[p] = ParticleOrbitals::shared(term.orbitals[p].wire(w).clone());
                        t
                    })
                    .filter(|t| !t.is_zero())
                    .collect()
            };
            for mut t in parts {
                for x in 0..t.coeffs.len() {
                    if x & bit == 0 {
                        let (a0, a1) = (t.coeffs[x], t.coeffs[x | bit]);
                        t.coeffs[x] = c * a0 + s * a1;
                        t.coeffs[x | bit] = s * a0 + c * a1;
                    }
                }
                terms.push(t);
            }
        }
        Ok(self.with_terms(terms))
    }

    /// Multiplies every configuration in which all `(qubit, wire)` conditions
    /// hold by `e^{i angle}`.
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
        for t in &mut out.terms {
            for (x, c) in t.coeffs.iter_mut().enumerate() {
                if x & mask == value {
                    *c *= ph;
                }
            }
        }
        Ok(out)
    }

    fn with_terms(&self, terms: Vec<Term>) -> Self {
        SemiOneDState {
            particles: self.particles.clone(),
            window: self.window,
            drive: self.drive.clone(),
            time: self.time,
            terms: merge_terms(terms),
        }
    }

    /// Advances every orbital by `steps` steps; orbital `(p, w)` sees the
    /// barrier returned by `barrier_for(p, w)`.
    fn evolve_terms<'b>(
        &self,
        steps: usize,
        settings: &SimSettings,
        barrier_for: impl Fn(usize, u8) -> Option<&'b BarrierSpec>,
    ) -> Result<(Vec<Term>, Window)> {
        let params = settings.cn()?;
        // distinct (orbital, barrier) jobs in first-seen order
        let mut index: HashMap<(usize, bool), usize> = HashMap::new();
        let mut jobs: Vec<(Orbital, Option<&BarrierSpec>)> = Vec::new();
        let mut add = |o: &Orbital, b: Option<&'b BarrierSpec>| {
            let key = (ptr(o), b.is_some());
            *index.entry(key).or_insert_with(|| {
                jobs.push((o.clone(), b));
                jobs.len() - 1
            })
        };
        let mut plan: Vec<Vec<(usize, Option<usize>)>> = Vec::new();
        for term in &self.terms {
            let mut per = Vec::new();
            for (p, orb) in term.orbitals.iter().enumerate() {
                let (b0, b1) = (barrier_for(p, 0), barrier_for(p, 1));
                if orb.is_shared() && b0.is_none() && b1.is_none() {
                    per.push((add(&orb.wire0, None), None));
                } else {
                    per.push((add(orb.wire(0), b0), Some(add(orb.wire(1), b1))));
                }
            }
            plan.push(per);
        }
        let window = self.window;
        let t0 = self.time;
        let results: Vec<Orbital> = jobs
            .par_iter()
            .map(|(o, b)| {
                let out = match b {
                    Some(b) => {
                        let prof = b.profile();
                        evolve_orbital(o, &window, &self.drive, &prof, &params, t0, steps)?
                    }
                    None => {
                        evolve_orbital(o, &window, &self.drive, &no_profile, &params, t0, steps)?
                    }
                };
                Ok(Arc::new(out.0))
            })
            .collect::<Result<_>>()?;
        let terms = self
            .terms
            .iter()
            .zip(&plan)
            .map(|(term, per)| Term {
                coeffs: term.coeffs.clone(),
                orbitals: per
                    .iter()
                    .map(|&(a, b)| ParticleOrbitals {
                        wire0: results[a].clone(),
                        wire1: b.map(|b| results[b].clone()),
                    })
                    .collect(),
            })
            .collect();
        let new_window = self.drive.window_after(&window, t0, params.dt, steps);
        Ok((terms, new_window))
    }

    fn advanced(&self, terms: Vec<Term>, window: Window, steps: usize, dt: f64) -> Self {
        SemiOneDState {
            particles: self.particles.clone(),
            window,
            drive: self.drive.clone(),
            time: self.time + steps as f64 * dt,
            terms: merge_terms(terms),
        }
    }

    /// SAW transport with no structure.
    pub fn propagate_free(&self, steps: usize, settings: &SimSettings) -> Result<Self> {
        let (terms, window) = self.evolve_terms(steps, settings, |_, _| None)?;
        Ok(self.advanced(terms, window, steps, settings.grid.dt))
    }

    /// Traversal of `barrier`: only the barrier wire of its qubit sees the
    /// extra potential. Fails with `NotTransmitted` when less than 99% of the
    /// barrier wire's population remains in the trap.
    pub fn propagate_phase_shifter(
        &self,
        barrier: &BarrierSpec,
        steps: usize,
        settings: &SimSettings,
    ) -> Result<(Self, PhaseShifterReport)> {
        let (out, report) = self.traverse_barrier(barrier, steps, settings)?;
        if report.transmitted < TRANSMISSION_THRESHOLD {
            return Err(Error::NotTransmitted {
                transmitted: report.transmitted,
                threshold: TRANSMISSION_THRESHOLD,
            });
        }
        Ok((out, report))
    }

    /// [`Self::propagate_phase_shifter`] without the transmission check.
    pub fn traverse_barrier(
        &self,
        barrier: &BarrierSpec,
        steps: usize,
        settings: &SimSettings,
    ) -> Result<(Self, PhaseShifterReport)> {
        barrier.validate()?;
        let p = self.index_of(&barrier.qubit)?;
        let before = self.wire_population(p, barrier.wire)?;
        let active = barrier.height > 0.0;
        let (terms, window) = self.evolve_terms(steps, settings, |q, w| {
            (active && q == p && w == barrier.wire).then_some(barrier)
        })?;
        let out = self.advanced(terms, window, steps, settings.grid.dt);
        let transmitted = if before > 1e-12 {
            out.trapped_population(p, barrier.wire)? / before
        } else {
            1.0
        };
        Ok((out, PhaseShifterReport { transmitted }))
    }

    /// Traversal of a Coulomb coupler. Configurations whose interaction phase
    /// stays below [`SEPARABLE_PHASE_BOUND`] are propagated as products; the
    /// others are propagated on the full pair grid while the window overlaps
    /// the region and re-factorized by a truncated singular value
    /// decomposition.
    pub fn propagate_coupler(
        &self,
        coupler: &CouplerSpec,
        steps: usize,
        settings: &SimSettings,
        options: CouplerOptions,
    ) -> Result<(Self, CouplerReport)> {
        coupler.validate()?;
        let pa = self.index_of(&coupler.pair.0)?;
        let pb = self.index_of(&coupler.pair.1)?;
        let params = settings.cn()?;
        let dt = params.dt;
        let (n1, n2) = overlap_span(&self.drive, &self.window, self.time, dt, steps, coupler);
        let (ba, bb) = (self.bit(pa), self.bit(pb));

        let mut spans: Vec<(usize, usize, usize, CoulombCoupling)> = Vec::new();
        for xa in 0..2u8 {
            for xb in 0..2u8 {
                let interacting = (xa, xb) == coupler.interacting_config;
                let coupling =
                    CoulombCoupling::for_config(coupler, &settings.material, interacting);
                let far = coupling.phase_bound(false, steps as f64 * dt, params.hbar);
                let near = coupling.phase_bound(true, (n2 - n1) as f64 * dt, params.hbar);
                let span = if options.force_pair_grid || far >= SEPARABLE_PHASE_BOUND {
                    Some((0, steps))
                } else if interacting && near >= SEPARABLE_PHASE_BOUND && n2 > n1 {
                    Some((n1, n2))
                } else {
                    None
                };
                if let Some((s, e)) = span {
                    spans.push((((xa as usize) << 1) | xb as usize, s, e, coupling));
                }
            }
        }

        let (free_terms, window) = self.evolve_terms(steps, settings, |_, _| None)?;
        let slice_of = |x: usize| -> usize { (((x >> ba) & 1) << 1) | ((x >> bb) & 1) };

        // distinct pair-grid jobs in first-seen order
        let mut index: HashMap<(usize, usize, usize), usize> = HashMap::new();
        let mut jobs: Vec<(Orbital, Orbital, usize)> = Vec::new();
        let mut term_jobs: Vec<Vec<(usize, usize)>> = Vec::new();
        for term in &self.terms {
            let mut tj = Vec::new();
            for (si, (cfg, ..)) in spans.iter().enumerate() {
                let occupied = term
                    .coeffs
                    .iter()
                    .enumerate()
                    .any(|(x, c)| slice_of(x) == *cfg && c.norm_sqr() > 0.0);
                if !occupied {
                    continue;
                }
                let oa = term.orbitals[pa].wire((cfg >> 1) as u8).clone();
                let ob = term.orbitals[pb].wire((cfg & 1) as u8).clone();
                let key = (ptr(&oa), ptr(&ob), si);
                let j = *index.entry(key).or_insert_with(|| {
                    jobs.push((oa, ob, si));
                    jobs.len() - 1
                });
                tj.push((si, j));
            }
            term_jobs.push(tj);
        }

        let window0 = self.window;
        let t0 = self.time;
        let results: Vec<PairFactors> = jobs
            .par_iter()
            .map(|(oa, ob, si)| {
                let (_, s, e, coupling) = &spans[*si];
                pair_job(
                    oa,
                    ob,
                    &window0,
                    &self.drive,
                    coupling,
                    &params,
                    t0,
                    steps,
                    (*s, *e),
                    settings,
                )
            })
            .collect::<Result<_>>()?;

        let mut report = CouplerReport {
            pair_runs: jobs.len(),
            coupled_steps: spans
                .iter()
                .find(|(cfg, ..)| {
                    *cfg == ((coupler.interacting_config.0 as usize) << 1
                        | coupler.interacting_config.1 as usize)
                })
                .map(|(_, s, e, _)| e - s)
                .unwrap_or(0),
            ..Default::default()
        };
        for r in &results {
            report.max_rank = report.max_rank.max(r.factors.len());
            report.max_discarded = report.max_discarded.max(r.discarded);
        }

        let mut terms = Vec::new();
        for ((term, free), tj) in self.terms.iter().zip(&free_terms).zip(&term_jobs) {
            let mut rest = free.clone();
            for &(si, _) in tj {
                let cfg = spans[si].0;
                for (x, c) in rest.coeffs.iter_mut().enumerate() {
                    if slice_of(x) == cfg {
                        *c = C64::new(0.0, 0.0);
                    }
                }
            }
            if !rest.is_zero() {
                terms.push(rest);
            }
            for &(si, j) in tj {
                let cfg = spans[si].0;
                for (weight, u, v) in &results[j].factors {
                    let mut t = free.clone();
                    for (x, c) in t.coeffs.iter_mut().enumerate() {
                        *c = if slice_of(x) == cfg {
                            term.coeffs[x] * weight
                        } else {
                            C64::new(0.0, 0.0)
                        };
                    }
                    t.orbitals[pa] = ParticleOrbitals::shared(u.clone());
                    t.orbitals[pb] = ParticleOrbitals::shared(v.clone());
                    terms.push(t);
                }
            }
        }
        Ok((self.advanced(terms, window, steps, dt), report))
    }

    /// `O[X', X] = ∫ conj(Φ^bra_{X'}(Y)) Φ^ket_X(Y) dY`.
    pub fn config_overlaps(bra: &SemiOneDState, ket: &SemiOneDState) -> Result<DMatrix<C64>> {
        if bra.particles != ket.particles {
            return Err(Error::LabelMismatch(
                bra.particles.clone(),
                ket.particles.clone(),
            ));
        }
        bra.window.check_same(&ket.window)?;
        let k = ket.n_particles();
        let dim = 1usize << k;
        let h = ket.window.spacing;
        let mut cache: HashMap<(usize, usize), C64> = HashMap::new();
        let mut ov = |a: &Orbital, b: &Orbital| -> C64 {
            *cache
                .entry((ptr(a), ptr(b)))
                .or_insert_with(|| inner(a, b, h))
        };
        let mut out = DMatrix::<C64>::zeros(dim, dim);
        let mut factors = vec![[[C64::new(0.0, 0.0); 2]; 2]; k];
        for tb in &bra.terms {
            for tk in &ket.terms {
                for p in 0..k {
                    for wb in 0..2u8 {
                        for wk in 0..2u8 {
                            factors[p][wb as usize][wk as usize] =
                                ov(tb.orbitals[p].wire(wb), tk.orbitals[p].wire(wk));
                        }
                    }
                }
                for (xb, cb) in tb.coeffs.iter().enumerate() {
                    if cb.norm_sqr() == 0.0 {
                        continue;
                    }
                    let cb = cb.conj();
                    for (xk, ck) in tk.coeffs.iter().enumerate() {
                        if ck.norm_sqr() == 0.0 {
                            continue;
                        }
                        let mut prod = cb * ck;
                        for (p, f) in factors.iter().enumerate() {
                            let s = k - 1 - p;
                            prod *= f[(xb >> s) & 1][(xk >> s) & 1];
                        }
                        out[(xb, xk)] += prod;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Logical density matrix of the kept qubits with positions integrated out.
    pub fn logical_density_matrix(&self, keep: &[&str]) -> Result<DensityMatrix> {
        let o = Self::config_overlaps(self, self)?;
        let full = DensityMatrix::new(self.particles.clone(), o.transpose())?;
        full.partial_trace(keep)
    }

    pub fn total_norm(&self) -> Result<f64> {
        Ok(Self::config_overlaps(self, self)?.trace().re)
    }

    /// Diagonal of the single-particle density of `qubit` in each wire.
    pub fn positional_density(&self, qubit: &str) -> Result<(Vec<f64>, Vec<f64>)> {
        let p = self.index_of(qubit)?;
        let k = self.n_particles();
        let h = self.window.spacing;
        let n = self.window.points;
        let s = k - 1 - p;
        let mut curves = [vec![0.0; n], vec![0.0; n]];
        let mut cache: HashMap<(usize, usize), C64> = HashMap::new();
        for ta in &self.terms {
            for tb in &self.terms {
                // weight[w] = Σ_{X: X_p = w} c_a(X) conj(c_b(X)) Π_{q≠p} ⟨φ_b|φ_a⟩
                let mut weight = [C64::new(0.0, 0.0); 2];
                for (x, ca) in ta.coeffs.iter().enumerate() {
                    let cb = tb.coeffs[x];
                    if ca.norm_sqr() == 0.0 || cb.norm_sqr() == 0.0 {
                        continue;
                    }
                    let mut prod = ca * cb.conj();
                    for q in (0..k).filter(|&q| q != p) {
                        let w = ((x >> (k - 1 - q)) & 1) as u8;
                        let (a, b) = (ta.orbitals[q].wire(w), tb.orbitals[q].wire(w));
                        prod *= *cache
                            .entry((ptr(b), ptr(a)))
                            .or_insert_with(|| inner(b, a, h));
                    }
                    weight[(x >> s) & 1] += prod;
                }
                for w in 0..2u8 {
                    let c = weight[w as usize];
                    if c.norm_sqr() == 0.0 {
                        continue;
                    }
                    let (fa, fb) = (ta.orbitals[p].wire(w), tb.orbitals[p].wire(w));
                    for (i, v) in curves[w as usize].iter_mut().enumerate() {
                        *v += (c * fa[i] * fb[i].conj()).re;
                    }
                }
            }
        }
        let [c0, c1] = curves;
        Ok((c0, c1))
    }

    fn wire_population(&self, p: usize, wire: u8) -> Result<f64> {
        let (c0, c1) = self.positional_density(&self.particles[p].clone())?;
        let c = if wire == 0 { c0 } else { c1 };
        Ok(c.iter().sum::<f64>() * self.window.spacing)
    }

    /// Population of `wire` within half a wavelength of the tracked minimum.
    fn trapped_population(&self, p: usize, wire: u8) -> Result<f64> {
        let (c0, c1) = self.positional_density(&self.particles[p].clone())?;
        let c = if wire == 0 { c0 } else { c1 };
        let (lo, hi) = match &self.drive {
            Drive::Saw { saw, minimum } => {
                let m = saw.minimum(*minimum, self.time);
                (m - 0.5 * saw.wavelength, m + 0.5 * saw.wavelength)
            }
            Drive::Static => (f64::NEG_INFINITY, f64::INFINITY),
        };
        Ok(c.iter()
            .enumerate()
            .filter(|(i, _)| {
                let y = self.window.y(*i);
                y >= lo && y <= hi
            })
            .map(|(_, v)| v)
            .sum::<f64>()
            * self.window.spacing)
    }

    /// Trapped population of `qubit` in `wire` relative to its total population there.
    pub fn transmitted_fraction(&self, qubit: &str, wire: u8) -> Result<f64> {
        let p = self.index_of(qubit)?;
        let total = self.wire_population(p, wire)?;
        Ok(if total > 0.0 {
            self.trapped_population(p, wire)? / total
        } else {
            0.0
        })
    }
}

/// Sums terms that share every orbital.
fn merge_terms(terms: Vec<Term>) -> Vec<Term> {
    let mut index: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    let mut out: Vec<Term> = Vec::with_capacity(terms.len());
    for t in terms {
        if t.is_zero() {
            continue;
        }
        let key: Vec<(usize, usize)> = t.orbitals.iter().map(|o| o.key()).collect();
        match index.get(&key) {
            Some(&i) => {
                for (a, b) in out[i].coeffs.iter_mut().zip(&t.coeffs) {
                    *a += b;
                }
            }
            None => {
                index.insert(key, out.len());
                out.push(t);
            }
        }
    }
    out.retain(|t| !t.is_zero());
    out
}

/// Steps `[n1, n2)` during which the window overlaps the coupling region.
pub fn overlap_span(
    drive: &Drive,
    window: &Window,
    t0: f64,
    dt: f64,
    steps: usize,
    coupler: &CouplerSpec,
) -> (usize, usize) {
    let mut w = *window;
    let mut first = None;
    let mut last = None;
    for n in 0..steps {
        let lo = w.origin;
        let hi = w.origin + w.span();
        if lo < coupler.end() && hi > coupler.start {
            first.get_or_insert(n);
            last = Some(n + 1);
        }
        w = w.shifted(drive.shift_at(&w, t0 + (n + 1) as f64 * dt));
    }
    match (first, last) {
        (Some(a), Some(b)) => (a, b),
        _ => (0, 0),
    }
}

/// `(weight, u, v)` with `ψ(y_a, y_b) ≈ Σ weight · u(y_a) v(y_b)` and unit-norm factors.
pub struct PairFactors {
    pub factors: Vec<(C64, Orbital, Orbital)>,
    pub discarded: f64,
}

#[allow(clippy::too_many_arguments)]
fn pair_job(
    oa: &Orbital,
    ob: &Orbital,
    window: &Window,
    drive: &Drive,
    coupling: &CoulombCoupling,
    params: &CnParams,
    t0: f64,
    steps: usize,
    span: (usize, usize),
    settings: &SimSettings,
) -> Result<PairFactors> {
    let (n1, n2) = span;
    let t1 = t0 + n1 as f64 * params.dt;
    let (a1, w1) = evolve_orbital(oa, window, drive, &no_profile, params, t0, n1)?;
    let (b1, _) = evolve_orbital(ob, window, drive, &no_profile, params, t0, n1)?;
    let grid = evolve_pair(
        &PairGrid::product(&a1, &b1, w1),
        drive,
        coupling,
        params,
        t1,
        n2 - n1,
    )?;
    let (factors, discarded) =
        factorize_pair(&grid, settings.grid.rank_cap, settings.grid.truncation_tol)?;
    let t2 = t0 + n2 as f64 * params.dt;
    let rest = steps - n2;
    let out = factors
        .into_iter()
        .map(|(wgt, u, v)| {
            let (u2, _) = evolve_orbital(&u, &grid.window, drive, &no_profile, params, t2, rest)?;
            let (v2, _) = evolve_orbital(&v, &grid.window, drive, &no_profile, params, t2, rest)?;
            Ok((wgt, Arc::new(u2), Arc::new(v2)))
        })
        .collect::<Result<_>>()?;
    Ok(PairFactors {
        factors: out,
        discarded,
    })
}

/// Truncated singular value decomposition of a pair grid. Keeps the fewest
/// leading terms whose discarded squared-norm fraction is below `tol`.
pub fn factorize_pair(
    grid: &PairGrid,
    cap: usize,
    tol: f64,
) -> Result<(Vec<(C64, Vec<C64>, Vec<C64>)>, f64)> {
    let n = grid.window.points;
    let h = grid.window.spacing;
    let m = DMatrix::from_row_slice(n, n, &grid.values);
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^H");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sq: Vec<f64> = order
        .iter()
        .map(|&i| svd.singular_values[i].powi(2))
        .collect();
    let total: f64 = sq.iter().sum();
    if total == 0.0 {
        return Ok((Vec::new(), 0.0));
    }
    let mut tail = total;
    let mut keep = 0;
    while keep < sq.len() && tail / total >= tol {
        tail -= sq[keep];
        keep += 1;
    }
    let discarded = (tail / total).max(0.0);
    if keep > cap {
        let at_cap: f64 = sq[cap..].iter().sum::<f64>() / total;
        return Err(Error::RankCapExceeded {
            cap,
            discarded: at_cap,
            tolerance: tol,
        });
    }
    let scale = h.sqrt();
    let factors = order[..keep]
        .iter()
        .map(|&k| {
            let s = svd.singular_values[k];
            let uk: Vec<C64> = (0..n).map(|i| u[(i, k)] / scale).collect();
            let vk: Vec<C64> = (0..n).map(|j| vt[(k, j)] / scale).collect();
            (C64::new(s * h, 0.0), uk, vk)
        })
        .collect();
    Ok((factors, discarded))
}

/// `arg ⟨reference|state⟩` for configuration `config` (one wire per
/// particle), in `(−π, π]`. Fails when the normalized overlap is below 0.5.
pub fn extract_phase(
    state: &SemiOneDState,
    reference: &SemiOneDState,
    config: &[u8],
) -> Result<f64> {
    if config.len() != state.n_particles() || config.iter().any(|&w| w > 1) {
        return Err(Error::InvalidArgument(format!(
            "configuration {config:?} does not match {} particles",
            state.n_particles()
        )));
    }
    let x = config
        .iter()
        .fold(0usize, |acc, &w| (acc << 1) | w as usize);
    let cross = SemiOneDState::config_overlaps(reference, state)?[(x, x)];
    let ns = SemiOneDState::config_overlaps(state, state)?[(x, x)].re;
    let nr = SemiOneDState::config_overlaps(reference, reference)?[(x, x)].re;
    let mag = if ns > 0.0 && nr > 0.0 {
        cross.norm() / (ns * nr).sqrt()
    } else {
        0.0
    };
    if mag < 0.5 {
        return Err(Error::IllDefinedPhase(mag));
    }
    Ok(wrap_phase(cross.arg()))
}

/// Maps an angle into `(−π, π]`.
pub fn wrap_phase(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

use super::cn::Drive;
use super::grid::{norm_sqr, Window};
use super::material::{MaterialParams, SawPotential};
use crate::error::{Error, Result};
use crate::C64;

/// Length `a` of the harmonic ground state `exp(−(y−y₀)²/2a²)` in one SAW
/// minimum, `a = (ħ²/(m* k))^{1/4} = (2K/k)^{1/4}` with `K = ħ²/2m*` and
/// `k = A(2π/λ)²`. The density has standard deviation `a/√2`.
pub fn ground_state_length(saw: &SawPotential, material: &MaterialParams) -> f64 {
    (2.0 * material.kinetic_prefactor / saw.curvature()).powf(0.25)
}

/// Wavenumber `m* v/ħ` of a packet moving with the wave.
pub fn comoving_wavenumber(saw: &SawPotential, material: &MaterialParams) -> f64 {
    material.hbar * saw.velocity / (2.0 * material.kinetic_prefactor)
}

/// Normalized Gaussian with density standard deviation `sigma` and mean
/// wavenumber `k`.
pub fn gaussian(window: &Window, centre: f64, sigma: f64, k: f64) -> Vec<C64> {
    let mut psi: Vec<C64> = window
        .positions()
        .iter()
        .map(|&y| {
            let d = y - centre;
            C64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), k * d)
        })
        .collect();
    let n = norm_sqr(&psi, window.spacing).sqrt();
    for z in &mut psi {
        *z /= n;
    }
    psi
}

/// Harmonic ground state of SAW minimum `minimum` at time `t`, boosted to
/// the wave velocity.
pub fn init_wavepacket(
    saw: &SawPotential,
    window: &Window,
    material: &MaterialParams,
    minimum: i64,
    t: f64,
) -> Result<Vec<C64>> {
    if window.span() < saw.wavelength {
        return Err(Error::WindowTooSmall {
            span: window.span(),
            wavelength: saw.wavelength,
        });
    }
    let a = ground_state_length(saw, material);
    Ok(gaussian(
        window,
        saw.minimum(minimum, t),
        a / std::f64::consts::SQRT_2,
        comoving_wavenumber(saw, material),
    ))
}

/// Window centred on the SAW minimum nearest `near` at time `t`, and the
/// drive that keeps it there.
pub fn comoving_window(
    saw: &SawPotential,
    near: f64,
    t: f64,
    spacing: f64,
    points: usize,
) -> Result<(Window, Drive)> {
    let minimum = saw.nearest_minimum(near, t);
    let window = Window::around(saw.minimum(minimum, t), spacing, points)?;
    if window.span() < saw.wavelength {
        return Err(Error::WindowTooSmall {
            span: window.span(),
            wavelength: saw.wavelength,
        });
    }
    Ok((
        window,
        Drive::Saw {
            saw: saw.clone(),
            minimum,
        },
    ))
}

pub fn centroid(psi: &[C64], window: &Window) -> f64 {
    let n = norm_sqr(psi, window.spacing);
    psi.iter()
        .enumerate()
        .map(|(i, z)| z.norm_sqr() * window.y(i))
        .sum::<f64>()
        * window.spacing
        / n
}

/// Standard deviation of `|ψ|²`.
pub fn spread(psi: &[C64], window: &Window) -> f64 {
    let c = centroid(psi, window);
    let n = norm_sqr(psi, window.spacing);
    (psi.iter()
        .enumerate()
        .map(|(i, z)| z.norm_sqr() * (window.y(i) - c).powi(2))
        .sum::<f64>()
        * window.spacing
        / n)
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_state_matches_oscillator_length() {
        let saw = SawPotential::default();
        let m = MaterialParams::gaas();
        // ħω = ħ sqrt(k/m*) = sqrt(2 K k)
        let hw = (2.0 * m.kinetic_prefactor * saw.curvature()).sqrt();
        assert!((hw - 4.738).abs() < 1e-3);
        let a = ground_state_length(&saw, &m);
        assert!((a - 15.49).abs() < 0.01);
        // a² = ħ/(m* ω) = 2K/ħω
        assert!((a * a - 2.0 * m.kinetic_prefactor / hw).abs() < 1e-9);
    }

    #[test]
    fn packet_normalized_and_centred() {
        let saw = SawPotential::default();
        let m = MaterialParams::gaas();
        let (w, _) = comoving_window(&saw, -200.0, 0.0, 1.0, 256).unwrap();
        let psi = init_wavepacket(&saw, &w, &m, -1, 0.0).unwrap();
        assert!((norm_sqr(&psi, 1.0) - 1.0).abs() < 1e-12);
        assert!((centroid(&psi, &w) - saw.minimum(-1, 0.0)).abs() < 1.0);
        let sd = spread(&psi, &w);
        assert!((sd - ground_state_length(&saw, &m) / 2f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn window_smaller_than_wavelength_rejected() {
        let saw = SawPotential::default();
        let w = Window::around(0.0, 1.0, 128).unwrap();
        assert!(matches!(
            init_wavepacket(&saw, &w, &MaterialParams::gaas(), 0, 0.0),
            Err(Error::WindowTooSmall { .. })
        ));
    }
}

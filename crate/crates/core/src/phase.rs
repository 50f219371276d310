//! Binary 0-vs-pi phase discrimination with peak photon number 2 in loss:
//! closed forms over the probability triangle, the interior extremum, and
//! the signal-only comparison surface.
//!
//! The scene is fixed: two equiprobable single-pixel single-mode images with
//! common transmittance `eta` and phases 0 and pi. A probe is a point
//! `(p0, p1, p2)` of the triangle `T`, the pmf over 0, 1, or 2 photons.

use crate::fmt::sig12;
use crate::fock::{ModeLayout, PhotonPmf};
use crate::oracle::{make_signal_only_state, oracle_min_error};
use crate::scene::{Image, SceneSpec};
use crate::{Error, Result, PROB_TOL};
use std::f64::consts::PI;
use std::io::Write;

/// A point of the triangle `T`: probabilities of 0, 1, and 2 signal photons.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrianglePoint {
    p0: f64,
    p1: f64,
    p2: f64,
}

impl TrianglePoint {
    pub fn new(p0: f64, p1: f64, p2: f64) -> Result<Self> {
        for p in [p0, p1, p2] {
            if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p) || !p.is_finite() {
                return Err(Error::ProbabilityOutOfRange(p));
            }
        }
        let (p0, p1, p2) = (p0.max(0.0), p1.max(0.0), p2.max(0.0));
        let sum = p0 + p1 + p2;
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::NotNormalized(sum));
        }
        Ok(Self { p0, p1, p2 })
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    /// The single-mode pmf on photon numbers 0, 1, 2.
    pub fn pmf(&self) -> PhotonPmf {
        PhotonPmf::single_mode(&[self.p0, self.p1, self.p2]).expect("triangle point is a pmf")
    }
}

/// The fixed example scene: `M = 2`, one pixel, one mode, equal priors,
/// common transmittance `eta`, phases 0 and pi.
pub fn scene(eta: f64) -> Result<SceneSpec> {
    SceneSpec::new(
        ModeLayout::single_pixel(1)?,
        vec![Image::uniform(1, eta, 0.0)?, Image::uniform(1, eta, PI)?],
        vec![0.5, 0.5],
    )
}

/// Closed-form NDS error probability:
/// `1/2 - sqrt(p1) [ (p0 eta + p2 eta^3)^(1/2) + (2 p2 eta (1-eta)^2)^(1/2) ]`.
pub fn nds_pe_closed_form(pt: &TrianglePoint, eta: f64) -> f64 {
    let first = pt.p0 * eta + pt.p2 * eta.powi(3);
    let second = 2.0 * pt.p2 * eta * (1.0 - eta).powi(2);
    0.5 - pt.p1.sqrt() * (first.sqrt() + second.sqrt())
}

/// The stationary point of the closed form in the interior of `T`:
/// `((1 + 2 eta - eta^2) / (2 (1+eta)(3-eta)), 1/2, 1 / ((1+eta)(3-eta)))`.
pub fn interior_extremum(eta: f64) -> Result<TrianglePoint> {
    let denom = (1.0 + eta) * (3.0 - eta);
    TrianglePoint::new(
        (1.0 + 2.0 * eta - eta * eta) / (2.0 * denom),
        0.5,
        1.0 / denom,
    )
}

/// Error probability of the signal-only probe
/// `sqrt(p0)|0> + sqrt(p1)|1> + sqrt(p2)|2>`, computed numerically from the
/// propagated density matrices.
pub fn signal_only_pe(pt: &TrianglePoint, eta: f64) -> Result<f64> {
    let scene = scene(eta)?;
    let state = make_signal_only_state(scene.layout(), &pt.pmf())?;
    oracle_min_error(&state, &scene)
}

const EDGE_FD_STEP: f64 = 1e-4;
const EDGE_FD_TOL: f64 = 1e-8;

/// The two boundary local minima of the closed form: `(0, 1/2, 1/2)` on the
/// `p0 = 0` edge and `(1/2, 1/2, 0)` on the `p2 = 0` edge, each checked for
/// local minimality along its edge by finite differences.
pub fn boundary_local_minima(eta: f64) -> Result<Vec<(TrianglePoint, f64)>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidInput(format!("eta {eta} outside [0, 1]")));
    }
    // edge p0 = 0 parameterized by p1; edge p2 = 0 parameterized by p0
    let on_p1_axis = |p1: f64| {
        nds_pe_closed_form(&TrianglePoint::new(0.0, p1, 1.0 - p1).unwrap(), eta)
    };
    let on_hypotenuse = |p0: f64| {
        nds_pe_closed_form(&TrianglePoint::new(p0, 1.0 - p0, 0.0).unwrap(), eta)
    };
    for (name, f) in [
        ("p1-axis", &on_p1_axis as &dyn Fn(f64) -> f64),
        ("hypotenuse", &on_hypotenuse),
    ] {
        let center = f(0.5);
        for side in [f(0.5 - EDGE_FD_STEP), f(0.5 + EDGE_FD_STEP)] {
            if side < center - EDGE_FD_TOL {
                return Err(Error::VerificationFailed(format!(
                    "{name} point is not a local minimum: step change {}",
                    side - center
                )));
            }
        }
    }
    let a = TrianglePoint::new(0.0, 0.5, 0.5)?;
    let b = TrianglePoint::new(0.5, 0.5, 0.0)?;
    Ok(vec![
        (a, nds_pe_closed_form(&a, eta)),
        (b, nds_pe_closed_form(&b, eta)),
    ])
}

/// Number of lattice steps for a grid step that must divide 1.
pub(crate) fn lattice_resolution(step: f64) -> Result<usize> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidInput(format!("grid step {step} outside (0, 1]")));
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "grid step {step} does not divide 1"
        )));
    }
    Ok(n as usize)
}

/// The triangle lattice with the given step, in canonical row order by
/// `(p0, p1)`. Contains `(N+1)(N+2)/2` points for `N = 1/step`.
pub fn triangle_lattice(step: f64) -> Result<Vec<TrianglePoint>> {
    let n = lattice_resolution(step)?;
    let mut points = Vec::with_capacity((n + 1) * (n + 2) / 2);
    for i in 0..=n {
        let p0 = i as f64 * step;
        for j in 0..=(n - i) {
            let p1 = j as f64 * step;
            let p2 = (1.0 - p0 - p1).max(0.0);
            points.push(TrianglePoint::new(p0, p1, p2)?);
        }
    }
    Ok(points)
}

/// CSV for the comparison surfaces: one row per lattice point with columns
/// `p0, p1, pe_nds, pe_signal_only, difference`. Deterministic bytes for a
/// fixed `(eta, step)`.
pub fn write_triangle_csv<W: Write>(out: &mut W, eta: f64, step: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidInput(format!("eta {eta} outside [0, 1]")));
    }
    let io_err = |e: std::io::Error| Error::InvalidInput(format!("csv write failed: {e}"));
    writeln!(out, "p0,p1,pe_nds,pe_signal_only,difference").map_err(io_err)?;
    for pt in triangle_lattice(step)? {
        let nds = nds_pe_closed_form(&pt, eta);
        let signal_only = signal_only_pe(&pt, eta)?;
        writeln!(
            out,
            "{},{},{},{},{}",
            sig12(pt.p0),
            sig12(pt.p1),
            sig12(nds),
            sig12(signal_only),
            sig12(signal_only - nds),
        )
        .map_err(io_err)?;
    }
    Ok(())
}

//! Pre-averaging weight functions and their scalar constants.
//!
//! A weight function `g` lives on `[0,1]`, vanishes at both endpoints, is
//! piecewise C¹ with a piecewise-Lipschitz derivative and has a nonzero cubic
//! integral. This module represents such kernels as piecewise polynomials and
//! computes, by composite Simpson quadrature with panel boundaries at every
//! knot:
//!
//! * the moment constants ψ₁ = ∫g′², ψ₂ = ∫g², ψ₃ = ∫g³,
//! * the overlap function φ_{u,v}(y) = ∫_y¹ u(x−y)v(x)dx for u, v drawn from
//!   {g, g′, g²},
//! * the eleven Φ constants built from φ that enter the asymptotic covariance
//!   of the pre-averaged estimator pair.
//!
//! Between knots every integrand here is a polynomial of degree ≤ 4 in the
//! inner variable, so Simpson with knot-aware splitting converges at fourth
//! order and is exact for the cubic-and-below cases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default panel count for both the inner and outer Simpson rules.
pub const DEFAULT_PANELS: usize = 4096;

/// Kernel-validity threshold on |ψ₃|.
pub const PSI3_THRESHOLD: f64 = 1e-12;

/// A piecewise polynomial on [0,1] with sorted knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PiecewisePoly {
    /// Knots 0 = b₀ < b₁ < … < b_m = 1.
    breaks: Vec<f64>,
    /// Coefficient vector (ascending powers of x) for each piece.
    coeffs: Vec<Vec<f64>>,
}

impl PiecewisePoly {
    fn new(breaks: Vec<f64>, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if breaks.len() < 2 || coeffs.len() + 1 != breaks.len() {
            return Err(Error::Config(
                "piecewise polynomial needs m+1 breakpoints for m pieces".into(),
            ));
        }
        if breaks.first() != Some(&0.0) || breaks.last() != Some(&1.0) {
            return Err(Error::Config("breakpoints must span [0, 1]".into()));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("breakpoints must be strictly increasing".into()));
        }
        if breaks.iter().any(|b| !b.is_finite())
            || coeffs.iter().flatten().any(|c| !c.is_finite())
        {
            return Err(Error::Config("non-finite kernel coefficient".into()));
        }
        Ok(Self { breaks, coeffs })
    }

    /// Index of the piece containing x, taking the right-limit at knots
    /// (x = 1 falls into the last piece).
    fn piece_index(&self, x: f64) -> usize {
        let m = self.coeffs.len();
        match self.breaks.binary_search_by(|b| b.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(m - 1),
            Err(i) => (i - 1).min(m - 1),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        horner_at(&self.coeffs[self.piece_index(x)], x)
    }

    /// Evaluates at `x` using the piece that contains `locator`. Quadrature
    /// uses this with the segment midpoint as locator so that a node sitting
    /// exactly on a knot takes the one-sided limit from inside its segment.
    fn eval_near(&self, x: f64, locator: f64) -> f64 {
        horner_at(&self.coeffs[self.piece_index(locator)], x)
    }

    fn derivative(&self) -> PiecewisePoly {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                if c.len() <= 1 {
                    vec![0.0]
                } else {
                    c.iter()
                        .enumerate()
                        .skip(1)
                        .map(|(k, &a)| k as f64 * a)
                        .collect()
                }
            })
            .collect();
        PiecewisePoly { breaks: self.breaks.clone(), coeffs }
    }

    fn scaled(&self, c: f64) -> PiecewisePoly {
        let coeffs = self
            .coeffs
            .iter()
            .map(|p| p.iter().map(|&a| c * a).collect())
            .collect();
        PiecewisePoly { breaks: self.breaks.clone(), coeffs }
    }

    /// Interior knots (endpoints excluded).
    fn interior_knots(&self) -> &[f64] {
        &self.breaks[1..self.breaks.len() - 1]
    }
}

/// Identifier for the three functions that may enter φ_{u,v}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightFn {
    /// The kernel itself.
    G,
    /// Its derivative (right-limit at knots).
    GPrime,
    /// Its pointwise square.
    GSquared,
}

/// A validated pre-averaging weight function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    id: String,
    poly: PiecewisePoly,
    deriv: PiecewisePoly,
}

impl KernelSpec {
    /// The baseline kernel g(x) = min(x, 1−x).
    pub fn min_kernel() -> Self {
        Self {
            id: "min".into(),
            poly: PiecewisePoly {
                breaks: vec![0.0, 0.5, 1.0],
                coeffs: vec![vec![0.0, 1.0], vec![1.0, -1.0]],
            },
            deriv: PiecewisePoly {
                breaks: vec![0.0, 0.5, 1.0],
                coeffs: vec![vec![1.0], vec![-1.0]],
            },
        }
    }

    /// A custom piecewise-polynomial kernel. `breakpoints` must start at 0 and
    /// end at 1; `coefficients[j]` holds ascending-power coefficients of the
    /// polynomial on `[breakpoints[j], breakpoints[j+1]]` expressed in the
    /// absolute variable x.
    pub fn piecewise(id: &str, breakpoints: Vec<f64>, coefficients: Vec<Vec<f64>>) -> Result<Self> {
        let poly = PiecewisePoly::new(breakpoints, coefficients)?;
        let deriv = poly.derivative();
        Ok(Self { id: id.into(), poly, deriv })
    }

    /// Piecewise-linear interpolant through `(knots[j], values[j])`.
    pub fn piecewise_linear(id: &str, knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() || knots.len() < 2 {
            return Err(Error::Config("need matching knots/values, at least two".into()));
        }
        let mut coeffs = Vec::with_capacity(knots.len() - 1);
        for j in 0..knots.len() - 1 {
            let (x0, x1) = (knots[j], knots[j + 1]);
            let (v0, v1) = (values[j], values[j + 1]);
            let slope = (v1 - v0) / (x1 - x0);
            coeffs.push(vec![v0 - slope * x0, slope]);
        }
        Self::piecewise(id, knots, coeffs)
    }

    /// The kernel multiplied by a constant.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            id: format!("{}*{}", self.id, c),
            poly: self.poly.scaled(c),
            deriv: self.deriv.scaled(c),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Interior knots shared by g, g′ and g².
    pub fn knots(&self) -> &[f64] {
        self.poly.interior_knots()
    }

    /// Evaluates g(x) for x ∈ [0,1].
    pub fn eval(&self, x: f64) -> Result<f64> {
        check_unit_interval(x)?;
        Ok(self.poly.eval(x))
    }

    /// Evaluates g′(x) for x ∈ [0,1], taking the right-limit at knots.
    pub fn eval_deriv(&self, x: f64) -> Result<f64> {
        check_unit_interval(x)?;
        Ok(self.deriv.eval(x))
    }

    fn eval_fn_near(&self, which: WeightFn, x: f64, locator: f64) -> f64 {
        match which {
            WeightFn::G => self.poly.eval_near(x, locator),
            WeightFn::GPrime => self.deriv.eval_near(x, locator),
            WeightFn::GSquared => {
                let g = self.poly.eval_near(x, locator);
                g * g
            }
        }
    }

    /// Structural and numerical validity report; never errors.
    pub fn validate(&self, panels: usize) -> KernelValidity {
        let g0 = self.poly.eval(0.0);
        let g1 = self.poly.eval(1.0);
        // The representation is piecewise polynomial, hence piecewise C^1 with
        // Lipschitz derivative as long as g itself is continuous across knots.
        let continuous = self.poly.interior_knots().iter().all(|&k| {
            let left = horner_at(&self.poly.coeffs[self.poly.piece_index(k) - 1], k);
            (left - self.poly.eval(k)).abs() <= 1e-12
        });
        let panels = sanitize_panels(panels);
        let psi3 = self.moment_psi3(panels);
        KernelValidity {
            boundary_zero_at_0: g0.abs() <= 1e-12,
            boundary_zero_at_1: g1.abs() <= 1e-12,
            piecewise_c1: continuous,
            psi3_nonzero: psi3.abs() > PSI3_THRESHOLD,
            psi3,
        }
    }

    fn moment_psi3(&self, panels: usize) -> f64 {
        simpson_sum(0.0, 1.0, self.knots(), panels, |x, mid| {
            self.poly.eval_near(x, mid).powi(3)
        })
    }
}

fn check_unit_interval(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("kernel argument {x} outside [0, 1]")));
    }
    Ok(())
}

fn horner_at(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

/// Validity report for a kernel, one flag per condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValidity {
    pub boundary_zero_at_0: bool,
    pub boundary_zero_at_1: bool,
    pub piecewise_c1: bool,
    pub psi3_nonzero: bool,
    /// Quadrature value of ∫g³ backing the last flag.
    pub psi3: f64,
}

impl KernelValidity {
    pub fn is_valid(&self) -> bool {
        self.boundary_zero_at_0 && self.boundary_zero_at_1 && self.piecewise_c1 && self.psi3_nonzero
    }
}

/// The ψ and Φ constants of a weight function.
///
/// `phi3_minus` and `phi23_minus` use the squared convention (the integrand is
/// φ_{g²,g}(y)² resp. φ_{g,g}φ_{g²,g}), mirroring their `+` counterparts; the
/// unsquared ∫φ_{g²,g}(y)dy is kept alongside for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub psi1: f64,
    pub psi2: f64,
    pub psi3: f64,
    pub phi22: f64,
    pub phi12: f64,
    pub phi11: f64,
    pub phi3_plus: f64,
    pub phi3_minus: f64,
    pub phi3p_plus: f64,
    pub phi3p_minus: f64,
    pub phi23_plus: f64,
    pub phi23_minus: f64,
    pub phi23p_plus: f64,
    pub phi23p_minus: f64,
    pub phi3_minus_unsquared: f64,
    pub quad_panels: usize,
}

/// φ_{u,v}(y) = ∫_y¹ u(x−y) v(x) dx by composite Simpson, with panel
/// boundaries at every knot of v and every shifted knot of u.
pub fn phi_uv(kernel: &KernelSpec, u: WeightFn, v: WeightFn, y: f64, panels: usize) -> Result<f64> {
    check_unit_interval(y)?;
    let panels = sanitize_panels(panels);
    if y >= 1.0 {
        return Ok(0.0);
    }
    let cuts: Vec<f64> = kernel
        .knots()
        .iter()
        .flat_map(|&k| [k, y + k])
        .filter(|&c| c > y && c < 1.0)
        .collect();
    Ok(simpson_sum(y, 1.0, &cuts, panels, |x, mid| {
        kernel.eval_fn_near(u, x - y, mid - y) * kernel.eval_fn_near(v, x, mid)
    }))
}

/// Computes all ψ and Φ constants with `panels` panels for both the inner and
/// the outer Simpson rule. Fails if the kernel is structurally invalid or its
/// cubic integral falls below [`PSI3_THRESHOLD`].
pub fn kernel_constants(kernel: &KernelSpec, panels: usize) -> Result<KernelConstants> {
    let validity = kernel.validate(panels);
    if !validity.boundary_zero_at_0 || !validity.boundary_zero_at_1 {
        return Err(Error::Kernel(format!(
            "kernel '{}' does not vanish at both endpoints",
            kernel.id()
        )));
    }
    if !validity.piecewise_c1 {
        return Err(Error::Kernel(format!("kernel '{}' is discontinuous", kernel.id())));
    }
    if !validity.psi3_nonzero {
        return Err(Error::Kernel(format!(
            "kernel '{}' has |psi3| = {:.3e} below threshold {PSI3_THRESHOLD:.0e}",
            kernel.id(),
            validity.psi3.abs()
        )));
    }
    let panels = sanitize_panels(panels);
    let knots = kernel.knots();

    let psi1 = simpson_sum(0.0, 1.0, knots, panels, |x, mid| {
        kernel.deriv.eval_near(x, mid).powi(2)
    });
    let psi2 = simpson_sum(0.0, 1.0, knots, panels, |x, mid| {
        kernel.poly.eval_near(x, mid).powi(2)
    });
    let psi3 = validity.psi3;

    // Outer integrands have kinks wherever the inner cut topology changes:
    // at knots, reflected knots and knot differences.
    let mut outer_cuts: Vec<f64> = Vec::new();
    let full: Vec<f64> = std::iter::once(0.0)
        .chain(knots.iter().copied())
        .chain(std::iter::once(1.0))
        .collect();
    for &a in &full {
        for &b in &full {
            for c in [a - b, 1.0 - a, a] {
                if c > 1e-15 && c < 1.0 - 1e-15 {
                    outer_cuts.push(c);
                }
            }
        }
    }
    outer_cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    outer_cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    // One outer pass accumulates all eleven Phi integrals plus the unsquared
    // Phi_3- variant; at each outer node the eight required phi values come
    // from a single sweep of inner nodes.
    let mut acc = [0.0f64; 12];
    for seg in segments(0.0, 1.0, &outer_cuts, panels) {
        seg.for_each_node(|y, w, _| {
            let p = phi_all(kernel, y, panels);
            acc[0] += w * p.gg * p.gg; // Phi_22
            acc[1] += w * p.gg * p.gpgp; // Phi_12
            acc[2] += w * p.gpgp * p.gpgp; // Phi_11
            acc[3] += w * p.g_g2 * p.g_g2; // Phi_3+
            acc[4] += w * p.g2_g * p.g2_g; // Phi_3- (squared convention)
            acc[5] += w * p.gp_g2 * p.gp_g2; // Phi'_3+
            acc[6] += w * p.g2_gp * p.g2_gp; // Phi'_3-
            acc[7] += w * p.gg * p.g_g2; // Phi_23+
            acc[8] += w * p.gg * p.g2_g; // Phi_23-
            acc[9] += w * p.gp_g * p.gp_g2; // Phi'_23+
            acc[10] += w * p.g_gp * p.g2_gp; // Phi'_23-
            acc[11] += w * p.g2_g; // unsquared Phi_3- variant
        });
    }

    Ok(KernelConstants {
        psi1,
        psi2,
        psi3,
        phi22: acc[0],
        phi12: acc[1],
        phi11: acc[2],
        phi3_plus: acc[3],
        phi3_minus: acc[4],
        phi3p_plus: acc[5],
        phi3p_minus: acc[6],
        phi23_plus: acc[7],
        phi23_minus: acc[8],
        phi23p_plus: acc[9],
        phi23p_minus: acc[10],
        phi3_minus_unsquared: acc[11],
        quad_panels: panels,
    })
}

/// All φ_{u,v}(y) values needed by the Φ constants, in one inner sweep.
struct PhiValues {
    gg: f64,
    gpgp: f64,
    g_g2: f64,
    g2_g: f64,
    gp_g2: f64,
    g2_gp: f64,
    gp_g: f64,
    g_gp: f64,
}

fn phi_all(kernel: &KernelSpec, y: f64, panels: usize) -> PhiValues {
    let mut out = PhiValues {
        gg: 0.0,
        gpgp: 0.0,
        g_g2: 0.0,
        g2_g: 0.0,
        gp_g2: 0.0,
        g2_gp: 0.0,
        gp_g: 0.0,
        g_gp: 0.0,
    };
    if y >= 1.0 {
        return out;
    }
    let cuts: Vec<f64> = kernel
        .knots()
        .iter()
        .flat_map(|&k| [k, y + k])
        .filter(|&c| c > y && c < 1.0)
        .collect();
    for seg in segments(y, 1.0, &cuts, panels) {
        seg.for_each_node(|x, w, mid| {
            let gu = kernel.poly.eval_near(x - y, mid - y);
            let gpu = kernel.deriv.eval_near(x - y, mid - y);
            let gv = kernel.poly.eval_near(x, mid);
            let gpv = kernel.deriv.eval_near(x, mid);
            let g2u = gu * gu;
            let g2v = gv * gv;
            out.gg += w * gu * gv;
            out.gpgp += w * gpu * gpv;
            out.g_g2 += w * gu * g2v;
            out.g2_g += w * g2u * gv;
            out.gp_g2 += w * gpu * g2v;
            out.g2_gp += w * g2u * gpv;
            out.gp_g += w * gpu * gv;
            out.g_gp += w * gu * gpv;
        });
    }
    out
}

fn sanitize_panels(panels: usize) -> usize {
    let p = panels.max(2);
    if p % 2 == 0 {
        p
    } else {
        p + 1
    }
}

/// One segment of a composite Simpson rule: an even number of panels between
/// two consecutive cut points.
struct Segment {
    lo: f64,
    hi: f64,
    panels: usize,
}

impl Segment {
    /// Visits every node with its weight and the segment midpoint. The
    /// midpoint identifies which polynomial piece the open segment lies in,
    /// so integrands can take one-sided limits at knot-aligned nodes.
    fn for_each_node(&self, mut f: impl FnMut(f64, f64, f64)) {
        let n = self.panels;
        let h = (self.hi - self.lo) / n as f64;
        let mid = 0.5 * (self.lo + self.hi);
        for j in 0..=n {
            let x = if j == n { self.hi } else { self.lo + j as f64 * h };
            let w = if j == 0 || j == n {
                h / 3.0
            } else if j % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            };
            f(x, w, mid);
        }
    }
}

/// Splits [a,b] at the interior cut points and distributes `total_panels`
/// proportionally to segment length (at least two, even, per segment).
fn segments(a: f64, b: f64, cuts: &[f64], total_panels: usize) -> Vec<Segment> {
    debug_assert!(b > a);
    let mut edges: Vec<f64> = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    for &c in cuts {
        if c > a && c < b {
            edges.push(c);
        }
    }
    edges.push(b);
    edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
    edges.dedup_by(|x, y| (*x - *y).abs() < 1e-15 * (b - a).max(1.0));

    let span = b - a;
    edges
        .windows(2)
        .map(|seg| {
            let (lo, hi) = (seg[0], seg[1]);
            let mut n = ((total_panels as f64) * (hi - lo) / span).ceil() as usize;
            n = n.max(2);
            if n % 2 == 1 {
                n += 1;
            }
            Segment { lo, hi, panels: n }
        })
        .collect()
}

/// Composite Simpson of `f(x, segment_mid)` over [a,b] with cut points.
fn simpson_sum(a: f64, b: f64, cuts: &[f64], total_panels: usize, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
    let mut total = 0.0;
    for seg in segments(a, b, cuts, total_panels) {
        seg.for_each_node(|x, w, mid| total += w * f(x, mid));
    }
    total
}

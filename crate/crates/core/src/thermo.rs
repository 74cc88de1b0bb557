//! Grand-canonical statistics of free bosons (or bound pairs) on computed spectra.
//!
//! Densities are per unit size: `ρ_n = (1/size)·1/(e^{β(λ_n-μ)} - 1)` for each
//! eigenstate. Chemical potentials are stored through the gap `λ₀ - μ > 0` so
//! that occupations near condensation do not suffer cancellation.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{scale_graph, total_length, BoundaryConditions, MetricGraph};
use crate::one_particle::{negative_spectrum, scan_spectrum, zero_mode_multiplicity};
use crate::pde::{oracle_lowest, pencil_spectrum, DomainSpec, Profile, Sector};

/// Levels up to `λ₀ + CUTOFF/β` are kept; the rest is covered by a tail bound.
pub const CUTOFF: f64 = 40.0;

/// Relative tolerance on the density equation.
pub const DENSITY_TOL: f64 = 1e-10;

/// Asymptotic counting function used to bound the truncated tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeylLaw {
    None,
    /// `N(λ) ≈ (𝓛/π)·√λ`.
    Graph { total_length: f64 },
    /// `N(λ) ≈ area·λ/(4π)`.
    Planar { area: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tail {
    pub law: WeylLaw,
    pub cutoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermoState {
    pub beta: f64,
    pub rho: f64,
    pub size: f64,
    pub mu: f64,
    /// `λ₀ - μ`, kept separately from `μ` for accuracy.
    pub gap: f64,
    /// Distinct levels with multiplicities, ascending.
    pub levels: Vec<(f64, usize)>,
    /// Density in each single eigenstate of the corresponding level.
    pub occupations: Vec<f64>,
    pub residual: f64,
    pub tail_estimate: f64,
    pub warnings: Vec<String>,
}

impl ThermoState {
    pub fn lowest(&self) -> f64 {
        self.levels[0].0
    }

    /// Density in the lowest eigenstate.
    pub fn ground_occupation(&self) -> f64 {
        self.occupations[0]
    }

    pub fn total_density(&self) -> f64 {
        self.levels
            .iter()
            .zip(&self.occupations)
            .map(|(&(_, m), &o)| m as f64 * o)
            .sum()
    }

    /// Density in one eigenstate at level `lambda ≥ λ₀`.
    pub fn occupation_of(&self, lambda: f64) -> f64 {
        bose(self.beta * ((lambda - self.lowest()) + self.gap)) / self.size
    }
}

fn bose(x: f64) -> f64 {
    1.0 / x.exp_m1()
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}

fn sorted_levels(levels: &[(f64, usize)]) -> Result<Vec<(f64, usize)>> {
    if levels.is_empty() {
        return Err(Error::param("spectrum", "no levels"));
    }
    let mut out: Vec<(f64, usize)> = Vec::with_capacity(levels.len());
    for &(l, m) in levels {
        if !l.is_finite() || m == 0 {
            return Err(Error::param("spectrum", format!("invalid level ({l}, {m})")));
        }
        out.push((l, m));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Chemical potential for density `rho`, without a tail estimate.
pub fn solve_mu(levels: &[(f64, usize)], beta: f64, rho: f64, size: f64) -> Result<ThermoState> {
    solve_mu_with_tail(levels, beta, rho, size, None)
}

/// Bisection for `μ < λ₀` on the strictly decreasing map `λ₀ - μ ↦ density`.
pub fn solve_mu_with_tail(
    levels: &[(f64, usize)],
    beta: f64,
    rho: f64,
    size: f64,
    tail: Option<Tail>,
) -> Result<ThermoState> {
    positive("beta", beta)?;
    positive("rho", rho)?;
    positive("size", size)?;
    let levels = sorted_levels(levels)?;
    let l0 = levels[0].0;
    let density = |t: f64| -> f64 {
        levels
            .iter()
            .map(|&(l, m)| m as f64 * bose(beta * ((l - l0) + t)))
            .sum::<f64>()
            / size
    };
    let mut hi = 1.0 / beta;
    while density(hi) > rho {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::ChemicalPotential("no upper bracket for λ₀ - μ".into()));
        }
    }
    let mut lo = hi;
    while density(lo) < rho {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::ChemicalPotential("no lower bracket for λ₀ - μ".into()));
        }
    }
    for _ in 0..400 {
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if density(mid) > rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (dl, dh) = ((density(lo) - rho).abs(), (density(hi) - rho).abs());
    let gap = if dl < dh { lo } else { hi };
    let residual = dl.min(dh) / rho;
    if residual > DENSITY_TOL {
        return Err(Error::ChemicalPotential(format!(
            "density residual {residual:e} at λ₀ - μ = {gap:e}"
        )));
    }
    let occupations: Vec<f64> = levels
        .iter()
        .map(|&(l, _)| bose(beta * ((l - l0) + gap)) / size)
        .collect();
    let mu = l0 - gap;
    let tail_estimate = tail.map_or(0.0, |t| tail_bound(t, beta, mu, size));
    let mut warnings = Vec::new();
    if tail_estimate > 1e-8 * rho {
        warnings.push(format!(
            "truncated tail may carry density {tail_estimate:e} (> 1e-8·ρ)"
        ));
    }
    Ok(ThermoState {
        beta,
        rho,
        size,
        mu,
        gap,
        levels,
        occupations,
        residual,
        tail_estimate,
        warnings,
    })
}

/// Upper bound of `(1/size)∫_{cutoff}^∞ N'(λ) e^{-β(λ-μ)} dλ` for the Weyl law,
/// with the Boltzmann factor bounding the Bose factor up to `1/(1-e^{-β(cutoff-μ)})`.
fn tail_bound(t: Tail, beta: f64, mu: f64, size: f64) -> f64 {
    let x = beta * (t.cutoff - mu);
    if x <= 0.0 {
        return f64::INFINITY;
    }
    let boltz = (-x).exp() / (1.0 - (-x).exp());
    let integral = match t.law {
        WeylLaw::None => 0.0,
        WeylLaw::Graph { total_length } => {
            if t.cutoff > 0.0 {
                total_length / (2.0 * std::f64::consts::PI * t.cutoff.sqrt()) * boltz / beta
            } else {
                // the whole continuum lies above the cutoff
                total_length / (2.0 * std::f64::consts::PI)
                    * (std::f64::consts::PI / beta).sqrt()
                    * (beta * mu).exp()
                    / (1.0 - (beta * mu).exp())
            }
        }
        WeylLaw::Planar { area } => area / (4.0 * std::f64::consts::PI) * boltz / beta,
    };
    integral / size
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Condensation,
    NoCondensation,
    Inconclusive,
}

impl Verdict {
    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::Condensation => "condensation",
            Verdict::NoCondensation => "no condensation",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Finite-size protocol for the limsup in the definition of macroscopic occupation.
///
/// On the three largest sizes: condensation when `min ρ₀ > condensed·ρ` and the
/// log-log slope of `ρ₀` against size exceeds `condensed_slope`; no condensation
/// when `ρ₀` decreases and either `max ρ₀ < empty·ρ` or the slope is at most
/// `empty_slope` (the `1/size` decay of a non-macroscopic state).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictRule {
    pub condensed: f64,
    pub empty: f64,
    pub condensed_slope: f64,
    pub empty_slope: f64,
}

impl Default for VerdictRule {
    fn default() -> Self {
        Self {
            condensed: 1e-3,
            empty: 1e-6,
            condensed_slope: -0.5,
            empty_slope: -0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub sizes: Vec<f64>,
    pub states: Vec<ThermoState>,
    /// Density in the tracked ground state at each size.
    pub ground_occupation: Vec<f64>,
    /// Minimum of the ground-state density over the three largest sizes.
    pub limsup_estimate: f64,
    /// Least-squares slope of `log ρ₀` against `log size` on the three largest sizes.
    pub slope: f64,
    pub verdict: Verdict,
    pub rule: VerdictRule,
}

impl SweepResult {
    pub fn new(
        sizes: Vec<f64>,
        states: Vec<ThermoState>,
        ground_occupation: Vec<f64>,
        rho: f64,
        rule: VerdictRule,
    ) -> Result<Self> {
        if sizes.len() < 3 || sizes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("sizes", "need at least 3 strictly increasing sizes"));
        }
        let n = sizes.len();
        let last = &ground_occupation[n - 3..];
        let xs: Vec<f64> = sizes[n - 3..].iter().map(|s| s.ln()).collect();
        let ys: Vec<f64> = last.iter().map(|r| r.max(f64::MIN_POSITIVE).ln()).collect();
        let xm = xs.iter().sum::<f64>() / 3.0;
        let ym = ys.iter().sum::<f64>() / 3.0;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
        let slope = sxy / sxx;
        let min = last.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = last.iter().cloned().fold(0.0, f64::max);
        let decreasing = last.windows(2).all(|w| w[1] < w[0]);
        let verdict = if min > rule.condensed * rho && slope > rule.condensed_slope {
            Verdict::Condensation
        } else if decreasing && (max < rule.empty * rho || slope <= rule.empty_slope) {
            Verdict::NoCondensation
        } else {
            Verdict::Inconclusive
        };
        Ok(Self {
            sizes,
            states,
            ground_occupation,
            limsup_estimate: min,
            slope,
            verdict,
            rule,
        })
    }
}

/// One-particle levels of a graph up to `λ₀ + CUTOFF/β`, with the cutoff used.
pub fn graph_levels(graph: &MetricGraph, bc: &BoundaryConditions, beta: f64) -> Result<(Vec<(f64, usize)>, f64)> {
    positive("beta", beta)?;
    let lengths = graph.lengths();
    let lmin = lengths.iter().cloned().fold(f64::INFINITY, f64::min);
    let lmax = lengths.iter().cloned().fold(0.0, f64::max);
    let l_top = bc.l_max();
    let mut levels: Vec<(f64, usize)> = Vec::new();
    if l_top > 0.0 {
        let kappa_max = 2.0 * l_top + 4.0 / lmin + 1.0;
        for e in negative_spectrum(graph, bc, kappa_max)? {
            levels.push((e.lambda, e.multiplicity));
        }
    }
    let zero = zero_mode_multiplicity(graph, bc)?;
    if zero > 0 {
        levels.push((0.0, zero));
    }
    // the Dirichlet ground state of the longest edge bounds λ₀ from above
    let l0_bound = levels
        .first()
        .map(|l| l.0)
        .unwrap_or((std::f64::consts::PI / lmax).powi(2));
    let cutoff = l0_bound + CUTOFF / beta;
    if cutoff > 0.0 {
        let total = total_length(graph);
        let grid = std::f64::consts::PI / total / 4.0;
        let scan = scan_spectrum(graph, bc, cutoff.sqrt(), grid, 1e-10)?;
        for e in scan.eigenvalues {
            levels.push((e.lambda, e.multiplicity));
        }
    }
    if levels.is_empty() {
        return Err(Error::param("spectrum", "no eigenvalue below the cutoff"));
    }
    Ok((levels, cutoff))
}

fn check_sizes(list: &[f64], name: &'static str, min: usize) -> Result<()> {
    if list.len() < min {
        return Err(Error::param(name, format!("need at least {min} sizes")));
    }
    if list.iter().any(|&x| !(x.is_finite() && x > 0.0)) || list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param(name, "sizes must be positive and strictly increasing"));
    }
    Ok(())
}

/// Thermodynamic-limit sweep over stretched copies `l_e ↦ η·l_e` of a graph.
pub fn sweep_thermo(
    graph: &MetricGraph,
    bc: &BoundaryConditions,
    beta: f64,
    rho: f64,
    etas: &[f64],
) -> Result<SweepResult> {
    positive("beta", beta)?;
    positive("rho", rho)?;
    check_sizes(etas, "eta", 4)?;
    let states: Vec<ThermoState> = etas
        .par_iter()
        .map(|&eta| {
            let g = scale_graph(graph, eta)?;
            let (levels, cutoff) = graph_levels(&g, bc, beta)?;
            let size = total_length(&g);
            let tail = Tail {
                law: WeylLaw::Graph { total_length: size },
                cutoff,
            };
            solve_mu_with_tail(&levels, beta, rho, size, Some(tail))
        })
        .collect::<Result<_>>()?;
    let sizes = states.iter().map(|s| s.size).collect();
    let rho0 = states.iter().map(|s| s.ground_occupation()).collect();
    SweepResult::new(sizes, states, rho0, rho, VerdictRule::default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateLimit {
    pub sizes: Vec<f64>,
    /// Lowest eigenvalue `k₀²(𝓛)` at each size.
    pub values: Vec<f64>,
    pub l_max: f64,
    pub estimate: f64,
    /// `|estimate - (-L_max)|`.
    pub distance_linear: f64,
    /// `|estimate - (-L_max²)|`.
    pub distance_quadratic: f64,
    pub monotone: bool,
    /// Successive differences shrink at least by a factor 2.
    pub cauchy: bool,
}

/// Lowest eigenvalue along the stretched sequence, for `L` with a positive eigenvalue.
pub fn ground_state_limit(graph: &MetricGraph, bc: &BoundaryConditions, etas: &[f64]) -> Result<GroundStateLimit> {
    check_sizes(etas, "eta", 2)?;
    let l_max = bc.l_max();
    if l_max <= 0.0 {
        return Err(Error::Precondition(
            "L has no positive eigenvalue, so there is no negative ground state".into(),
        ));
    }
    let rows: Vec<(f64, f64)> = etas
        .par_iter()
        .map(|&eta| {
            let g = scale_graph(graph, eta)?;
            let lmin = g.lengths().iter().cloned().fold(f64::INFINITY, f64::min);
            let neg = negative_spectrum(&g, bc, 2.0 * l_max + 4.0 / lmin + 1.0)?;
            let size = total_length(&g);
            neg.first().map(|e| (size, e.lambda)).ok_or_else(|| {
                Error::Precondition(format!("no negative eigenvalue at total length {size}"))
            })
        })
        .collect::<Result<_>>()?;
    let sizes: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let values: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone = diffs.iter().all(|&d| d <= 0.0) || diffs.iter().all(|&d| d >= 0.0);
    let cauchy = diffs.windows(2).all(|w| w[1].abs() <= 0.5 * w[0].abs());
    let estimate = *values.last().unwrap();
    Ok(GroundStateLimit {
        sizes,
        values,
        l_max,
        estimate,
        distance_linear: (estimate + l_max).abs(),
        distance_quadratic: (estimate + l_max * l_max).abs(),
        monotone,
        cauchy,
    })
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature to `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    let mut parts = vec![(a, b, gk15(f, a, b))];
    for _ in 0..2000 {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature("integrand is not finite".into()));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .unwrap();
        let (lo, hi, _) = parts.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, gk15(f, lo, mid)));
        parts.push((mid, hi, gk15(f, mid, hi)));
    }
    Err(Error::Quadrature(format!("no convergence on [{a}, {b}]")))
}

/// `f(β, μ) = -(1/β)∫₀^∞ log(1 + e^{-β(k²-μ)}) dk`.
pub fn fermi_free_energy(beta: f64, mu: f64) -> Result<f64> {
    positive("beta", beta)?;
    if !mu.is_finite() {
        return Err(Error::param("mu", "must be finite"));
    }
    let g = |k: f64| (-beta * (k * k - mu)).exp().ln_1p();
    // beyond k_end the integrand is below e^{-745}·e^{βμ}, relative to the bulk
    let k_edge = mu.max(0.0).sqrt();
    let k_end = (mu.max(0.0) + 745.0 / beta).sqrt();
    let mut total = 0.0;
    if k_edge > 0.0 {
        total += integrate(&g, 0.0, k_edge, 0.0, 1e-13)?;
    }
    total += integrate(&g, k_edge, k_end, 0.0, 1e-13)?;
    Ok(-total / beta)
}

/// `-(e^{βμ}/β)·√(π/β)/2`, the leading term as `μ → -∞`.
pub fn fermi_boltzmann_limit(beta: f64, mu: f64) -> f64 {
    -(beta * mu).exp() * (std::f64::consts::PI / beta).sqrt() / (2.0 * beta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Smoothness {
    pub betas: Vec<f64>,
    pub second_derivative: Vec<f64>,
    pub max_abs: f64,
    /// Set when step-halving changes a second difference by more than 1%.
    pub flagged: bool,
}

/// Central second differences of `β ↦ f(β, μ)` at two step sizes.
pub fn fermi_smoothness(mu: f64, betas: &[f64]) -> Result<Smoothness> {
    let h = 2e-3;
    let second = |b: f64, h: f64| -> Result<f64> {
        let f0 = fermi_free_energy(b, mu)?;
        let fp = fermi_free_energy(b + h, mu)?;
        let fm = fermi_free_energy(b - h, mu)?;
        Ok((fp - 2.0 * f0 + fm) / (h * h))
    };
    let rows: Vec<(f64, f64)> = betas
        .par_iter()
        .map(|&b| Ok((second(b, h)?, second(b, 0.5 * h)?)))
        .collect::<Result<_>>()?;
    let mut flagged = false;
    for &(a, b) in &rows {
        if !(a.is_finite() && b.is_finite()) || (a - b).abs() > 1e-2 * a.abs().max(1e-6) {
            flagged = true;
        }
    }
    let second_derivative: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let max_abs = second_derivative.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(Smoothness {
        betas: betas.to_vec(),
        second_derivative,
        max_abs,
        flagged,
    })
}

/// Antisymmetric pair levels on the truncated pencil up to `E₀ + CUTOFF/β`.
pub fn pair_levels(d: f64, l: f64, sigma: &Profile, h: f64, beta: f64) -> Result<(Vec<(f64, usize)>, Tail)> {
    positive("beta", beta)?;
    let spec = DomainSpec::pencil_finite(d, l, sigma.clone(), Sector::Fermionic);
    let (_, low) = oracle_lowest(&spec, h, 1)?;
    let cutoff = low.values[0] + CUTOFF / beta;
    let values = pencil_spectrum(d, l, sigma, Sector::Fermionic, h, cutoff)?;
    // antisymmetric half of {0 ≤ x,y ≤ L, |x-y| ≤ d}
    let area = 0.5 * (2.0 * l * d - d * d);
    Ok((
        values.into_iter().map(|v| (v, 1)).collect(),
        Tail {
            law: WeylLaw::Planar { area },
            cutoff,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairCondensation {
    pub sweep: SweepResult,
    /// Density the excited pair states hold at `μ = E₀(L)` on the largest size.
    pub rho_crit: f64,
}

/// Pair-condensation sweep over `L` for the antisymmetric pencil with profile `σ`.
pub fn pair_condensation(
    d: f64,
    beta: f64,
    rho: f64,
    sizes: &[f64],
    sigma: &Profile,
    h: f64,
) -> Result<PairCondensation> {
    positive("beta", beta)?;
    positive("rho", rho)?;
    check_sizes(sizes, "L", 3)?;
    let states: Vec<ThermoState> = sizes
        .par_iter()
        .map(|&l| {
            let (levels, tail) = pair_levels(d, l, sigma, h, beta)?;
            solve_mu_with_tail(&levels, beta, rho, l, Some(tail))
        })
        .collect::<Result<_>>()?;
    let last = states.last().unwrap();
    let e0 = last.lowest();
    let rho_crit = last
        .levels
        .iter()
        .skip(1)
        .map(|&(l, m)| m as f64 * bose(beta * (l - e0)))
        .sum::<f64>()
        / last.size;
    let rho0 = states.iter().map(|s| s.ground_occupation()).collect();
    let sweep = SweepResult::new(sizes.to_vec(), states, rho0, rho, VerdictRule::default())?;
    Ok(PairCondensation { sweep, rho_crit })
}

/// Eigenvalues of `-𝓛(γ)` on a path of `n` sites, `γ_{mn} = δ_{|n-m|,1}·e_n`.
///
/// The operator is `D·Δ_path` with `D = diag(e)`, similar to the symmetric
/// tridiagonal `D^{1/2}·Δ_path·D^{1/2}`. The constant vector spans the kernel,
/// so the lowest eigenvalue is set to exactly 0.
pub fn discrete_path_laplacian(n: usize, weights: &[f64]) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::param("n", "need at least one site"));
    }
    if weights.len() < n {
        return Err(Error::param("weights", format!("{} weights for {n} sites", weights.len())));
    }
    if weights[..n].iter().any(|&e| !(e.is_finite() && e > 0.0)) {
        return Err(Error::param("weights", "must be positive"));
    }
    let s: Vec<f64> = weights[..n].iter().map(|e| e.sqrt()).collect();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let deg = (i > 0) as usize + (i + 1 < n) as usize;
        m[(i, i)] = deg as f64 * weights[i];
        if i + 1 < n {
            m[(i, i + 1)] = -s[i] * s[i + 1];
            m[(i + 1, i)] = -s[i] * s[i + 1];
        }
    }
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    ev[0] = 0.0;
    Ok(ev)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DefectWeights {
    Uniform(f64),
    /// One weight per defect site, at least as many as the largest `n(L)`.
    Table(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceModelSpec {
    /// Pair size of the bulk pencil.
    pub d: f64,
    /// Inverse defect density: `n(L) = ⌊L/δ⌋`.
    pub delta: f64,
    pub weights: DefectWeights,
    /// Surface tension `α_s ≥ 0`.
    pub alpha_s: f64,
    /// Mean-field repulsion `λ_rep ≥ 0` in the defects.
    pub lambda_rep: f64,
    /// Grid step for the bulk pair spectrum.
    pub h: f64,
}

impl SurfaceModelSpec {
    pub fn validate(&self) -> Result<()> {
        positive("d", self.d)?;
        positive("delta", self.delta)?;
        positive("h", self.h)?;
        if !(self.alpha_s.is_finite() && self.alpha_s >= 0.0) {
            return Err(Error::param("alpha_s", "must be non-negative"));
        }
        if !(self.lambda_rep.is_finite() && self.lambda_rep >= 0.0) {
            return Err(Error::param("lambda_rep", "must be non-negative"));
        }
        match &self.weights {
            DefectWeights::Uniform(e) => positive("weights", *e),
            DefectWeights::Table(t) => {
                if t.iter().all(|&e| e.is_finite() && e > 0.0) {
                    Ok(())
                } else {
                    Err(Error::param("weights", "must be positive"))
                }
            }
        }
    }

    pub fn defect_count(&self, l: f64) -> usize {
        (l / self.delta).floor() as usize
    }

    fn weights_for(&self, n: usize) -> Vec<f64> {
        match &self.weights {
            DefectWeights::Uniform(e) => vec![*e; n],
            DefectWeights::Table(t) => t.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedPointMethod {
    Damped(f64),
    Bisection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceState {
    pub size: f64,
    pub defects: usize,
    pub rho_s: f64,
    /// `|F(ρ_s) - ρ_s|` with `F` the Gibbs surface density at `ρ_s`.
    pub residual: f64,
    pub iterations: usize,
    pub method: FixedPointMethod,
    pub bulk_e0: f64,
    pub bulk_ground: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceResult {
    pub sweep: SweepResult,
    pub surface: Vec<SurfaceState>,
    /// `2λ_rep·δ·ρ < E₀ + α_s` with `E₀` from the largest size.
    pub destruction_condition: bool,
}

const FP_TOL: f64 = 1e-10;
const FP_CAP: usize = 500;

struct SurfaceSystem<'a> {
    bulk: &'a [(f64, usize)],
    surf: Vec<f64>,
    defects: usize,
    beta: f64,
    rho: f64,
    size: f64,
    shift: f64,
    lambda_rep: f64,
}

impl SurfaceSystem<'_> {
    fn solve(&self, x: f64) -> Result<(ThermoState, f64)> {
        let mut levels = self.bulk.to_vec();
        let s = self.lambda_rep * x - self.shift;
        levels.extend(self.surf.iter().map(|&l| (l + s, 1)));
        let st = solve_mu(&levels, self.beta, self.rho, self.size)?;
        let ns: f64 = self.surf.iter().map(|&l| st.occupation_of(l + s)).sum::<f64>() * self.size;
        Ok((st, ns / self.defects as f64))
    }

    fn damped(&self, theta: f64) -> Result<Option<(f64, usize)>> {
        let mut x = 0.0;
        let mut signs = Vec::new();
        let mut sizes = Vec::new();
        for it in 1..=FP_CAP {
            let fx = self.solve(x)?.1;
            let r = fx - x;
            if r.abs() <= FP_TOL {
                return Ok(Some((x, it)));
            }
            signs.push(r > 0.0);
            sizes.push(r.abs());
            let n = signs.len();
            if n >= 12 {
                let alternating = (n - 10..n).all(|i| signs[i] != signs[i - 1]);
                if alternating && sizes[n - 1] > 0.5 * sizes[n - 11] {
                    return Ok(None);
                }
            }
            x += theta * r;
        }
        Ok(None)
    }

    fn bisect(&self) -> Result<(f64, usize)> {
        let mut lo = 0.0;
        let mut hi = self.rho * self.size / self.defects as f64;
        let mut it = 0;
        while hi - lo > 4.0 * f64::EPSILON * hi && it < 300 {
            it += 1;
            let mid = 0.5 * (lo + hi);
            if self.solve(mid)?.1 > mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let rl = (self.solve(lo)?.1 - lo).abs();
        let rh = (self.solve(hi)?.1 - hi).abs();
        Ok((if rl < rh { lo } else { hi }, it))
    }
}

/// Bulk pairs plus mean-field surface defects, solved self-consistently at each size.
pub fn surface_model(spec: &SurfaceModelSpec, beta: f64, rho: f64, sizes: &[f64]) -> Result<SurfaceResult> {
    spec.validate()?;
    positive("beta", beta)?;
    positive("rho", rho)?;
    check_sizes(sizes, "L", 3)?;
    let rows: Vec<(ThermoState, SurfaceState)> = sizes
        .par_iter()
        .map(|&l| {
            let defects = spec.defect_count(l);
            if defects == 0 {
                return Err(Error::param("L", format!("no defect fits in L = {l}")));
            }
            let (bulk, _) = pair_levels(spec.d, l, &Profile::zero(), spec.h, beta)?;
            let surf = discrete_path_laplacian(defects, &spec.weights_for(defects))?;
            let sys = SurfaceSystem {
                bulk: &bulk,
                surf,
                defects,
                beta,
                rho,
                size: l,
                shift: spec.alpha_s,
                lambda_rep: spec.lambda_rep,
            };
            let mut found = None;
            for theta in [0.5, 0.25] {
                if let Some((x, it)) = sys.damped(theta)? {
                    found = Some((x, it, FixedPointMethod::Damped(theta)));
                    break;
                }
            }
            let (x, iterations, method) = match found {
                Some(f) => f,
                None => {
                    let (x, it) = sys.bisect()?;
                    (x, it, FixedPointMethod::Bisection)
                }
            };
            let (st, fx) = sys.solve(x)?;
            let residual = (fx - x).abs();
            if residual > FP_TOL {
                return Err(Error::FixedPoint {
                    iterations,
                    last_change: residual,
                    oscillating: method == FixedPointMethod::Bisection,
                });
            }
            let e0 = bulk.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
            let bulk_ground = st.occupation_of(e0);
            Ok((
                st,
                SurfaceState {
                    size: l,
                    defects,
                    rho_s: x,
                    residual,
                    iterations,
                    method,
                    bulk_e0: e0,
                    bulk_ground,
                },
            ))
        })
        .collect::<Result<_>>()?;
    let (states, surface): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let rho0 = surface.iter().map(|s| s.bulk_ground).collect();
    let e0 = surface.last().unwrap().bulk_e0;
    let destruction_condition = 2.0 * spec.lambda_rep * spec.delta * rho < e0 + spec.alpha_s;
    let sweep = SweepResult::new(sizes.to_vec(), states, rho0, rho, VerdictRule::default())?;
    Ok(SurfaceResult {
        sweep,
        surface,
        destruction_condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{assemble_conditions, VertexConditionSpec as V};
    use proptest::prelude::*;

    #[test]
    fn two_levels_recover_mu() {
        // for a chosen μ the density is explicit; solving must return that μ
        let levels = [(0.0, 1), (1.5, 2)];
        for &(beta, mu) in &[(1.0, -0.3), (2.0, -1e-4), (0.5, -4.0)] {
            let rho = (1.0 / (-beta * mu as f64).exp_m1() + 2.0 / (beta * (1.5 - mu)).exp_m1()) / 3.0;
            let st = solve_mu(&levels, beta, rho, 3.0).unwrap();
            assert!((st.mu - mu).abs() <= 1e-9 * mu.abs().max(1.0), "{} vs {mu}", st.mu);
            assert!(st.residual <= DENSITY_TOL);
            assert!((st.total_density() - rho).abs() <= 1e-10 * rho);
        }
    }

    #[test]
    fn near_condensed_gap_is_resolved() {
        // almost all density in the lowest state: λ₀ - μ ≈ 1/(β·size·ρ)
        let levels = [(18.0, 1), (19.0, 1)];
        let st = solve_mu(&levels, 1.0, 1e6, 1.0).unwrap();
        assert!(st.gap > 0.0 && st.gap < 2e-6);
        assert!(st.residual <= DENSITY_TOL);
    }

    #[test]
    fn solve_mu_rejects_bad_input() {
        assert!(solve_mu(&[], 1.0, 1.0, 1.0).is_err());
        assert!(solve_mu(&[(0.0, 1)], -1.0, 1.0, 1.0).is_err());
        assert!(solve_mu(&[(0.0, 0)], 1.0, 1.0, 1.0).is_err());
        assert!(solve_mu(&[(f64::NAN, 1)], 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn fermi_matches_series() {
        // μ < 0: log(1+z) = Σ (-1)^{n+1} zⁿ/n and ∫₀^∞ e^{-nβk²} dk = ½√(π/(nβ))
        for &(beta, mu) in &[(1.0, -0.5), (2.0, -0.2), (0.7, -3.0)] {
            let mut s = 0.0;
            for n in 1..4000 {
                let nf = n as f64;
                let term = (nf * beta * mu).exp() / nf * 0.5 * (std::f64::consts::PI / (nf * beta)).sqrt();
                s += if n % 2 == 1 { term } else { -term };
            }
            let f = fermi_free_energy(beta, mu).unwrap();
            assert!((f + s / beta).abs() <= 1e-11 * f.abs(), "{f} vs {}", -s / beta);
        }
    }

    #[test]
    fn fermi_boltzmann_tail() {
        let f = fermi_free_energy(1.0, -20.0).unwrap();
        let a = fermi_boltzmann_limit(1.0, -20.0);
        assert!(((f - a) / a).abs() <= 1e-8);
    }

    #[test]
    fn fermi_is_smooth_in_beta() {
        let betas: Vec<f64> = (0..7).map(|i| 0.5 + 0.25 * i as f64).collect();
        for mu in [-1.0, 0.0, 2.0] {
            let s = fermi_smoothness(mu, &betas).unwrap();
            assert!(!s.flagged, "mu = {mu}: {:?}", s.second_derivative);
        }
    }

    #[test]
    fn quadrature_oracle() {
        let v = integrate(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 0.0, 1e-13).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn path_laplacian_small_cases() {
        assert_eq!(discrete_path_laplacian(1, &[2.0]).unwrap(), vec![0.0]);
        let ev = discrete_path_laplacian(3, &[1.0; 3]).unwrap();
        for (a, b) in ev.iter().zip([0.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        // uniform weights: 2e(1 - cos(πk/n))
        let (n, e) = (17, 0.7);
        let ev = discrete_path_laplacian(n, &vec![e; n]).unwrap();
        for (k, v) in ev.iter().enumerate() {
            let exact = 2.0 * e * (1.0 - (std::f64::consts::PI * k as f64 / n as f64).cos());
            assert!((v - exact).abs() < 1e-12);
        }
        assert!(discrete_path_laplacian(3, &[1.0, 1.0]).is_err());
        assert!(discrete_path_laplacian(0, &[]).is_err());
    }

    fn kappa_robin(c: f64, l: f64) -> f64 {
        let (mut lo, mut hi) = (1e-12, c + 1.0);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m - c * (m * l).tanh() < 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn ground_state_limit_on_robin_interval() {
        let g = MetricGraph::interval(5.0).unwrap();
        let etas = [1.0, 2.0, 4.0, 8.0];
        let mut limits = Vec::new();
        for c in [0.5, 1.0] {
            let bc = assemble_conditions(&g, &[V::Robin(vec![c]), V::Dirichlet]).unwrap();
            let r = ground_state_limit(&g, &bc, &etas).unwrap();
            for (s, v) in r.sizes.iter().zip(&r.values) {
                let k = kappa_robin(c, *s);
                assert!((v + k * k).abs() < 1e-9, "{v} vs {}", -k * k);
            }
            assert!(r.monotone && r.cauchy);
            assert!(r.distance_quadratic < 1e-9);
            limits.push(r.estimate);
        }
        assert!((limits[1] / limits[0] - 4.0).abs() < 1e-8);
        let bc = assemble_conditions(&g, &[V::Dirichlet, V::Dirichlet]).unwrap();
        assert!(matches!(ground_state_limit(&g, &bc, &etas), Err(Error::Precondition(_))));
    }

    #[test]
    fn verdict_rule() {
        let st = |_| solve_mu(&[(0.0, 1)], 1.0, 1.0, 1.0).unwrap();
        let sizes = vec![1.0, 2.0, 4.0, 8.0];
        let states: Vec<_> = (0..4).map(st).collect();
        let r = SweepResult::new(sizes.clone(), states.clone(), vec![0.3, 0.3, 0.3, 0.3], 1.0, VerdictRule::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Condensation);
        let decay: Vec<f64> = sizes.iter().map(|s| 0.1 / s).collect();
        let r = SweepResult::new(sizes.clone(), states.clone(), decay, 1.0, VerdictRule::default()).unwrap();
        assert_eq!(r.verdict, Verdict::NoCondensation);
        assert!((r.slope + 1.0).abs() < 1e-12);
        let slow: Vec<f64> = sizes.iter().map(|s| 0.1 / s.powf(0.7)).collect();
        let r = SweepResult::new(sizes, states, slow, 1.0, VerdictRule::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn interval_sweep_does_not_condense() {
        // Dirichlet interval: gap ~ 3π²/ℓ², ρ₀ ~ 1/(β·ℓ²·gap·...) decays like 1/ℓ
        let g = MetricGraph::interval(10.0).unwrap();
        let bc = assemble_conditions(&g, &[V::Dirichlet, V::Dirichlet]).unwrap();
        let r = sweep_thermo(&g, &bc, 1.0, 1.0, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        // independent check against the closed-form levels (πn/ℓ)²
        for st in &r.states {
            let l = st.size;
            let exact: Vec<(f64, usize)> = (1..)
                .map(|n: usize| ((std::f64::consts::PI * n as f64 / l).powi(2), 1))
                .take_while(|x| x.0 <= st.levels.last().unwrap().0 + 1e-9)
                .collect();
            assert_eq!(exact.len(), st.levels.len());
            let oracle = solve_mu(&exact, 1.0, 1.0, l).unwrap();
            assert!((oracle.ground_occupation() - st.ground_occupation()).abs() <= 1e-8 * oracle.ground_occupation());
            assert!(st.warnings.is_empty(), "{:?}", st.warnings);
        }
        assert_eq!(r.verdict, Verdict::NoCondensation, "{:?}", r.ground_occupation);
    }

    #[test]
    fn attractive_robin_sweep_condenses() {
        let g = MetricGraph::interval(5.0).unwrap();
        let bc = assemble_conditions(&g, &[V::Robin(vec![1.0]), V::Dirichlet]).unwrap();
        let r = sweep_thermo(&g, &bc, 1.0, 1.0, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        assert_eq!(r.verdict, Verdict::Condensation, "{:?}", r.ground_occupation);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn mu_increases_with_density(
            raw in proptest::collection::vec((0.0f64..20.0, 1usize..4), 1..12),
            beta in 0.2f64..5.0,
            rho in 1e-3f64..10.0,
            factor in 1.01f64..4.0,
        ) {
            let a = solve_mu(&raw, beta, rho, 2.0).unwrap();
            let b = solve_mu(&raw, beta, rho * factor, 2.0).unwrap();
            prop_assert!(b.mu >= a.mu);
            prop_assert!(a.mu < a.lowest());
            for w in a.occupations.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
        }
    }
}

//! Finite-difference oracle for two particles on an interval, a ring and the
//! pencil-shaped half-line domain `{|x - y| <= d}`.
//!
//! The operator comes from the quadratic form
//! `∫|∇φ|² - ∫σ(y)|γφ|² dy + ∫α(y)|φ(y,y)|² dy` on a square grid whose
//! diagonal passes through nodes. Every grid cell is split along the
//! direction (1,1), so the five-point stencil is exactly the P1 stiffness of
//! that triangulation and the diagonal is a mesh line. Masses are lumped,
//! Dirichlet nodes are dropped, and the generalized problem `K x = λ M x` is
//! returned symmetrically scaled as `M^{-1/2} K M^{-1/2}`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sparse::{eigen_below, eigen_lowest, EigenOptions, EigenPairs, SymCsr};

/// A real function of the distance `y` along a boundary line.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// Piecewise linear through `(y, value)` knots, zero outside the knot range.
    Table(Vec<(f64, f64)>),
}

impl Profile {
    pub fn zero() -> Self {
        Profile::Constant(0.0)
    }

    pub fn at(&self, y: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Table(t) => {
                if t.is_empty() || y < t[0].0 || y > t[t.len() - 1].0 {
                    return 0.0;
                }
                let k = t.partition_point(|p| p.0 <= y);
                if k == 0 {
                    return t[0].1;
                }
                if k == t.len() {
                    return t[k - 1].1;
                }
                let (y0, v0) = t[k - 1];
                let (y1, v1) = t[k];
                if y1 == y0 {
                    v1
                } else {
                    v0 + (v1 - v0) * (y - y0) / (y1 - y0)
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Profile::Constant(c) => *c == 0.0,
            Profile::Table(t) => t.iter().all(|p| p.1 == 0.0),
        }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        match self {
            Profile::Constant(c) if !c.is_finite() => Err(Error::param(name, "must be finite")),
            Profile::Table(t) => {
                if t.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
                    return Err(Error::param(name, "table entries must be finite"));
                }
                if t.windows(2).any(|w| w[1].0 < w[0].0) {
                    return Err(Error::param(name, "table knots must be sorted"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `[0,l]²`; far sides `x = l`, `y = l` are Dirichlet.
    Square { l: f64 },
    /// The torus `(ℝ/Lℤ)²`: two particles on a ring.
    PeriodicSquare { l: f64 },
    /// Half-line pencil with hard wall at `|x-y| = d`, truncated at `l_trunc`.
    Pencil { d: f64, l_trunc: f64 },
    /// The finite-volume pencil `Ω_L` used for thermodynamics.
    PencilFinite { d: f64, l: f64 },
}

/// Conditions on the lines `x = 0` and `y = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Axes {
    Dirichlet,
    /// `-∫σ|γφ|²` in the form; `σ > 0` attracts.
    Robin(Profile),
}

/// Interaction on the diagonal `x = y`.
#[derive(Debug, Clone, PartialEq)]
pub enum Contact {
    /// `+∫α(y)|φ(y,y)|² dy` in the form.
    Strength(Profile),
    /// Dirichlet on the diagonal.
    Hardcore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    Full,
    Bosonic,
    Fermionic,
}

impl Sector {
    pub fn name(&self) -> &'static str {
        match self {
            Sector::Full => "none",
            Sector::Bosonic => "bosonic",
            Sector::Fermionic => "fermionic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub shape: Shape,
    pub sector: Sector,
    pub axes: Axes,
    pub contact: Contact,
}

impl DomainSpec {
    pub fn square(l: f64, sector: Sector) -> Self {
        DomainSpec {
            shape: Shape::Square { l },
            sector,
            axes: Axes::Dirichlet,
            contact: Contact::Strength(Profile::zero()),
        }
    }

    pub fn periodic(l: f64, sector: Sector) -> Self {
        DomainSpec {
            shape: Shape::PeriodicSquare { l },
            sector,
            axes: Axes::Dirichlet,
            contact: Contact::Strength(Profile::zero()),
        }
    }

    pub fn pencil(d: f64, l_trunc: f64, sigma: Profile, sector: Sector) -> Self {
        DomainSpec {
            shape: Shape::Pencil { d, l_trunc },
            sector,
            axes: Axes::Robin(sigma),
            contact: Contact::Strength(Profile::zero()),
        }
    }

    pub fn pencil_finite(d: f64, l: f64, sigma: Profile, sector: Sector) -> Self {
        DomainSpec {
            shape: Shape::PencilFinite { d, l },
            sector,
            axes: Axes::Robin(sigma),
            contact: Contact::Strength(Profile::zero()),
        }
    }

    pub fn with_contact(mut self, contact: Contact) -> Self {
        self.contact = contact;
        self
    }

    pub fn with_axes(mut self, axes: Axes) -> Self {
        self.axes = axes;
        self
    }

    /// Bottom of the essential spectrum of the untruncated pencil.
    pub fn essential_reference(&self) -> Option<f64> {
        match self.shape {
            Shape::Pencil { d, .. } | Shape::PencilFinite { d, .. } => Some(match self.sector {
                Sector::Fermionic => 2.0 * PI * PI / (d * d),
                _ => PI * PI / (2.0 * d * d),
            }),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let pos = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive and finite, got {v}")))
            }
        };
        match self.shape {
            Shape::Square { l } | Shape::PeriodicSquare { l } => pos("l", l)?,
            Shape::Pencil { d, l_trunc } => {
                pos("d", d)?;
                pos("l_trunc", l_trunc)?;
                if l_trunc <= 3.0 * d {
                    return Err(Error::param("l_trunc", "must exceed 3d"));
                }
            }
            Shape::PencilFinite { d, l } => {
                pos("d", d)?;
                pos("l", l)?;
                if l <= d {
                    return Err(Error::param("l", "must exceed d"));
                }
            }
        }
        if let Axes::Robin(p) = &self.axes {
            p.validate("sigma")?;
            if matches!(self.shape, Shape::PeriodicSquare { .. }) {
                return Err(Error::param("sigma", "a periodic square has no boundary axes"));
            }
        }
        if let Contact::Strength(p) = &self.contact {
            p.validate("alpha")?;
        }
        Ok(())
    }

    fn extent(&self) -> f64 {
        match self.shape {
            Shape::Square { l } | Shape::PeriodicSquare { l } => l,
            Shape::Pencil { l_trunc, .. } => l_trunc,
            Shape::PencilFinite { l, .. } => l,
        }
    }
}

/// Assembled oracle matrix on the kept nodes (one node per symmetry orbit
/// when a sector is imposed).
#[derive(Debug, Clone)]
pub struct Operator {
    pub matrix: SymCsr,
    pub h: f64,
    /// Grid indices `(i, j)` of each unknown, `i >= j` in a sector.
    pub nodes: Vec<(usize, usize)>,
    mass: Vec<f64>,
    /// Basis weight of each unknown: `1/√2` for paired orbits, else 1.
    weight: Vec<f64>,
}

impl Operator {
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Nodal values `φ(i h, j h)` of an eigenvector of `matrix`.
    pub fn nodal(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.mass)
            .zip(&self.weight)
            .map(|((x, m), w)| x * w / m.sqrt())
            .collect()
    }

    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        self.nodes.iter().position(|&p| p == (i, j))
    }
}

fn grid_count(extent: f64, h: f64, what: &str) -> Result<usize> {
    let n = (extent / h).round();
    if !(n >= 2.0) || ((n * h - extent).abs() > 1e-9 * extent) {
        return Err(Error::param(
            "h",
            format!("grid step {h} does not divide the {what} {extent}"),
        ));
    }
    Ok(n as usize)
}

/// Assemble the discrete operator with grid step `h`.
pub fn build_operator(spec: &DomainSpec, h: f64) -> Result<Operator> {
    spec.validate()?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::param("h", "must be positive"));
    }
    let n = grid_count(spec.extent(), h, "domain size")?;
    let periodic = matches!(spec.shape, Shape::PeriodicSquare { .. });
    let band = match spec.shape {
        Shape::Pencil { d, .. } | Shape::PencilFinite { d, .. } => Some(grid_count(d, h, "pair size d")?),
        _ => None,
    };
    // node (i, j) for 0 <= i, j <= n, or 0..n on the torus
    let side = if periodic { n } else { n + 1 };
    let wrap = |i: usize| if periodic { i % n } else { i };
    let inside = |i: usize, j: usize| match band {
        Some(m) => i.abs_diff(j) <= m,
        None => true,
    };
    let id = |i: usize, j: usize| wrap(i) * side + wrap(j);
    let total = side * side;
    let mut mass = vec![0.0; total];
    let mut stiff: HashMap<(usize, usize), f64> = HashMap::new();
    let mut diag = vec![0.0; total];
    let mut add_edge = |a: usize, b: usize, w: f64, diag: &mut Vec<f64>| {
        diag[a] += w;
        diag[b] += w;
        let key = if a < b { (a, b) } else { (b, a) };
        *stiff.entry(key).or_insert(0.0) -= w;
    };
    for i in 0..n {
        for j in 0..n {
            // lower triangle (i,j),(i+1,j),(i+1,j+1); upper (i,j),(i,j+1),(i+1,j+1)
            for tri in [
                [(i, j), (i + 1, j), (i + 1, j + 1)],
                [(i, j), (i, j + 1), (i + 1, j + 1)],
            ] {
                if !tri.iter().all(|&(a, b)| inside(a, b)) {
                    continue;
                }
                for &(a, b) in &tri {
                    mass[id(a, b)] += h * h / 6.0;
                }
                // legs carry weight 1/2 each, the hypotenuse none
                let c = tri[1];
                add_edge(id(tri[0].0, tri[0].1), id(c.0, c.1), 0.5, &mut diag);
                add_edge(id(c.0, c.1), id(tri[2].0, tri[2].1), 0.5, &mut diag);
            }
        }
    }
    // boundary line integrals by the trapezoid rule on mesh segments
    if let Axes::Robin(sigma) = &spec.axes {
        if !periodic {
            for t in 0..n {
                if !(inside(0, t) && inside(0, t + 1)) {
                    continue;
                }
                for a in [t, t + 1] {
                    let w = -0.5 * h * sigma.at(a as f64 * h);
                    diag[id(0, a)] += w;
                    diag[id(a, 0)] += w;
                }
            }
        }
    }
    if let Contact::Strength(alpha) = &spec.contact {
        if !alpha.is_zero() {
            for t in 0..n {
                for a in [t, t + 1] {
                    let y = a as f64 * h;
                    diag[id(a, a)] += 0.5 * h * alpha.at(y);
                }
            }
        }
    }
    let dirichlet = |i: usize, j: usize| -> bool {
        if !inside(i, j) {
            return true;
        }
        if let Some(m) = band {
            if i.abs_diff(j) == m {
                return true;
            }
        }
        if !periodic {
            if i == n || j == n {
                return true;
            }
            if matches!(spec.axes, Axes::Dirichlet) && (i == 0 || j == 0) {
                return true;
            }
        }
        if i == j && (spec.contact == Contact::Hardcore || spec.sector == Sector::Fermionic) {
            return true;
        }
        false
    };
    // kept unknowns
    let reduce = spec.sector != Sector::Full;
    let mut index = vec![usize::MAX; total];
    let mut nodes = Vec::new();
    for i in 0..side {
        for j in 0..side {
            if dirichlet(i, j) || (reduce && i < j) {
                continue;
            }
            index[i * side + j] = nodes.len();
            nodes.push((i, j));
        }
    }
    let sign = if spec.sector == Sector::Fermionic { -1.0 } else { 1.0 };
    // representative and basis coefficient of a full-grid node
    let rep = |p: usize| -> Option<(usize, f64)> {
        let (i, j) = (p / side, p % side);
        if !reduce {
            let k = index[p];
            return (k != usize::MAX).then_some((k, 1.0));
        }
        let (a, b, s) = if i >= j { (i, j, 1.0) } else { (j, i, sign) };
        let k = index[a * side + b];
        if k == usize::MAX {
            return None;
        }
        Some((k, if a == b { 1.0 } else { s * FRAC_1_SQRT_2 }))
    };
    let row_factor = |k: usize| if reduce && nodes[k].0 != nodes[k].1 { SQRT_2 } else { 1.0 };
    let scale: Vec<f64> = mass.iter().map(|m| if *m > 0.0 { 1.0 / m.sqrt() } else { 0.0 }).collect();
    // full scaled entries restricted to rows that are representatives
    let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
    let push = |p: usize, x: usize, v: f64, acc: &mut HashMap<(usize, usize), f64>| {
        let (i, j) = (p / side, p % side);
        if reduce && i < j {
            return;
        }
        let kp = index[p];
        if kp == usize::MAX {
            return;
        }
        if let Some((kq, c)) = rep(x) {
            if kq < kp {
                return;
            }
            *acc.entry((kp, kq)).or_insert(0.0) += row_factor(kp) * c * v;
        }
    };
    for p in 0..total {
        if diag[p] != 0.0 {
            push(p, p, diag[p] * scale[p] * scale[p], &mut acc);
        }
    }
    let mut keys: Vec<(&(usize, usize), &f64)> = stiff.iter().collect();
    keys.sort_by(|a, b| a.0.cmp(b.0));
    for (&(a, b), &w) in keys {
        let v = w * scale[a] * scale[b];
        push(a, b, v, &mut acc);
        push(b, a, v, &mut acc);
    }
    let mut entries: Vec<((usize, usize), f64)> = acc.into_iter().filter(|e| e.1 != 0.0).collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let mut trip = Vec::with_capacity(2 * entries.len());
    for ((r, c), v) in entries {
        trip.push((r, c, v));
        if r != c {
            trip.push((c, r, v));
        }
    }
    let coords = nodes.iter().map(|&(i, j)| (i as i32, j as i32)).collect();
    let matrix = SymCsr::from_triplets(nodes.len(), &trip).with_coords(coords);
    if !matrix.is_symmetric() {
        return Err(Error::Precondition("assembled oracle matrix is not symmetric".into()));
    }
    let node_mass = nodes.iter().map(|&(i, j)| mass[i * side + j]).collect();
    let weight = nodes
        .iter()
        .map(|&(i, j)| if reduce && i != j { FRAC_1_SQRT_2 } else { 1.0 })
        .collect();
    Ok(Operator { matrix, h, nodes, mass: node_mass, weight })
}

/// Lowest `m` eigenvalues of the discrete operator.
pub fn oracle_lowest(spec: &DomainSpec, h: f64, m: usize) -> Result<(Operator, EigenPairs)> {
    let op = build_operator(spec, h)?;
    let pairs = eigen_lowest(&op.matrix, m, &EigenOptions::default())?;
    Ok((op, pairs))
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub h: Vec<f64>,
    /// `levels[g][n]`: n-th eigenvalue on grid g.
    pub levels: Vec<Vec<f64>>,
    pub extrapolated: Vec<f64>,
    /// `|λ_h - λ_{h/2}|/3` on the two finest grids.
    pub error: Vec<f64>,
    /// Observed convergence order from the three finest grids.
    pub order: Vec<f64>,
    /// Entries whose order is off 2 by more than 0.5.
    pub flagged: Vec<bool>,
    pub essential: Option<f64>,
}

/// Richardson extrapolation for an O(h²) scheme from three or more grids
/// with ratio 2.
pub fn richardson(h: &[f64], levels: &[Vec<f64>]) -> Result<OracleResult> {
    if h.len() < 3 || levels.len() != h.len() {
        return Err(Error::Precondition(format!(
            "extrapolation needs at least 3 grid levels, got {}",
            h.len()
        )));
    }
    for w in h.windows(2) {
        if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
            return Err(Error::param("h_list", "successive grid steps must halve"));
        }
    }
    let g = h.len();
    let m = levels.iter().map(|l| l.len()).min().unwrap_or(0);
    let mut out = OracleResult {
        h: h.to_vec(),
        levels: levels.to_vec(),
        extrapolated: Vec::with_capacity(m),
        error: Vec::with_capacity(m),
        order: Vec::with_capacity(m),
        flagged: Vec::with_capacity(m),
        essential: None,
    };
    for k in 0..m {
        let (c, mid, f) = (levels[g - 3][k], levels[g - 2][k], levels[g - 1][k]);
        let d1 = c - mid;
        let d2 = mid - f;
        let noise = 1e-11 * f.abs().max(1.0);
        if d1 * d2 < 0.0 && d1.abs() > noise && d2.abs() > noise {
            return Err(Error::Extrapolation(format!(
                "eigenvalue {k} converges non-monotonically: {c}, {mid}, {f}"
            )));
        }
        let order = if d2.abs() <= noise {
            2.0
        } else {
            (d1 / d2).abs().log2()
        };
        out.extrapolated.push((4.0 * f - mid) / 3.0);
        out.error.push(d2.abs() / 3.0);
        out.order.push(order);
        out.flagged.push((order - 2.0).abs() > 0.5);
    }
    Ok(out)
}

/// Solve on every grid of `h_list` (concurrently) and extrapolate the lowest `m`.
pub fn extrapolate(spec: &DomainSpec, m: usize, h_list: &[f64]) -> Result<OracleResult> {
    if h_list.len() < 3 {
        return Err(Error::Precondition(format!(
            "extrapolation needs at least 3 grid levels, got {}",
            h_list.len()
        )));
    }
    let levels: Vec<Vec<f64>> = h_list
        .par_iter()
        .map(|&h| oracle_lowest(spec, h, m).map(|(_, e)| e.values))
        .collect::<Result<_>>()?;
    let mut r = richardson(h_list, &levels)?;
    r.essential = spec.essential_reference();
    Ok(r)
}

/// Finite-volume pair spectrum `E_n(L)` below `lambda_max` on `Ω_L`.
pub fn pencil_spectrum(
    d: f64,
    l: f64,
    sigma: &Profile,
    sector: Sector,
    h: f64,
    lambda_max: f64,
) -> Result<Vec<f64>> {
    let spec = DomainSpec::pencil_finite(d, l, sigma.clone(), sector);
    let op = build_operator(&spec, h)?;
    Ok(eigen_below(&op.matrix, lambda_max, &EigenOptions::default())?.values)
}

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Electron mass in kg.
pub const ELECTRON_MASS: f64 = 9.109_383_7015e-31;
/// Joules per electronvolt.
pub const EV: f64 = 1.602_176_634e-19;

/// Energy in eV of a dimensionless eigenvalue computed with `d = 1`
/// (units `ħ = 2mₑ = 1`), for a pair of size `d_meters`.
pub fn physical_energy_ev(lambda: f64, d_meters: f64) -> f64 {
    lambda * HBAR * HBAR / (2.0 * ELECTRON_MASS * d_meters * d_meters) / EV
}

/// The gap scale `ħ²π²/(mₑd²)` in eV.
pub fn gap_scale_ev(d_meters: f64) -> f64 {
    HBAR * HBAR * PI * PI / (ELECTRON_MASS * d_meters * d_meters) / EV
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lowest(spec: &DomainSpec, h: f64, m: usize) -> Vec<f64> {
        oracle_lowest(spec, h, m).unwrap().1.values
    }

    #[test]
    fn square_dirichlet_levels() {
        let spec = DomainSpec::square(PI, Sector::Full);
        let r = extrapolate(&spec, 4, &[PI / 16.0, PI / 32.0, PI / 64.0]).unwrap();
        for (got, want) in r.extrapolated.iter().zip([2.0, 5.0, 5.0, 8.0]) {
            assert!((got - want).abs() < 1e-4 * want, "{got} vs {want}");
        }
        for p in &r.order {
            assert!((p - 2.0).abs() < 0.2, "order {p}");
        }
    }

    #[test]
    fn fermionic_square_is_antisymmetric_free_spectrum() {
        let spec = DomainSpec::square(PI, Sector::Fermionic);
        let r = extrapolate(&spec, 3, &[PI / 16.0, PI / 32.0, PI / 64.0]).unwrap();
        for (got, want) in r.extrapolated.iter().zip([5.0, 10.0, 13.0]) {
            assert!((got - want).abs() < 1e-4 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn bosonic_square_free_spectrum() {
        let spec = DomainSpec::square(PI, Sector::Bosonic);
        let v = lowest(&spec, PI / 64.0, 4);
        for (got, want) in v.iter().zip([2.0, 5.0, 8.0, 10.0]) {
            assert!((got - want).abs() < 1e-2 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn hardcore_bosons_equal_fermions_on_square() {
        let h = PI / 24.0;
        let f = build_operator(&DomainSpec::square(PI, Sector::Fermionic), h).unwrap();
        let b = build_operator(
            &DomainSpec::square(PI, Sector::Bosonic).with_contact(Contact::Hardcore),
            h,
        )
        .unwrap();
        assert_eq!(f.nodes, b.nodes);
        assert_eq!(f.matrix.to_dense(), b.matrix.to_dense());
    }

    #[test]
    fn sectors_split_the_full_spectrum() {
        let h = PI / 10.0;
        let spec = DomainSpec::square(PI, Sector::Full).with_contact(Contact::Strength(Profile::Constant(1.3)));
        let full = build_operator(&spec, h).unwrap().matrix.to_dense().symmetric_eigenvalues();
        let mut all: Vec<f64> = full.iter().cloned().collect();
        all.sort_by(f64::total_cmp);
        let mut parts = Vec::new();
        for s in [Sector::Bosonic, Sector::Fermionic] {
            let spec = DomainSpec { sector: s, ..spec.clone() };
            let e = build_operator(&spec, h).unwrap().matrix.to_dense().symmetric_eigenvalues();
            parts.extend(e.iter().cloned());
        }
        parts.sort_by(f64::total_cmp);
        assert_eq!(all.len(), parts.len());
        for (a, b) in all.iter().zip(&parts) {
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn periodic_ring_free_bosons() {
        // momenta 2πn/L, L = 2π: λ = n₁² + n₂²
        let spec = DomainSpec::periodic(2.0 * PI, Sector::Bosonic);
        let v = lowest(&spec, 2.0 * PI / 48.0, 4);
        assert!(v[0].abs() < 1e-9);
        for (got, want) in v[1..].iter().zip([1.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-2, "{got} vs {want}");
        }
    }

    #[test]
    fn misaligned_grid_is_rejected() {
        assert!(build_operator(&DomainSpec::square(1.0, Sector::Full), 0.3).is_err());
        let p = DomainSpec::pencil(1.0, 4.0, Profile::zero(), Sector::Fermionic);
        assert!(build_operator(&p, 0.3).is_err());
        let bad = DomainSpec::pencil(1.0, 2.0, Profile::zero(), Sector::Fermionic);
        assert!(build_operator(&bad, 0.25).is_err());
        assert!(richardson(&[0.2, 0.1], &[vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn pencil_fermionic_single_bound_state() {
        let spec = DomainSpec::pencil(1.0, 8.0, Profile::zero(), Sector::Fermionic);
        let r = extrapolate(&spec, 2, &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]).unwrap();
        let thr = r.essential.unwrap();
        assert!((thr - 2.0 * PI * PI).abs() < 1e-12);
        assert!(r.extrapolated[0] < thr && r.extrapolated[1] > thr, "{:?}", r.extrapolated);
        let e0 = r.extrapolated[0] / (PI * PI);
        assert!((0.5..=1.86).contains(&e0), "{e0}");
        // the Neumann/Dirichlet corner at (d, 0) slows the ground level down
        assert!(r.flagged[0]);
    }

    #[test]
    fn diagonal_jump_relation() {
        // inward normal derivatives on both sides add up to (g/√2)·ψ
        let n = 96;
        let h = PI / n as f64;
        let g = 4.0;
        let spec = DomainSpec::square(PI, Sector::Bosonic).with_contact(Contact::Strength(Profile::Constant(g)));
        let (op, e) = oracle_lowest(&spec, h, 1).unwrap();
        let psi = op.nodal(&e.vectors[0]);
        let val = |i: usize, j: usize| op.index_of(i, j).map(|k| psi[k]).unwrap_or(0.0);
        let (mut lhs, mut rhs) = (0.0, 0.0);
        for i in 3..n - 2 {
            let d = (-3.0 * val(i, i) + 4.0 * val(i + 1, i - 1) - val(i + 2, i - 2)) / (2.0 * SQRT_2 * h);
            lhs += 2.0 * d;
            rhs += g / SQRT_2 * val(i, i);
        }
        assert!(((lhs - rhs) / rhs).abs() < 0.05, "{lhs} vs {rhs}");
    }

    #[test]
    fn weyl_count_on_square() {
        // Robin axes against Dirichlet far sides: the perimeter terms cancel
        let spec = DomainSpec::square(PI, Sector::Full)
            .with_axes(Axes::Robin(Profile::Constant(0.5)))
            .with_contact(Contact::Strength(Profile::Constant(1.0)));
        let op = build_operator(&spec, PI / 256.0).unwrap();
        let lambda = 400.0;
        let count = crate::sparse::count_below(&op.matrix, lambda).unwrap();
        assert!(count >= 200);
        let ratio = count as f64 / lambda / (PI * PI / (4.0 * PI));
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn dirichlet_constraints_raise_levels() {
        let h = PI / 20.0;
        let soft = DomainSpec::square(PI, Sector::Bosonic).with_contact(Contact::Strength(Profile::Constant(3.0)));
        let hard = DomainSpec::square(PI, Sector::Bosonic).with_contact(Contact::Hardcore);
        let a = lowest(&soft, h, 6);
        let b = lowest(&hard, h, 6);
        for (x, y) in a.iter().zip(&b) {
            assert!(x <= y, "{x} > {y}");
        }
    }

    #[test]
    fn attractive_sigma_lowers_ground_state() {
        let h = 1.0 / 8.0;
        let free = DomainSpec::pencil(1.0, 6.0, Profile::zero(), Sector::Fermionic);
        let attr = DomainSpec::pencil(1.0, 6.0, Profile::Constant(2.0), Sector::Fermionic);
        let a = lowest(&free, h, 1)[0];
        let b = lowest(&attr, h, 1)[0];
        assert!(b < a, "{b} vs {a}");
    }

    #[test]
    fn profile_table_interpolates() {
        let p = Profile::Table(vec![(0.0, 1.0), (1.0, 3.0)]);
        assert_eq!(p.at(0.5), 2.0);
        assert_eq!(p.at(1.5), 0.0);
        assert_eq!(p.at(1.0), 3.0);
    }

    #[test]
    fn physical_units() {
        // d = 1 µm gives a gap of order 1e-6 eV; the gap scale is 2π² model units
        let g = gap_scale_ev(1e-6);
        assert!((physical_energy_ev(2.0 * PI * PI, 1e-6) - g).abs() < 1e-12 * g);
        assert!(g > 1e-7 && g < 1e-5, "{g}");
    }
}

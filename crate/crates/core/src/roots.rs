//! Real zeros of analytic functions whose zeros near the positive real axis
//! are all real, located by grid scanning and counted by the argument principle.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealRoot {
    pub x: f64,
    pub multiplicity: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct RootScanOptions {
    /// Grid step of the magnitude scan.
    pub step: f64,
    /// Half-height of the counting rectangles.
    pub height: f64,
    /// Absolute residual accepted at a refined root.
    pub tol: f64,
    /// Rate at which the phase of `f` can turn along the real axis, used to
    /// seed contour sampling (for secular determinants, twice the total length).
    pub phase_rate: f64,
    /// Grid cells per counting block.
    pub block_cells: usize,
}

#[derive(Debug, Clone, Default)]
pub struct RootScan {
    pub roots: Vec<RealRoot>,
    /// Argument-principle count over the whole window.
    pub total_winding: usize,
    /// Blocks that needed a finer local grid.
    pub refinements: usize,
    /// Blocks that fell back to recursive bisection.
    pub fallbacks: usize,
    pub median_abs: f64,
    pub bracket_threshold: f64,
}

const MAX_DEPTH: usize = 40;
const ARG_STEP: f64 = 0.4;

/// Phase change of `f` along the segment `z0 → z1`, sampled adaptively.
fn arg_change<F>(f: &F, z0: Complex64, z1: Complex64, pieces: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    fn rec<F: Fn(Complex64) -> Complex64>(
        f: &F,
        z0: Complex64,
        f0: Complex64,
        z1: Complex64,
        f1: Complex64,
        depth: usize,
    ) -> Result<f64> {
        if !(f0.norm() > 0.0 && f1.norm() > 0.0 && f0.is_finite() && f1.is_finite()) {
            return Err(Error::NonIntegerWinding {
                value: f64::NAN,
                at: z0.re,
            });
        }
        // accept only when both halves turn slowly, so a full turn cannot hide
        let zm = 0.5 * (z0 + z1);
        let fm = f(zm);
        let d1 = (fm / f0).arg();
        let d2 = (f1 / fm).arg();
        if !(d1.is_finite() && d2.is_finite()) {
            return Err(Error::NonIntegerWinding {
                value: f64::NAN,
                at: zm.re,
            });
        }
        if d1.abs() < ARG_STEP && d2.abs() < ARG_STEP {
            return Ok(d1 + d2);
        }
        if depth >= MAX_DEPTH {
            return Err(Error::NonIntegerWinding {
                value: f64::NAN,
                at: z0.re,
            });
        }
        Ok(rec(f, z0, f0, zm, fm, depth + 1)? + rec(f, zm, fm, z1, f1, depth + 1)?)
    }
    let n = pieces.max(1);
    let mut total = 0.0;
    let mut za = z0;
    let mut fa = f(za);
    for i in 1..=n {
        let zb = z0 + (z1 - z0) * (i as f64 / n as f64);
        let fb = f(zb);
        total += rec(f, za, fa, zb, fb, 0)?;
        za = zb;
        fa = fb;
    }
    Ok(total)
}

fn to_count(w: f64, at: f64) -> Result<usize> {
    let r = w.round();
    if (w - r).abs() > 0.1 || r < 0.0 {
        return Err(Error::NonIntegerWinding { value: w, at });
    }
    Ok(r as usize)
}

/// Number of zeros inside the rectangle `[a, b] × [-h, h]`.
pub fn rectangle_count<F>(f: &F, a: f64, b: f64, h: f64, phase_rate: f64) -> Result<usize>
where
    F: Fn(Complex64) -> Complex64,
{
    let horiz = 4 + ((b - a) * phase_rate / ARG_STEP).ceil() as usize;
    let vert = 4 + (2.0 * h * phase_rate / ARG_STEP).ceil() as usize;
    let c = |x: f64, y: f64| Complex64::new(x, y);
    let w = arg_change(f, c(a, -h), c(b, -h), horiz)?
        + arg_change(f, c(b, -h), c(b, h), vert)?
        + arg_change(f, c(b, h), c(a, h), horiz)?
        + arg_change(f, c(a, h), c(a, -h), vert)?;
    to_count(w / std::f64::consts::TAU, 0.5 * (a + b))
}

/// Number of zeros inside the circle of radius `r` about `z`.
pub fn circle_count<F>(f: &F, z: Complex64, r: f64) -> Result<usize>
where
    F: Fn(Complex64) -> Complex64,
{
    let n = 32;
    let mut w = 0.0;
    for i in 0..n {
        let t0 = std::f64::consts::TAU * i as f64 / n as f64;
        let t1 = std::f64::consts::TAU * (i + 1) as f64 / n as f64;
        w += arg_change(
            f,
            z + Complex64::from_polar(r, t0),
            z + Complex64::from_polar(r, t1),
            1,
        )?;
    }
    to_count(w / std::f64::consts::TAU, z.re)
}

fn derivative<F: Fn(Complex64) -> Complex64>(f: &F, z: f64) -> Complex64 {
    let h = 1e-6 * z.abs().max(1.0);
    (f(Complex64::new(z + h, 0.0)) - f(Complex64::new(z - h, 0.0))) / (2.0 * h)
}

/// Newton iteration for a zero of multiplicity `m`, kept real and inside `[lo, hi]`.
fn newton<F: Fn(Complex64) -> Complex64>(
    f: &F,
    mut x: f64,
    m: usize,
    lo: f64,
    hi: f64,
    stop_below: f64,
) -> Option<f64> {
    for _ in 0..80 {
        let fx = f(Complex64::new(x, 0.0));
        if fx.norm() == 0.0 {
            return Some(x);
        }
        let d = derivative(f, x);
        let step = (m as f64 * fx / d).re;
        if !step.is_finite() {
            return None;
        }
        let nx = x - step;
        if nx < lo || nx > hi {
            return None;
        }
        x = nx;
        if step.abs() <= stop_below.max(4.0 * f64::EPSILON * x.abs().max(1.0)) {
            return Some(x);
        }
    }
    Some(x)
}

enum Polished {
    Root(RealRoot),
    /// Several zeros within the multiplicity circle that are not one multiple zero.
    Cluster,
}

struct Ctx<'a, F> {
    f: &'a F,
    opts: &'a RootScanOptions,
    radius: f64,
}

impl<'a, F: Fn(Complex64) -> Complex64 + Sync> Ctx<'a, F> {
    fn eval(&self, x: f64) -> Complex64 {
        (self.f)(Complex64::new(x, 0.0))
    }

    fn multiplicity(&self, x: f64) -> Result<(usize, f64)> {
        let z = Complex64::new(x, 0.0);
        match circle_count(self.f, z, self.radius) {
            Ok(m) => Ok((m, self.radius)),
            Err(_) => {
                let r = 0.5 * self.radius;
                Ok((circle_count(self.f, z, r)?, r))
            }
        }
    }

    fn polish(&self, seed: f64, lo: f64, hi: f64) -> Result<Option<Polished>> {
        let Some(x) = newton(self.f, seed, 1, lo, hi, 0.25 * self.radius) else {
            return Ok(None);
        };
        let (m, r) = self.multiplicity(x)?;
        if m == 0 {
            return Ok(None);
        }
        let Some(x) = newton(self.f, x, m, lo, hi, 0.0) else {
            return Ok(None);
        };
        let (m, r) = match self.multiplicity(x) {
            Ok(v) => v,
            Err(_) => (m, r),
        };
        if m == 0 {
            return Ok(None);
        }
        if m > 1 {
            let tight = circle_count(self.f, Complex64::new(x, 0.0), 1e-3 * r).unwrap_or(0);
            if tight != m {
                return Ok(Some(Polished::Cluster));
            }
        }
        Ok(Some(Polished::Root(RealRoot {
            x,
            multiplicity: m,
            residual: self.eval(x).norm(),
        })))
    }

    /// Splitting point near the middle of `[a, b]` where `|f|` is largest.
    fn split_point(&self, a: f64, b: f64) -> f64 {
        let w = b - a;
        (0..7)
            .map(|i| a + w * (0.35 + 0.05 * i as f64))
            .map(|x| (x, self.eval(x).norm()))
            .fold((0.5 * (a + b), -1.0), |best, c| if c.1 > best.1 { c } else { best })
            .0
    }

    fn isolate(&self, a: f64, b: f64, n: usize, out: &mut Vec<RealRoot>) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        let w = b - a;
        if n == 1 && w < 0.25 * self.radius {
            if let Some(Polished::Root(r)) = self.polish(0.5 * (a + b), a, b)? {
                out.push(r);
                return Ok(());
            }
        }
        if w < 1e-12 * b.abs().max(1.0) {
            let x = newton(self.f, 0.5 * (a + b), n, a - w, b + w, 0.0).unwrap_or(0.5 * (a + b));
            out.push(RealRoot {
                x,
                multiplicity: n,
                residual: self.eval(x).norm(),
            });
            return Ok(());
        }
        let m = self.split_point(a, b);
        let h = self.opts.height.min(w);
        let left = rectangle_count(self.f, a, m, h, self.opts.phase_rate)?;
        let right = rectangle_count(self.f, m, b, h, self.opts.phase_rate)?;
        if left + right != n {
            return Err(Error::RefinementFailed { lo: a, hi: b });
        }
        self.isolate(a, m, left, out)?;
        self.isolate(m, b, right, out)
    }

    fn seeds(&self, a: f64, b: f64, cells: usize) -> Vec<(f64, f64)> {
        let xs: Vec<f64> = (0..=cells)
            .map(|i| a + (b - a) * i as f64 / cells as f64)
            .collect();
        let v: Vec<f64> = xs.iter().map(|&x| self.eval(x).norm()).collect();
        let mut s: Vec<(f64, f64)> = (1..cells)
            .filter(|&i| v[i] <= v[i - 1] && v[i] <= v[i + 1])
            .map(|i| (xs[i], v[i]))
            .collect();
        s.sort_by(|p, q| p.1.total_cmp(&q.1));
        s
    }

    /// All zeros in a counting block `[a, b]` known to contain `n` of them.
    fn solve_block(&self, a: f64, b: f64, n: usize) -> Result<(Vec<RealRoot>, bool, bool)> {
        let cells = ((b - a) / self.opts.step).round().max(2.0) as usize;
        let mut refined = false;
        for attempt in 0..=3u32 {
            if attempt > 0 {
                refined = true;
            }
            let local = cells * 10usize.pow(attempt);
            let mut found: Vec<RealRoot> = Vec::new();
            let mut clustered = false;
            for (seed, _) in self.seeds(a, b, local).into_iter().take(4 * n + 4) {
                match self.polish(seed, a, b)? {
                    Some(Polished::Root(r)) => {
                        if !found
                            .iter()
                            .any(|q| (q.x - r.x).abs() < 1e-9 * r.x.abs().max(1.0))
                        {
                            found.push(r);
                        }
                    }
                    Some(Polished::Cluster) => clustered = true,
                    None => {}
                }
                if found.iter().map(|r| r.multiplicity).sum::<usize>() >= n {
                    break;
                }
            }
            if !clustered && found.iter().map(|r| r.multiplicity).sum::<usize>() == n {
                return Ok((found, refined, false));
            }
        }
        let mut out = Vec::new();
        self.isolate(a, b, n, &mut out)?;
        Ok((out, refined, true))
    }
}

/// Locates all zeros of `f` in `(a, b]`, where `f` is analytic on a strip
/// around the window and has no non-real zeros there.
pub fn find_real_roots<F>(f: &F, a: f64, b: f64, opts: &RootScanOptions) -> Result<RootScan>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    if !(a < b) || !(opts.step > 0.0) {
        return Err(Error::param("window", format!("empty window ({a}, {b}]")));
    }
    let ctx = Ctx {
        f,
        opts,
        radius: (0.25 * opts.step).min(1e-3),
    };
    let bc = opts.block_cells.max(2);
    let n = ((b - a) / opts.step).ceil() as usize;
    let xs: Vec<f64> = (0..=n + bc)
        .map(|i| a + (b - a) * i as f64 / n as f64)
        .collect();
    let mags: Vec<f64> = xs.par_iter().map(|&x| ctx.eval(x).norm()).collect();

    let mut sorted = mags[..=n].to_vec();
    sorted.sort_by(f64::total_cmp);
    let median_abs = sorted[sorted.len() / 2];

    // block edges sit where |f| is largest within a quarter block of the nominal edge
    let pick = |lo: usize, hi: usize| -> usize {
        (lo..=hi)
            .max_by(|&i, &j| mags[i].total_cmp(&mags[j]))
            .unwrap()
    };
    let mut edges = vec![a];
    let quarter = (bc / 4).max(1);
    let mut nominal = bc;
    while nominal < n {
        let i = pick(nominal.saturating_sub(quarter), (nominal + quarter).min(n - 1));
        if xs[i] > *edges.last().unwrap() {
            edges.push(xs[i]);
        }
        nominal += bc;
    }
    let right = xs[pick(n + 1, n + bc)];
    edges.push(right);

    let h = opts.height;
    let blocks: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();
    let counts: Vec<Result<usize>> = blocks
        .par_iter()
        .map(|&(lo, hi)| rectangle_count(f, lo, hi, h, opts.phase_rate))
        .collect();
    let counts: Vec<usize> = counts.into_iter().collect::<Result<_>>()?;
    let total_winding = rectangle_count(f, a, right, h, opts.phase_rate)?;
    if total_winding != counts.iter().sum::<usize>() {
        return Err(Error::RefinementFailed { lo: a, hi: right });
    }

    let solved: Vec<Result<(Vec<RealRoot>, bool, bool)>> = blocks
        .par_iter()
        .zip(counts.par_iter())
        .map(|(&(lo, hi), &c)| {
            if c == 0 {
                Ok((Vec::new(), false, false))
            } else {
                ctx.solve_block(lo, hi, c)
            }
        })
        .collect();
    let mut scan = RootScan {
        median_abs,
        bracket_threshold: 1e-6 * median_abs,
        ..Default::default()
    };
    let mut in_window = 0;
    for s in solved {
        let (roots, refined, fell_back) = s?;
        scan.refinements += refined as usize;
        scan.fallbacks += fell_back as usize;
        for r in roots {
            if r.residual > opts.tol {
                return Err(Error::ResidualTooLarge {
                    at: r.x,
                    residual: r.residual,
                    tol: opts.tol,
                });
            }
            if r.x <= b {
                in_window += r.multiplicity;
                scan.roots.push(r);
            }
        }
    }
    scan.roots.sort_by(|p, q| p.x.total_cmp(&q.x));
    let beyond: usize = total_winding - in_window;
    scan.total_winding = total_winding - beyond;
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(step: f64) -> RootScanOptions {
        RootScanOptions {
            step,
            height: 0.5,
            tol: 1e-10,
            phase_rate: 2.0,
            block_cells: 8,
        }
    }

    #[test]
    fn sine_zeros() {
        let f = |z: Complex64| z.sin();
        let s = find_real_roots(&f, 0.1, 10.0, &opts(0.05)).unwrap();
        let xs: Vec<f64> = s.roots.iter().map(|r| r.x).collect();
        assert_eq!(xs.len(), 3);
        for (i, x) in xs.iter().enumerate() {
            assert!((x - (i + 1) as f64 * std::f64::consts::PI).abs() < 1e-13);
        }
        assert_eq!(s.total_winding, 3);
    }

    #[test]
    fn double_zero_multiplicity() {
        let f = |z: Complex64| (z - 2.0) * (z - 2.0) * (z - 5.0);
        let s = find_real_roots(&f, 0.5, 6.0, &opts(0.1)).unwrap();
        assert_eq!(s.roots.len(), 2);
        assert_eq!(s.roots[0].multiplicity, 2);
        assert!((s.roots[0].x - 2.0).abs() < 1e-6);
        assert_eq!(s.roots[1].multiplicity, 1);
        assert_eq!(s.total_winding, 3);
    }

    #[test]
    fn close_pair_is_separated() {
        let f = |z: Complex64| (z - 3.0) * (z - 3.0 - 2e-4);
        let s = find_real_roots(&f, 0.5, 6.0, &opts(0.1)).unwrap();
        assert_eq!(s.roots.len(), 2, "{:?}", s.roots);
        assert!((s.roots[1].x - s.roots[0].x - 2e-4).abs() < 1e-10);
    }

    #[test]
    fn root_on_grid_point_and_window_end() {
        let f = |z: Complex64| (z - 1.0) * (z - 4.0);
        let s = find_real_roots(&f, 0.25, 4.0, &opts(0.25)).unwrap();
        assert_eq!(s.roots.len(), 2);
        assert!((s.roots[1].x - 4.0).abs() < 1e-14);
    }

    #[test]
    fn circle_counts() {
        let f = |z: Complex64| (z - 1.0).powi(3);
        assert_eq!(circle_count(&f, Complex64::new(1.0, 0.0), 1e-3).unwrap(), 3);
        assert_eq!(circle_count(&f, Complex64::new(2.0, 0.0), 0.5).unwrap(), 0);
    }
}

use num_complex::Complex64;
use serde::Serialize;

use super::grid::RadialGrid;
use super::radial::RadialOp;
use super::section::{Comp, FormSection4};
use super::AngularSector;
use crate::error::{Error, Result};
use crate::geometry::StaticBackground;

/// Which displayed summand an operator entry came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Summand {
    Differential,
    Codifferential,
    /// Angular Laplacians, sphere `d`/`delta` couplings and the first-order
    /// time coupling.
    BoxAngular,
    /// Second-order radial diagonal.
    BoxRadial,
    /// `-sigma^2 r^2 / mu` diagonal.
    BoxTime,
}

/// 4x4 matrix of radial operators acting from degree `p_in` to `p_out`
/// components. Entries touching absent fibers are `None`.
#[derive(Debug, Clone)]
pub struct BlockRadialOperator {
    pub n: usize,
    pub p_in: usize,
    pub p_out: usize,
    pub sector: AngularSector,
    pub sigma: Complex64,
    pub stencil_order: usize,
    /// How the stored entries relate to the displayed matrices.
    pub sign_convention: &'static str,
    grid: RadialGrid,
    alpha: Vec<f64>,
    entries: [[Option<RadialOp>; 4]; 4],
    sources: [[Vec<Summand>; 4]; 4],
}

impl BlockRadialOperator {
    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// Entry mapping component `input` to component `output`.
    pub fn entry(&self, output: Comp, input: Comp) -> Option<&RadialOp> {
        self.entries[output as usize][input as usize].as_ref()
    }

    pub fn sources(&self, output: Comp, input: Comp) -> &[Summand] {
        &self.sources[output as usize][input as usize]
    }

    pub fn apply(&self, u: &FormSection4) -> Result<FormSection4> {
        if u.degree != self.p_in || u.sector != self.sector {
            return Err(Error::SectorMismatch(format!(
                "operator expects degree {} in {:?}, got degree {} in {:?}",
                self.p_in, self.sector.kind, u.degree, u.sector.kind
            )));
        }
        let mut out = FormSection4::zeros(self.p_out, self.sector, self.grid.len());
        for o in Comp::ALL {
            for i in Comp::ALL {
                if let Some(op) = self.entry(o, i) {
                    if u.get(i).len() != self.grid.len() {
                        return Err(Error::SectorMismatch(format!("component {i:?} has the wrong length")));
                    }
                    let y = op.apply(u.get(i));
                    for (a, b) in out.get_mut(o).iter_mut().zip(y) {
                        *a += b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `self o other`.
    pub fn compose(&self, other: &BlockRadialOperator) -> Result<BlockRadialOperator> {
        if other.p_out != self.p_in || other.sector != self.sector || other.grid != self.grid {
            return Err(Error::SectorMismatch("incompatible operators in composition".into()));
        }
        let mut out = self.empty_like(other.p_in, self.p_out);
        for o in Comp::ALL {
            for i in Comp::ALL {
                for k in Comp::ALL {
                    if let (Some(a), Some(b)) = (self.entry(o, k), other.entry(k, i)) {
                        out.push(o, i, a.compose(b), &[]);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &BlockRadialOperator) -> Result<BlockRadialOperator> {
        if other.p_in != self.p_in || other.p_out != self.p_out || other.sector != self.sector {
            return Err(Error::SectorMismatch("incompatible operators in sum".into()));
        }
        let mut out = self.clone();
        for o in Comp::ALL {
            for i in Comp::ALL {
                if let Some(b) = other.entry(o, i) {
                    out.push(o, i, b.clone(), other.sources(o, i));
                }
            }
        }
        Ok(out)
    }

    fn empty_like(&self, p_in: usize, p_out: usize) -> BlockRadialOperator {
        BlockRadialOperator {
            p_in,
            p_out,
            entries: Default::default(),
            sources: Default::default(),
            ..self.clone()
        }
    }

    fn push(&mut self, o: Comp, i: Comp, op: RadialOp, src: &[Summand]) {
        let slot = &mut self.entries[o as usize][i as usize];
        *slot = Some(match slot.take() {
            Some(prev) => prev.add(&op),
            None => op,
        });
        for s in src {
            if !self.sources[o as usize][i as usize].contains(s) {
                self.sources[o as usize][i as usize].push(*s);
            }
        }
    }
}

/// Sampled background and stencil shared by the assembly routines.
struct Ctx<'a> {
    n: usize,
    grid: &'a RadialGrid,
    alpha: Vec<f64>,
    mu: Vec<f64>,
    dmu: Vec<f64>,
    d: RadialOp,
    order: usize,
}

impl<'a> Ctx<'a> {
    fn new<B: StaticBackground + ?Sized>(bg: &B, grid: &'a RadialGrid, order: usize) -> Result<Self> {
        let mu: Vec<f64> = grid.r().iter().map(|&r| bg.mu(r)).collect();
        if let Some(bad) = mu.iter().position(|m| !(*m > 0.0)) {
            return Err(Error::HorizonDomain(format!("mu <= 0 at grid node r = {}", grid.r()[bad])));
        }
        Ok(Self {
            n: bg.dim(),
            grid,
            alpha: mu.iter().map(|m| m.sqrt()).collect(),
            dmu: grid.r().iter().map(|&r| bg.dmu(r)).collect(),
            mu,
            d: RadialOp::deriv(grid, order)?,
            order,
        })
    }

    fn diag<F: Fn(usize, f64) -> Complex64>(&self, f: F) -> RadialOp {
        RadialOp::diag(self.grid.r().iter().enumerate().map(|(i, &r)| f(i, r)).collect())
    }

    fn real<F: Fn(usize, f64) -> f64>(&self, f: F) -> RadialOp {
        self.diag(|i, r| Complex64::new(f(i, r), 0.0))
    }

    fn alpha(&self) -> RadialOp {
        self.real(|i, _| self.alpha[i])
    }

    fn inv_alpha(&self) -> RadialOp {
        self.real(|i, _| 1.0 / self.alpha[i])
    }

    /// `-alpha r^{2q-(n-2)} d/dr r^{n-2-2q}`.
    fn partial_star(&self, q: i64) -> RadialOp {
        let k = self.n as i32 - 2 - 2 * q as i32;
        let left = self.real(|i, r| -self.alpha[i] * r.powi(-k));
        let right = self.real(|_, r| r.powi(k));
        left.compose(&self.d).compose(&right)
    }

    fn operator(&self, p_in: usize, p_out: usize, sector: AngularSector, sigma: Complex64, note: &'static str) -> BlockRadialOperator {
        BlockRadialOperator {
            n: self.n,
            p_in,
            p_out,
            sector,
            sigma,
            stencil_order: self.order,
            sign_convention: note,
            grid: self.grid.clone(),
            alpha: self.alpha.clone(),
            entries: Default::default(),
            sources: Default::default(),
        }
    }
}

fn check_sector(n: usize, p: usize, sector: &AngularSector) -> Result<()> {
    sector.validate()?;
    if sector.sphere_dim + 2 != n {
        return Err(Error::SectorMismatch(format!(
            "sector lives on S^{} but the spacetime has dimension {n}",
            sector.sphere_dim
        )));
    }
    if p > n {
        return Err(Error::SectorMismatch(format!("form degree {p} exceeds dimension {n}")));
    }
    if Comp::ALL.iter().all(|c| !sector.has_fiber(c.sphere_degree(p))) {
        return Err(Error::SectorMismatch(format!(
            "no {p}-form components in the {:?} sector",
            sector.kind
        )));
    }
    Ok(())
}

/// Adds `op` at `(o, i)` when both fibers exist.
fn put(block: &mut BlockRadialOperator, o: Comp, i: Comp, op: RadialOp, src: Summand) {
    let so = o.sphere_degree(block.p_out);
    let si = i.sphere_degree(block.p_in);
    if block.sector.has_fiber(so) && block.sector.has_fiber(si) {
        block.push(o, i, op, &[src]);
    }
}

fn scalar(ctx: &Ctx, c: Complex64) -> RadialOp {
    ctx.diag(|_, _| c)
}

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Discretized `-alpha r^{-(n-2)} r^{2q} d/dr r^{-2q} r^{n-2}`.
pub fn partial_r_star<B: StaticBackground + ?Sized>(bg: &B, grid: &RadialGrid, q: i64, order: usize) -> Result<RadialOp> {
    Ok(Ctx::new(bg, grid, order)?.partial_star(q))
}

/// Exterior derivative on `p`-forms with `d/dt` replaced by `-i sigma`.
pub fn assemble_d<B: StaticBackground + ?Sized>(
    bg: &B,
    grid: &RadialGrid,
    p: usize,
    sector: AngularSector,
    sigma: Complex64,
    order: usize,
) -> Result<BlockRadialOperator> {
    check_sector(bg.dim(), p, &sector)?;
    let ctx = Ctx::new(bg, grid, order)?;
    let q = p as i64;
    let src = Summand::Differential;
    let mut b = ctx.operator(p, p + 1, sector, sigma, "d itself");
    put(&mut b, Comp::TT, Comp::TT, scalar(&ctx, sector.d_sphere(q).into()), src);
    put(&mut b, Comp::TN, Comp::TT, ctx.alpha().compose(&ctx.d), src);
    put(&mut b, Comp::TN, Comp::TN, scalar(&ctx, (-sector.d_sphere(q - 1)).into()), src);
    put(&mut b, Comp::NT, Comp::TT, ctx.inv_alpha().scale(-I * sigma), src);
    put(&mut b, Comp::NT, Comp::NT, scalar(&ctx, (-sector.d_sphere(q - 1)).into()), src);
    put(&mut b, Comp::NN, Comp::TN, ctx.inv_alpha().scale(-I * sigma), src);
    put(&mut b, Comp::NN, Comp::NT, ctx.d.compose(&ctx.alpha()).scale((-1.0).into()), src);
    put(&mut b, Comp::NN, Comp::NN, scalar(&ctx, sector.d_sphere(q - 2).into()), src);
    Ok(b)
}

/// Codifferential on `p`-forms with `d/dt` replaced by `-i sigma`.
pub fn assemble_delta<B: StaticBackground + ?Sized>(
    bg: &B,
    grid: &RadialGrid,
    p: usize,
    sector: AngularSector,
    sigma: Complex64,
    order: usize,
) -> Result<BlockRadialOperator> {
    check_sector(bg.dim(), p, &sector)?;
    let ctx = Ctx::new(bg, grid, order)?;
    let q = p as i64;
    let src = Summand::Codifferential;
    let mut b = ctx.operator(p, p.saturating_sub(1), sector, sigma, "delta itself");
    if p == 0 {
        return Ok(b);
    }
    let r2 = |s: f64| ctx.real(|_, r| s / (r * r));
    put(&mut b, Comp::TT, Comp::TT, r2(-sector.delta_sphere(q)), src);
    put(
        &mut b,
        Comp::TT,
        Comp::TN,
        ctx.inv_alpha().compose(&ctx.partial_star(q - 1)).compose(&ctx.alpha()).scale((-1.0).into()),
        src,
    );
    put(&mut b, Comp::TT, Comp::NT, ctx.inv_alpha().scale(I * sigma), src);
    put(&mut b, Comp::TN, Comp::TN, r2(sector.delta_sphere(q - 1)), src);
    put(&mut b, Comp::TN, Comp::NN, ctx.inv_alpha().scale(I * sigma), src);
    put(&mut b, Comp::NT, Comp::NT, r2(sector.delta_sphere(q - 1)), src);
    put(&mut b, Comp::NT, Comp::NN, ctx.partial_star(q - 2), src);
    put(&mut b, Comp::NN, Comp::NN, r2(-sector.delta_sphere(q - 2)), src);
    Ok(b)
}

/// Wave operator `d delta + delta d` on `p`-forms, assembled directly from
/// the three-summand form of `-r^2` times it, with `d/dt -> -i sigma`.
pub fn assemble_box<B: StaticBackground + ?Sized>(
    bg: &B,
    grid: &RadialGrid,
    p: usize,
    sector: AngularSector,
    sigma: Complex64,
    order: usize,
) -> Result<BlockRadialOperator> {
    check_sector(bg.dim(), p, &sector)?;
    let ctx = Ctx::new(bg, grid, order)?;
    let q = p as i64;
    let mut m = ctx.operator(p, p, sector, sigma, "box = -r^{-2} (angular + radial + time summands)");

    let ang = Summand::BoxAngular;
    let lap = |k: i64| scalar(&ctx, sector.laplacian(k).into());
    put(&mut m, Comp::TT, Comp::TT, lap(q), ang);
    put(&mut m, Comp::TN, Comp::TN, lap(q - 1), ang);
    put(&mut m, Comp::NT, Comp::NT, lap(q - 1), ang);
    put(&mut m, Comp::NN, Comp::NN, lap(q - 2), ang);
    let al = &ctx.alpha;
    let up = |k: i64| ctx.real(|i, r| -2.0 * sector.d_sphere(k) * al[i] * r);
    let down = |k: i64| ctx.real(|i, r| -2.0 * sector.delta_sphere(k) * al[i] / r);
    put(&mut m, Comp::TT, Comp::TN, up(q - 1), ang);
    put(&mut m, Comp::TN, Comp::TT, down(q), ang);
    put(&mut m, Comp::NT, Comp::NN, up(q - 2), ang);
    put(&mut m, Comp::NN, Comp::NT, down(q - 1), ang);
    let time = ctx.diag(|i, r| I * sigma * r * r * ctx.dmu[i] / ctx.mu[i]);
    put(&mut m, Comp::TN, Comp::NT, time.clone(), ang);
    put(&mut m, Comp::NT, Comp::TN, time, ang);

    let rad = Summand::BoxRadial;
    let r2 = ctx.real(|_, r| r * r);
    let mu = ctx.real(|i, _| ctx.mu[i]);
    let (a, ia, d) = (ctx.alpha(), ctx.inv_alpha(), &ctx.d);
    put(&mut m, Comp::TT, Comp::TT, r2.compose(&ia).compose(&ctx.partial_star(q)).compose(&mu).compose(d), rad);
    put(
        &mut m,
        Comp::TN,
        Comp::TN,
        r2.compose(&a).compose(d).compose(&ia).compose(&ctx.partial_star(q - 1)).compose(&a),
        rad,
    );
    put(&mut m, Comp::NT, Comp::NT, r2.compose(&ctx.partial_star(q - 1)).compose(d).compose(&a), rad);
    put(&mut m, Comp::NN, Comp::NN, r2.compose(d).compose(&a).compose(&ctx.partial_star(q - 2)), rad);

    let tim = Summand::BoxTime;
    let s2 = ctx.diag(|i, r| -sigma * sigma * r * r / ctx.mu[i]);
    for c in Comp::ALL {
        put(&mut m, c, c, s2.clone(), tim);
    }

    let factor = ctx.real(|_, r| -1.0 / (r * r));
    for o in Comp::ALL {
        for i in Comp::ALL {
            if let Some(e) = m.entries[o as usize][i as usize].take() {
                m.entries[o as usize][i as usize] = Some(factor.compose(&e));
            }
        }
    }
    Ok(m)
}

/// Fraction of grid points dropped at each end by [`annihilation_residual`].
pub const DEFAULT_HORIZON_BUFFER: f64 = 0.05;

/// Weighted discrete L2 norm of `op(state)`, with volume density
/// `alpha^{-1} r^{n-2}` and positive fiber weights `r^{-2q}`, over the grid
/// with 5% of the points dropped at each end.
pub fn annihilation_residual(op: &BlockRadialOperator, state: &FormSection4) -> Result<f64> {
    annihilation_residual_with_buffer(op, state, DEFAULT_HORIZON_BUFFER)
}

pub fn annihilation_residual_with_buffer(op: &BlockRadialOperator, state: &FormSection4, buffer: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&buffer) {
        return Err(Error::InvalidParameter(format!("horizon buffer {buffer} must lie in [0, 0.5)")));
    }
    let y = op.apply(state)?;
    let len = op.grid.len();
    let skip = (buffer * len as f64).ceil() as usize;
    let w = op.grid.quadrature_weights();
    let mut acc = 0.0;
    for c in Comp::ALL {
        if !y.has(c) {
            continue;
        }
        let q = c.sphere_degree(op.p_out) as i32;
        for i in skip..len - skip {
            let r = op.grid.r()[i];
            let weight = w[i] / op.alpha[i] * r.powi(op.n as i32 - 2) * r.powi(-2 * q);
            acc += weight * y.get(c)[i].norm_sqr();
        }
    }
    Ok(acc.sqrt())
}

//! Thinning simulation of the jump process and of the coupled pair.
//!
//! Jumps smaller than the cutoff `ε_sim` are replaced by their compensator
//! drift. Proposals arrive at rate `Λ = c^* ν(|z| >= ε_sim)` and are thinned
//! by the state-dependent coefficient (single process) or split into the five
//! branches of the coupled jump system (pair).

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::kernels::{Branch, CoefficientField, Cone, KernelBundle, LevyMeasureSpec};
use crate::math::{self, Point};
use crate::quadrature::{integrate_shell, Geometry, QuadratureConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// `ε_sim`: jumps below this size become drift.
    pub jump_cutoff: f64,
    /// Euler step for state-dependent compensator drift.
    pub drift_step: f64,
    pub horizon: f64,
    pub kappa: f64,
    pub master_seed: u64,
    /// Largest accepted `Λ · horizon`.
    pub max_expected_events: f64,
    pub log_events: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            jump_cutoff: 1e-2,
            drift_step: 1e-2,
            horizon: 1.0,
            kappa: 1.0,
            master_seed: 0,
            max_expected_events: 5e7,
            log_events: false,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.jump_cutoff > 0.0 && self.jump_cutoff < 1.0) {
            return Err(Error::param("sim.eps_sim", format!("{} not in (0, 1)", self.jump_cutoff)));
        }
        if !(self.drift_step > 0.0 && self.drift_step.is_finite()) {
            return Err(Error::param("sim.dt", "must be positive"));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::param("sim.t", "must be finite and nonnegative"));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::param("sim.kappa", format!("{} not in (0, 1]", self.kappa)));
        }
        if !(self.max_expected_events > 0.0) {
            return Err(Error::param("sim.max_events", "must be positive"));
        }
        Ok(())
    }
}

/// PRNG for one trajectory: ChaCha8 keyed by the master seed, with the
/// trajectory index as stream id.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Deterministic drift replacing the compensated jumps with `|z| < ε_sim`:
/// `b(x) = -∫_{ε_sim <= |z| <= 1} z c(x, z) q(z) dz`.
#[derive(Debug, Clone, PartialEq)]
pub enum CompensatorDrift {
    Zero,
    Constant(Point),
    /// `b(x) = -c(x) m` for coefficients that do not depend on `z`.
    Scaled(Point),
    /// Table coefficients: `b` is linear in `x_1` between the table nodes
    /// (and constant outside), so interpolating the node values is exact.
    Interpolated { nodes: Vec<f64>, values: Vec<Point> },
}

impl CompensatorDrift {
    pub fn new(spec: &LevyMeasureSpec, field: &CoefficientField, eps_sim: f64, cfg: &QuadratureConfig) -> Result<Self> {
        if !(eps_sim > 0.0 && eps_sim < 1.0) {
            return Err(Error::param("sim.eps_sim", format!("{eps_sim} not in (0, 1)")));
        }
        let d = spec.dim();
        if field.is_z_independent() {
            let m = spec.first_moment_vector(eps_sim, 1.0);
            if m.iter().all(|&c| c == 0.0) {
                return Ok(CompensatorDrift::Zero);
            }
            if field.is_x_independent() {
                let c = field.x_part(&math::zeros(d));
                return Ok(CompensatorDrift::Constant(math::scale(&m, -c)));
            }
            return Ok(CompensatorDrift::Scaled(m));
        }
        let nodes = field.x_nodes();
        let mut values = Vec::with_capacity(nodes.len());
        for &n in &nodes {
            let mut x = math::zeros(d);
            x[0] = n;
            values.push(drift_by_quadrature(spec, field, &x, eps_sim, cfg)?);
        }
        Ok(CompensatorDrift::Interpolated { nodes, values })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, CompensatorDrift::Zero)
    }

    /// True when the drift varies with the state.
    pub fn is_state_dependent(&self) -> bool {
        matches!(self, CompensatorDrift::Scaled(_) | CompensatorDrift::Interpolated { .. })
    }

    pub fn at(&self, field: &CoefficientField, x: &[f64]) -> Point {
        match self {
            CompensatorDrift::Zero => math::zeros(x.len()),
            CompensatorDrift::Constant(b) => b.clone(),
            CompensatorDrift::Scaled(m) => math::scale(m, -field.x_part(x)),
            CompensatorDrift::Interpolated { nodes, values } => {
                let n = nodes.len();
                if n == 1 || x[0] <= nodes[0] {
                    return values[0].clone();
                }
                if x[0] >= nodes[n - 1] {
                    return values[n - 1].clone();
                }
                let step = (nodes[n - 1] - nodes[0]) / (n - 1) as f64;
                let s = (x[0] - nodes[0]) / step;
                let i = (math::floor(s) as usize).min(n - 2);
                let f = s - i as f64;
                let mut out = math::scale(&values[i], 1.0 - f);
                for (o, v) in out.iter_mut().zip(values[i + 1].iter()) {
                    *o += f * v;
                }
                out
            }
        }
    }
}

fn drift_by_quadrature(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    x: &[f64],
    eps_sim: f64,
    cfg: &QuadratureConfig,
) -> Result<Point> {
    let d = spec.dim();
    let outer = spec.truncation().min(1.0);
    let mut out = math::zeros(d);
    if outer <= eps_sim {
        return Ok(out);
    }
    let mut g = Geometry::new(d);
    let e1 = math::unit(d, 0);
    for k in field.z_kinks() {
        g.add_plane(&e1, k);
    }
    if let Some(c) = spec.cone_restriction() {
        g.add_cone(&math::zeros(d), c.axis(), c.delta());
    }
    for (k, o) in out.iter_mut().enumerate() {
        let est = integrate_shell(&g, eps_sim, outer, cfg.budget(), |z| {
            let q = spec.density(z);
            if q == 0.0 {
                0.0
            } else {
                z[k] * field.value(x, z) * q
            }
        })?;
        *o = -est.value;
    }
    Ok(out)
}

/// `compensator_drift`: `-∫_{ε_sim <= |z| <= 1} z c(x, z) q(z) dz`.
pub fn compensator_drift(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    x: &[f64],
    eps_sim: f64,
    cfg: &QuadratureConfig,
) -> Result<Point> {
    if x.len() != spec.dim() || field.dim() != spec.dim() {
        return Err(Error::Precondition("dimension mismatch in compensator_drift".into()));
    }
    if !field.is_z_independent() {
        if !(eps_sim > 0.0 && eps_sim < 1.0) {
            return Err(Error::param("sim.eps_sim", format!("{eps_sim} not in (0, 1)")));
        }
        return drift_by_quadrature(spec, field, x, eps_sim, cfg);
    }
    Ok(CompensatorDrift::new(spec, field, eps_sim, cfg)?.at(field, x))
}

/// Draws `z` from `q` restricted to `|z| >= ε_sim` and normalized: the radius
/// by inverse transform of `ρ^{-1-α}`, the direction uniformly on the sphere
/// or the cone cap.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    dim: usize,
    alpha: f64,
    lo: f64,
    span: f64,
    cone: Option<Cone>,
}

impl JumpSampler {
    pub fn new(spec: &LevyMeasureSpec, eps_sim: f64) -> Self {
        let a = spec.alpha();
        let r = spec.truncation();
        let lo = math::powf(eps_sim, -a);
        let hi = if r.is_finite() { math::powf(r, -a) } else { 0.0 };
        JumpSampler {
            dim: spec.dim(),
            alpha: a,
            lo,
            span: lo - hi,
            cone: spec.cone_restriction().cloned(),
        }
    }

    pub fn radius<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        math::powf(self.lo - u * self.span, -1.0 / self.alpha)
    }

    pub fn direction<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        let d = self.dim;
        if d == 1 {
            return Ok(match &self.cone {
                Some(c) => Point::from_slice(c.axis()),
                None => Point::from_slice(&[if rng.random::<bool>() { 1.0 } else { -1.0 }]),
            });
        }
        for _ in 0..1_000_000 {
            let e = if d == 2 {
                let t = math::TAU * rng.random::<f64>();
                Point::from_slice(&[math::cos(t), math::sin(t)])
            } else {
                let g: Point = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let n = math::norm(&g);
                if n == 0.0 {
                    continue;
                }
                math::scale(&g, 1.0 / n)
            };
            if self.cone.as_ref().map_or(true, |c| c.contains(&e)) {
                return Ok(e);
            }
        }
        Err(Error::Internal("cone direction rejection sampler did not terminate".into()))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        let r = self.radius(rng);
        let e = self.direction(rng)?;
        Ok(math::scale(&e, r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// A jump of the coupled system along the given branch.
    Branch(Branch),
    /// Proposal discarded by thinning.
    Phantom,
    /// Accepted jump of a single (or merged) trajectory.
    Jump,
}

impl EventKind {
    /// `1..=5` for branches, `0` for phantoms, `6` for single-process jumps.
    pub fn code(self) -> u8 {
        match self {
            EventKind::Branch(b) => b.index() as u8,
            EventKind::Phantom => 0,
            EventKind::Jump => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub z: Point,
    pub pre_x: Point,
    pub pre_y: Point,
    pub post_x: Point,
    pub post_y: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub x: Point,
    pub y: Point,
    /// `T <= time`.
    pub coupled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinglePath {
    pub stream: u64,
    pub endpoint: Point,
    /// States at the requested observation times (`y` mirrors `x`).
    pub snapshots: Vec<Snapshot>,
    pub events: Vec<Event>,
    pub proposals: u64,
    pub accepted: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPath {
    pub stream: u64,
    pub coupling_time: Option<f64>,
    pub endpoint_x: Point,
    pub endpoint_y: Point,
    pub snapshots: Vec<Snapshot>,
    pub events: Vec<Event>,
    pub proposals: u64,
    /// Events per branch `1..=5` before coupling.
    pub branch_counts: [u64; 5],
}

/// Precomputed rate, sampler and compensator for one `(spec, field, params)`.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    spec: &'a LevyMeasureSpec,
    field: &'a CoefficientField,
    params: SimParams,
    rate: f64,
    bias: f64,
    sampler: JumpSampler,
    drift: CompensatorDrift,
}

impl<'a> Simulator<'a> {
    pub fn new(
        spec: &'a LevyMeasureSpec,
        field: &'a CoefficientField,
        params: SimParams,
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        params.validate()?;
        if field.dim() != spec.dim() {
            return Err(Error::Precondition(format!(
                "field dimension {} differs from measure dimension {}",
                field.dim(),
                spec.dim()
            )));
        }
        let rate = field.upper() * spec.tail_mass(params.jump_cutoff);
        if !rate.is_finite() {
            return Err(Error::param("sim.eps_sim", "event rate is infinite"));
        }
        let expected = rate * params.horizon;
        if expected > params.max_expected_events {
            return Err(Error::RateOverflow {
                expected,
                budget: params.max_expected_events,
            });
        }
        Ok(Simulator {
            spec,
            field,
            params,
            rate,
            bias: field.upper() * spec.ball_moment(2.0, params.jump_cutoff),
            sampler: JumpSampler::new(spec, params.jump_cutoff),
            drift: CompensatorDrift::new(spec, field, params.jump_cutoff, cfg)?,
        })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }
    /// `Λ = c^* ν(|z| >= ε_sim)`
    pub fn rate(&self) -> f64 {
        self.rate
    }
    /// `B(ε_sim) = c^* ∫_{|z| < ε_sim} |z|^2 q(z) dz`
    pub fn bias_proxy(&self) -> f64 {
        self.bias
    }
    pub fn compensator(&self) -> &CompensatorDrift {
        &self.drift
    }

    /// Moves `x` along the compensator drift for a duration `dt`.
    fn advance(&self, x: &mut Point, dt: f64) {
        if dt <= 0.0 {
            return;
        }
        match &self.drift {
            CompensatorDrift::Zero => {}
            CompensatorDrift::Constant(b) => {
                for (xi, bi) in x.iter_mut().zip(b.iter()) {
                    *xi += bi * dt;
                }
            }
            _ => {
                let n = math::ceil(dt / self.params.drift_step).max(1.0) as usize;
                let h = dt / n as f64;
                for _ in 0..n {
                    let b = self.drift.at(self.field, x);
                    for (xi, bi) in x.iter_mut().zip(b.iter()) {
                        *xi += bi * h;
                    }
                }
            }
        }
    }

    fn check_times(&self, times: &[f64]) -> Result<()> {
        let mut prev = 0.0;
        for &t in times {
            if !(t >= prev && t <= self.params.horizon) {
                return Err(Error::param(
                    "times",
                    format!("observation times must be nondecreasing in [0, {}]", self.params.horizon),
                ));
            }
            prev = t;
        }
        Ok(())
    }

    fn next_gap(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.rate == 0.0 {
            return f64::INFINITY;
        }
        let e: f64 = rng.sample(Exp1);
        e / self.rate
    }

    /// One trajectory of the single process from `x0`, observed at `times`.
    pub fn single(&self, x0: &[f64], stream: u64, times: &[f64]) -> Result<SinglePath> {
        if x0.len() != self.spec.dim() {
            return Err(Error::Precondition("x0 has the wrong dimension".into()));
        }
        self.check_times(times)?;
        let mut rng = stream_rng(self.params.master_seed, stream);
        let mut path = SinglePath {
            stream,
            endpoint: Point::from_slice(x0),
            snapshots: Vec::with_capacity(times.len()),
            events: Vec::new(),
            proposals: 0,
            accepted: 0,
        };
        let mut x = Point::from_slice(x0);
        let mut t = 0.0;
        let mut obs = 0;
        let horizon = self.params.horizon;
        let c_max = self.field.upper();
        loop {
            let t_next = t + self.next_gap(&mut rng);
            while obs < times.len() && times[obs] < t_next {
                self.advance(&mut x, times[obs] - t);
                t = times[obs];
                path.snapshots.push(Snapshot {
                    time: t,
                    x: x.clone(),
                    y: x.clone(),
                    coupled: true,
                });
                obs += 1;
            }
            if t_next > horizon {
                self.advance(&mut x, horizon - t);
                break;
            }
            self.advance(&mut x, t_next - t);
            t = t_next;
            path.proposals += 1;
            let z = self.sampler.sample(&mut rng)?;
            let u: f64 = rng.random();
            let accept = u * c_max < self.field.value(&x, &z);
            let pre = x.clone();
            if accept {
                path.accepted += 1;
                for (xi, zi) in x.iter_mut().zip(z.iter()) {
                    *xi += zi;
                }
            }
            if self.params.log_events {
                path.events.push(Event {
                    time: t,
                    kind: if accept { EventKind::Jump } else { EventKind::Phantom },
                    z,
                    pre_y: pre.clone(),
                    pre_x: pre,
                    post_x: x.clone(),
                    post_y: x.clone(),
                });
            }
        }
        path.endpoint = x;
        Ok(path)
    }

    /// One trajectory of the coupled pair from `(x0, y0)`, observed at `times`.
    pub fn coupled(&self, x0: &[f64], y0: &[f64], stream: u64, times: &[f64]) -> Result<CoupledPath> {
        let d = self.spec.dim();
        if x0.len() != d || y0.len() != d {
            return Err(Error::Precondition("x0, y0 have the wrong dimension".into()));
        }
        self.check_times(times)?;
        let mut rng = stream_rng(self.params.master_seed, stream);
        let kappa = self.params.kappa;
        let horizon = self.params.horizon;
        let c_max = self.field.upper();
        let mut path = CoupledPath {
            stream,
            coupling_time: if x0 == y0 { Some(0.0) } else { None },
            endpoint_x: Point::from_slice(x0),
            endpoint_y: Point::from_slice(y0),
            snapshots: Vec::with_capacity(times.len()),
            events: Vec::new(),
            proposals: 0,
            branch_counts: [0; 5],
        };
        let mut x = Point::from_slice(x0);
        let mut y = Point::from_slice(y0);
        let mut t = 0.0;
        let mut obs = 0;
        loop {
            let merged = path.coupling_time.is_some();
            let t_next = t + self.next_gap(&mut rng);
            while obs < times.len() && times[obs] < t_next {
                self.advance(&mut x, times[obs] - t);
                if merged {
                    y = x.clone();
                } else {
                    self.advance(&mut y, times[obs] - t);
                }
                t = times[obs];
                path.snapshots.push(Snapshot {
                    time: t,
                    x: x.clone(),
                    y: y.clone(),
                    coupled: merged,
                });
                obs += 1;
            }
            if t_next > horizon {
                self.advance(&mut x, horizon - t);
                if merged {
                    y = x.clone();
                } else {
                    self.advance(&mut y, horizon - t);
                }
                break;
            }
            self.advance(&mut x, t_next - t);
            if merged {
                y = x.clone();
            } else {
                self.advance(&mut y, t_next - t);
            }
            t = t_next;
            path.proposals += 1;
            let z = self.sampler.sample(&mut rng)?;
            let u: f64 = rng.random();
            let (pre_x, pre_y) = (x.clone(), y.clone());
            let kind = if merged {
                if u * c_max < self.field.value(&x, &z) {
                    for (xi, zi) in x.iter_mut().zip(z.iter()) {
                        *xi += zi;
                    }
                    y = x.clone();
                    EventKind::Jump
                } else {
                    EventKind::Phantom
                }
            } else {
                let bundle = KernelBundle::new(self.spec, self.field, &x, &y, kappa)?;
                let dens = bundle.densities_unchecked(&z);
                let level = u * c_max * self.spec.density(&z);
                let mut acc = 0.0;
                let mut chosen = None;
                for b in Branch::ALL {
                    acc += dens[b.index() - 1];
                    if level < acc {
                        chosen = Some(b);
                        break;
                    }
                }
                match chosen {
                    None => EventKind::Phantom,
                    Some(b) => {
                        let (jx, jy) = b.jumps(&z, bundle.displacement());
                        let close = math::norm(&math::sub(&x, &y)) <= kappa;
                        x = math::add(&x, &jx);
                        if b == Branch::Toward && close {
                            y = x.clone();
                            path.coupling_time = Some(t);
                        } else {
                            y = math::add(&y, &jy);
                        }
                        path.branch_counts[b.index() - 1] += 1;
                        EventKind::Branch(b)
                    }
                }
            };
            if self.params.log_events {
                path.events.push(Event {
                    time: t,
                    kind,
                    z,
                    pre_x,
                    pre_y,
                    post_x: x.clone(),
                    post_y: y.clone(),
                });
            }
        }
        path.endpoint_x = x;
        path.endpoint_y = y;
        Ok(path)
    }
}

/// Single trajectory to the horizon.
pub fn simulate_single(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    x0: &[f64],
    params: &SimParams,
    stream: u64,
) -> Result<SinglePath> {
    Simulator::new(spec, field, *params, &QuadratureConfig::default())?.single(x0, stream, &[])
}

/// Coupled trajectory to the horizon.
pub fn simulate_coupled(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    x0: &[f64],
    y0: &[f64],
    params: &SimParams,
    stream: u64,
) -> Result<CoupledPath> {
    Simulator::new(spec, field, *params, &QuadratureConfig::default())?.coupled(x0, y0, stream, &[])
}

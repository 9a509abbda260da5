//! Globally adaptive Gauss-Kronrod (7/15) integration over a union of
//! segments.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::{Error, Result};

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
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Value of the integrand at a node. `abs` is `|value|` unless the sample is
/// itself an integral, and `err` is the error carried by that integral.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Sample {
    pub value: f64,
    pub abs: f64,
    pub err: f64,
}

impl From<f64> for Sample {
    #[inline]
    fn from(v: f64) -> Self {
        Sample {
            value: v,
            abs: v.abs(),
            err: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Estimate {
    pub value: f64,
    pub error: f64,
    /// `∫ |F|`
    pub abs: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Budget {
    pub rel_tol: f64,
    pub abs_floor: f64,
    pub max_subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    tag: usize,
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then(other.tag.cmp(&self.tag))
            .then(other.a.total_cmp(&self.a))
    }
}

fn rule<F>(f: &mut F, tag: usize, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(usize, f64) -> Result<Sample>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [Sample::default(); 15];
    for k in 0..7 {
        fv[2 * k] = f(tag, c - h * XGK[k])?;
        fv[2 * k + 1] = f(tag, c + h * XGK[k])?;
    }
    fv[14] = f(tag, c)?;
    let mut kron = WGK[7] * fv[14].value;
    let mut gauss = WG[3] * fv[14].value;
    let mut abs = WGK[7] * fv[14].abs;
    let mut inner_err = WGK[7] * fv[14].err;
    for k in 0..7 {
        let (lo, hi) = (fv[2 * k], fv[2 * k + 1]);
        kron += WGK[k] * (lo.value + hi.value);
        abs += WGK[k] * (lo.abs + hi.abs);
        inner_err += WGK[k] * (lo.err + hi.err);
        if k % 2 == 1 {
            gauss += WG[k / 2] * (lo.value + hi.value);
        }
    }
    let mean = 0.5 * kron;
    let mut asc = WGK[7] * (fv[14].value - mean).abs();
    for k in 0..7 {
        asc += WGK[k] * ((fv[2 * k].value - mean).abs() + (fv[2 * k + 1].value - mean).abs());
    }
    let (kron, abs, asc) = (kron * h, abs * h, asc * h.abs());
    let mut err = (kron - gauss * h).abs();
    if asc != 0.0 && err != 0.0 {
        let scaled = libm::pow(200.0 * err / asc, 1.5);
        err = if scaled < 1.0 { asc * scaled } else { asc };
    }
    let round = 50.0 * f64::EPSILON * abs.abs();
    if round > err {
        err = round;
    }
    Ok(Panel {
        tag,
        a,
        b,
        value: kron,
        err: err + inner_err * h.abs(),
        abs: abs.abs(),
    })
}

/// Integrates `f(tag, t)` over the segments `(tag, a, b)` until the summed
/// error estimate is below `max(rel_tol · ∫|f|, abs_floor)`.
pub(crate) fn integrate<F>(segments: &[(usize, f64, f64)], mut f: F, budget: Budget) -> Result<Estimate>
where
    F: FnMut(usize, f64) -> Result<Sample>,
{
    let mut heap = BinaryHeap::with_capacity(segments.len() * 2 + 16);
    let mut frozen: Vec<Panel> = Vec::new();
    let mut evaluations = 0usize;
    for &(tag, a, b) in segments {
        if b > a {
            heap.push(rule(&mut f, tag, a, b)?);
            evaluations += 15;
        }
    }
    let mut subdivisions = 0usize;
    let totals = |heap: &BinaryHeap<Panel>, frozen: &[Panel]| {
        let mut err = 0.0;
        let mut abs = 0.0;
        for p in heap.iter().chain(frozen.iter()) {
            err += p.err;
            abs += p.abs;
        }
        (err, abs)
    };
    let (mut err, mut abs) = totals(&heap, &frozen);
    loop {
        let target = (budget.rel_tol * abs).max(budget.abs_floor);
        if err <= target {
            break;
        }
        if subdivisions >= budget.max_subdivisions || heap.is_empty() {
            // recompute once to rule out accumulated drift
            let (e, a) = totals(&heap, &frozen);
            if e <= (budget.rel_tol * a).max(budget.abs_floor) {
                break;
            }
            return Err(Error::ToleranceNotMet {
                achieved: e,
                target: (budget.rel_tol * a).max(budget.abs_floor),
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap is nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) <= 1e-14 * worst.a.abs().max(worst.b.abs()) {
            frozen.push(worst);
            continue;
        }
        let left = rule(&mut f, worst.tag, worst.a, mid)?;
        let right = rule(&mut f, worst.tag, mid, worst.b)?;
        evaluations += 30;
        subdivisions += 1;
        err += left.err + right.err - worst.err;
        abs += left.abs + right.abs - worst.abs;
        heap.push(left);
        heap.push(right);
        if subdivisions % 128 == 0 {
            (err, abs) = totals(&heap, &frozen);
        }
    }
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(frozen);
    panels.sort_by(|p, q| p.tag.cmp(&q.tag).then(p.a.total_cmp(&q.a)));
    let mut est = Estimate {
        evaluations,
        ..Estimate::default()
    };
    for p in &panels {
        est.value += p.value;
        est.error += p.err;
        est.abs += p.abs;
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget(tol: f64) -> Budget {
        Budget {
            rel_tol: tol,
            abs_floor: 1e-300,
            max_subdivisions: 2000,
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let e = integrate(&[(0, 0.0, 1.0)], |_, t| Ok(Sample::from(t.powi(20))), budget(1e-13)).unwrap();
        assert!((e.value - 1.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn handles_endpoint_singularity() {
        // ∫_0^1 t^{-1/2} dt = 2
        let e = integrate(&[(0, 0.0, 1.0)], |_, t| Ok(Sample::from(1.0 / t.sqrt())), budget(1e-10)).unwrap();
        assert!((e.value - 2.0).abs() < 1e-9, "{}", e.value);
        assert!(e.error < 1e-9);
    }

    #[test]
    fn reports_exhausted_budget() {
        let b = Budget {
            rel_tol: 1e-14,
            abs_floor: 1e-300,
            max_subdivisions: 3,
        };
        let r = integrate(&[(0, 0.0, 1.0)], |_, t| Ok(Sample::from((1.0 / t).sin())), b);
        assert!(matches!(r, Err(Error::ToleranceNotMet { .. })));
    }

    #[test]
    fn multiple_segments_with_tags() {
        let e = integrate(
            &[(0, 0.0, 1.0), (1, 0.0, 2.0)],
            |tag, t| Ok(Sample::from(if tag == 0 { t } else { 1.0 })),
            budget(1e-12),
        )
        .unwrap();
        assert!((e.value - 2.5).abs() < 1e-14);
    }
}

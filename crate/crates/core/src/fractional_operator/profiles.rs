use super::quadrature::{Breakpoint, Profile1d, Profile2d, Tail};

/// A constant function.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl Profile1d for Constant {
    fn value(&self, _x: f64) -> f64 {
        self.0
    }
    fn tails(&self) -> Option<(Tail, Tail)> {
        Some((Tail::constant(self.0), Tail::constant(self.0)))
    }
    fn extent(&self) -> (f64, f64) {
        (0.0, 0.0)
    }
    fn feature_scale(&self) -> f64 {
        1.0
    }
    fn linear_on(&self, _a: f64, _b: f64) -> Option<(f64, f64)> {
        Some((self.0, 0.0))
    }
}

impl Profile2d for Constant {
    fn value_at(&self, _p: [f64; 2]) -> f64 {
        self.0
    }
    fn tail(&self) -> Option<Tail> {
        Some(Tail::constant(self.0))
    }
    fn extent(&self) -> f64 {
        0.0
    }
    fn feature_scale(&self) -> f64 {
        1.0
    }
}

/// `amplitude * exp(-|x - center|² / (2 width²))`.
#[derive(Debug, Clone, Copy)]
pub struct Gaussian {
    pub center: [f64; 2],
    pub width: f64,
    pub amplitude: f64,
}

impl Gaussian {
    const REACH: f64 = 9.0;

    fn eval(&self, d2: f64) -> f64 {
        self.amplitude * (-0.5 * d2 / (self.width * self.width)).exp()
    }
}

impl Profile1d for Gaussian {
    fn value(&self, x: f64) -> f64 {
        let d = x - self.center[0];
        self.eval(d * d)
    }
    fn tails(&self) -> Option<(Tail, Tail)> {
        Some((Tail::constant(0.0), Tail::constant(0.0)))
    }
    fn extent(&self) -> (f64, f64) {
        let r = Self::REACH * self.width;
        (self.center[0] - r, self.center[0] + r)
    }
    fn feature_scale(&self) -> f64 {
        self.width
    }
}

impl Profile2d for Gaussian {
    fn value_at(&self, p: [f64; 2]) -> f64 {
        let (a, b) = (p[0] - self.center[0], p[1] - self.center[1]);
        self.eval(a * a + b * b)
    }
    fn tail(&self) -> Option<Tail> {
        Some(Tail::constant(0.0))
    }
    fn extent(&self) -> f64 {
        self.center[0].hypot(self.center[1]) + Self::REACH * self.width
    }
    fn feature_scale(&self) -> f64 {
        self.width
    }
}

/// Continuous piecewise-linear function through `knots`, constant beyond
/// the first and last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    /// Knots must have strictly increasing abscissae.
    pub fn new(knots: Vec<(f64, f64)>) -> Option<Self> {
        if knots.is_empty() || knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return None;
        }
        Some(Self { knots })
    }

    /// `1` up to `a1`, linear down to `theta` at `a2`, `theta` beyond.
    pub fn ramp(a1: f64, a2: f64, theta: f64) -> Option<Self> {
        Self::new(vec![(a1, 1.0), (a2, theta)])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Index `i` such that `x` lies in segment `[knot i-1, knot i]`
    /// (0: left of the first knot, len: right of the last).
    fn segment(&self, x: f64) -> usize {
        self.knots.partition_point(|k| k.0 < x)
    }

    fn slope_of(&self, seg: usize) -> f64 {
        if seg == 0 || seg == self.knots.len() {
            0.0
        } else {
            let (a, b) = (self.knots[seg - 1], self.knots[seg]);
            (b.1 - a.1) / (b.0 - a.0)
        }
    }
}

impl Profile1d for PiecewiseLinear {
    fn value(&self, x: f64) -> f64 {
        let k = &self.knots;
        let i = self.segment(x);
        if i == 0 {
            k[0].1
        } else if i == k.len() {
            k[k.len() - 1].1
        } else {
            let (a, b) = (k[i - 1], k[i]);
            a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
        }
    }
    fn tails(&self) -> Option<(Tail, Tail)> {
        Some((
            Tail::constant(self.knots[0].1),
            Tail::constant(self.knots[self.knots.len() - 1].1),
        ))
    }
    fn extent(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }
    fn feature_scale(&self) -> f64 {
        // Between knots the profile is affine; no smooth structure to resolve.
        let (lo, hi) = self.extent();
        (hi - lo).max(1.0)
    }
    fn breakpoints(&self) -> Vec<Breakpoint> {
        (0..self.knots.len())
            .map(|i| {
                let kink = (self.slope_of(i) - self.slope_of(i + 1)).abs() > 0.0;
                Breakpoint { at: self.knots[i].0, kink }
            })
            .collect()
    }
    fn linear_on(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        // [a, b] must lie within one closed segment.
        let i = self.segment(a);
        let left_ok = i == 0 || a >= self.knots[i - 1].0;
        let j = if i < self.knots.len() && self.knots[i].0 == a { i + 1 } else { i };
        let right_ok = j == self.knots.len() || b <= self.knots[j].0;
        if left_ok && right_ok {
            Some((self.value(a), self.slope_of(j)))
        } else {
            None
        }
    }
}

/// A function of the radius `|x|`.
pub trait RadialShape: Sync {
    fn value(&self, r: f64) -> f64;
    fn tail(&self) -> Option<Tail>;
    fn extent(&self) -> f64;
    fn feature_scale(&self) -> f64;
    /// Radii where the shape is not smooth or changes regime.
    fn breakpoints(&self) -> Vec<Breakpoint> {
        Vec::new()
    }
    /// Whether the shape is constant for radii in `[r0, r1]`.
    fn constant_on(&self, _r0: f64, _r1: f64) -> bool {
        false
    }
}

/// Lifts a radial shape to the line (even extension) and the plane.
#[derive(Debug, Clone)]
pub struct Radial<S>(pub S);

impl<S: RadialShape> Profile1d for Radial<S> {
    fn value(&self, x: f64) -> f64 {
        self.0.value(x.abs())
    }
    fn tails(&self) -> Option<(Tail, Tail)> {
        self.0.tail().map(|t| (t, t))
    }
    fn extent(&self) -> (f64, f64) {
        let e = self.0.extent();
        (-e, e)
    }
    fn feature_scale(&self) -> f64 {
        self.0.feature_scale()
    }
    fn breakpoints(&self) -> Vec<Breakpoint> {
        let mut out = Vec::new();
        for b in self.0.breakpoints() {
            if b.at > 0.0 {
                out.push(Breakpoint { at: -b.at, kink: b.kink });
            }
            out.push(b);
        }
        out.sort_by(|a, b| a.at.partial_cmp(&b.at).unwrap());
        out
    }
}

impl<S: RadialShape> Profile2d for Radial<S> {
    fn value_at(&self, p: [f64; 2]) -> f64 {
        self.0.value(p[0].hypot(p[1]))
    }
    fn tail(&self) -> Option<Tail> {
        self.0.tail()
    }
    fn extent(&self) -> f64 {
        self.0.extent()
    }
    fn feature_scale(&self) -> f64 {
        self.0.feature_scale()
    }
    fn structure_radii(&self) -> Vec<Breakpoint> {
        self.0.breakpoints().into_iter().filter(|b| b.at > 0.0).collect()
    }
    fn is_radial(&self) -> bool {
        true
    }
    fn constant_on_annulus(&self, r0: f64, r1: f64) -> bool {
        self.0.constant_on(r0, r1)
    }
}

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::numerics::RandomStream;

/// A right-continuous piecewise-constant path with finitely many jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepPath {
    pub t_start: f64,
    pub t_end: f64,
    pub x0: f64,
    /// Strictly increasing, inside `(t_start, t_end]`.
    pub jump_times: Vec<f64>,
    /// State after each jump.
    pub states: Vec<f64>,
}

impl StepPath {
    pub fn constant(x0: f64, t_start: f64, t_end: f64) -> Self {
        StepPath {
            t_start,
            t_end,
            x0,
            jump_times: Vec::new(),
            states: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::param("path", reason));
        if !(self.t_start < self.t_end) {
            return bad(format!("empty time span [{}, {}]", self.t_start, self.t_end));
        }
        if self.jump_times.len() != self.states.len() {
            return bad("one state per jump time is required".into());
        }
        let mut prev = self.t_start;
        for &t in &self.jump_times {
            if !(t > prev && t <= self.t_end) {
                return bad(format!("jump time {t} out of order or outside the span"));
            }
            prev = t;
        }
        if !self.x0.is_finite() || self.states.iter().any(|x| !x.is_finite()) {
            return bad("states must be finite".into());
        }
        Ok(())
    }

    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        if k == 0 {
            self.x0
        } else {
            self.states[k - 1]
        }
    }

    pub fn terminal(&self) -> f64 {
        self.states.last().copied().unwrap_or(self.x0)
    }

    /// `sup_s |Y_s|` over the span.
    pub fn sup_abs(&self) -> f64 {
        self.states.iter().fold(self.x0.abs(), |m, x| m.max(x.abs()))
    }

    /// `(start, end, state)` for each constant piece.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let n = self.jump_times.len();
        (0..=n).map(move |k| {
            let a = if k == 0 { self.t_start } else { self.jump_times[k - 1] };
            let b = if k == n { self.t_end } else { self.jump_times[k] };
            let x = if k == 0 { self.x0 } else { self.states[k - 1] };
            (a, b, x)
        })
    }

    /// The path restricted to `[a, b] ⊂ [t_start, t_end]`.
    pub fn restrict(&self, a: f64, b: f64) -> Result<StepPath> {
        if !(self.t_start <= a && a < b && b <= self.t_end) {
            return Err(Error::param(
                "span",
                format!("[{a}, {b}] not inside [{}, {}]", self.t_start, self.t_end),
            ));
        }
        let mut p = StepPath::constant(self.state_at(a), a, b);
        for (&t, &x) in self.jump_times.iter().zip(&self.states) {
            if t > a && t <= b {
                p.jump_times.push(t);
                p.states.push(x);
            }
        }
        Ok(p)
    }

    /// CSV `time,state`: the start, one row per jump and the end.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,state\n");
        let _ = writeln!(s, "{},{}", self.t_start, self.x0);
        for (t, x) in self.jump_times.iter().zip(&self.states) {
            let _ = writeln!(s, "{t},{x}");
        }
        let _ = writeln!(s, "{},{}", self.t_end, self.terminal());
        s
    }
}

/// A jump of the normalised truncated law: sign uniform, magnitude `ε/U`.
pub(crate) fn draw_jump<R: Rng + ?Sized>(epsilon: f64, rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    let magnitude = epsilon / u;
    if rng.random::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

pub(crate) fn check_span(t_span: (f64, f64)) -> Result<()> {
    if !(t_span.0.is_finite() && t_span.1.is_finite() && t_span.0 < t_span.1) {
        return Err(Error::param("t_span", format!("need t_start < t_end, got {t_span:?}")));
    }
    Ok(())
}

/// Walks the free step process and hands every jump `(t, new_state)` to `visit`.
pub(crate) fn walk_free<R: Rng + ?Sized>(
    epsilon: f64,
    x0: f64,
    t_span: (f64, f64),
    rng: &mut R,
    mut visit: impl FnMut(f64, f64),
) -> f64 {
    let clock = Exp::new(2.0 / (PI * epsilon)).expect("positive rate");
    let mut t = t_span.0;
    let mut x = x0;
    loop {
        t += clock.sample(rng);
        if t > t_span.1 {
            return x;
        }
        x += draw_jump(epsilon, rng);
        visit(t, x);
    }
}

/// A path of the free step process `Y^ε`: Poisson jump times of rate
/// `2/(πε)` and i.i.d. jumps with density `q_ε·πε/2`.
pub fn sample_free_path(epsilon: f64, x0: f64, t_span: (f64, f64), stream: RandomStream) -> Result<StepPath> {
    require_positive("epsilon", epsilon)?;
    check_span(t_span)?;
    let mut rng = stream.rng();
    let mut path = StepPath::constant(x0, t_span.0, t_span.1);
    walk_free(epsilon, x0, t_span, &mut rng, |t, x| {
        path.jump_times.push(t);
        path.states.push(x);
    });
    Ok(path)
}

//! Curves `ξ: [0, 1] → ℝ^p` in parameter space.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Endpoint tolerance used by [`ParameterPath::is_loop`].
pub const LOOP_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    /// Nodes joined by straight segments; `knots` strictly increase from 0 to 1.
    PiecewiseLinear { knots: Vec<f64>, nodes: Vec<Vec<f64>> },
    /// `center + Σ_k a_k cos(2πkt) + b_k sin(2πkt)` per axis;
    /// `harmonics[axis][k-1] = [a_k, b_k]`.
    FourierLoop {
        center: Vec<f64>,
        harmonics: Vec<Vec<[f64; 2]>>,
    },
}

/// Text form of a path: `{kind, p, nodes|harmonics, ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathConfig {
    PiecewiseLinear {
        p: usize,
        nodes: Vec<Vec<f64>>,
        /// Defaults to uniformly spaced knots.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        knots: Option<Vec<f64>>,
        #[serde(default = "unit_exponent")]
        schedule_exponent: f64,
    },
    FourierLoop {
        p: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        harmonics: Vec<Vec<[f64; 2]>>,
        #[serde(default = "unit_exponent")]
        schedule_exponent: f64,
    },
}

fn unit_exponent() -> f64 {
    1.0
}

/// A parameter-space curve with schedule `t ↦ base(t^exponent)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterPath {
    p: usize,
    shape: Shape,
    exponent: f64,
}

impl ParameterPath {
    /// Straight segment from `a` to `b`.
    pub fn line(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::piecewise_linear(vec![a, b], None)
    }

    pub fn piecewise_linear(nodes: Vec<Vec<f64>>, knots: Option<Vec<f64>>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidConfig(
                "piecewise-linear path needs at least two nodes".into(),
            ));
        }
        let p = nodes[0].len();
        if p == 0 {
            return Err(Error::InvalidConfig("parameter dimension p must be >= 1".into()));
        }
        for n in &nodes {
            check_dim("path node", p, n.len())?;
            if n.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig("non-finite path node".into()));
            }
        }
        let segs = nodes.len() - 1;
        let knots = match knots {
            Some(k) => {
                check_dim("knot count", nodes.len(), k.len())?;
                if k[0] != 0.0 || k[segs] != 1.0 || k.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidConfig(
                        "knot times must increase strictly from 0 to 1".into(),
                    ));
                }
                k
            }
            None => (0..=segs).map(|j| j as f64 / segs as f64).collect(),
        };
        Ok(Self {
            p,
            shape: Shape::PiecewiseLinear { knots, nodes },
            exponent: 1.0,
        })
    }

    pub fn fourier_loop(center: Vec<f64>, harmonics: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        let p = center.len();
        if p == 0 {
            return Err(Error::InvalidConfig("parameter dimension p must be >= 1".into()));
        }
        check_dim("harmonic axes", p, harmonics.len())?;
        if center.iter().any(|x| !x.is_finite())
            || harmonics.iter().flatten().flatten().any(|x| !x.is_finite())
        {
            return Err(Error::InvalidConfig("non-finite loop coefficient".into()));
        }
        Ok(Self {
            p,
            shape: Shape::FourierLoop { center, harmonics },
            exponent: 1.0,
        })
    }

    /// Loop from a flat parameter vector laid out as `[axis][harmonic][cos, sin]`.
    pub fn fourier_loop_from_params(center: Vec<f64>, order: usize, params: &[f64]) -> Result<Self> {
        let p = center.len();
        check_dim("loop parameter vector", 2 * order * p, params.len())?;
        let harmonics = (0..p)
            .map(|a| {
                (0..order)
                    .map(|k| {
                        let o = 2 * (a * order + k);
                        [params[o], params[o + 1]]
                    })
                    .collect()
            })
            .collect();
        Self::fourier_loop(center, harmonics)
    }

    pub fn from_config(cfg: &PathConfig) -> Result<Self> {
        let (path, p, exponent) = match cfg {
            PathConfig::PiecewiseLinear {
                p,
                nodes,
                knots,
                schedule_exponent,
            } => (
                Self::piecewise_linear(nodes.clone(), knots.clone())?,
                *p,
                *schedule_exponent,
            ),
            PathConfig::FourierLoop {
                p,
                center,
                harmonics,
                schedule_exponent,
            } => {
                let center = center.clone().unwrap_or_else(|| vec![0.0; *p]);
                (
                    Self::fourier_loop(center, harmonics.clone())?,
                    *p,
                    *schedule_exponent,
                )
            }
        };
        check_dim("path dimension p", p, path.p)?;
        path.reparametrize(exponent)
    }

    pub fn to_config(&self) -> PathConfig {
        match &self.shape {
            Shape::PiecewiseLinear { knots, nodes } => PathConfig::PiecewiseLinear {
                p: self.p,
                nodes: nodes.clone(),
                knots: Some(knots.clone()),
                schedule_exponent: self.exponent,
            },
            Shape::FourierLoop { center, harmonics } => PathConfig::FourierLoop {
                p: self.p,
                center: Some(center.clone()),
                harmonics: harmonics.clone(),
                schedule_exponent: self.exponent,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn schedule_exponent(&self) -> f64 {
        self.exponent
    }

    /// Same image traced with schedule `t ↦ t^exponent`.
    pub fn reparametrize(&self, exponent: f64) -> Result<Self> {
        if !(exponent >= 1.0) || !exponent.is_finite() {
            return Err(Error::OutOfRange {
                param: "exponent",
                value: exponent,
                reason: "schedule exponent must be a finite number >= 1",
            });
        }
        let mut out = self.clone();
        out.exponent *= exponent;
        Ok(out)
    }

    fn schedule(&self, t: f64) -> (f64, f64) {
        if self.exponent == 1.0 {
            (t, 1.0)
        } else {
            (
                t.powf(self.exponent),
                self.exponent * t.powf(self.exponent - 1.0),
            )
        }
    }

    fn check_time(t: f64) -> Result<()> {
        if (0.0..=1.0).contains(&t) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                param: "t",
                value: t,
                reason: "path time must lie in [0, 1]",
            })
        }
    }

    // segment whose interior contains s, preferring the right one at a knot
    fn segment_right(knots: &[f64], s: f64) -> usize {
        let segs = knots.len() - 1;
        knots[1..segs].partition_point(|&k| k <= s)
    }

    fn eval_base(&self, s: f64, segment: Option<usize>) -> (Vec<f64>, Vec<f64>) {
        match &self.shape {
            Shape::PiecewiseLinear { knots, nodes } => {
                let j = segment.unwrap_or_else(|| Self::segment_right(knots, s));
                let (t0, t1) = (knots[j], knots[j + 1]);
                let w = (s - t0) / (t1 - t0);
                let (a, b) = (&nodes[j], &nodes[j + 1]);
                let pos = a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect();
                let vel = a.iter().zip(b).map(|(x, y)| (y - x) / (t1 - t0)).collect();
                (pos, vel)
            }
            Shape::FourierLoop { center, harmonics } => {
                let mut pos = center.clone();
                let mut vel = vec![0.0; self.p];
                for (a, hs) in harmonics.iter().enumerate() {
                    for (k, [c, sn]) in hs.iter().enumerate() {
                        let w = TAU * (k + 1) as f64;
                        let (sin, cos) = (w * s).sin_cos();
                        pos[a] += c * cos + sn * sin;
                        vel[a] += w * (sn * cos - c * sin);
                    }
                }
                (pos, vel)
            }
        }
    }

    /// Position and velocity at `t`; at piecewise-linear knots the right velocity.
    pub fn eval(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        Self::check_time(t)?;
        Ok(self.eval_unchecked(t))
    }

    pub fn position(&self, t: f64) -> Result<Vec<f64>> {
        self.eval(t).map(|(p, _)| p)
    }

    fn eval_unchecked(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let (s, ds) = self.schedule(t);
        let (pos, mut vel) = self.eval_base(s, None);
        vel.iter_mut().for_each(|v| *v *= ds);
        (pos, vel)
    }

    /// Position and velocity at `t` using the segment that contains the step
    /// `[t_lo, t_hi]`, so step endpoints on a knot see the step's own velocity.
    pub(crate) fn eval_on_step(&self, t: f64, t_lo: f64, t_hi: f64) -> (Vec<f64>, Vec<f64>) {
        let segment = match &self.shape {
            Shape::PiecewiseLinear { knots, .. } => {
                let (s_mid, _) = self.schedule(0.5 * (t_lo + t_hi));
                Some(Self::segment_right(knots, s_mid))
            }
            Shape::FourierLoop { .. } => None,
        };
        let (s, ds) = self.schedule(t);
        let (pos, mut vel) = self.eval_base(s, segment);
        vel.iter_mut().for_each(|v| *v *= ds);
        (pos, vel)
    }

    /// True iff `|ξ(1) − ξ(0)|∞ < 1e-12`.
    pub fn is_loop(&self) -> bool {
        let (a, _) = self.eval_unchecked(0.0);
        let (b, _) = self.eval_unchecked(1.0);
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() < LOOP_TOL)
    }

    /// Step boundaries for `steps` uniform steps, refined so that every
    /// piecewise-linear knot is a boundary.
    pub fn step_grid(&self, steps: usize) -> Result<Vec<f64>> {
        if steps == 0 {
            return Err(Error::InvalidConfig("steps must be >= 1".into()));
        }
        let mut grid: Vec<f64> = (0..=steps).map(|j| j as f64 / steps as f64).collect();
        if let Shape::PiecewiseLinear { knots, .. } = &self.shape {
            let inner = &knots[1..knots.len() - 1];
            let mapped: Vec<f64> = inner
                .iter()
                .map(|k| k.powf(1.0 / self.exponent))
                .collect();
            grid.retain(|t| mapped.iter().all(|k| (t - k).abs() > 1e-12));
            grid.extend(mapped);
            grid.sort_by(f64::total_cmp);
        }
        Ok(grid)
    }
}

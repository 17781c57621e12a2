use std::io::{BufRead, Write};

use num_rational::Ratio;

use crate::{Error, Result};

/// Tabulated Dickman–de Bruijn function on the grid `u = k * step`.
///
/// The table is built by marching `u rho(u) = int_{u-1}^u rho(t) dt` one grid
/// point at a time. Each new grid panel `[u_{k-1}, u_k]` is integrated with an
/// implicit Adams–Moulton rule whose stencil never reaches below `u = 1`, where
/// `rho'` jumps; the implicit weight on `rho(u_k)` is moved to the left-hand
/// side and the linear equation is solved exactly.
#[derive(Debug, Clone)]
pub struct RhoTable {
    per_unit: u32,
    values: Vec<f64>,
}

impl RhoTable {
    /// Build a table with grid spacing `step` covering `[0, u_max]`.
    ///
    /// `step` must be of the form `1/N` with `N >= 64`, so that the delay term
    /// `u - 1` of every grid point is itself a grid point.
    pub fn build(step: Ratio<u64>, u_max: f64) -> Result<Self> {
        if *step.numer() == 0 {
            return Err(Error::invalid("rho grid step must be positive"));
        }
        if *step.numer() != 1 {
            return Err(Error::invalid(format!(
                "rho grid step {step} does not divide 1 evenly"
            )));
        }
        let per_unit = *step.denom();
        if per_unit < 64 {
            return Err(Error::invalid(format!(
                "rho grid step {step} is coarser than 1/64"
            )));
        }
        if per_unit > (1 << 20) {
            return Err(Error::cap("rho grid points per unit", 1 << 20));
        }
        if !u_max.is_finite() || u_max < 2.0 {
            return Err(Error::invalid(format!(
                "rho table u_max {u_max} must be >= 2"
            )));
        }
        let per_unit = per_unit as u32;
        let n = per_unit as usize;
        let last = (u_max * n as f64).ceil() as usize;
        if last > 200_000_000 {
            return Err(Error::cap("rho table length", 200_000_000));
        }

        let h = 1.0 / n as f64;
        let mut values = vec![1.0; last + 1];
        // panels[j] integrates rho over [u_{j-1}, u_j]; panels on [0, 1] are exact.
        let mut panels = vec![h; last + 1];
        panels[0] = 0.0;
        let mut window = 1.0;

        for k in (n + 1)..=last {
            let u = k as f64 * h;
            let (weight, known) = match k - n {
                1 => (h / 2.0, h / 2.0 * values[k - 1]),
                2 => (
                    5.0 * h / 12.0,
                    h / 12.0 * (8.0 * values[k - 1] - values[k - 2]),
                ),
                _ => (
                    9.0 * h / 24.0,
                    h / 24.0 * (19.0 * values[k - 1] - 5.0 * values[k - 2] + values[k - 3]),
                ),
            };
            if (k - n) % 32 == 0 {
                // the sliding sum loses relative accuracy as rho decays; resync
                window = panels[k - n..k].iter().sum();
            }
            let base = window - panels[k - n] + known;
            let rho = base / (u - weight);
            values[k] = rho;
            panels[k] = weight * rho + known;
            window = base + weight * rho;
        }

        Ok(Self { per_unit, values })
    }

    /// Number of grid points per unit of `u`.
    pub fn per_unit(&self) -> u32 {
        self.per_unit
    }

    pub fn step(&self) -> Ratio<u64> {
        Ratio::new(1, self.per_unit as u64)
    }

    pub fn step_f64(&self) -> f64 {
        1.0 / self.per_unit as f64
    }

    pub fn u_max(&self) -> f64 {
        (self.values.len() - 1) as f64 / self.per_unit as f64
    }

    /// Raw grid samples, `values()[k] = rho(k * step)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Grid abscissa of index `k`.
    pub fn grid_u(&self, k: usize) -> f64 {
        k as f64 / self.per_unit as f64
    }

    /// `rho(u)` by piecewise-linear interpolation of the table.
    ///
    /// Exactly `0` for `u < 0` and exactly `1` on `[0, 1]`.
    pub fn rho(&self, u: f64) -> Result<f64> {
        if u.is_nan() {
            return Err(Error::domain("rho of NaN"));
        }
        if u < 0.0 {
            return Ok(0.0);
        }
        if u <= 1.0 {
            return Ok(1.0);
        }
        let u_max = self.u_max();
        if u > u_max {
            return Err(Error::OutOfRange {
                what: "u",
                value: u,
                limit: u_max,
            });
        }
        let x = u * self.per_unit as f64;
        let i = x.floor() as usize;
        if i + 1 >= self.values.len() {
            return Ok(self.values[self.values.len() - 1]);
        }
        let frac = x - i as f64;
        Ok(self.values[i] + frac * (self.values[i + 1] - self.values[i]))
    }

    /// `int_a^b rho(t) dt` over the table.
    ///
    /// The part of the range in `[0, 1]` is integrated exactly; the rest uses
    /// composite Simpson on whole grid panels (a 3/8 rule closes an odd panel
    /// count) and the linear interpolant on partial end panels.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::domain("non-finite integration bounds"));
        }
        if b < a {
            return Ok(-self.integral(b, a)?);
        }
        let u_max = self.u_max();
        if b > u_max {
            return Err(Error::OutOfRange {
                what: "u",
                value: b,
                limit: u_max,
            });
        }
        let mut total = 0.0;
        let lo = a.max(0.0);
        if lo < 1.0 && b > 0.0 {
            total += b.min(1.0) - lo;
        }
        let lo = a.max(1.0);
        if b > lo {
            total += self.integral_above_one(lo, b);
        }
        Ok(total)
    }

    fn integral_above_one(&self, a: f64, b: f64) -> f64 {
        let n = self.per_unit as f64;
        let h = 1.0 / n;
        let ia = (a * n).ceil() as usize;
        let ib = (b * n).floor() as usize;
        if ia > ib {
            // a and b share one grid panel
            let fa = self.rho(a).unwrap_or(0.0);
            let fb = self.rho(b).unwrap_or(0.0);
            return 0.5 * (b - a) * (fa + fb);
        }
        let mut total = 0.0;
        let ua = ia as f64 * h;
        if ua > a {
            total += 0.5 * (ua - a) * (self.rho(a).unwrap_or(0.0) + self.values[ia]);
        }
        let ub = ib as f64 * h;
        if b > ub {
            total += 0.5 * (b - ub) * (self.values[ib] + self.rho(b).unwrap_or(0.0));
        }
        total + composite_simpson(&self.values[ia..=ib], h)
    }

    /// `|u rho(u) - int_{u-1}^u rho|`, the defect of the delay identity.
    pub fn identity_residual(&self, u: f64) -> Result<f64> {
        let lhs = u * self.rho(u)?;
        let rhs = self.integral(u - 1.0, u)?;
        Ok((lhs - rhs).abs())
    }

    /// Central difference approximation of `rho'(u)` with one grid step.
    pub fn derivative(&self, u: f64) -> Result<f64> {
        let h = self.step_f64();
        Ok((self.rho(u + h)? - self.rho(u - h)?) / (2.0 * h))
    }

    /// Write the versioned CSV cache format.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# rho-table v1, step=1/{}", self.per_unit)?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e}", self.grid_u(k), v)?;
        }
        Ok(())
    }

    /// Read a table previously written by [`RhoTable::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty rho-table file".into()))??;
        let step = header
            .strip_prefix("# rho-table v1, step=")
            .ok_or_else(|| Error::Parse(format!("bad rho-table header: {header}")))?;
        let step: Ratio<u64> = step
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad step in header: {step}")))?;
        if *step.numer() != 1 || *step.denom() < 64 {
            return Err(Error::Parse(format!("unsupported step {step}")));
        }
        let per_unit = *step.denom() as u32;
        let mut values = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (u, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad row: {line}")))?;
            let u: f64 = u.trim().parse().map_err(|_| Error::Parse(line.clone()))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Parse(line.clone()))?;
            let expected = k as f64 / per_unit as f64;
            if u != expected {
                return Err(Error::Parse(format!(
                    "row {k} has u = {u}, expected {expected}"
                )));
            }
            values.push(v);
        }
        if values.len() < 2 * per_unit as usize + 1 {
            return Err(Error::Parse("rho-table file is truncated".into()));
        }
        Ok(Self { per_unit, values })
    }
}

/// Composite Simpson on equally spaced samples, closing an odd panel count
/// with the 3/8 rule and a single panel with the trapezoid.
pub(crate) fn composite_simpson(f: &[f64], h: f64) -> f64 {
    let panels = f.len().saturating_sub(1);
    match panels {
        0 => 0.0,
        1 => 0.5 * h * (f[0] + f[1]),
        _ => {
            let (even_end, tail) = if panels % 2 == 0 {
                (panels, 0.0)
            } else {
                let i = panels - 3;
                (
                    i,
                    3.0 * h / 8.0 * (f[i] + 3.0 * f[i + 1] + 3.0 * f[i + 2] + f[i + 3]),
                )
            };
            let mut s = 0.0;
            let mut i = 0;
            while i < even_end {
                s += f[i] + 4.0 * f[i + 1] + f[i + 2];
                i += 2;
            }
            s * h / 3.0 + tail
        }
    }
}
